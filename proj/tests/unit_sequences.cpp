#include <cmath>

#include "doctest.h"
#include "quartet/presets.hpp"
#include "quartet/sequences.hpp"

using namespace quartet;
using dynamics::DriveState;
using dynamics::ModelConfig;

TEST_CASE("power anchor") {
  CHECK(sequences::rabi_from_power_nw(20.0) == doctest::Approx(4.33));
  CHECK(sequences::rabi_from_power_nw(80.0) == doctest::Approx(8.66));
}

TEST_CASE("sequence sampling grid") {
  const ModelConfig config = presets::model("table2_no_strain");

  sequences::PulseSequence seq;
  sequences::PulseSegment seg;
  seg.duration_us = 0.10;
  seg.drive.resonant_rabi_a1 = 2.0;
  seg.record = true;
  seg.label = "probe";
  seq.segments.push_back(seg);
  seq.sample_dt_us = 0.01;

  const auto trace = sequences::run_sequence(seq, config);
  CHECK_NOTHROW(trace.validate());
  // Left edge included, right edge excluded.
  CHECK(trace.time_us.size() == 10);
  CHECK(trace.time_us.front() == doctest::Approx(0.0));
  CHECK(trace.time_us.back() == doctest::Approx(0.09));
  for (size_t i = 1; i < trace.time_us.size(); ++i)
    CHECK(trace.time_us[i] > trace.time_us[i - 1]);
  for (double v : trace.pl) CHECK(v >= 0.0);
  CHECK_NOTHROW(trace.final_state.validate());

  // An unrecorded segment contributes no samples but advances the state.
  sequences::PulseSequence seq2 = seq;
  seq2.segments.front().record = false;
  const auto trace2 = sequences::run_sequence(seq2, config);
  CHECK(trace2.time_us.empty());
  CHECK((trace2.final_state.m - trace.final_state.m).cwiseAbs().maxCoeff() <
        1e-12);

  sequences::PulseSequence bad;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);  // no segments
}

TEST_CASE("ground-manifold polarization") {
  auto rho = dynamics::DensityMatrix::mixed_ground();
  auto [p12, p32] = sequences::polarization(rho);
  CHECK(p12 == doctest::Approx(0.5));
  CHECK(p32 == doctest::Approx(0.5));

  auto [q12, q32] =
      sequences::polarization(dynamics::DensityMatrix::pure(idx::g_m32));
  CHECK(q12 == doctest::Approx(0.0));
  CHECK(q32 == doctest::Approx(1.0));
  // Normalized within the ground manifold even when it is not fully occupied.
  dynamics::DensityMatrix mix;
  mix.m(idx::g_p12, idx::g_p12) = 0.25;
  mix.m(idx::e_p32, idx::e_p32) = 0.75;
  auto [r12, r32] = sequences::polarization(mix);
  CHECK(r12 == doctest::Approx(1.0));
  CHECK(r32 == doctest::Approx(0.0));
}

TEST_CASE("excited-state lifetimes equal inverse total rates") {
  const ModelConfig config = presets::model("table2_no_strain");

  const auto a1 = sequences::lifetime_experiment(config, Transition::A1);
  CHECK(a1.tau_us == doctest::Approx(1.0 / config.rates.big_gamma_1())
                         .epsilon(0.01));
  CHECK(a1.trace.time_us.size() == 40);

  const auto a2 = sequences::lifetime_experiment(config, Transition::A2);
  CHECK(a2.tau_us == doctest::Approx(1.0 / config.rates.big_gamma_2())
                         .epsilon(0.01));
  // The +-3/2 pair lives longer in both parameter sets.
  CHECK(a2.tau_us > a1.tau_us);
}

TEST_CASE("visibility experiment and dark correction") {
  const ModelConfig config = presets::model("table2_no_strain");
  const auto res = sequences::visibility_experiment(config, Transition::A1);

  CHECK(res.v > 0.9);
  CHECK(res.v <= 1.0);
  CHECK(res.v_dark_corrected >= res.v);
  CHECK(res.v_dark_corrected <= 1.0);
  // Pumping A1 polarizes into +-3/2: the A2 probe is the bright one.
  CHECK(res.pl_a2 > res.pl_a1);
  CHECK(res.p_32 == doctest::Approx(0.5 * (1.0 + res.v)));
  CHECK(res.p_12 == doctest::Approx(0.5 * (1.0 - res.v)));
  CHECK(res.phys_p_32 > 0.9);
  CHECK(res.phys_p_12 + res.phys_p_32 == doctest::Approx(1.0).epsilon(1e-6));
  // The reported correction is exactly the published formula.
  CHECK(res.v_dark_corrected ==
        sequences::dark_corrected_visibility(res.pl_a1, res.pl_a2, res.pl_dark));

  // Formula edge cases.
  CHECK(sequences::dark_corrected_visibility(3.0, 97.0, 1.0) ==
        doctest::Approx(94.0 / 98.0));
  CHECK(sequences::dark_corrected_visibility(1.0, 2.0, 5.0) == 1.0);   // den <= 0
  CHECK(sequences::dark_corrected_visibility(0.1, 5.0, 2.4) == 1.0);   // clamp
}

TEST_CASE("repolarization runs one point per duration") {
  const ModelConfig config = presets::model("table2_no_strain");
  const DriveState pump = presets::pump("pump730_50uw_no_strain");
  const std::vector<double> durations{1.0, 4.0};

  const auto res = sequences::repolarization_experiment(
      config, Transition::A2, pump, durations);
  CHECK(res.trace.time_us.size() == 2);
  CHECK(res.trace.time_us[0] == doctest::Approx(1.0));
  CHECK(res.trace.time_us[1] == doctest::Approx(4.0));
  // Pump acts toward the mixed state: p_12 grows back from ~0.
  CHECK(res.p_12_final > 0.05);
  CHECK(res.p_12_final < 1.0);
  CHECK(res.p_12_final + res.p_32_final == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("spin depletion produces one decaying trace per amplitude") {
  const ModelConfig config = presets::model("table2_no_strain");
  sequences::DepletionOptions opts;
  opts.init_pump = presets::pump("pump730_50uw_no_strain");
  opts.samples = 12;
  opts.window_us = 30.0;

  const auto traces = sequences::spin_depletion_experiment(
      config, Transition::A1, {2.0, 5.0}, opts);
  REQUIRE(traces.size() == 2);
  for (const auto& tr : traces) {
    CHECK(tr.time_us.size() == 12);
    CHECK_NOTHROW(tr.validate());
    // The t = 0 sample precedes any excitation (dark counts only); from the
    // second sample on, resonant shelving drains the window toward a floor.
    CHECK(tr.pl.front() == doctest::Approx(7.0e-6));
    CHECK(tr.pl[1] > tr.pl.back());
  }
  // Stronger drive depletes further by the end of the window.
  CHECK(traces[1].pl.back() <= traces[0].pl.back());
}

TEST_CASE("emission map is zero at the reference branching rates") {
  const ModelConfig config = presets::model("table2_no_strain");
  sequences::MapOptions opts;
  opts.window_us = 10.0;  // cheap grid for the shape checks

  const auto map = sequences::emission_change_map(
      config, {opts.reference_gamma_3, 1.11}, {opts.reference_gamma_4, 0.09},
      sequences::Excitation::a1, opts);
  CHECK(map.rows() == 2);
  CHECK(map.cols() == 2);
  CHECK(map(0, 0) == 0.0);  // same inputs as the reference evaluation
  // Off-reference entries move the emission.
  CHECK(std::abs(map(1, 1)) > 0.1);
}

TEST_CASE("A1 emission grows monotonically with the MS1-to-g12 return rate") {
  const ModelConfig config = presets::model("table2_no_strain");
  const sequences::MapOptions opts;  // 40 us window, plotted settings

  std::vector<double> gamma_3s;
  for (int i = 0; i <= 6; ++i) gamma_3s.push_back(0.8 + 0.6 * i);
  const auto map = sequences::emission_change_map(
      config, gamma_3s, {opts.reference_gamma_4}, sequences::Excitation::a1,
      opts);
  for (Eigen::Index i = 1; i < map.rows(); ++i) {
    CHECK(map(i, 0) > map(i - 1, 0));
  }
  // Sampled continuity: a midpoint evaluation lands strictly between its
  // neighbours and takes a nontrivial share of the increment (no jump
  // hiding at either edge of the interval).
  for (Eigen::Index i : {Eigen::Index(1), Eigen::Index(3), Eigen::Index(6)}) {
    const double mid_gamma = 0.5 * (gamma_3s[i - 1] + gamma_3s[i]);
    const auto fine = sequences::emission_change_map(
        config, {mid_gamma}, {opts.reference_gamma_4},
        sequences::Excitation::a1, opts);
    const double lo = map(i - 1, 0), hi = map(i, 0), mid = fine(0, 0);
    CHECK(mid > lo);
    CHECK(mid < hi);
    CHECK(mid - lo > 0.2 * (hi - lo));
    CHECK(hi - mid > 0.2 * (hi - lo));
  }
}

TEST_CASE("the +-3/2 window reacts less to the deformed branching than +-1/2") {
  const ModelConfig config = presets::model("table2_no_strain");
  const sequences::MapOptions opts;

  auto point = [&](sequences::Excitation exc) {
    return sequences::emission_change_map(config, {1.11}, {0.09}, exc, opts)(0, 0);
  };
  CHECK(std::abs(point(sequences::Excitation::a2)) <
        std::abs(point(sequences::Excitation::a1)));
}
