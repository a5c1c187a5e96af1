#include "quartet/iocli.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "quartet/presets.hpp"
#include "quartet/repro.hpp"

namespace quartet::iocli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path.empty() ? message : path + ": " + message);
}

// Line/column of a byte offset, for parse errors.
std::pair<int, int> line_column(const std::string& text, size_t byte) {
  int line = 1;
  int col = 1;
  for (size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& item : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return item.key() == k;
        }) == allowed.end()) {
      std::string keys;
      for (const char* k : allowed) {
        if (!keys.empty()) keys += ", ";
        keys += k;
      }
      fail(path.empty() ? item.key() : path + "." + item.key(),
           "unknown key (allowed here: " + keys + ")");
    }
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double opt_number(const json& j, const std::string& path, const char* key,
                  double fallback) {
  if (!j.contains(key)) return fallback;
  return get_number(j.at(key), path + "." + key);
}

int opt_int(const json& j, const std::string& path, const char* key,
            int fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

std::string opt_string(const json& j, const std::string& path, const char* key,
                       const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

// Uniform grid {start, stop, count} or an explicit array.
std::vector<double> parse_grid(const json& j, const std::string& path) {
  std::vector<double> out;
  if (j.is_array()) {
    for (size_t i = 0; i < j.size(); ++i) {
      out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
    }
  } else if (j.is_object()) {
    check_keys(j, path, {"start", "stop", "count"});
    if (!j.contains("start") || !j.contains("stop") || !j.contains("count")) {
      fail(path, "grid needs start, stop, and count");
    }
    const double a = get_number(j.at("start"), path + ".start");
    const double b = get_number(j.at("stop"), path + ".stop");
    const int n = opt_int(j, path, "count", 0);
    if (n < 1) fail(path + ".count", "count must be >= 1");
    for (int i = 0; i < n; ++i) {
      out.push_back(n == 1 ? a : a + (b - a) * i / double(n - 1));
    }
  } else {
    fail(path, "expected an array or a {start, stop, count} object");
  }
  if (out.empty()) fail(path, "grid must not be empty");
  return out;
}

dynamics::DriveState parse_drive(const json& j, const std::string& path) {
  dynamics::DriveState d;
  std::string preset;
  if (j.contains("preset")) {
    preset = opt_string(j, path, "preset", "");
    try {
      d = presets::pump(preset);
    } catch (const std::invalid_argument& e) {
      fail(path + ".preset", e.what());
    }
  }
  check_keys(j, path,
             {"preset", "resonant_rabi_a1", "resonant_rabi_a2", "detuning_a1",
              "detuning_a2", "offres_pump", "incoherent_rabi_a1",
              "incoherent_rabi_a2", "offres_gamma_3p", "offres_gamma_4p"});
  d.resonant_rabi_a1 = opt_number(j, path, "resonant_rabi_a1", d.resonant_rabi_a1);
  d.resonant_rabi_a2 = opt_number(j, path, "resonant_rabi_a2", d.resonant_rabi_a2);
  d.detuning_a1 = opt_number(j, path, "detuning_a1", d.detuning_a1);
  d.detuning_a2 = opt_number(j, path, "detuning_a2", d.detuning_a2);
  d.offres_pump = opt_number(j, path, "offres_pump", d.offres_pump);
  d.incoherent_rabi_a1 =
      opt_number(j, path, "incoherent_rabi_a1", d.incoherent_rabi_a1);
  d.incoherent_rabi_a2 =
      opt_number(j, path, "incoherent_rabi_a2", d.incoherent_rabi_a2);
  if (j.contains("offres_gamma_3p")) {
    d.offres_gamma_3p = get_number(j.at("offres_gamma_3p"), path + ".offres_gamma_3p");
  }
  if (j.contains("offres_gamma_4p")) {
    d.offres_gamma_4p = get_number(j.at("offres_gamma_4p"), path + ".offres_gamma_4p");
  }
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return d;
}

Transition parse_transition(const json& j, const std::string& path) {
  const std::string s = j.is_string() ? j.get<std::string>() : "";
  if (s == "A1") return Transition::A1;
  if (s == "A2") return Transition::A2;
  fail(path, "expected \"A1\" or \"A2\"");
}

sequences::Excitation parse_excitation(const json& j, const std::string& path) {
  const std::string s = j.is_string() ? j.get<std::string>() : "";
  if (s == "a1") return sequences::Excitation::a1;
  if (s == "a2") return sequences::Excitation::a2;
  if (s == "off_resonant") return sequences::Excitation::off_resonant;
  fail(path, "expected \"a1\", \"a2\", or \"off_resonant\"");
}

estimate::ExperimentSpec parse_experiment(const json& j, const std::string& path) {
  check_keys(j, path,
             {"kind", "transition", "pump", "delays_us", "durations_us",
              "rabis_mhz", "gamma_3s", "gamma_4s", "excitation", "options"});
  estimate::ExperimentSpec spec;
  const std::string kind = opt_string(j, path, "kind", "");
  using Kind = estimate::ExperimentSpec::Kind;
  if (kind == "lifetime") spec.kind = Kind::lifetime;
  else if (kind == "metastable_decay") spec.kind = Kind::metastable_decay;
  else if (kind == "repolarization") spec.kind = Kind::repolarization;
  else if (kind == "spin_depletion") spec.kind = Kind::spin_depletion;
  else if (kind == "visibility") spec.kind = Kind::visibility;
  else if (kind == "emission_change_map") spec.kind = Kind::emission_change_map;
  else fail(path + ".kind",
            "expected one of lifetime, metastable_decay, repolarization, "
            "spin_depletion, visibility, emission_change_map");

  if (j.contains("transition")) {
    spec.transition = parse_transition(j.at("transition"), path + ".transition");
  }
  if (j.contains("pump")) {
    spec.pump = parse_drive(j.at("pump"), path + ".pump");
  }
  if (j.contains("delays_us")) {
    spec.delays_us = parse_grid(j.at("delays_us"), path + ".delays_us");
  }
  if (j.contains("durations_us")) {
    spec.durations_us = parse_grid(j.at("durations_us"), path + ".durations_us");
  }
  if (j.contains("rabis_mhz")) {
    spec.rabis_mhz = parse_grid(j.at("rabis_mhz"), path + ".rabis_mhz");
  }
  if (j.contains("gamma_3s")) {
    spec.map_gamma_3s = parse_grid(j.at("gamma_3s"), path + ".gamma_3s");
  }
  if (j.contains("gamma_4s")) {
    spec.map_gamma_4s = parse_grid(j.at("gamma_4s"), path + ".gamma_4s");
  }
  if (j.contains("excitation")) {
    spec.excitation = parse_excitation(j.at("excitation"), path + ".excitation");
  }

  const json opts = j.contains("options") ? j.at("options") : json::object();
  const std::string opath = path + ".options";
  switch (spec.kind) {
    case Kind::lifetime:
      check_keys(opts, opath, {"pulse_us", "pulse_rabi_mhz", "window_us", "samples"});
      spec.lifetime.pulse_us = opt_number(opts, opath, "pulse_us", spec.lifetime.pulse_us);
      spec.lifetime.pulse_rabi = opt_number(opts, opath, "pulse_rabi_mhz", spec.lifetime.pulse_rabi);
      spec.lifetime.window_us = opt_number(opts, opath, "window_us", spec.lifetime.window_us);
      spec.lifetime.samples = opt_int(opts, opath, "samples", spec.lifetime.samples);
      break;
    case Kind::metastable_decay:
      check_keys(opts, opath, {"probe_us", "probe_rabi_mhz", "settle_us"});
      spec.metastable.probe_us = opt_number(opts, opath, "probe_us", spec.metastable.probe_us);
      spec.metastable.probe_rabi = opt_number(opts, opath, "probe_rabi_mhz", spec.metastable.probe_rabi);
      spec.metastable.settle_us = opt_number(opts, opath, "settle_us", spec.metastable.settle_us);
      if (spec.delays_us.empty()) fail(path, "metastable_decay needs delays_us");
      if (spec.pump.offres_pump <= 0.0 && !spec.pump.any_coherent() &&
          spec.pump.incoherent_rabi_a1 <= 0.0 && spec.pump.incoherent_rabi_a2 <= 0.0) {
        fail(path + ".pump", "metastable_decay needs a pump drive");
      }
      break;
    case Kind::repolarization:
      check_keys(opts, opath, {"init_rabi_mhz", "init_us", "settle_us"});
      spec.repolarization.init_rabi = opt_number(opts, opath, "init_rabi_mhz", spec.repolarization.init_rabi);
      spec.repolarization.init_us = opt_number(opts, opath, "init_us", spec.repolarization.init_us);
      spec.repolarization.settle_us = opt_number(opts, opath, "settle_us", spec.repolarization.settle_us);
      if (spec.durations_us.empty()) fail(path, "repolarization needs durations_us");
      if (spec.pump.offres_pump <= 0.0) {
        fail(path + ".pump", "repolarization needs an off-resonant pump");
      }
      break;
    case Kind::spin_depletion:
      check_keys(opts, opath, {"dark_us", "window_us", "samples"});
      spec.depletion.dark_us = opt_number(opts, opath, "dark_us", spec.depletion.dark_us);
      spec.depletion.window_us = opt_number(opts, opath, "window_us", spec.depletion.window_us);
      spec.depletion.samples = opt_int(opts, opath, "samples", spec.depletion.samples);
      spec.depletion.init_pump = spec.pump;
      if (spec.rabis_mhz.empty()) fail(path, "spin_depletion needs rabis_mhz");
      if (spec.pump.offres_pump <= 0.0) {
        fail(path + ".pump", "spin_depletion needs an off-resonant init pump");
      }
      break;
    case Kind::visibility:
      check_keys(opts, opath, {"pump_us", "probe_us", "pump_rabi_mhz", "probe_rabi_mhz"});
      spec.visibility.pump_us = opt_number(opts, opath, "pump_us", spec.visibility.pump_us);
      spec.visibility.probe_us = opt_number(opts, opath, "probe_us", spec.visibility.probe_us);
      spec.visibility.pump_rabi = opt_number(opts, opath, "pump_rabi_mhz", spec.visibility.pump_rabi);
      spec.visibility.probe_rabi = opt_number(opts, opath, "probe_rabi_mhz", spec.visibility.probe_rabi);
      break;
    case Kind::emission_change_map:
      check_keys(opts, opath,
                 {"window_us", "resonant_rabi_mhz", "offres_rabi_mhz",
                  "reference_gamma_3", "reference_gamma_4"});
      spec.map.window_us = opt_number(opts, opath, "window_us", spec.map.window_us);
      spec.map.resonant_rabi = opt_number(opts, opath, "resonant_rabi_mhz", spec.map.resonant_rabi);
      spec.map.offres_rabi = opt_number(opts, opath, "offres_rabi_mhz", spec.map.offres_rabi);
      spec.map.reference_gamma_3 = opt_number(opts, opath, "reference_gamma_3", spec.map.reference_gamma_3);
      spec.map.reference_gamma_4 = opt_number(opts, opath, "reference_gamma_4", spec.map.reference_gamma_4);
      if (spec.map_gamma_3s.empty() || spec.map_gamma_4s.empty()) {
        fail(path, "emission_change_map needs gamma_3s and gamma_4s");
      }
      break;
  }
  return spec;
}

size_t trace_count(const estimate::ExperimentSpec& spec) {
  using Kind = estimate::ExperimentSpec::Kind;
  switch (spec.kind) {
    case Kind::lifetime:
    case Kind::repolarization:
      return 1;
    case Kind::metastable_decay:
      return 2;
    case Kind::spin_depletion:
      return spec.rabis_mhz.size();
    default:
      return 0;
  }
}

dynamics::ModelConfig parse_model(const json& j, const std::string& path,
                                  std::string* rates_preset,
                                  std::string* strain_preset) {
  check_keys(j, path,
             {"rates_preset", "rates", "strain_preset", "strain",
              "ground_splitting_mhz", "excited_splitting_mhz", "efficiency",
              "dark_rate_hz", "solver"});

  dynamics::RateSet rates;
  if (j.contains("rates_preset")) {
    *rates_preset = opt_string(j, path, "rates_preset", "");
    try {
      rates = presets::rates(*rates_preset);
    } catch (const std::invalid_argument& e) {
      fail(path + ".rates_preset", e.what());
    }
  }
  if (j.contains("rates")) {
    const json& r = j.at("rates");
    const std::string rpath = path + ".rates";
    check_keys(r, rpath,
               {"gamma_r", "gamma_1", "gamma_1p", "gamma_2", "gamma_2p",
                "gamma_3", "gamma_4", "gamma_3p0", "gamma_4p0", "beta"});
    rates.gamma_r = opt_number(r, rpath, "gamma_r", rates.gamma_r);
    rates.gamma_1 = opt_number(r, rpath, "gamma_1", rates.gamma_1);
    rates.gamma_1p = opt_number(r, rpath, "gamma_1p", rates.gamma_1p);
    rates.gamma_2 = opt_number(r, rpath, "gamma_2", rates.gamma_2);
    rates.gamma_2p = opt_number(r, rpath, "gamma_2p", rates.gamma_2p);
    rates.gamma_3 = opt_number(r, rpath, "gamma_3", rates.gamma_3);
    rates.gamma_4 = opt_number(r, rpath, "gamma_4", rates.gamma_4);
    rates.gamma_3p0 = opt_number(r, rpath, "gamma_3p0", rates.gamma_3p0);
    rates.gamma_4p0 = opt_number(r, rpath, "gamma_4p0", rates.gamma_4p0);
    rates.beta = opt_number(r, rpath, "beta", rates.beta);
  }

  spincore::StrainParams strain;
  if (j.contains("strain_preset")) {
    *strain_preset = opt_string(j, path, "strain_preset", "");
    try {
      strain = presets::strain(*strain_preset);
    } catch (const std::invalid_argument& e) {
      fail(path + ".strain_preset", e.what());
    }
  }
  if (j.contains("strain")) {
    const json& s = j.at("strain");
    const std::string spath = path + ".strain";
    check_keys(s, spath, {"pi_z", "pi_1", "pi_2", "theta"});
    strain.pi_z = opt_number(s, spath, "pi_z", strain.pi_z);
    strain.pi_1 = opt_number(s, spath, "pi_1", strain.pi_1);
    strain.pi_2 = opt_number(s, spath, "pi_2", strain.pi_2);
    strain.theta = opt_number(s, spath, "theta", strain.theta);
  }

  const double dg = opt_number(j, path, "ground_splitting_mhz",
                               presets::ground_splitting_mhz);
  const double de = opt_number(j, path, "excited_splitting_mhz",
                               presets::excited_splitting_mhz);

  dynamics::ModelConfig model;
  try {
    strain.validate();
    model.h_ground = spincore::strain_hamiltonian(
        spincore::zfs_prefactor_from_splitting(dg), strain);
    model.h_excited = spincore::strain_hamiltonian(
        spincore::zfs_prefactor_from_splitting(de), strain);
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  model.rates = rates;
  model.efficiency = opt_number(j, path, "efficiency", presets::detection_efficiency);
  model.dark_rate_hz = opt_number(j, path, "dark_rate_hz", presets::dark_rate_hz);

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    const std::string spath = path + ".solver";
    check_keys(s, spath, {"method", "dt_max_us"});
    const std::string method = opt_string(s, spath, "method", "exact");
    if (method == "exact") model.solver.method = dynamics::SolverOptions::Method::exact;
    else if (method == "rk4") model.solver.method = dynamics::SolverOptions::Method::rk4;
    else fail(spath + ".method", "expected \"exact\" or \"rk4\"");
    model.solver.dt_max = opt_number(s, spath, "dt_max_us", 0.0);
  }

  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return model;
}

lineshape::PhononData modes_from_csv_text(const std::string& text,
                                          const std::string& origin);

LineshapeJob parse_lineshape(const json& j, const std::string& path) {
  check_keys(j, path,
             {"modes", "modes_csv", "raw", "eta_mev", "lambda_soc_mev",
              "delta_if_mev", "t_window", "n_time"});
  LineshapeJob job;
  const int sources = int(j.contains("modes")) + int(j.contains("modes_csv")) +
                      int(j.contains("raw"));
  if (sources != 1) {
    fail(path, "exactly one of modes, modes_csv, raw is required");
  }
  if (j.contains("modes")) {
    const json& m = j.at("modes");
    if (m.is_string() && m.get<std::string>() == "synthetic") {
      job.modes = lineshape::synthetic_modes();
    } else if (m.is_array()) {
      for (size_t i = 0; i < m.size(); ++i) {
        const std::string mp = path + ".modes[" + std::to_string(i) + "]";
        check_keys(m[i], mp, {"omega_mev", "sigma_mev", "s_k"});
        lineshape::PhononMode mode;
        mode.omega_mev = opt_number(m[i], mp, "omega_mev", 0.0);
        mode.sigma_mev = opt_number(m[i], mp, "sigma_mev", 2.0);
        mode.s_k = opt_number(m[i], mp, "s_k", 0.0);
        job.modes.modes.push_back(mode);
      }
    } else {
      fail(path + ".modes", "expected an array of modes or \"synthetic\"");
    }
  } else if (j.contains("modes_csv")) {
    const std::string file = opt_string(j, path, "modes_csv", "");
    std::ifstream in(file);
    if (!in) fail(path + ".modes_csv", "cannot open " + file);
    std::stringstream ss;
    ss << in.rdbuf();
    job.modes = modes_from_csv_text(ss.str(), file);
  } else {
    const json& r = j.at("raw");
    const std::string rp = path + ".raw";
    check_keys(r, rp, {"displacement_angstrom", "masses_amu", "mode_vectors",
                       "omegas_mev", "sigma_mev"});
    auto vec = [&](const char* key) {
      if (!r.contains(key)) fail(rp, std::string("missing ") + key);
      return parse_grid(r.at(key), rp + "." + key);
    };
    const std::vector<double> disp = vec("displacement_angstrom");
    const std::vector<double> masses = vec("masses_amu");
    const std::vector<double> omegas = vec("omegas_mev");
    const double sigma = opt_number(r, rp, "sigma_mev", 2.0);
    if (!r.contains("mode_vectors") || !r.at("mode_vectors").is_array()) {
      fail(rp + ".mode_vectors", "expected an array of arrays");
    }
    std::vector<Eigen::VectorXd> modes;
    for (size_t k = 0; k < r.at("mode_vectors").size(); ++k) {
      const auto v = parse_grid(r.at("mode_vectors")[k],
                                rp + ".mode_vectors[" + std::to_string(k) + "]");
      modes.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(),
                                                        Eigen::Index(v.size())));
    }
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(disp.data(),
                                                          Eigen::Index(disp.size()));
    try {
      const auto s = lineshape::partial_hr_factors(d, masses, modes, omegas);
      for (size_t k = 0; k < s.size(); ++k) {
        job.modes.modes.push_back({omegas[k], sigma, s[k]});
      }
    } catch (const std::invalid_argument& e) {
      fail(rp, e.what());
    }
  }
  job.eta_mev = opt_number(j, path, "eta_mev", 1.0);
  job.lambda_soc_mev = opt_number(j, path, "lambda_soc_mev", 0.0);
  job.delta_if_mev = opt_number(j, path, "delta_if_mev", 0.0);
  job.fft.t_window = opt_number(j, path, "t_window", 0.0);
  job.fft.n_time = opt_int(j, path, "n_time", 0);
  try {
    job.modes.validate();
    if (!(job.eta_mev > 0.0)) fail(path + ".eta_mev", "must be > 0");
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return job;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(const std::string& label, size_t index) {
  std::string out;
  for (char c : label) {
    out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
  }
  if (out.empty()) out = "trace_" + std::to_string(index);
  return out;
}

std::string iso_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json trace_to_json(const sequences::Trace& t) {
  json j;
  j["label"] = t.label;
  j["time_us"] = t.time_us;
  j["pl_counts_per_us"] = t.pl;
  if (!t.sigma.empty()) j["sigma"] = t.sigma;
  if (!t.meta.empty()) j["meta"] = t.meta;
  return j;
}

sequences::Trace trace_from_json(const json& j, const std::string& path) {
  sequences::Trace t;
  t.label = j.contains("label") ? j.at("label").get<std::string>() : "";
  if (!j.contains("time_us") || !j.contains("pl_counts_per_us")) {
    fail(path, "trace needs time_us and pl_counts_per_us");
  }
  t.time_us = j.at("time_us").get<std::vector<double>>();
  t.pl = j.at("pl_counts_per_us").get<std::vector<double>>();
  if (j.contains("sigma")) t.sigma = j.at("sigma").get<std::vector<double>>();
  if (j.contains("meta")) {
    for (const auto& item : j.at("meta").items()) {
      t.meta[item.key()] = item.value().get<double>();
    }
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return t;
}

// Mode table CSV: header omega_mev,sigma_mev,s_k.
lineshape::PhononData modes_from_csv_text(const std::string& text,
                                          const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  lineshape::PhononData data;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "omega_mev,sigma_mev,s_k") {
        fail(origin, "mode table header must be omega_mev,sigma_mev,s_k");
      }
      continue;
    }
    std::array<double, 3> v{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int c = 0; c < 3; ++c) {
      auto [next, ec] = std::from_chars(p, end, v[size_t(c)]);
      if (ec != std::errc{}) {
        fail(origin, "row " + std::to_string(lineno) + ": malformed number");
      }
      p = next;
      if (c < 2) {
        if (p >= end || *p != ',') {
          fail(origin, "row " + std::to_string(lineno) + ": expected 3 columns");
        }
        ++p;
      }
    }
    if (p != end) fail(origin, "row " + std::to_string(lineno) + ": trailing data");
    data.modes.push_back({v[0], v[1], v[2]});
  }
  return data;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    fail(origin,
         "empty config; required keys: model (optional: seed, output, "
         "experiment, fit, strain_fit, abc, sweep, lineshape)");
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(origin, "parse error at line " + std::to_string(line) + ", column " +
                     std::to_string(col) + ": " + e.what());
  }
  check_keys(j, "",
             {"seed", "output", "model", "experiment", "fit", "strain_fit",
              "abc", "sweep", "lineshape"});
  if (!j.contains("model")) {
    fail(origin,
         "missing required key: model (optional: seed, output, experiment, "
         "fit, strain_fit, abc, sweep, lineshape)");
  }

  RunConfig cfg;
  cfg.model = parse_model(j.at("model"), "model", &cfg.rates_preset,
                          &cfg.strain_preset);

  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_unsigned() && !s.is_number_integer()) {
      fail("seed", "expected a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (j.contains("output")) {
    check_keys(j.at("output"), "output", {"directory"});
    cfg.out_dir = opt_string(j.at("output"), "output", "directory", ".");
  }
  if (j.contains("experiment")) {
    cfg.experiment = parse_experiment(j.at("experiment"), "experiment");
  }
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    check_keys(f, "fit", {"free", "sigma", "experiments"});
    FitJob job;
    if (!f.contains("free") || !f.at("free").is_array() || f.at("free").empty()) {
      fail("fit.free", "expected a non-empty array of parameters");
    }
    for (size_t i = 0; i < f.at("free").size(); ++i) {
      const json& p = f.at("free")[i];
      const std::string pp = "fit.free[" + std::to_string(i) + "]";
      check_keys(p, pp, {"name", "init", "lower", "upper"});
      estimate::ParamSpec ps;
      ps.name = opt_string(p, pp, "name", "");
      ps.init = opt_number(p, pp, "init", 0.0);
      ps.lower = opt_number(p, pp, "lower", 0.0);
      ps.upper = opt_number(p, pp, "upper", 0.0);
      if (ps.name.empty()) fail(pp + ".name", "parameter name required");
      if (!(ps.lower <= ps.init && ps.init <= ps.upper)) {
        fail(pp, "init must lie inside [lower, upper]");
      }
      // Unknown names must fail at load time, not mid-fit.
      dynamics::ModelConfig probe = cfg.model;
      try {
        estimate::apply_param(probe, ps.name, ps.init);
      } catch (const std::invalid_argument& e) {
        fail(pp + ".name", e.what());
      }
      job.free_params.push_back(ps);
    }
    if (f.contains("sigma")) {
      const json& s = f.at("sigma");
      check_keys(s, "fit.sigma", {"rule", "relative", "floor"});
      const std::string rule = opt_string(s, "fit.sigma", "rule", "poisson");
      if (rule == "poisson") job.sigma.rule = estimate::SigmaModel::Rule::poisson;
      else if (rule == "relative") job.sigma.rule = estimate::SigmaModel::Rule::relative;
      else if (rule == "provided") job.sigma.rule = estimate::SigmaModel::Rule::provided;
      else fail("fit.sigma.rule", "expected poisson, relative, or provided");
      job.sigma.relative = opt_number(s, "fit.sigma", "relative", job.sigma.relative);
      job.sigma.floor = opt_number(s, "fit.sigma", "floor", job.sigma.floor);
    }
    if (!f.contains("experiments") || !f.at("experiments").is_array() ||
        f.at("experiments").empty()) {
      fail("fit.experiments", "expected a non-empty array of experiments");
    }
    for (size_t i = 0; i < f.at("experiments").size(); ++i) {
      auto spec = parse_experiment(f.at("experiments")[i],
                                   "fit.experiments[" + std::to_string(i) + "]");
      if (trace_count(spec) == 0) {
        fail("fit.experiments[" + std::to_string(i) + "]",
             "only trace-producing experiments can be fitted");
      }
      job.experiments.push_back(std::move(spec));
    }
    cfg.fit = std::move(job);
  }
  if (j.contains("strain_fit")) {
    const json& s = j.at("strain_fit");
    check_keys(s, "strain_fit",
               {"odmr_mhz", "p32_after_a1", "p12_after_a2", "sigma_odmr",
                "sigma_p", "pump_rabi_mhz", "multistarts"});
    StrainFitJob job;
    job.observables.odmr_mhz = opt_number(s, "strain_fit", "odmr_mhz", 0.0);
    job.observables.p32_after_a1 = opt_number(s, "strain_fit", "p32_after_a1", 0.0);
    job.observables.p12_after_a2 = opt_number(s, "strain_fit", "p12_after_a2", 0.0);
    job.observables.sigma_odmr =
        opt_number(s, "strain_fit", "sigma_odmr", job.observables.sigma_odmr);
    job.observables.sigma_p =
        opt_number(s, "strain_fit", "sigma_p", job.observables.sigma_p);
    job.options.pump_rabi =
        opt_number(s, "strain_fit", "pump_rabi_mhz", job.options.pump_rabi);
    job.options.multistarts =
        opt_int(s, "strain_fit", "multistarts", job.options.multistarts);
    if (!(job.observables.odmr_mhz > 0.0)) {
      fail("strain_fit.odmr_mhz", "a positive line splitting is required");
    }
    cfg.strain_fit = std::move(job);
  }
  if (j.contains("abc")) {
    const json& a = j.at("abc");
    check_keys(a, "abc",
               {"variation", "iterations", "acceptance_quantile", "ci_level",
                "workers"});
    cfg.abc.variation = opt_number(a, "abc", "variation", cfg.abc.variation);
    cfg.abc.iterations = opt_int(a, "abc", "iterations", cfg.abc.iterations);
    cfg.abc.acceptance_quantile =
        opt_number(a, "abc", "acceptance_quantile", cfg.abc.acceptance_quantile);
    cfg.abc.ci_level = opt_number(a, "abc", "ci_level", cfg.abc.ci_level);
    cfg.abc.workers = opt_int(a, "abc", "workers", cfg.abc.workers);
    if (!(cfg.abc.variation > 0.0)) fail("abc.variation", "must be > 0");
    if (cfg.abc.iterations < 1) fail("abc.iterations", "must be >= 1");
    if (!(cfg.abc.acceptance_quantile > 0.0 && cfg.abc.acceptance_quantile < 1.0)) {
      fail("abc.acceptance_quantile", "must lie in (0, 1)");
    }
    if (!(cfg.abc.ci_level > 0.0 && cfg.abc.ci_level < 1.0)) {
      fail("abc.ci_level", "must lie in (0, 1)");
    }
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, "sweep", {"gamma_3s", "gamma_4s", "excitations", "options"});
    SweepJob job;
    if (!s.contains("gamma_3s") || !s.contains("gamma_4s")) {
      fail("sweep", "gamma_3s and gamma_4s grids are required");
    }
    job.gamma_3s = parse_grid(s.at("gamma_3s"), "sweep.gamma_3s");
    job.gamma_4s = parse_grid(s.at("gamma_4s"), "sweep.gamma_4s");
    if (s.contains("excitations")) {
      const json& e = s.at("excitations");
      if (!e.is_array() || e.empty()) {
        fail("sweep.excitations", "expected a non-empty array");
      }
      for (size_t i = 0; i < e.size(); ++i) {
        job.excitations.push_back(
            parse_excitation(e[i], "sweep.excitations[" + std::to_string(i) + "]"));
      }
    } else {
      job.excitations = {sequences::Excitation::a1, sequences::Excitation::a2,
                         sequences::Excitation::off_resonant};
    }
    if (s.contains("options")) {
      const json& o = s.at("options");
      const std::string op = "sweep.options";
      check_keys(o, op,
                 {"window_us", "resonant_rabi_mhz", "offres_rabi_mhz",
                  "reference_gamma_3", "reference_gamma_4"});
      job.map.window_us = opt_number(o, op, "window_us", job.map.window_us);
      job.map.resonant_rabi = opt_number(o, op, "resonant_rabi_mhz", job.map.resonant_rabi);
      job.map.offres_rabi = opt_number(o, op, "offres_rabi_mhz", job.map.offres_rabi);
      job.map.reference_gamma_3 =
          opt_number(o, op, "reference_gamma_3", job.map.reference_gamma_3);
      job.map.reference_gamma_4 =
          opt_number(o, op, "reference_gamma_4", job.map.reference_gamma_4);
    }
    cfg.sweep = std::move(job);
  }
  if (j.contains("lineshape")) {
    cfg.lineshape = parse_lineshape(j.at("lineshape"), "lineshape");
  }

  cfg.abc.seed = cfg.seed;
  cfg.snapshot_json = j.dump(2);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string trace_to_csv(const sequences::Trace& trace) {
  trace.validate();
  const bool with_sigma = !trace.sigma.empty();
  std::string out = with_sigma ? "time_us,pl_counts_per_us,sigma\n"
                               : "time_us,pl_counts_per_us\n";
  for (size_t i = 0; i < trace.time_us.size(); ++i) {
    out += format_g17(trace.time_us[i]);
    out += ',';
    out += format_g17(trace.pl[i]);
    if (with_sigma) {
      out += ',';
      out += format_g17(trace.sigma[i]);
    }
    out += '\n';
  }
  return out;
}

sequences::Trace trace_from_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool with_sigma = false;
  sequences::Trace t;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line == "time_us,pl_counts_per_us,sigma") with_sigma = true;
      else if (line != "time_us,pl_counts_per_us") {
        fail(origin, "header must be time_us,pl_counts_per_us[,sigma]");
      }
      continue;
    }
    const int cols = with_sigma ? 3 : 2;
    std::array<double, 3> v{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int c = 0; c < cols; ++c) {
      auto [next, ec] = std::from_chars(p, end, v[size_t(c)]);
      if (ec != std::errc{}) {
        fail(origin, "row " + std::to_string(lineno) + ": malformed number");
      }
      p = next;
      if (c < cols - 1) {
        if (p >= end || *p != ',') {
          fail(origin, "row " + std::to_string(lineno) + ": expected " +
                           std::to_string(cols) + " columns");
        }
        ++p;
      }
    }
    if (p != end) {
      fail(origin, "row " + std::to_string(lineno) + ": trailing data");
    }
    if (!t.time_us.empty() && v[0] <= t.time_us.back()) {
      fail(origin, "row " + std::to_string(lineno) + ": time not increasing");
    }
    if (!(v[1] >= 0.0) || !std::isfinite(v[1])) {
      fail(origin, "row " + std::to_string(lineno) + ": negative or non-finite PL");
    }
    t.time_us.push_back(v[0]);
    t.pl.push_back(v[1]);
    if (with_sigma) {
      if (!(v[2] > 0.0)) {
        fail(origin, "row " + std::to_string(lineno) + ": sigma must be > 0");
      }
      t.sigma.push_back(v[2]);
    }
  }
  if (t.time_us.empty()) fail(origin, "no data rows");
  return t;
}

sequences::Trace ingest_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open trace file");
  std::stringstream ss;
  ss << in.rdbuf();
  sequences::Trace t = trace_from_csv(ss.str(), path);
  t.label = std::filesystem::path(path).stem().string();
  return t;
}

void emit_trace(const sequences::Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << trace_to_csv(trace);
  if (!out) fail(path, "write failed");
}

struct ResultBuilder::Impl {
  nlohmann::json doc;
};

ResultBuilder::ResultBuilder(std::uint64_t seed,
                             const std::string& config_snapshot_json)
    : impl_(std::make_unique<Impl>()) {
  nlohmann::json& d = impl_->doc;
  d["schema_version"] = schema_version;
  d["tool"] = "quartetsim";
#ifdef QUARTETSIM_VERSION_STRING
  d["version"] = QUARTETSIM_VERSION_STRING;
#else
  d["version"] = "unknown";
#endif
  d["provenance"]["seed"] = seed;
  d["provenance"]["timestamp"] = iso_timestamp();
  if (!config_snapshot_json.empty()) {
    d["config"] = nlohmann::json::parse(config_snapshot_json);
  }
}

ResultBuilder::~ResultBuilder() = default;
ResultBuilder::ResultBuilder(ResultBuilder&&) noexcept = default;
ResultBuilder& ResultBuilder::operator=(ResultBuilder&&) noexcept = default;

void ResultBuilder::add_trace(const sequences::Trace& trace) {
  impl_->doc["traces"].push_back(trace_to_json(trace));
}

void ResultBuilder::add_fit(const estimate::FitResult& fit) {
  nlohmann::json f;
  f["param_names"] = fit.param_names;
  f["best"] = std::vector<double>(fit.best.data(), fit.best.data() + fit.best.size());
  f["chi2_r"] = fit.chi2_r;
  f["evals"] = fit.evals;
  f["converged"] = fit.converged;
  f["warnings"] = fit.warnings;
  if (!fit.ci68.empty()) {
    nlohmann::json ci;
    for (const auto& [name, interval] : fit.ci68) {
      ci[name] = {interval.first, interval.second};
    }
    f["ci"] = ci;
  }
  impl_->doc["fit"] = std::move(f);
}

void ResultBuilder::add_abc_table(const estimate::FitResult& fit) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [trial, params] : fit.accepted) {
    nlohmann::json row;
    row["trial"] = trial;
    row["params"] =
        std::vector<double>(params.data(), params.data() + params.size());
    rows.push_back(std::move(row));
  }
  impl_->doc["abc"]["accepted"] = std::move(rows);
  impl_->doc["abc"]["accepted_count"] = fit.accepted.size();
}

void ResultBuilder::add_scalar(const std::string& key, double value) {
  impl_->doc["scalars"][key] = value;
}

void ResultBuilder::add_note(const std::string& note) {
  impl_->doc["notes"].push_back(note);
}

void ResultBuilder::add_map(const std::string& name,
                            const std::vector<double>& gamma_3s,
                            const std::vector<double>& gamma_4s,
                            const Eigen::MatrixXd& percent) {
  nlohmann::json m;
  m["name"] = name;
  m["gamma_3s"] = gamma_3s;
  m["gamma_4s"] = gamma_4s;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < percent.rows(); ++i) {
    std::vector<double> row(percent.cols());
    for (Eigen::Index k = 0; k < percent.cols(); ++k) row[size_t(k)] = percent(i, k);
    rows.push_back(row);
  }
  m["percent_change"] = std::move(rows);
  impl_->doc["maps"].push_back(std::move(m));
}

void ResultBuilder::add_overlap_summary(const lineshape::OverlapFunction& overlap) {
  nlohmann::json o;
  o["eta_mev"] = overlap.eta_mev;
  o["points"] = overlap.energies.size();
  o["e_min_mev"] = overlap.energies.front();
  o["e_max_mev"] = overlap.energies.back();
  o["integral"] = overlap.integral();
  o["first_moment_mev"] = overlap.first_moment();
  impl_->doc["overlap"] = std::move(o);
}

std::string ResultBuilder::json() const { return impl_->doc.dump(2) + "\n"; }

void ResultBuilder::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << json();
  if (!out) fail(path, "write failed");
}

FitDocument read_fit_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open fit result");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path, std::string("parse error: ") + e.what());
  }
  if (!j.contains("fit")) fail(path, "document has no fit section");
  FitDocument doc;
  const json& f = j.at("fit");
  doc.fit.param_names = f.at("param_names").get<std::vector<std::string>>();
  const auto best = f.at("best").get<std::vector<double>>();
  doc.fit.best = Eigen::Map<const Eigen::VectorXd>(best.data(),
                                                   Eigen::Index(best.size()));
  doc.fit.chi2_r = f.value("chi2_r", 0.0);
  doc.fit.evals = f.value("evals", 0);
  doc.fit.converged = f.value("converged", false);
  if (doc.fit.param_names.size() != best.size()) {
    fail(path, "fit param_names and best lengths differ");
  }
  if (j.contains("traces")) {
    for (size_t i = 0; i < j.at("traces").size(); ++i) {
      doc.traces.push_back(trace_from_json(
          j.at("traces")[i], path + ":traces[" + std::to_string(i) + "]"));
    }
  }
  return doc;
}

namespace {

void write_map_csv(const std::string& path, const std::vector<double>& g3s,
                   const std::vector<double>& g4s, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "gamma_3_mhz,gamma_4_mhz,pl_change_percent\n";
  for (size_t i = 0; i < g3s.size(); ++i) {
    for (size_t k = 0; k < g4s.size(); ++k) {
      out << format_g17(g3s[i]) << ',' << format_g17(g4s[k]) << ','
          << format_g17(m(Eigen::Index(i), Eigen::Index(k))) << '\n';
    }
  }
  if (!out) fail(path, "write failed");
}

std::string excitation_name(sequences::Excitation e) {
  switch (e) {
    case sequences::Excitation::a1: return "a1";
    case sequences::Excitation::a2: return "a2";
    case sequences::Excitation::off_resonant: return "off_resonant";
  }
  return "unknown";
}

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> preset;
};

RunConfig load_with_overrides(const std::string& path, const CliOverrides& ov) {
  RunConfig cfg = load_config(path);
  if (ov.seed) {
    cfg.seed = *ov.seed;
    cfg.abc.seed = *ov.seed;
  }
  if (ov.out) cfg.out_dir = *ov.out;
  if (ov.preset) {
    try {
      cfg.model.rates = presets::rates(*ov.preset);
      cfg.model.validate();
    } catch (const std::invalid_argument& e) {
      fail("--preset", e.what());
    }
    cfg.rates_preset = *ov.preset;
  }
  return cfg;
}

std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(cfg.out_dir, "cannot create output directory: " + ec.message());
  return dir;
}

int run_simulate(const RunConfig& cfg) {
  if (!cfg.experiment) {
    fail("experiment", "simulate needs an experiment section in the config");
  }
  const auto& spec = *cfg.experiment;
  const auto dir = prepare_out_dir(cfg);
  ResultBuilder result(cfg.seed, cfg.snapshot_json);

  using Kind = estimate::ExperimentSpec::Kind;
  std::vector<sequences::Trace> traces;
  switch (spec.kind) {
    case Kind::lifetime: {
      auto r = sequences::lifetime_experiment(cfg.model, spec.transition,
                                              spec.lifetime);
      result.add_scalar("tau_us", r.tau_us);
      traces.push_back(std::move(r.trace));
      break;
    }
    case Kind::metastable_decay: {
      auto r = sequences::metastable_decay_experiment(cfg.model, spec.pump,
                                                      spec.delays_us,
                                                      spec.metastable);
      result.add_scalar("tau_us", r.tau_us);
      traces.push_back(std::move(r.probe_a1));
      traces.push_back(std::move(r.probe_a2));
      break;
    }
    case Kind::repolarization: {
      auto r = sequences::repolarization_experiment(cfg.model, spec.transition,
                                                    spec.pump, spec.durations_us,
                                                    spec.repolarization);
      result.add_scalar("p_12_final", r.p_12_final);
      result.add_scalar("p_32_final", r.p_32_final);
      traces.push_back(std::move(r.trace));
      break;
    }
    case Kind::spin_depletion:
      traces = sequences::spin_depletion_experiment(cfg.model, spec.transition,
                                                    spec.rabis_mhz, spec.depletion);
      break;
    case Kind::visibility: {
      const auto r = sequences::visibility_experiment(cfg.model, spec.transition,
                                                      spec.visibility);
      result.add_scalar("v", r.v);
      result.add_scalar("v_dark_corrected", r.v_dark_corrected);
      result.add_scalar("p_12", r.p_12);
      result.add_scalar("p_32", r.p_32);
      result.add_scalar("pl_a1", r.pl_a1);
      result.add_scalar("pl_a2", r.pl_a2);
      result.add_scalar("pl_dark", r.pl_dark);
      result.add_scalar("phys_p_12", r.phys_p_12);
      result.add_scalar("phys_p_32", r.phys_p_32);
      break;
    }
    case Kind::emission_change_map: {
      const auto m = sequences::emission_change_map(
          cfg.model, spec.map_gamma_3s, spec.map_gamma_4s, spec.excitation,
          spec.map);
      const std::string name = "map_" + excitation_name(spec.excitation);
      result.add_map(name, spec.map_gamma_3s, spec.map_gamma_4s, m);
      write_map_csv((dir / (name + ".csv")).string(), spec.map_gamma_3s,
                    spec.map_gamma_4s, m);
      break;
    }
  }

  for (size_t i = 0; i < traces.size(); ++i) {
    result.add_trace(traces[i]);
    emit_trace(traces[i],
               (dir / (sanitize(traces[i].label, i) + ".csv")).string());
  }
  result.write((dir / "result.json").string());
  std::cout << "wrote " << (dir / "result.json").string() << "\n";
  return exit_ok;
}

estimate::FitProblem build_fit_problem(const RunConfig& cfg,
                                       std::vector<sequences::Trace> traces) {
  const FitJob& job = *cfg.fit;
  size_t needed = 0;
  for (const auto& e : job.experiments) needed += trace_count(e);
  if (traces.size() != needed) {
    fail("fit", "expected " + std::to_string(needed) + " data traces, got " +
                    std::to_string(traces.size()));
  }
  estimate::FitProblem problem;
  problem.baseline = cfg.model;
  problem.free_params = job.free_params;
  problem.sigma = job.sigma;
  size_t next = 0;
  for (const auto& e : job.experiments) {
    estimate::Dataset ds;
    ds.experiment = e;
    for (size_t k = 0; k < trace_count(e); ++k) ds.data.push_back(traces[next++]);
    problem.datasets.push_back(std::move(ds));
  }
  return problem;
}

int run_fit(const RunConfig& cfg, const std::vector<std::string>& data_files) {
  const auto dir = prepare_out_dir(cfg);
  if (cfg.strain_fit) {
    if (!data_files.empty()) {
      fail("fit", "strain_fit takes its observables from the config, not files");
    }
    const auto r = estimate::strain_fit(cfg.strain_fit->observables, cfg.model,
                                        cfg.strain_fit->options);
    ResultBuilder result(cfg.seed, cfg.snapshot_json);
    result.add_scalar("pi_z", r.params.pi_z);
    result.add_scalar("pi_1", r.params.pi_1);
    result.add_scalar("pi_2", r.params.pi_2);
    result.add_scalar("theta", r.params.theta);
    result.add_scalar("residual", r.residual);
    result.add_scalar("under_determined", r.under_determined ? 1.0 : 0.0);
    for (const auto& w : r.warnings) result.add_note(w);
    result.write((dir / "strain_fit_result.json").string());
    std::cout << "wrote " << (dir / "strain_fit_result.json").string() << "\n";
    return exit_ok;
  }
  if (!cfg.fit) fail("fit", "config has neither fit nor strain_fit section");

  std::vector<sequences::Trace> traces;
  traces.reserve(data_files.size());
  for (const auto& f : data_files) traces.push_back(ingest_trace(f));
  const auto problem = build_fit_problem(cfg, std::move(traces));

  const auto fit = estimate::rate_fit(problem);
  ResultBuilder result(cfg.seed, cfg.snapshot_json);
  for (const auto& ds : problem.datasets) {
    for (const auto& t : ds.data) result.add_trace(t);
  }
  result.add_fit(fit);
  result.write((dir / "fit_result.json").string());
  std::cout << "wrote " << (dir / "fit_result.json").string() << "\n"
            << "chi2_r = " << fit.chi2_r << "\n";
  for (const auto& w : fit.warnings) std::cout << "warning: " << w << "\n";
  return exit_ok;
}

int run_abc(const RunConfig& cfg, const std::string& fit_path) {
  if (!cfg.fit) fail("abc", "config needs the fit section that produced the fit");
  const auto dir = prepare_out_dir(cfg);
  FitDocument doc = read_fit_document(fit_path);

  std::vector<std::string> expected;
  for (const auto& p : cfg.fit->free_params) expected.push_back(p.name);
  if (doc.fit.param_names != expected) {
    fail(fit_path, "fit result parameters do not match the config's free list");
  }
  const auto problem = build_fit_problem(cfg, std::move(doc.traces));

  const auto abc = estimate::abc_errors(problem, doc.fit, cfg.abc);
  ResultBuilder result(cfg.seed, cfg.snapshot_json);
  result.add_fit(abc);
  result.add_abc_table(abc);
  result.write((dir / "abc_result.json").string());
  std::cout << "wrote " << (dir / "abc_result.json").string() << "\n"
            << "accepted " << abc.accepted.size() << " / " << cfg.abc.iterations
            << "\n";
  for (const auto& w : abc.warnings) std::cout << "warning: " << w << "\n";
  return exit_ok;
}

int run_sweep(const RunConfig& cfg) {
  if (!cfg.sweep) fail("sweep", "config has no sweep section");
  const auto dir = prepare_out_dir(cfg);
  const SweepJob& job = *cfg.sweep;

  // Fan the excitations out to a small pool; writes stay on this thread.
  std::vector<Eigen::MatrixXd> maps(job.excitations.size());
  std::vector<std::exception_ptr> errors(job.excitations.size());
  const int pool = std::min<int>(estimate::worker_count(0),
                                 int(job.excitations.size()));
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i = next.fetch_add(1); i < job.excitations.size();
         i = next.fetch_add(1)) {
      try {
        maps[i] = sequences::emission_change_map(
            cfg.model, job.gamma_3s, job.gamma_4s, job.excitations[i], job.map);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (pool <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < pool; ++i) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ResultBuilder result(cfg.seed, cfg.snapshot_json);
  for (size_t i = 0; i < job.excitations.size(); ++i) {
    const std::string name = "map_" + excitation_name(job.excitations[i]);
    result.add_map(name, job.gamma_3s, job.gamma_4s, maps[i]);
    write_map_csv((dir / (name + ".csv")).string(), job.gamma_3s, job.gamma_4s,
                  maps[i]);
  }
  result.write((dir / "result.json").string());
  std::cout << "wrote " << (dir / "result.json").string() << "\n";
  return exit_ok;
}

int run_lineshape(const RunConfig& cfg) {
  if (!cfg.lineshape) fail("lineshape", "config has no lineshape section");
  const auto dir = prepare_out_dir(cfg);
  const LineshapeJob& job = *cfg.lineshape;

  const auto overlap = lineshape::overlap_function(job.modes, job.eta_mev, job.fft);
  std::ofstream out(dir / "overlap.csv", std::ios::binary);
  if (!out) fail((dir / "overlap.csv").string(), "cannot open for writing");
  out << "energy_mev,a_per_mev\n";
  for (size_t i = 0; i < overlap.energies.size(); ++i) {
    out << format_g17(overlap.energies[i]) << ',' << format_g17(overlap.a[i])
        << '\n';
  }
  if (!out) fail((dir / "overlap.csv").string(), "write failed");

  ResultBuilder result(cfg.seed, cfg.snapshot_json);
  result.add_overlap_summary(overlap);
  result.add_scalar("total_hr", job.modes.total_hr());
  if (job.lambda_soc_mev > 0.0) {
    result.add_scalar("isc_rate_mhz",
                      lineshape::isc_rate_mhz(job.lambda_soc_mev,
                                              job.delta_if_mev, overlap));
  }
  result.write((dir / "result.json").string());
  std::cout << "wrote " << (dir / "result.json").string() << "\n";
  return exit_ok;
}

int run_repro() {
  const auto results = repro::run_all(&std::cout);
  return repro::all_passed(results) ? exit_ok : exit_validation;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"quartet color-center photophysics simulator"};
  app.require_subcommand(1);

  CliOverrides ov;
  std::string config_path;
  std::string fit_result_path;
  std::vector<std::string> data_files;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) {
      sub->add_option("config", config_path, "JSON config file")->required();
    }
    sub->add_option("--seed", ov.seed, "override the run seed");
    sub->add_option("--out", ov.out, "override the output directory");
    sub->add_option("--preset", ov.preset, "override the rates preset");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run one experiment");
  add_common(simulate, true);
  CLI::App* fit = app.add_subcommand("fit", "fit rates or deformation parameters");
  add_common(fit, true);
  fit->add_option("data", data_files, "trace CSV files, one per expected trace");
  CLI::App* abc = app.add_subcommand("abc", "approximate Bayesian error bars");
  add_common(abc, true);
  abc->add_option("fit_result", fit_result_path, "fit result JSON")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "emission-change maps over rate grids");
  add_common(sweep, true);
  CLI::App* lineshape_cmd =
      app.add_subcommand("lineshape", "vibrational overlap function and ISC rate");
  add_common(lineshape_cmd, true);
  CLI::App* repro_cmd = app.add_subcommand(
      "paper-repro", "run the published-results reproduction suite");
  add_common(repro_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help() << "\n";
    return exit_validation;
  }

  try {
    if (repro_cmd->parsed()) return run_repro();
    const RunConfig cfg = load_with_overrides(config_path, ov);
    if (simulate->parsed()) return run_simulate(cfg);
    if (fit->parsed()) return run_fit(cfg, data_files);
    if (abc->parsed()) return run_abc(cfg, fit_result_path);
    if (sweep->parsed()) return run_sweep(cfg);
    if (lineshape_cmd->parsed()) return run_lineshape(cfg);
    std::cerr << app.help() << "\n";
    return exit_validation;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  } catch (const dynamics::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return exit_numerical;
  }
}

}  // namespace quartet::iocli
