#include "quartet/superop.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace quartet::superop {

namespace {

constexpr double inv_sqrt2 = 0.70710678118654752440;

struct PairTable {
  // pair_index(i,j) for i<j -> 0..44
  int of[10][10];
  int first[45], second[45];
  PairTable() {
    int p = 0;
    for (int i = 0; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j) {
        of[i][j] = p;
        first[p] = i;
        second[p] = j;
        ++p;
      }
  }
};

const PairTable& pairs() {
  static const PairTable t;
  return t;
}

}  // namespace

Eigen::VectorXd to_real_vector(const Mat10& rho) {
  const PairTable& t = pairs();
  Eigen::VectorXd x(dim);
  for (int i = 0; i < 10; ++i) x(i) = rho(i, i).real();
  for (int p = 0; p < 45; ++p) {
    const cplx v = rho(t.first[p], t.second[p]);
    x(10 + 2 * p) = v.real() / inv_sqrt2;
    x(10 + 2 * p + 1) = v.imag() / inv_sqrt2;
  }
  return x;
}

Mat10 from_real_vector(const Eigen::VectorXd& x) {
  const PairTable& t = pairs();
  Mat10 rho = Mat10::Zero();
  for (int i = 0; i < 10; ++i) rho(i, i) = x(i);
  for (int p = 0; p < 45; ++p) {
    const cplx v(inv_sqrt2 * x(10 + 2 * p), inv_sqrt2 * x(10 + 2 * p + 1));
    rho(t.first[p], t.second[p]) = v;
    rho(t.second[p], t.first[p]) = std::conj(v);
  }
  return rho;
}

Eigen::RowVectorXd pl_weights(const dynamics::ModelConfig& config) {
  Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(dim);
  for (int i = idx::e_p32; i <= idx::e_m32; ++i) {
    w(i) = config.efficiency * config.rates.gamma_r;
  }
  return w;
}

SegmentGenerator::SegmentGenerator(const dynamics::ModelConfig& config,
                                   const dynamics::DriveState& drive) {
  const Mat10 h = dynamics::total_hamiltonian(config, drive);
  const auto ops = dynamics::jump_operators(config, drive);
  l_.resize(dim, dim);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < dim; ++k) {
    e(k) = 1.0;
    l_.col(k) = to_real_vector(
        dynamics::detail::apply_generator(h, ops, from_real_vector(e)));
    e(k) = 0.0;
  }
  w_ = pl_weights(config);
}

const Eigen::MatrixXd& SegmentGenerator::propagator(double dt_us) const {
  for (const auto& [dt, m] : cache_) {
    if (dt == dt_us) return m;
  }
  Eigen::MatrixXd p = (l_ * dt_us).exp();
  cache_.emplace_back(dt_us, std::move(p));
  return cache_.back().second;
}

const Eigen::MatrixXd& SegmentGenerator::augmented(double dt_us) const {
  for (const auto& [dt, m] : aug_cache_) {
    if (dt == dt_us) return m;
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
  a.topLeftCorner(dim, dim) = l_;
  a.row(dim).head(dim) = w_;
  Eigen::MatrixXd p = (a * dt_us).exp();
  aug_cache_.emplace_back(dt_us, std::move(p));
  return aug_cache_.back().second;
}

Eigen::VectorXd SegmentGenerator::apply(const Eigen::VectorXd& x,
                                        double dt_us) const {
  if (dt_us == 0.0) return x;
  return propagator(dt_us) * x;
}

SegmentGenerator::Integrated SegmentGenerator::propagate_with_integral(
    const Eigen::VectorXd& x0, double duration_us) const {
  if (duration_us == 0.0) return {x0, 0.0};
  const Eigen::MatrixXd& p = augmented(duration_us);
  Eigen::VectorXd xa(dim + 1);
  xa.head(dim) = x0;
  xa(dim) = 0.0;
  Eigen::VectorXd y = p * xa;
  return {y.head(dim), y(dim)};
}

Eigen::VectorXd SegmentGenerator::steady_state() const {
  // Replace one row by the trace constraint; the kernel of a Lindblad
  // generator contains a unique trace-1 state for the configurations in use.
  Eigen::MatrixXd a = l_;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  a.row(0).setZero();
  for (int i = 0; i < 10; ++i) a(0, i) = 1.0;
  b(0) = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd x = lu.solve(b);
  const double resid = (a * x - b).norm();
  if (!x.allFinite() || resid > 1e-8 * std::max(1.0, x.norm())) {
    Eigen::FullPivLU<Eigen::MatrixXd> flu(a);
    x = flu.solve(b);
    if (!x.allFinite() || (a * x - b).norm() > 1e-6) {
      throw dynamics::NumericalError("steady-state system is singular");
    }
  }
  return x;
}

}  // namespace quartet::superop
