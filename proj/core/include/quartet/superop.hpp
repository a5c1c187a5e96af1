#pragma once

// Exact propagation of the 10-level master equation through a real 100-dim
// vectorization of Hermitian matrices:
//   components 0..9            rho_ii
//   then per pair i<j          sqrt(2) Re rho_ij, sqrt(2) Im rho_ij
// The map is an isometry (Frobenius norm preserved), the Liouvillian becomes
// a real 100x100 matrix, and one segment of constant drive is a single dense
// matrix exponential. Time-integrated photoluminescence over a segment is
// exact via the augmented exponential
//   exp([ L 0 ; w 0 ] T) [x0 ; 0] = [x(T) ; integral w x dt].
// The Liouvillian is built by probing lindblad_rhs with the 100 basis
// matrices, so superoperator and right-hand side cannot drift apart.

#include <vector>

#include <Eigen/Dense>

#include "quartet/dynamics.hpp"

namespace quartet::superop {

inline constexpr int dim = 100;

Eigen::VectorXd to_real_vector(const Mat10& rho);
Mat10 from_real_vector(const Eigen::VectorXd& x);

// Row vector w with w . x = pl_rate(rho) - dark (the affine dark term is
// added separately by callers).
Eigen::RowVectorXd pl_weights(const dynamics::ModelConfig& config);

// Liouvillian of one constant-drive segment plus cached propagators.
class SegmentGenerator {
 public:
  SegmentGenerator(const dynamics::ModelConfig& config,
                   const dynamics::DriveState& drive);

  const Eigen::MatrixXd& matrix() const { return l_; }

  // exp(L dt). Cached per distinct dt (exact double comparison).
  const Eigen::MatrixXd& propagator(double dt_us) const;

  Eigen::VectorXd apply(const Eigen::VectorXd& x, double dt_us) const;

  // {x(T), integral_0^T w x dt} for the segment's PL weights.
  struct Integrated {
    Eigen::VectorXd x_end;
    double integral;
  };
  Integrated propagate_with_integral(const Eigen::VectorXd& x0,
                                     double duration_us) const;

  // Null vector of L with unit trace. Throws dynamics::NumericalError when
  // the kernel is not one-dimensional enough to pin down (singular system).
  Eigen::VectorXd steady_state() const;

  const Eigen::RowVectorXd& weights() const { return w_; }

 private:
  Eigen::MatrixXd l_;
  Eigen::RowVectorXd w_;
  mutable std::vector<std::pair<double, Eigen::MatrixXd>> cache_;
  mutable std::vector<std::pair<double, Eigen::MatrixXd>> aug_cache_;
  const Eigen::MatrixXd& augmented(double dt_us) const;
};

}  // namespace quartet::superop
