#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

#include "rbeki/rng.hpp"
#include "rbeki/simd.hpp"

// Doubly stochastic radial basis function regression: the square unsymmetric
// collocation system with per-center shape parameters drawn from a chi-square
// law, whose degrees of freedom are fitted from stochastic-LOOCV-optimal
// shape observations.
namespace rbeki::dsrbf {

enum class Kernel { Gaussian, MQ, IMQ };

simd::Rbf to_profile(Kernel k);

// phi(r): Gaussian exp(-r^2), MQ (1+r^2)^{1/2}, IMQ (1+r^2)^{-1/2}.
double kernel_eval(Kernel kind, double r);

struct TrainingSet {
  Eigen::MatrixXd centers;  // n_Z x s
  Eigen::MatrixXd values;   // n_Z x r (r = 1 for scalar targets)

  int size() const { return static_cast<int>(centers.rows()); }
  int input_dim() const { return static_cast<int>(centers.cols()); }
};

// Per-dimension affine map of the inputs onto [0,1], frozen at fit time.
struct InputScaling {
  Eigen::VectorXd lo;
  Eigen::VectorXd span;  // 1 for degenerate dimensions

  static InputScaling from_centers(const Eigen::MatrixXd& centers);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& points) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& point) const;
};

// [A]_ij = phi(shapes_j * |z_i - z_j|); column j carries shape_j, so the
// system is unsymmetric unless all shapes coincide.
Eigen::MatrixXd assemble_matrix(const Eigen::MatrixXd& centers,
                                const Eigen::VectorXd& shapes, Kernel kind);

// Monte Carlo LOOCV cost vector e(eps) from N_rv normal probe vectors; one
// column per target component.
Eigen::MatrixXd stochastic_loocv_cost(double eps, const TrainingSet& ts, Kernel kind,
                                      int n_rv, const RngStream& rng);

// Search interval for the optimal shape on unit-box-scaled inputs.  The
// stochastic LOOCV cost is biased toward large shapes when the collocation
// matrix is ill conditioned, so the upper bound doubles as the effective
// regularizer; [0.1, 4] tracks the exact-LOOCV optimum on smooth benchmarks.
struct ShapeSearchBounds {
  double lo = 0.1;
  double hi = 4.0;
};

// argmin over eps of ||e(eps)|| by golden-section search; the probe vectors
// are held fixed across the search, so the objective is deterministic.
double select_optimal_shape(const TrainingSet& ts, Kernel kind, int n_rv,
                            const ShapeSearchBounds& bounds, const RngStream& rng);

struct ShapeDistribution {
  double dof = 0.0;  // chi-square degrees of freedom = mean of observed optima
  // chi-square draws are clamped to the admissible shape interval; near-zero
  // shapes make all kernel columns collinear and wreck generalization
  double lo = 0.1;
  double hi = 4.0;
};

ShapeDistribution build_shape_distribution(const TrainingSet& ts, Kernel kind, int n_obs,
                                           int n_rv, const ShapeSearchBounds& bounds,
                                           const RngStream& rng);

class DsrbfModel {
 public:
  DsrbfModel() = default;
  DsrbfModel(Kernel kind, InputScaling scaling, Eigen::MatrixXd centers_scaled,
             Eigen::VectorXd shapes, Eigen::MatrixXd coefficients, double fit_residual);

  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;
  double predict_scalar(const Eigen::VectorXd& x) const;
  double predict_scalar(double x) const;  // 1-D inputs

  Kernel kernel() const { return kernel_; }
  const InputScaling& scaling() const { return scaling_; }
  const Eigen::VectorXd& shapes() const { return shapes_; }
  const Eigen::MatrixXd& coefficients() const { return coefficients_; }
  int num_centers() const { return n_centers_; }
  int input_dim() const { return input_dim_; }
  double fit_residual() const { return fit_residual_; }

  void save(std::ostream& out) const;
  static DsrbfModel load(std::istream& in);

 private:
  Kernel kernel_ = Kernel::MQ;
  InputScaling scaling_;
  std::vector<double> centers_dim_major_;  // scaled, SIMD-friendly layout
  Eigen::VectorXd shapes_;
  Eigen::MatrixXd coefficients_;  // n_Z x r
  int n_centers_ = 0;
  int input_dim_ = 0;
  double fit_residual_ = 0.0;
};

// Samples per-center shapes from chi-square(dof), solves the collocation
// system by dense LU; retries with a fresh draw (up to 3) when the solve is
// numerically singular.
DsrbfModel fit(const TrainingSet& ts, Kernel kind, const ShapeDistribution& dist,
               const RngStream& rng);

}  // namespace rbeki::dsrbf
