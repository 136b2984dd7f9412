#pragma once

#include <Eigen/Dense>

#include "rbeki/tfpde.hpp"

// Karhunen-Loeve expansion of a mean-zero Gaussian log-diffusivity field with
// squared-exponential covariance, discretized by the Nystrom method on the
// solver grid.
namespace rbeki::kl {

struct KlField {
  double sigma2 = 1.0;
  double length_scale = 0.2;
  Eigen::VectorXd eigenvalues;     // top d, non-increasing
  Eigen::MatrixXd eigenfunctions;  // n_h x d, orthonormal in the h^2-weighted inner product
  double total_energy = 0.0;       // trace of the weighted kernel matrix

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  double energy_fraction() const { return eigenvalues.sum() / total_energy; }

  // log kappa = sum_i theta_i sqrt(lambda_i) phi_i
  Eigen::VectorXd log_kappa(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd kappa(const Eigen::VectorXd& theta) const;
};

KlField kl_expansion(double sigma2, double length_scale, int d,
                     const tfpde::SpatialGrid& grid);

// Bilinear interpolation of nodal values between uniform grids on [0,1]^2.
Eigen::VectorXd interpolate_bilinear(const tfpde::SpatialGrid& from,
                                     const Eigen::VectorXd& values,
                                     const tfpde::SpatialGrid& to);

}  // namespace rbeki::kl
