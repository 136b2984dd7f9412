#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "rbeki/rng.hpp"

// Regularized ensemble Kalman inversion: prior sampling, perturbed
// observations, ensemble covariances, the adaptive regularization parameter,
// and the discrepancy stopping rule.
namespace rbeki::eki {

struct PriorSpec {
  enum class Kind { UniformBox, StandardNormal };
  Kind kind = Kind::UniformBox;
  Eigen::VectorXd lo, hi;  // uniform-box bounds
  int dim = 0;

  static PriorSpec uniform_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  static PriorSpec standard_normal(int dim);
};

struct Ensemble {
  Eigen::MatrixXd members;  // N_e x d
  int iteration = 0;

  int size() const { return static_cast<int>(members.rows()); }
  int dim() const { return static_cast<int>(members.cols()); }
  Eigen::VectorXd mean() const { return members.colwise().mean(); }
};

struct EkiOptions {
  int n_members = 100;
  double rho = 0.7;
  double tau = 1.0 / 0.7;
  double gamma0 = 1.0;
  int max_iters = 100;
  double noise_level = 0.0;  // right-hand side of the discrepancy rule
  // optional probe for surrogate clamp events, sampled once per iteration
  std::function<long()> clamp_probe;
};

struct IterationRecord {
  int n = 0;
  double e_theta = -1.0;  // relative error, -1 when no truth supplied
  double misfit = 0.0;    // ||Gamma^{-1/2}(y_obs - omega_bar)||
  double gamma = 0.0;     // 0 at the stopping iteration (no update performed)
  double wall_s = 0.0;    // seconds spent in this iteration
  long clamps = 0;
  Eigen::VectorXd mean;
};

enum class StopReason { Discrepancy, MaxIters };

struct InversionResult {
  std::vector<IterationRecord> history;
  Ensemble final_ensemble;
  StopReason reason = StopReason::MaxIters;

  const IterationRecord& last() const { return history.back(); }
};

Ensemble sample_prior(const PriorSpec& spec, int n_members, const RngStream& rng);

// Column j = y_obs + L z_j with Gamma = L L^T and z_j standard normal.
Eigen::MatrixXd perturb_observations(const Eigen::VectorXd& y_obs,
                                     const Eigen::MatrixXd& gamma, int n_members,
                                     const RngStream& rng);

struct EnsembleStats {
  Eigen::VectorXd theta_mean;
  Eigen::VectorXd omega_mean;
  Eigen::MatrixXd c_theta_omega;  // d x m
  Eigen::MatrixXd c_omega_omega;  // m x m
};

// outputs: N_e x m forward values, 1/(N_e - 1) normalization.
EnsembleStats ensemble_stats(const Ensemble& ensemble, const Eigen::MatrixXd& outputs);

// Smallest gamma in {gamma0 * 2^i} with
// gamma ||Gamma^{1/2}(C + gamma Gamma)^{-1} r|| >= rho ||Gamma^{-1/2} r||.
double select_gamma(const Eigen::MatrixXd& c_omega_omega, const Eigen::MatrixXd& gamma_cov,
                    const Eigen::VectorXd& residual, double rho, double gamma0);

Ensemble eki_update(const Ensemble& ensemble, const Eigen::MatrixXd& outputs,
                    const Eigen::MatrixXd& perturbed_obs, double gamma,
                    const Eigen::MatrixXd& gamma_cov);

bool discrepancy_stop(double misfit, double noise_level, double tau);

using ForwardMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

InversionResult run_eki(const ForwardMap& forward, const PriorSpec& spec,
                        const Eigen::VectorXd& y_obs, const Eigen::MatrixXd& gamma_cov,
                        const EkiOptions& opts, const RngStream& rng,
                        const Eigen::VectorXd* truth = nullptr);

}  // namespace rbeki::eki
