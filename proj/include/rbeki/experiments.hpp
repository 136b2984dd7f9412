#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rbeki/config.hpp"
#include "rbeki/eki.hpp"
#include "rbeki/kl.hpp"
#include "rbeki/pod.hpp"
#include "rbeki/surrogate.hpp"
#include "rbeki/tfpde.hpp"

// Experiment drivers: synthetic-data generation on the fine grid, offline
// surrogate construction, inversion runs, and CSV emission.
namespace rbeki::experiments {

// Uniform sensor layout snapped to coarse-grid nodes (which are also fine-grid
// nodes, since the fine grid is a 2x refinement).
std::vector<std::pair<double, double>> sensor_layout(int per_axis,
                                                     const tfpde::SpatialGrid& grid);

// Problem-specific forward machinery shared by the drivers and tests.
class Problem {
 public:
  explicit Problem(const ExperimentConfig& config);

  const ExperimentConfig& config() const { return config_; }
  const tfpde::SpatialGrid& coarse_grid() const { return coarse_grid_; }
  const tfpde::SpatialGrid& fine_grid() const { return fine_grid_; }
  const tfpde::TimeGrid& coarse_time() const { return coarse_time_; }
  const tfpde::TimeGrid& fine_time() const { return fine_time_; }
  int param_dim() const;

  eki::PriorSpec prior() const;
  tfpde::Trajectory solve_coarse(const Eigen::VectorXd& theta) const;
  tfpde::Trajectory solve_fine(const Eigen::VectorXd& theta) const;
  tfpde::ObservationSetup coarse_obs(double noise_std) const;
  tfpde::ObservationSetup fine_obs(double noise_std) const;
  Eigen::VectorXd observe_coarse(const Eigen::VectorXd& theta, double noise_std) const;

  // config truth when given; drawn from the KL prior otherwise (example2)
  Eigen::VectorXd resolve_truth(const RngStream& rng) const;
  const kl::KlField* kl() const { return kl_ ? &*kl_ : nullptr; }
  long alpha_clamp_count() const { return alpha_clamps_; }

 private:
  Eigen::VectorXd clamped_alpha_theta(const Eigen::VectorXd& theta) const;
  tfpde::Trajectory solve_on(const tfpde::SpatialGrid& grid, const tfpde::TimeGrid& tgrid,
                             const tfpde::ForwardSolver* cached,
                             const Eigen::VectorXd& theta) const;

  ExperimentConfig config_;
  tfpde::SpatialGrid coarse_grid_;
  tfpde::SpatialGrid fine_grid_;
  tfpde::TimeGrid coarse_time_;
  tfpde::TimeGrid fine_time_;
  std::optional<kl::KlField> kl_;
  // fixed-operator problems share one factorization per grid
  std::unique_ptr<tfpde::ForwardSolver> coarse_solver_;
  std::unique_ptr<tfpde::ForwardSolver> fine_solver_;
  mutable long alpha_clamps_ = 0;
};

struct OfflineModel {
  surrogate::Surrogate model;
  pod::PodBasis basis;
  Eigen::MatrixXd train_params;
  std::vector<int> train_time_indices;
  std::vector<tfpde::Trajectory> train_trajectories;
  double offline_seconds = 0.0;
};

// Snapshot generation, POD, tensor decomposition, DSRBF training.
OfflineModel build_offline(const Problem& problem, const RngStream& rng,
                           bool keep_trajectories = false);

// Training time indices on the coarse time grid: evenly spaced with the
// sensor times forced in.
std::vector<int> training_time_indices(const ExperimentConfig& config);

struct SyntheticData {
  Eigen::VectorXd truth;
  Eigen::VectorXd y_clean;  // fine-grid observations at the truth
  Eigen::VectorXd y_obs;
  double noise_std = 0.0;    // absolute, delta_rel * ||y_clean|| / sqrt(m)
  double noise_level = 0.0;  // ||Gamma^{-1/2} xi|| (or sqrt(m) in sqrt-m mode)
  Eigen::MatrixXd gamma;
};

SyntheticData generate_synthetic_data(const Problem& problem, double delta_rel,
                                      const Eigen::VectorXd& truth, const RngStream& rng);

struct MetricSeries {
  std::vector<double> e_theta;
  std::vector<double> misfit_full;  // coarse full-order model at the ensemble mean
};

MetricSeries compute_metrics(const eki::InversionResult& result, const Eigen::VectorXd& truth,
                             const Problem& problem, const SyntheticData& data);

void write_diagnostics_csv(const std::string& path, const eki::InversionResult& result,
                           const MetricSeries& metrics);

// CLI entry points; each writes its result files under config.out_dir.
void run_example1(const ExperimentConfig& config);
void run_example1_alpha(const ExperimentConfig& config);
void run_example2(const ExperimentConfig& config);
void run_validate_surrogate(const ExperimentConfig& config);
void run_forward_convergence(const ExperimentConfig& config);

// Convergence studies behind `forward-convergence` (also used by tests).
// Temporal: manufactured solution with nodal forcing, so the error is purely
// the L1 discretization; returns (dt, max error) pairs.
std::vector<std::pair<double, double>> temporal_convergence(double alpha,
                                                            const std::vector<int>& step_counts,
                                                            int grid_n);
std::vector<std::pair<double, double>> spatial_convergence(double alpha,
                                                           const std::vector<int>& grid_sizes,
                                                           int n_steps);

}  // namespace rbeki::experiments
