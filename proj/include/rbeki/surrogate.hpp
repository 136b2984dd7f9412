#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <vector>

#include "rbeki/dsrbf.hpp"
#include "rbeki/pod.hpp"
#include "rbeki/rng.hpp"
#include "rbeki/tfpde.hpp"

// Non-intrusive reduced model: SVD of each POD coefficient's (time x
// parameter) training table into rank-one modes, a DSRBF per mode, and the
// reduced forward map composed with the observation operator.
namespace rbeki::surrogate {

struct CoefficientTensor {
  std::vector<Eigen::MatrixXd> q;  // per POD index k: N_t x N_theta
  Eigen::VectorXd times;           // training times, sorted
  Eigen::MatrixXd params;          // N_theta x d training parameters
};

using SolverFn = std::function<tfpde::Trajectory(const Eigen::VectorXd&)>;

CoefficientTensor build_training_set(const std::vector<tfpde::Trajectory>& trajectories,
                                     const Eigen::MatrixXd& params,
                                     const std::vector<int>& time_indices,
                                     const tfpde::TimeGrid& tgrid,
                                     const pod::PodBasis& basis);
CoefficientTensor build_training_set(const SolverFn& solver, const Eigen::MatrixXd& params,
                                     const std::vector<int>& time_indices,
                                     const tfpde::TimeGrid& tgrid,
                                     const pod::PodBasis& basis);

struct TensorModes {
  Eigen::VectorXd lambda;  // q_k singular values, non-increasing
  Eigen::MatrixXd psi;     // N_t x q_k discrete time modes
  Eigen::MatrixXd phi;     // N_theta x q_k discrete parameter modes
};

// q_fixed >= 1 pins the truncation; otherwise the energy criterion applies.
TensorModes tensor_decompose(const Eigen::MatrixXd& qk, int q_fixed, double energy);

struct TrainOptions {
  dsrbf::Kernel kernel = dsrbf::Kernel::MQ;
  int n_rv = 15;
  int n_obs = 10;
  dsrbf::ShapeSearchBounds bounds;
  int q_fixed = -1;          // per-coefficient SVD truncation when >= 1
  double q_energy = 0.9999;
};

struct ModePair {
  double lambda = 0.0;
  dsrbf::DsrbfModel time_model;   // scalar input t
  dsrbf::DsrbfModel param_model;  // theta input
};

class Surrogate {
 public:
  Surrogate() = default;
  Surrogate(pod::PodBasis basis, std::vector<std::vector<ModePair>> modes,
            Eigen::MatrixXd sensor_rows, Eigen::VectorXd sensor_times,
            Eigen::VectorXd theta_lo, Eigen::VectorXd theta_hi, double t_lo, double t_hi);

  Eigen::VectorXd eval_coefficients(double t, const Eigen::VectorXd& theta) const;
  Eigen::VectorXd reduced_solution(double t, const Eigen::VectorXd& theta) const;
  // Reduced forward map: coefficients at each sensor time through the POD
  // basis restricted to sensor rows, time-major then sensor-major.
  Eigen::VectorXd reduced_observe(const Eigen::VectorXd& theta) const;

  const pod::PodBasis& basis() const { return basis_; }
  const std::vector<std::vector<ModePair>>& modes() const { return modes_; }
  const Eigen::VectorXd& sensor_times() const { return sensor_times_; }
  int num_outputs() const {
    return static_cast<int>(sensor_rows_.rows() * sensor_times_.size());
  }
  int param_dim() const { return static_cast<int>(theta_lo_.size()); }
  long clamp_count() const { return clamp_count_; }
  void reset_clamp_count() const { clamp_count_ = 0; }

  void save(std::ostream& out) const;
  static Surrogate load(std::istream& in);

 private:
  Eigen::VectorXd clamp_theta(const Eigen::VectorXd& theta) const;
  void cache_sensor_time_modes();

  pod::PodBasis basis_;
  std::vector<std::vector<ModePair>> modes_;
  Eigen::MatrixXd sensor_rows_;   // m_x x p
  Eigen::VectorXd sensor_times_;  // m_t
  Eigen::VectorXd theta_lo_, theta_hi_;
  double t_lo_ = 0.0, t_hi_ = 1.0;
  // lambda_l * time_model_l(t_j) frozen at the sensor times; per k a q_k x m_t table
  std::vector<Eigen::MatrixXd> sensor_time_modes_;
  mutable long clamp_count_ = 0;
};

Surrogate train(const CoefficientTensor& tensor, const pod::PodBasis& basis,
                const tfpde::ObservationSetup& obs, const tfpde::TimeGrid& tgrid,
                const TrainOptions& options, const RngStream& rng);

struct ValidationErrors {
  double eps_a = 0.0;  // state approximation error
  double eps_p = 0.0;  // projection error
  double eps_c = 0.0;  // coefficient learning error
  int skipped = 0;     // zero-norm denominators skipped
};

ValidationErrors validation_errors(const Surrogate& s, const Eigen::MatrixXd& test_params,
                                   const std::vector<int>& test_time_indices,
                                   const tfpde::TimeGrid& tgrid, const SolverFn& solver);

}  // namespace rbeki::surrogate
