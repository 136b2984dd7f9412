#pragma once

#include <string>
#include <vector>

#include "rbeki/dsrbf.hpp"

// Flat key=value experiment configuration; every default reproduces the
// corresponding reference experiment, so a bare run needs no config file.
namespace rbeki::experiments {

struct ExperimentConfig {
  std::string problem = "example1";  // example1 | example1-alpha | example2

  // discretization (inversion grid; the data-generating grid is finer to
  // avoid an inverse crime)
  int coarse_n = 21;
  int fine_n = 41;
  int coarse_steps = 100;  // dt = 1/coarse_steps on [0,1]
  int fine_steps = 200;
  double alpha = 0.5;

  // observations
  int sensors_per_axis = 3;
  std::vector<double> sensor_times = {0.25, 0.75, 1.0};
  std::vector<double> noise_levels = {0.01, 0.03, 0.05};  // relative deltas

  // surrogate
  double pod_energy = 0.9999;
  int pod_p = -1;   // fixed basis size when >= 1
  int q_fixed = -1; // per-coefficient SVD truncation when >= 1
  double q_energy = 0.9999;
  int n_train = 100;
  int n_train_times = 50;
  std::string kernel = "mq";  // gaussian | mq | imq
  int n_rv = 15;
  int n_obs = 10;

  // inversion
  int n_ensemble = 100;
  double rho = 0.7;
  double tau = 1.0 / 0.7;
  int max_iters = 100;
  bool direct_eki = false;
  std::string noise_level_mode = "truth";  // truth | sqrt-m
  std::vector<double> truth = {0.2, 0.7};

  // KL prior (example2)
  double kl_sigma2 = 1.0;
  double kl_length = 0.2;
  int kl_dim = 9;

  std::uint64_t seed = 1;
  std::string out_dir = "out";

  dsrbf::Kernel kernel_kind() const;
  void validate() const;

  static ExperimentConfig defaults_for(const std::string& problem);
  static ExperimentConfig load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace rbeki::experiments
