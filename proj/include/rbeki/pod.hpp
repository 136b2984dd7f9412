#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "rbeki/tfpde.hpp"

// Snapshot matrix assembly and POD basis extraction by thin SVD with the
// energy truncation criterion.
namespace rbeki::pod {

struct SnapshotMatrix {
  Eigen::MatrixXd data;                            // n_h x Q
  std::vector<std::pair<int, int>> provenance;     // (time index, parameter index)
};

// Columns ordered parameter-major then time-major.
SnapshotMatrix build_snapshot_matrix(const std::vector<tfpde::Trajectory>& trajectories,
                                     const std::vector<int>& time_subsample);

struct PodCriterion {
  int fixed_p = -1;        // used when >= 1
  double energy = 0.9999;  // fraction of squared singular values retained

  static PodCriterion fixed(int p) { return {p, -1.0}; }
  static PodCriterion energy_fraction(double e) { return {-1, e}; }
};

struct PodBasis {
  Eigen::MatrixXd modes;            // n_h x p, orthonormal columns
  Eigen::VectorXd singular_values;  // full spectrum, length Q
  double energy_tol = -1.0;

  int p() const { return static_cast<int>(modes.cols()); }
};

PodBasis compute_pod(const SnapshotMatrix& snapshots, const PodCriterion& criterion);

Eigen::VectorXd project(const PodBasis& basis, const Eigen::VectorXd& u);
Eigen::VectorXd reconstruct(const PodBasis& basis, const Eigen::VectorXd& a);

// ||S - U_p U_p^T S||_F; equals the SVD tail sqrt(sum_{k>p} sigma_k^2).
double snapshot_reconstruction_error(const PodBasis& basis, const SnapshotMatrix& snapshots);

void export_spectrum_csv(const PodBasis& basis, const std::string& path);

}  // namespace rbeki::pod
