#include "rbeki/pod.hpp"

#include <Eigen/SVD>

#include <fstream>
#include <stdexcept>

namespace rbeki::pod {

SnapshotMatrix build_snapshot_matrix(const std::vector<tfpde::Trajectory>& trajectories,
                                     const std::vector<int>& time_subsample) {
  if (trajectories.empty())
    throw std::invalid_argument("build_snapshot_matrix: empty trajectory list");
  if (time_subsample.empty())
    throw std::invalid_argument("build_snapshot_matrix: empty time subsample");

  const Eigen::Index n_h = trajectories[0].values.rows();
  for (const auto& traj : trajectories) {
    if (traj.values.rows() != n_h)
      throw std::invalid_argument("build_snapshot_matrix: grid dimension mismatch");
    for (int t : time_subsample)
      if (t < 0 || t >= traj.values.cols())
        throw std::invalid_argument("build_snapshot_matrix: time index out of range");
  }

  SnapshotMatrix s;
  const int n_param = static_cast<int>(trajectories.size());
  const int n_time = static_cast<int>(time_subsample.size());
  s.data.resize(n_h, static_cast<Eigen::Index>(n_param) * n_time);
  s.provenance.reserve(static_cast<std::size_t>(n_param) * n_time);
  Eigen::Index col = 0;
  for (int j = 0; j < n_param; ++j) {
    for (int i = 0; i < n_time; ++i) {
      s.data.col(col++) = trajectories[j].values.col(time_subsample[i]);
      s.provenance.emplace_back(time_subsample[i], j);
    }
  }
  if (!s.data.allFinite())
    throw std::invalid_argument("build_snapshot_matrix: non-finite snapshot entries");
  return s;
}

namespace {

// SVD sign ambiguity: make each mode's entry of largest magnitude positive so
// trained surrogates are reproducible.
void fix_signs(Eigen::MatrixXd& modes) {
  for (Eigen::Index k = 0; k < modes.cols(); ++k) {
    Eigen::Index imax;
    modes.col(k).cwiseAbs().maxCoeff(&imax);
    if (modes(imax, k) < 0.0) modes.col(k) = -modes.col(k);
  }
}

}  // namespace

PodBasis compute_pod(const SnapshotMatrix& snapshots, const PodCriterion& criterion) {
  const Eigen::MatrixXd& S = snapshots.data;
  if (S.cols() < 1) throw std::invalid_argument("compute_pod: empty snapshot matrix");
  if (S.norm() == 0.0) throw std::invalid_argument("compute_pod: all-zero snapshot matrix");

  // Q = 5000 snapshots vs n_h = 441 nodes in Example 1: the thin side carries
  // the spectrum, so let the SVD work on min(n_h, Q) singular pairs.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();

  const Eigen::Index q_full = S.cols();
  Eigen::VectorXd spectrum = Eigen::VectorXd::Zero(q_full);
  spectrum.head(sv.size()) = sv;

  const double total = spectrum.squaredNorm();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > sv[0] * 1e-14) rank = i + 1;

  Eigen::Index p;
  if (criterion.fixed_p >= 1) {
    p = std::min<Eigen::Index>(criterion.fixed_p, rank);
  } else {
    if (!(criterion.energy > 0.0 && criterion.energy < 1.0))
      throw std::invalid_argument("compute_pod: energy tolerance must lie in (0,1)");
    double acc = 0.0;
    p = rank;
    for (Eigen::Index i = 0; i < rank; ++i) {
      acc += spectrum[i] * spectrum[i];
      if (acc / total > criterion.energy) {
        p = i + 1;
        break;
      }
    }
  }

  PodBasis basis;
  basis.modes = svd.matrixU().leftCols(p);
  fix_signs(basis.modes);
  basis.singular_values = spectrum;
  basis.energy_tol = criterion.fixed_p >= 1 ? -1.0 : criterion.energy;
  return basis;
}

Eigen::VectorXd project(const PodBasis& basis, const Eigen::VectorXd& u) {
  if (u.size() != basis.modes.rows())
    throw std::invalid_argument("project: state dimension mismatch");
  return basis.modes.transpose() * u;
}

Eigen::VectorXd reconstruct(const PodBasis& basis, const Eigen::VectorXd& a) {
  if (a.size() != basis.modes.cols())
    throw std::invalid_argument("reconstruct: coefficient dimension mismatch");
  return basis.modes * a;
}

double snapshot_reconstruction_error(const PodBasis& basis, const SnapshotMatrix& snapshots) {
  if (snapshots.data.rows() != basis.modes.rows())
    throw std::invalid_argument("snapshot_reconstruction_error: dimension mismatch");
  const Eigen::MatrixXd coeffs = basis.modes.transpose() * snapshots.data;
  return (snapshots.data - basis.modes * coeffs).norm();
}

void export_spectrum_csv(const PodBasis& basis, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_spectrum_csv: cannot open " + path);
  out.precision(17);
  out << "index,singular_value\n";
  for (Eigen::Index i = 0; i < basis.singular_values.size(); ++i)
    out << (i + 1) << "," << basis.singular_values[i] << "\n";
}

}  // namespace rbeki::pod
