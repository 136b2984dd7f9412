#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rbeki/surrogate.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace rbeki;
using namespace rbeki::surrogate;

namespace {

// Small separable test problem: "trajectories" whose POD coefficients are
// smooth products of time and parameter factors.
struct SmallProblem {
  tfpde::SpatialGrid grid{9, 9};
  tfpde::TimeGrid tgrid{0.1, 10};
  Eigen::MatrixXd params;             // n x 1 in [0, 1]
  std::vector<tfpde::Trajectory> trajectories;
  std::vector<int> time_indices;

  explicit SmallProblem(int n_train) {
    params.resize(n_train, 1);
    for (int j = 0; j < n_train; ++j)
      params(j, 0) = static_cast<double>(j) / (n_train - 1);
    for (int k = 1; k <= 10; ++k) time_indices.push_back(k);

    const int nh = grid.num_nodes();
    Eigen::VectorXd mode1(nh), mode2(nh);
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int ix = 0; ix < grid.nx; ++ix) {
        mode1[grid.node(ix, iy)] = std::cos(M_PI * grid.x(ix));
        mode2[grid.node(ix, iy)] = std::cos(M_PI * grid.y(iy));
      }
    for (int j = 0; j < n_train; ++j) {
      const double th = params(j, 0);
      tfpde::Trajectory traj;
      traj.values.resize(nh, 11);
      for (int k = 0; k <= 10; ++k) {
        const double t = tgrid.time(k);
        traj.values.col(k) =
            (1.0 + th) * std::exp(-t) * mode1 + 0.3 * std::sin(1.0 + th) * t * mode2;
      }
      trajectories.push_back(std::move(traj));
    }
  }

  tfpde::Trajectory solve(const Eigen::VectorXd& theta) const {
    SmallProblem tmp(2);  // rebuild the modes
    const int nh = grid.num_nodes();
    Eigen::VectorXd mode1(nh), mode2(nh);
    for (int iy = 0; iy < grid.ny; ++iy)
      for (int ix = 0; ix < grid.nx; ++ix) {
        mode1[grid.node(ix, iy)] = std::cos(M_PI * grid.x(ix));
        mode2[grid.node(ix, iy)] = std::cos(M_PI * grid.y(iy));
      }
    tfpde::Trajectory traj;
    traj.values.resize(nh, 11);
    for (int k = 0; k <= 10; ++k) {
      const double t = tgrid.time(k);
      traj.values.col(k) = (1.0 + theta(0)) * std::exp(-t) * mode1 +
                           0.3 * std::sin(1.0 + theta(0)) * t * mode2;
    }
    return traj;
  }
};

}  // namespace

TEST_CASE("tensor decomposition recovers a rank-one table") {
  Eigen::VectorXd psi(5), phi(3);
  psi << 1.0, 0.8, 0.6, 0.4, 0.2;
  phi << 0.5, 1.0, -0.5;
  psi.normalize();
  phi.normalize();
  const Eigen::MatrixXd qk = 3.0 * psi * phi.transpose();

  const TensorModes dm = tensor_decompose(qk, -1, 0.9999);
  REQUIRE(dm.lambda.size() == 1);
  CHECK(dm.lambda(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(std::abs(dm.psi.col(0).dot(psi)) - 1.0) < 1e-12);
  CHECK(std::abs(std::abs(dm.phi.col(0).dot(phi)) - 1.0) < 1e-12);
  // rank-one reconstruction is exact
  const Eigen::MatrixXd rec = dm.lambda(0) * dm.psi.col(0) * dm.phi.col(0).transpose();
  CHECK((rec - qk).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("q_fixed pins the truncation and energy truncates the tail") {
  std::mt19937_64 eng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd qk =
      Eigen::MatrixXd::NullaryExpr(8, 6, [&](Eigen::Index, Eigen::Index) { return g(eng); });
  CHECK(tensor_decompose(qk, 2, 0.9999).lambda.size() == 2);
  CHECK(tensor_decompose(qk, -1, 1.0).lambda.size() == 6);
  const TensorModes dm = tensor_decompose(qk, -1, 0.5);
  CHECK(dm.lambda.size() < 6);
}

TEST_CASE("training tensor holds the projected coefficients") {
  SmallProblem sp(8);
  const pod::SnapshotMatrix snaps =
      pod::build_snapshot_matrix(sp.trajectories, sp.time_indices);
  const pod::PodBasis basis = pod::compute_pod(snaps, pod::PodCriterion::fixed(2));

  const CoefficientTensor tensor =
      build_training_set(sp.trajectories, sp.params, sp.time_indices, sp.tgrid, basis);

  REQUIRE(tensor.q.size() == 2);
  REQUIRE(tensor.q[0].rows() == 10);
  REQUIRE(tensor.q[0].cols() == 8);
  CHECK(tensor.times(0) == doctest::Approx(0.1));
  CHECK(tensor.times(9) == doctest::Approx(1.0));

  // entry (i, j) of q[k] is mode_k . u(t_i; theta_j)
  const double expected =
      basis.modes.col(1).dot(sp.trajectories[3].values.col(sp.time_indices[4]));
  CHECK(tensor.q[1](4, 3) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("surrogate reproduces a separable manifold and is continuous") {
  SmallProblem sp(24);
  const pod::SnapshotMatrix snaps =
      pod::build_snapshot_matrix(sp.trajectories, sp.time_indices);
  const pod::PodBasis basis = pod::compute_pod(snaps, pod::PodCriterion::fixed(2));
  const CoefficientTensor tensor =
      build_training_set(sp.trajectories, sp.params, sp.time_indices, sp.tgrid, basis);

  tfpde::ObservationSetup obs(sp.grid, sp.tgrid, {{0.0, 0.0}, {0.5, 0.5}}, {0.5, 1.0}, 0.01);
  TrainOptions opt;
  const Surrogate s = train(tensor, basis, obs, sp.tgrid, opt, RngStream(4));

  // held-out parameter inside the training box
  Eigen::VectorXd theta(1);
  theta << 0.413;
  const tfpde::Trajectory truth = sp.solve(theta);
  const Eigen::VectorXd y_true = tfpde::observe(truth, obs);
  const Eigen::VectorXd y_rb = s.reduced_observe(theta);
  REQUIRE(y_rb.size() == y_true.size());
  CHECK((y_rb - y_true).norm() / y_true.norm() < 1e-2);

  // continuity in theta
  Eigen::VectorXd theta2 = theta;
  theta2(0) += 1e-4;
  CHECK((s.reduced_observe(theta2) - y_rb).norm() < 1e-2 * y_rb.norm() + 1e-10);

  // reduced_solution lives in the basis span
  const Eigen::VectorXd u_rb = s.reduced_solution(0.5, theta);
  const Eigen::VectorXd proj = basis.modes * (basis.modes.transpose() * u_rb);
  CHECK((u_rb - proj).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("training rejects sensor times outside the training times") {
  SmallProblem sp(6);
  const pod::SnapshotMatrix snaps =
      pod::build_snapshot_matrix(sp.trajectories, sp.time_indices);
  const pod::PodBasis basis = pod::compute_pod(snaps, pod::PodCriterion::fixed(2));
  CoefficientTensor tensor =
      build_training_set(sp.trajectories, sp.params, sp.time_indices, sp.tgrid, basis);
  // drop t = 0.1 from the training times
  std::vector<int> trimmed(sp.time_indices.begin() + 1, sp.time_indices.end());
  const CoefficientTensor t2 =
      build_training_set(sp.trajectories, sp.params, trimmed, sp.tgrid, basis);
  tfpde::ObservationSetup obs(sp.grid, sp.tgrid, {{0.5, 0.5}}, {0.1}, 0.01);
  CHECK_THROWS(train(t2, basis, obs, sp.tgrid, TrainOptions{}, RngStream(1)));
}

TEST_CASE("out-of-box parameters are clamped and counted") {
  SmallProblem sp(12);
  const pod::SnapshotMatrix snaps =
      pod::build_snapshot_matrix(sp.trajectories, sp.time_indices);
  const pod::PodBasis basis = pod::compute_pod(snaps, pod::PodCriterion::fixed(2));
  const CoefficientTensor tensor =
      build_training_set(sp.trajectories, sp.params, sp.time_indices, sp.tgrid, basis);
  tfpde::ObservationSetup obs(sp.grid, sp.tgrid, {{0.5, 0.5}}, {1.0}, 0.01);
  const Surrogate s = train(tensor, basis, obs, sp.tgrid, TrainOptions{}, RngStream(8));

  s.reset_clamp_count();
  Eigen::VectorXd inside(1), outside(1), edge(1);
  inside << 0.5;
  outside << 1.7;
  edge << 1.0;
  s.reduced_observe(inside);
  CHECK(s.clamp_count() == 0);
  const Eigen::VectorXd y_out = s.reduced_observe(outside);
  CHECK(s.clamp_count() == 1);
  CHECK((y_out - s.reduced_observe(edge)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("surrogate serialization round-trips") {
  SmallProblem sp(10);
  const pod::SnapshotMatrix snaps =
      pod::build_snapshot_matrix(sp.trajectories, sp.time_indices);
  const pod::PodBasis basis = pod::compute_pod(snaps, pod::PodCriterion::fixed(2));
  const CoefficientTensor tensor =
      build_training_set(sp.trajectories, sp.params, sp.time_indices, sp.tgrid, basis);
  tfpde::ObservationSetup obs(sp.grid, sp.tgrid, {{0.0, 0.0}, {1.0, 1.0}}, {0.5, 1.0}, 0.01);
  const Surrogate s = train(tensor, basis, obs, sp.tgrid, TrainOptions{}, RngStream(6));

  std::stringstream buf;
  s.save(buf);
  const Surrogate loaded = Surrogate::load(buf);

  Eigen::VectorXd theta(1);
  theta << 0.37;
  CHECK((loaded.reduced_observe(theta) - s.reduced_observe(theta)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK(loaded.num_outputs() == s.num_outputs());
}

TEST_CASE("validation errors are small on the training manifold") {
  SmallProblem sp(24);
  const pod::SnapshotMatrix snaps =
      pod::build_snapshot_matrix(sp.trajectories, sp.time_indices);
  const pod::PodBasis basis = pod::compute_pod(snaps, pod::PodCriterion::fixed(2));
  const CoefficientTensor tensor =
      build_training_set(sp.trajectories, sp.params, sp.time_indices, sp.tgrid, basis);
  tfpde::ObservationSetup obs(sp.grid, sp.tgrid, {{0.5, 0.5}}, {1.0}, 0.01);
  const Surrogate s = train(tensor, basis, obs, sp.tgrid, TrainOptions{}, RngStream(2));

  Eigen::MatrixXd test_params(5, 1);
  test_params << 0.11, 0.29, 0.52, 0.68, 0.93;
  const ValidationErrors err = validation_errors(
      s, test_params, sp.time_indices, sp.tgrid,
      [&](const Eigen::VectorXd& th) { return sp.solve(th); });
  CHECK(err.eps_p < 1e-10);  // two modes span the manifold exactly
  CHECK(err.eps_a < 1e-2);
  CHECK(err.eps_c < 1e-2);
  CHECK(err.skipped == 0);
}
