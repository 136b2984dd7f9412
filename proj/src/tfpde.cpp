#include "rbeki/tfpde.hpp"

#include "rbeki/simd.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace rbeki::tfpde {

SpatialGrid::SpatialGrid(int nx_, int ny_) : nx(nx_), ny(ny_) {
  if (nx < 3 || ny < 3) throw std::invalid_argument("SpatialGrid: nx, ny must be >= 3");
}

Eigen::VectorXd SpatialGrid::evaluate(const ScalarField& f) const {
  Eigen::VectorXd v(num_nodes());
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) v[node(ix, iy)] = f(x(ix), y(iy));
  return v;
}

TimeGrid::TimeGrid(double dt_, int n_steps_) : dt(dt_), n_steps(n_steps_) {
  if (dt <= 0.0 || n_steps < 1) throw std::invalid_argument("TimeGrid: dt > 0, n_steps >= 1");
}

std::vector<double> l1_weights(double alpha, int n) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("l1_weights: alpha must lie in (0,1)");
  if (n < 1) throw std::domain_error("l1_weights: n must be >= 1");
  std::vector<double> b(n);
  const double e = 1.0 - alpha;
  double prev = 0.0;
  for (int j = 0; j < n; ++j) {
    const double next = std::pow(double(j + 1), e);
    b[j] = next - prev;
    prev = next;
  }
  return b;
}

namespace {

double harmonic_mean(double a, double b) { return 2.0 * a * b / (a + b); }

}  // namespace

Eigen::SparseMatrix<double> assemble_diffusion_operator(const SpatialGrid& grid,
                                                        const Eigen::VectorXd& kappa) {
  const int n = grid.num_nodes();
  if (kappa.size() != n)
    throw std::invalid_argument("assemble_diffusion_operator: kappa size mismatch");
  for (int i = 0; i < n; ++i)
    if (!(kappa[i] > 0.0))
      throw std::domain_error("assemble_diffusion_operator: kappa must be positive");

  const double ihx2 = 1.0 / (grid.hx() * grid.hx());
  const double ihy2 = 1.0 / (grid.hy() * grid.hy());

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * static_cast<std::size_t>(n));
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const int row = grid.node(ix, iy);
      double diag = 0.0;
      // Mirrored Neumann ghosts: the ghost neighbor carries the value of the
      // interior neighbor, so a boundary face doubles the interior one.  Rows
      // sum to zero; the operator is symmetric under the boundary half-cell
      // weights (see ForwardSolver).
      auto face = [&](int jx, int jy, double inv_h2, double mult) {
        const int col = grid.node(jx, jy);
        const double k = mult * harmonic_mean(kappa[row], kappa[col]) * inv_h2;
        trip.emplace_back(row, col, k);
        diag -= k;
      };
      if (ix > 0) face(ix - 1, iy, ihx2, ix == grid.nx - 1 ? 2.0 : 1.0);
      if (ix < grid.nx - 1) face(ix + 1, iy, ihx2, ix == 0 ? 2.0 : 1.0);
      if (iy > 0) face(ix, iy - 1, ihy2, iy == grid.ny - 1 ? 2.0 : 1.0);
      if (iy < grid.ny - 1) face(ix, iy + 1, ihy2, iy == 0 ? 2.0 : 1.0);
      trip.emplace_back(row, row, diag);
    }
  }
  Eigen::SparseMatrix<double> L(n, n);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

Eigen::SparseMatrix<double> assemble_diffusion_operator(const SpatialGrid& grid,
                                                        const ScalarField& kappa) {
  return assemble_diffusion_operator(grid, grid.evaluate(kappa));
}

ForwardSolver::ForwardSolver(const SpatialGrid& grid, const TimeGrid& tgrid, double alpha,
                             const Eigen::VectorXd& kappa_nodes)
    : grid_(grid), tgrid_(tgrid), alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("ForwardSolver: alpha must lie in (0,1)");
  d_alpha_ = std::pow(tgrid.dt, -alpha) / std::tgamma(2.0 - alpha);
  weights_ = l1_weights(alpha, tgrid.n_steps);

  Eigen::SparseMatrix<double> L = assemble_diffusion_operator(grid, kappa_nodes);
  Eigen::SparseMatrix<double> I(grid.num_nodes(), grid.num_nodes());
  I.setIdentity();
  // L is nonsymmetric in its boundary rows; scaling by the tensor-product
  // half-cell weights w symmetrizes it, so we factor w (d_alpha I - L) once
  // with a symmetric solver and scale every right-hand side accordingly.
  weights_w_.resize(grid.num_nodes());
  for (int iy = 0; iy < grid.ny; ++iy) {
    const double wy = (iy == 0 || iy == grid.ny - 1) ? 0.5 : 1.0;
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double wx = (ix == 0 || ix == grid.nx - 1) ? 0.5 : 1.0;
      weights_w_[grid.node(ix, iy)] = wx * wy;
    }
  }
  Eigen::SparseMatrix<double> A = weights_w_.asDiagonal() * (d_alpha_ * I - L);
  system_.compute(A);
  if (system_.info() != Eigen::Success)
    throw std::runtime_error("ForwardSolver: factorization of the implicit system failed");
}

ForwardSolver::ForwardSolver(const SpatialGrid& grid, const TimeGrid& tgrid, double alpha,
                             const ScalarField& kappa)
    : ForwardSolver(grid, tgrid, alpha, grid.evaluate(kappa)) {}

Trajectory ForwardSolver::solve(const SpaceTimeField& source,
                                const ScalarField& initial) const {
  Eigen::VectorXd f(grid_.num_nodes());
  auto nodal = [&](double t) -> Eigen::VectorXd {
    for (int iy = 0; iy < grid_.ny; ++iy)
      for (int ix = 0; ix < grid_.nx; ++ix) f[grid_.node(ix, iy)] = source(grid_.x(ix), grid_.y(iy), t);
    return f;
  };
  return solve_nodal(nodal, grid_.evaluate(initial));
}

Trajectory ForwardSolver::solve_nodal(const std::function<Eigen::VectorXd(double)>& source,
                                      const Eigen::VectorXd& initial) const {
  const int n = grid_.num_nodes();
  if (initial.size() != n)
    throw std::invalid_argument("solve_nodal: initial condition size mismatch");
  Trajectory traj;
  traj.values.resize(n, tgrid_.n_steps + 1);
  traj.values.col(0) = initial;

  Eigen::VectorXd rhs(n);
  for (int k = 1; k <= tgrid_.n_steps; ++k) {
    // history term: b_{k-1} u^0 + sum_{j=1}^{k-1} (b_{j-1} - b_j) u^{k-j}
    rhs.setZero();
    simd::axpy(weights_[k - 1], traj.values.col(0).data(), rhs.data(), n);
    for (int j = 1; j < k; ++j) {
      simd::axpy(weights_[j - 1] - weights_[j], traj.values.col(k - j).data(), rhs.data(), n);
    }
    rhs *= d_alpha_;
    rhs += source(tgrid_.time(k));
    rhs.array() *= weights_w_.array();

    Eigen::VectorXd u = system_.solve(rhs);
    if (system_.info() != Eigen::Success)
      throw std::runtime_error("solve_forward: linear solve failed at step " + std::to_string(k));
    traj.values.col(k) = u;
  }
  return traj;
}

Trajectory solve_forward(const FractionalModel& model, const SpatialGrid& grid,
                         const TimeGrid& tgrid) {
  ForwardSolver solver(grid, tgrid, model.alpha, model.kappa);
  return solver.solve(model.source, model.initial);
}

namespace {

int locate(double value, double step, int count, const char* what) {
  const double idx = value / step;
  const int i = static_cast<int>(std::lround(idx));
  if (i < 0 || i >= count || std::abs(idx - i) > 1e-9)
    throw std::invalid_argument(std::string("ObservationSetup: ") + what +
                                " does not coincide with a grid node");
  return i;
}

}  // namespace

ObservationSetup::ObservationSetup(const SpatialGrid& grid, const TimeGrid& tgrid,
                                   const std::vector<std::pair<double, double>>& sensors,
                                   const std::vector<double>& times, double noise_std)
    : locations_(sensors), times_(times), noise_std_(noise_std) {
  if (sensors.empty() || times.empty())
    throw std::invalid_argument("ObservationSetup: sensors and times must be non-empty");
  if (!(noise_std > 0.0))
    throw std::invalid_argument("ObservationSetup: noise_std must be positive");
  for (const auto& [sx, sy] : sensors) {
    const int ix = locate(sx, grid.hx(), grid.nx, "sensor x");
    const int iy = locate(sy, grid.hy(), grid.ny, "sensor y");
    sensor_nodes_.push_back(grid.node(ix, iy));
  }
  for (double t : times) {
    const int k = locate(t, tgrid.dt, tgrid.n_steps + 1, "sensor time");
    if (k == 0) throw std::invalid_argument("ObservationSetup: sensor times must be in (0,T]");
    time_indices_.push_back(k);
  }
}

Eigen::MatrixXd ObservationSetup::covariance() const {
  return noise_std_ * noise_std_ *
         Eigen::MatrixXd::Identity(size(), size());
}

Eigen::VectorXd observe(const Trajectory& traj, const ObservationSetup& setup) {
  Eigen::VectorXd y(setup.size());
  const int mx = setup.num_sensors();
  for (int j = 0; j < setup.num_times(); ++j) {
    const int col = setup.time_indices()[j];
    if (col >= traj.values.cols())
      throw std::invalid_argument("observe: trajectory shorter than sensor times");
    for (int i = 0; i < mx; ++i) y[j * mx + i] = traj.values(setup.sensor_nodes()[i], col);
  }
  return y;
}

double gaussian_bump_source(double theta1, double theta2, double x, double y, double t) {
  const double dx = theta1 - x;
  const double dy = theta2 - y;
  const double r = std::sqrt(dx * dx + dy * dy) / 0.1;
  return std::exp(-t) * std::exp(-0.5 * r * r);
}

void export_trajectory_csv(const Trajectory& traj, const TimeGrid& tgrid,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_trajectory_csv: cannot open " + path);
  out.precision(17);
  for (int k = 0; k <= tgrid.n_steps; ++k) out << (k ? "," : "") << tgrid.time(k);
  out << "\n";
  for (int i = 0; i < traj.values.rows(); ++i) {
    for (int k = 0; k < traj.values.cols(); ++k) out << (k ? "," : "") << traj.values(i, k);
    out << "\n";
  }
}

}  // namespace rbeki::tfpde
