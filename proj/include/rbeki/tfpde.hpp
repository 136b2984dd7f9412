#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <functional>
#include <utility>
#include <vector>

// Full-order solver for the time-fractional diffusion equation on the unit
// square with homogeneous Neumann boundary conditions: L1 time stepping for
// the Caputo derivative, second-order conservative finite differences in
// space, plus the pointwise observation operator.
namespace rbeki::tfpde {

using ScalarField = std::function<double(double, double)>;
using SpaceTimeField = std::function<double(double, double, double)>;

// Uniform grid on [0,1]^2.  Node ordering is row-major with x fastest:
// node(ix, iy) = iy*nx + ix, x = ix*hx, y = iy*hy.
struct SpatialGrid {
  int nx = 0;
  int ny = 0;

  SpatialGrid(int nx_, int ny_);

  double hx() const { return 1.0 / (nx - 1); }
  double hy() const { return 1.0 / (ny - 1); }
  int num_nodes() const { return nx * ny; }
  int node(int ix, int iy) const { return iy * nx + ix; }
  double x(int ix) const { return ix * hx(); }
  double y(int iy) const { return iy * hy(); }

  Eigen::VectorXd evaluate(const ScalarField& f) const;
};

struct TimeGrid {
  double dt = 0.0;
  int n_steps = 0;

  TimeGrid(double dt_, int n_steps_);

  double time(int k) const { return k * dt; }
  double horizon() const { return dt * n_steps; }
};

struct FractionalModel {
  double alpha;            // Caputo order, in (0,1)
  ScalarField kappa;       // diffusivity, positive on the grid
  SpaceTimeField source;   // f(x, y, t)
  ScalarField initial;     // u_0(x, y)
};

// Snapshot columns u_h(t_k), k = 0..n_steps.
struct Trajectory {
  Eigen::MatrixXd values;  // n_h x (n_steps + 1)
};

// L1 convolution weights b_j = (j+1)^{1-alpha} - j^{1-alpha}, j = 0..n-1.
std::vector<double> l1_weights(double alpha, int n);

// 5-point conservative discretization of div(kappa grad u) with harmonic-mean
// face diffusivity and mirrored Neumann ghosts.  Row sums vanish.
Eigen::SparseMatrix<double> assemble_diffusion_operator(const SpatialGrid& grid,
                                                        const Eigen::VectorXd& kappa_nodes);
Eigen::SparseMatrix<double> assemble_diffusion_operator(const SpatialGrid& grid,
                                                        const ScalarField& kappa);

// Caches the factorization of (d_alpha I - L); reusable across forward solves
// that share (grid, kappa, dt, alpha).  Immutable after construction.
class ForwardSolver {
 public:
  ForwardSolver(const SpatialGrid& grid, const TimeGrid& tgrid, double alpha,
                const Eigen::VectorXd& kappa_nodes);
  ForwardSolver(const SpatialGrid& grid, const TimeGrid& tgrid, double alpha,
                const ScalarField& kappa);

  Trajectory solve(const SpaceTimeField& source, const ScalarField& initial) const;
  // Nodal variant: source(t_k) returns the forcing vector on the grid nodes.
  Trajectory solve_nodal(const std::function<Eigen::VectorXd(double)>& source,
                         const Eigen::VectorXd& initial) const;

  const SpatialGrid& grid() const { return grid_; }
  const TimeGrid& time_grid() const { return tgrid_; }
  double alpha() const { return alpha_; }

 private:
  SpatialGrid grid_;
  TimeGrid tgrid_;
  double alpha_;
  double d_alpha_;               // dt^{-alpha} / Gamma(2 - alpha)
  std::vector<double> weights_;  // b_0..b_{n_steps-1}
  Eigen::VectorXd weights_w_;    // symmetrizing half-cell weights
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> system_;
};

Trajectory solve_forward(const FractionalModel& model, const SpatialGrid& grid,
                         const TimeGrid& tgrid);

// Sensors must coincide with grid nodes and sensor times with time-grid nodes;
// construction rejects anything off-grid instead of interpolating.
class ObservationSetup {
 public:
  ObservationSetup(const SpatialGrid& grid, const TimeGrid& tgrid,
                   const std::vector<std::pair<double, double>>& sensor_locations,
                   const std::vector<double>& sensor_times, double noise_std);

  int num_sensors() const { return static_cast<int>(sensor_nodes_.size()); }
  int num_times() const { return static_cast<int>(time_indices_.size()); }
  int size() const { return num_sensors() * num_times(); }
  double noise_std() const { return noise_std_; }
  const std::vector<int>& sensor_nodes() const { return sensor_nodes_; }
  const std::vector<int>& time_indices() const { return time_indices_; }
  const std::vector<std::pair<double, double>>& sensor_locations() const {
    return locations_;
  }
  const std::vector<double>& sensor_times() const { return times_; }

  Eigen::MatrixXd covariance() const;  // Gamma = noise_std^2 I

 private:
  std::vector<int> sensor_nodes_;
  std::vector<int> time_indices_;
  std::vector<std::pair<double, double>> locations_;
  std::vector<double> times_;
  double noise_std_;
};

// Ordered time-major then sensor-major: y[j*m_x + i] = u_h(x_i, t_j).
Eigen::VectorXd observe(const Trajectory& traj, const ObservationSetup& setup);

// Moving heat source of Example 1: e^{-t} exp(-0.5 (|theta - x| / 0.1)^2).
double gaussian_bump_source(double theta1, double theta2, double x, double y, double t);

// CSV export: one row per grid node, one column per time, header of times.
void export_trajectory_csv(const Trajectory& traj, const TimeGrid& tgrid,
                           const std::string& path);

}  // namespace rbeki::tfpde
