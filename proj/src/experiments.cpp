#include "rbeki/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rbeki/simd.hpp"

namespace rbeki::experiments {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAlphaLo = 0.01;
constexpr double kAlphaHi = 0.99;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out.precision(12);
  return out;
}

double zero_field(double, double) { return 0.0; }

std::string delta_tag(double delta) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%gpct", 100.0 * delta);
  return buf;
}

}  // namespace

std::vector<std::pair<double, double>> sensor_layout(int per_axis,
                                                     const tfpde::SpatialGrid& grid) {
  if (per_axis < 2) throw std::invalid_argument("sensor_layout: per_axis must be >= 2");
  if (per_axis > grid.nx || per_axis > grid.ny)
    throw std::invalid_argument("sensor_layout: more sensors than grid lines");
  std::vector<int> ix(per_axis), iy(per_axis);
  for (int i = 0; i < per_axis; ++i) {
    ix[i] = static_cast<int>(std::lround(double(i) * (grid.nx - 1) / (per_axis - 1)));
    iy[i] = static_cast<int>(std::lround(double(i) * (grid.ny - 1) / (per_axis - 1)));
  }
  std::vector<std::pair<double, double>> sensors;
  sensors.reserve(static_cast<std::size_t>(per_axis) * per_axis);
  for (int j = 0; j < per_axis; ++j)
    for (int i = 0; i < per_axis; ++i) sensors.emplace_back(grid.x(ix[i]), grid.y(iy[j]));
  return sensors;
}

Problem::Problem(const ExperimentConfig& config)
    : config_(config),
      coarse_grid_(config.coarse_n, config.coarse_n),
      fine_grid_(config.fine_n, config.fine_n),
      coarse_time_(1.0 / config.coarse_steps, config.coarse_steps),
      fine_time_(1.0 / config.fine_steps, config.fine_steps) {
  config_.validate();
  if (config_.problem == "example2") {
    kl_ = kl::kl_expansion(config.kl_sigma2, config.kl_length, config.kl_dim, coarse_grid_);
  } else if (config_.problem == "example1") {
    const Eigen::VectorXd ones_c = Eigen::VectorXd::Ones(coarse_grid_.num_nodes());
    const Eigen::VectorXd ones_f = Eigen::VectorXd::Ones(fine_grid_.num_nodes());
    coarse_solver_ = std::make_unique<tfpde::ForwardSolver>(coarse_grid_, coarse_time_,
                                                            config.alpha, ones_c);
    fine_solver_ = std::make_unique<tfpde::ForwardSolver>(fine_grid_, fine_time_,
                                                          config.alpha, ones_f);
  } else if (config_.problem != "example1-alpha") {
    throw std::invalid_argument("Problem: unknown problem " + config_.problem);
  }
}

int Problem::param_dim() const {
  if (config_.problem == "example1") return 2;
  if (config_.problem == "example1-alpha") return 3;
  return config_.kl_dim;
}

eki::PriorSpec Problem::prior() const {
  if (config_.problem == "example2") return eki::PriorSpec::standard_normal(config_.kl_dim);
  const int d = param_dim();
  return eki::PriorSpec::uniform_box(Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d));
}

Eigen::VectorXd Problem::clamped_alpha_theta(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd out = theta;
  const double a = std::clamp(out[2], kAlphaLo, kAlphaHi);
  if (a != out[2]) ++alpha_clamps_;
  out[2] = a;
  return out;
}

tfpde::Trajectory Problem::solve_on(const tfpde::SpatialGrid& grid,
                                    const tfpde::TimeGrid& tgrid,
                                    const tfpde::ForwardSolver* cached,
                                    const Eigen::VectorXd& theta) const {
  if (theta.size() != param_dim())
    throw std::invalid_argument("Problem: parameter dimension mismatch");
  if (config_.problem == "example1") {
    auto source = [t1 = theta[0], t2 = theta[1]](double x, double y, double t) {
      return tfpde::gaussian_bump_source(t1, t2, x, y, t);
    };
    return cached->solve(source, zero_field);
  }
  if (config_.problem == "example1-alpha") {
    const Eigen::VectorXd th = clamped_alpha_theta(theta);
    auto source = [t1 = th[0], t2 = th[1]](double x, double y, double t) {
      return tfpde::gaussian_bump_source(t1, t2, x, y, t);
    };
    tfpde::ForwardSolver solver(grid, tgrid, th[2], Eigen::VectorXd::Ones(grid.num_nodes()));
    return solver.solve(source, zero_field);
  }
  // example2: fixed source, kappa from the KL expansion on the coarse grid
  Eigen::VectorXd log_kappa = kl_->log_kappa(theta);
  if (&grid != &coarse_grid_)
    log_kappa = kl::interpolate_bilinear(coarse_grid_, log_kappa, grid);
  auto source = [](double x, double y, double t) {
    return tfpde::gaussian_bump_source(0.25, 0.75, x, y, t);
  };
  tfpde::ForwardSolver solver(grid, tgrid, config_.alpha, log_kappa.array().exp().matrix());
  return solver.solve(source, zero_field);
}

tfpde::Trajectory Problem::solve_coarse(const Eigen::VectorXd& theta) const {
  return solve_on(coarse_grid_, coarse_time_, coarse_solver_.get(), theta);
}

tfpde::Trajectory Problem::solve_fine(const Eigen::VectorXd& theta) const {
  return solve_on(fine_grid_, fine_time_, fine_solver_.get(), theta);
}

tfpde::ObservationSetup Problem::coarse_obs(double noise_std) const {
  return tfpde::ObservationSetup(coarse_grid_, coarse_time_,
                                 sensor_layout(config_.sensors_per_axis, coarse_grid_),
                                 config_.sensor_times, noise_std);
}

tfpde::ObservationSetup Problem::fine_obs(double noise_std) const {
  // coarse-node sensor coordinates also lie on the 2x-refined fine grid
  return tfpde::ObservationSetup(fine_grid_, fine_time_,
                                 sensor_layout(config_.sensors_per_axis, coarse_grid_),
                                 config_.sensor_times, noise_std);
}

Eigen::VectorXd Problem::observe_coarse(const Eigen::VectorXd& theta, double noise_std) const {
  return tfpde::observe(solve_coarse(theta), coarse_obs(noise_std));
}

Eigen::VectorXd Problem::resolve_truth(const RngStream& rng) const {
  if (!config_.truth.empty()) {
    if (static_cast<int>(config_.truth.size()) != param_dim())
      throw std::invalid_argument("Problem: truth dimension mismatch");
    return Eigen::Map<const Eigen::VectorXd>(config_.truth.data(), config_.truth.size());
  }
  if (config_.problem != "example2")
    throw std::invalid_argument("Problem: truth must be specified for " + config_.problem);
  std::mt19937_64 eng = rng.engine();
  std::normal_distribution<double> normal;
  Eigen::VectorXd theta(config_.kl_dim);
  for (int i = 0; i < theta.size(); ++i) theta[i] = normal(eng);
  return theta;
}

std::vector<int> training_time_indices(const ExperimentConfig& config) {
  const int steps = config.coarse_steps;
  const int n = std::min(config.n_train_times, steps);
  if (n < 1) throw std::invalid_argument("training_time_indices: n_train_times must be >= 1");
  std::set<int> sensor_idx;
  for (double t : config.sensor_times)
    sensor_idx.insert(static_cast<int>(std::lround(t * steps)));
  std::set<int> idx(sensor_idx);
  for (int i = 1; i <= n; ++i)
    idx.insert(static_cast<int>(std::lround(double(i) * steps / n)));
  // trim the earliest non-sensor times to keep the requested count
  const std::size_t target = std::max<std::size_t>(n, sensor_idx.size());
  while (idx.size() > target) {
    for (int v : idx) {
      if (!sensor_idx.count(v)) {
        idx.erase(v);
        break;
      }
    }
  }
  return {idx.begin(), idx.end()};
}

OfflineModel build_offline(const Problem& problem, const RngStream& rng,
                           bool keep_trajectories) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig& c = problem.config();

  OfflineModel off;
  off.train_params = eki::sample_prior(problem.prior(), c.n_train, rng.child(0)).members;
  off.train_time_indices = training_time_indices(c);

  std::vector<tfpde::Trajectory> trajs;
  trajs.reserve(c.n_train);
  for (int j = 0; j < c.n_train; ++j)
    trajs.push_back(problem.solve_coarse(off.train_params.row(j).transpose()));

  pod::SnapshotMatrix snaps = pod::build_snapshot_matrix(trajs, off.train_time_indices);
  const pod::PodCriterion crit = c.pod_p >= 1 ? pod::PodCriterion::fixed(c.pod_p)
                                              : pod::PodCriterion::energy_fraction(c.pod_energy);
  off.basis = pod::compute_pod(snaps, crit);

  surrogate::CoefficientTensor tensor = surrogate::build_training_set(
      trajs, off.train_params, off.train_time_indices, problem.coarse_time(), off.basis);

  surrogate::TrainOptions opt;
  opt.kernel = c.kernel_kind();
  opt.n_rv = c.n_rv;
  opt.n_obs = c.n_obs;
  opt.q_fixed = c.q_fixed;
  opt.q_energy = c.q_energy;

  // noise level is irrelevant to training; the setup only supplies sensors/times
  const tfpde::ObservationSetup obs = problem.coarse_obs(1.0);
  off.model = surrogate::train(tensor, off.basis, obs, problem.coarse_time(), opt, rng.child(1));
  if (keep_trajectories) off.train_trajectories = std::move(trajs);
  off.offline_seconds = seconds_since(t0);
  return off;
}

SyntheticData generate_synthetic_data(const Problem& problem, double delta_rel,
                                      const Eigen::VectorXd& truth, const RngStream& rng) {
  if (delta_rel < 0.0)
    throw std::invalid_argument("generate_synthetic_data: delta must be non-negative");
  SyntheticData data;
  data.truth = truth;
  const tfpde::Trajectory traj = problem.solve_fine(truth);
  data.y_clean = tfpde::observe(traj, problem.fine_obs(1.0));
  const int m = static_cast<int>(data.y_clean.size());
  // delta is a noise-to-signal ratio: std chosen so E||xi|| ~ delta * ||y_clean||
  const double scale = data.y_clean.norm() / std::sqrt(static_cast<double>(m));

  if (delta_rel > 0.0) {
    data.noise_std = delta_rel * scale;
    std::mt19937_64 eng = rng.child(0).engine();
    std::normal_distribution<double> normal;
    Eigen::VectorXd xi(m);
    for (int i = 0; i < m; ++i) xi[i] = normal(eng);
    data.y_obs = data.y_clean + data.noise_std * xi;
    data.noise_level = problem.config().noise_level_mode == "sqrt-m"
                           ? std::sqrt(double(m))
                           : xi.norm();
  } else {
    // noiseless data still needs an SPD covariance for the EKI linear algebra
    data.noise_std = 1e-8 * std::max(scale, 1.0);
    data.y_obs = data.y_clean;
    data.noise_level = 0.0;
  }
  data.gamma = data.noise_std * data.noise_std *
               Eigen::MatrixXd::Identity(m, m);
  return data;
}

MetricSeries compute_metrics(const eki::InversionResult& result, const Eigen::VectorXd& truth,
                             const Problem& problem, const SyntheticData& data) {
  MetricSeries metrics;
  const Eigen::LLT<Eigen::MatrixXd> llt(data.gamma);
  const tfpde::ObservationSetup setup = problem.coarse_obs(data.noise_std);
  for (const auto& rec : result.history) {
    metrics.e_theta.push_back(rec.e_theta >= 0.0
                                  ? rec.e_theta
                                  : (rec.mean - truth).norm() / truth.norm());
    const Eigen::VectorXd omega = tfpde::observe(problem.solve_coarse(rec.mean), setup);
    metrics.misfit_full.push_back(
        llt.matrixL().solve(data.y_obs - omega).norm());
  }
  return metrics;
}

void write_diagnostics_csv(const std::string& path, const eki::InversionResult& result,
                           const MetricSeries& metrics) {
  std::ofstream out = open_out(path);
  const int d = result.history.empty() ? 0 : static_cast<int>(result.history.front().mean.size());
  out << "n,e_theta,E_theta,misfit_surrogate,gamma,wall_s,clamps";
  for (int i = 0; i < d; ++i) out << ",mean_" << i;
  out << "\n";
  for (std::size_t k = 0; k < result.history.size(); ++k) {
    const auto& rec = result.history[k];
    out << rec.n << "," << metrics.e_theta[k] << "," << metrics.misfit_full[k] << ","
        << rec.misfit << "," << rec.gamma << "," << rec.wall_s << "," << rec.clamps;
    for (int i = 0; i < d; ++i) out << "," << rec.mean[i];
    out << "\n";
  }
}

namespace {

struct RunOutcome {
  eki::InversionResult result;
  double online_seconds = 0.0;
};

RunOutcome invert(const Problem& problem, const surrogate::Surrogate* rb,
                  const SyntheticData& data, const RngStream& rng) {
  const ExperimentConfig& c = problem.config();
  eki::EkiOptions opts;
  opts.n_members = c.n_ensemble;
  opts.rho = c.rho;
  opts.tau = c.tau;
  opts.max_iters = c.max_iters;
  opts.noise_level = data.noise_level;

  eki::ForwardMap forward;
  if (rb) {
    rb->reset_clamp_count();
    forward = [rb](const Eigen::VectorXd& theta) { return rb->reduced_observe(theta); };
    opts.clamp_probe = [rb]() { return rb->clamp_count(); };
  } else {
    auto setup = std::make_shared<tfpde::ObservationSetup>(problem.coarse_obs(data.noise_std));
    forward = [&problem, setup](const Eigen::VectorXd& theta) {
      return tfpde::observe(problem.solve_coarse(theta), *setup);
    };
    if (c.problem == "example1-alpha")
      opts.clamp_probe = [&problem]() { return problem.alpha_clamp_count(); };
  }

  const auto t0 = std::chrono::steady_clock::now();
  RunOutcome run;
  run.result = eki::run_eki(forward, problem.prior(), data.y_obs, data.gamma, opts, rng,
                            &data.truth);
  run.online_seconds = seconds_since(t0);
  return run;
}

void write_data_csv(const std::string& path, const SyntheticData& data) {
  std::ofstream out = open_out(path);
  out << "# noise_std=" << data.noise_std << " noise_level=" << data.noise_level << "\n";
  out << "index,y_clean,y_obs\n";
  for (int i = 0; i < data.y_clean.size(); ++i)
    out << i << "," << data.y_clean[i] << "," << data.y_obs[i] << "\n";
}

void write_field_csv(const std::string& path, const Problem& problem,
                     const Eigen::VectorXd& truth, const Eigen::VectorXd& recovered) {
  const Eigen::VectorXd f_true = problem.kl()->log_kappa(truth);
  const Eigen::VectorXd f_rec = problem.kl()->log_kappa(recovered);
  const tfpde::SpatialGrid& grid = problem.coarse_grid();
  std::ofstream out = open_out(path);
  out << "x,y,log_kappa_truth,log_kappa_recovered\n";
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix)
      out << grid.x(ix) << "," << grid.y(iy) << "," << f_true[grid.node(ix, iy)] << ","
          << f_rec[grid.node(ix, iy)] << "\n";
}

// Shared driver: offline build, one inversion per noise level, CSV emission.
void run_inversion_experiment(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  const std::string dir = config.out_dir + "/";
  config.save(dir + "config_used.txt");

  const Problem problem(config);
  const RngStream root(config.seed);
  const Eigen::VectorXd truth = problem.resolve_truth(root.child(4));

  const OfflineModel off = build_offline(problem, root.child(1));
  {
    std::ofstream out = open_out(dir + "surrogate.txt");
    off.model.save(out);
  }
  pod::export_spectrum_csv(off.basis, dir + "singular_values.csv");

  std::ofstream table = open_out(dir + "table.csv");
  table << "method,delta";
  for (int i = 0; i < truth.size(); ++i) table << ",theta_" << i;
  table << ",e_theta,iterations,stopped_by_discrepancy,online_s\n";
  auto table_row = [&](const char* method, double delta, const RunOutcome& run) {
    const auto& rec = run.result.last();
    table << method << "," << delta;
    for (int i = 0; i < rec.mean.size(); ++i) table << "," << rec.mean[i];
    table << "," << rec.e_theta << "," << rec.n << ","
          << (run.result.reason == eki::StopReason::Discrepancy ? 1 : 0) << ","
          << run.online_seconds << "\n";
  };

  for (std::size_t i = 0; i < config.noise_levels.size(); ++i) {
    const double delta = config.noise_levels[i];
    const std::string tag = delta_tag(delta);
    const SyntheticData data =
        generate_synthetic_data(problem, delta, truth, root.child(10 + i));
    write_data_csv(dir + "data_" + tag + ".csv", data);

    const RunOutcome rb = invert(problem, &off.model, data, root.child(20 + i));
    write_diagnostics_csv(dir + "diag_rb_" + tag + ".csv", rb.result,
                          compute_metrics(rb.result, truth, problem, data));
    table_row("rb-eki", delta, rb);
    if (config.problem == "example2")
      write_field_csv(dir + "field_rb_" + tag + ".csv", problem, truth,
                      rb.result.last().mean);

    if (config.direct_eki) {
      const RunOutcome direct = invert(problem, nullptr, data, root.child(30 + i));
      write_diagnostics_csv(dir + "diag_direct_" + tag + ".csv", direct.result,
                            compute_metrics(direct.result, truth, problem, data));
      table_row("direct-eki", delta, direct);
      if (config.problem == "example2")
        write_field_csv(dir + "field_direct_" + tag + ".csv", problem, truth,
                        direct.result.last().mean);
    }
  }

  std::ofstream manifest = open_out(dir + "manifest.txt");
  manifest << "problem=" << config.problem << "\n"
           << "seed=" << config.seed << "\n"
           << "pod_p=" << off.basis.p() << "\n"
           << "offline_seconds=" << off.offline_seconds << "\n"
           << "simd_backend=" << simd::backend_name() << "\n"
           << "alpha_clamps=" << problem.alpha_clamp_count() << "\n"
           << "surrogate_clamps=" << off.model.clamp_count() << "\n";
  manifest << "truth=";
  for (int i = 0; i < truth.size(); ++i) manifest << (i ? "," : "") << truth[i];
  manifest << "\n";
}

void require_problem(const ExperimentConfig& config, const std::string& name) {
  if (config.problem != name)
    throw std::invalid_argument("driver/problem mismatch: config says " + config.problem +
                                ", driver expects " + name);
}

}  // namespace

void run_example1(const ExperimentConfig& config) {
  require_problem(config, "example1");
  run_inversion_experiment(config);
}

void run_example1_alpha(const ExperimentConfig& config) {
  require_problem(config, "example1-alpha");
  run_inversion_experiment(config);
}

void run_example2(const ExperimentConfig& config) {
  require_problem(config, "example2");
  run_inversion_experiment(config);
}

void run_validate_surrogate(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  const std::string dir = config.out_dir + "/";

  const Problem problem(config);
  const RngStream root(config.seed);
  const RngStream offline_rng = root.child(1);

  const Eigen::MatrixXd params =
      eki::sample_prior(problem.prior(), config.n_train, offline_rng.child(0)).members;
  const std::vector<int> tidx = training_time_indices(config);
  std::vector<tfpde::Trajectory> trajs;
  trajs.reserve(config.n_train);
  for (int j = 0; j < config.n_train; ++j)
    trajs.push_back(problem.solve_coarse(params.row(j).transpose()));
  const pod::SnapshotMatrix snaps = pod::build_snapshot_matrix(trajs, tidx);

  const int n_test = 100;
  const Eigen::MatrixXd test_params =
      eki::sample_prior(problem.prior(), n_test, root.child(2)).members;
  std::vector<int> test_tidx;
  for (double t : config.sensor_times)
    test_tidx.push_back(static_cast<int>(std::lround(t * config.coarse_steps)));
  const surrogate::SolverFn solver = [&problem](const Eigen::VectorXd& theta) {
    return problem.solve_coarse(theta);
  };

  std::vector<int> p_values;
  if (config.pod_p >= 1)
    p_values = {config.pod_p};
  else
    p_values = {2, 4, 6, 8, 10};

  std::ofstream out = open_out(dir + "validate.csv");
  out << "p,n_train,eps_a,eps_p,eps_c,skipped,train_s,eval_s\n";
  for (int p : p_values) {
    const auto t0 = std::chrono::steady_clock::now();
    const pod::PodBasis basis = pod::compute_pod(snaps, pod::PodCriterion::fixed(p));
    const surrogate::CoefficientTensor tensor =
        surrogate::build_training_set(trajs, params, tidx, problem.coarse_time(), basis);
    surrogate::TrainOptions opt;
    opt.kernel = config.kernel_kind();
    opt.n_rv = config.n_rv;
    opt.n_obs = config.n_obs;
    opt.q_fixed = config.q_fixed;
    opt.q_energy = config.q_energy;
    const surrogate::Surrogate s = surrogate::train(tensor, basis, problem.coarse_obs(1.0),
                                                    problem.coarse_time(), opt,
                                                    offline_rng.child(1));
    const double train_s = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    const surrogate::ValidationErrors err =
        surrogate::validation_errors(s, test_params, test_tidx, problem.coarse_time(), solver);
    out << p << "," << config.n_train << "," << err.eps_a << "," << err.eps_p << ","
        << err.eps_c << "," << err.skipped << "," << train_s << "," << seconds_since(t1)
        << "\n";
  }
}

std::vector<std::pair<double, double>> temporal_convergence(double alpha,
                                                            const std::vector<int>& step_counts,
                                                            int grid_n) {
  const tfpde::SpatialGrid grid(grid_n, grid_n);
  const Eigen::VectorXd w =
      grid.evaluate([](double x, double y) { return std::cos(kPi * x) * std::cos(kPi * y); });
  const Eigen::VectorXd kappa = Eigen::VectorXd::Ones(grid.num_nodes());
  const Eigen::SparseMatrix<double> L = tfpde::assemble_diffusion_operator(grid, kappa);
  const Eigen::VectorXd lw = L * w;
  const double c_alpha = 2.0 / std::tgamma(3.0 - alpha);

  // u*(t) = t^2 w is exact in space under nodal forcing f = D_t^alpha u* - L u*,
  // so the measured error is purely the L1 time discretization.
  std::vector<std::pair<double, double>> errors;
  for (int n : step_counts) {
    const tfpde::TimeGrid tgrid(1.0 / n, n);
    const tfpde::ForwardSolver solver(grid, tgrid, alpha, kappa);
    auto source = [&](double t) -> Eigen::VectorXd {
      return c_alpha * std::pow(t, 2.0 - alpha) * w - t * t * lw;
    };
    const tfpde::Trajectory traj =
        solver.solve_nodal(source, Eigen::VectorXd::Zero(grid.num_nodes()));
    const double err = (traj.values.col(n) - w).cwiseAbs().maxCoeff();
    errors.emplace_back(tgrid.dt, err);
  }
  return errors;
}

std::vector<std::pair<double, double>> spatial_convergence(double alpha,
                                                           const std::vector<int>& grid_sizes,
                                                           int n_steps) {
  const double c_alpha = 2.0 / std::tgamma(3.0 - alpha);
  auto exact = [](double x, double y) { return std::cos(kPi * x) * std::cos(kPi * y); };
  auto source = [&, alpha](double x, double y, double t) {
    const double w = std::cos(kPi * x) * std::cos(kPi * y);
    return c_alpha * std::pow(t, 2.0 - alpha) * w + 2.0 * kPi * kPi * t * t * w;
  };

  std::vector<std::pair<double, double>> errors;
  const tfpde::TimeGrid tgrid(1.0 / n_steps, n_steps);
  for (int n : grid_sizes) {
    const tfpde::SpatialGrid grid(n, n);
    const tfpde::ForwardSolver solver(grid, tgrid, alpha,
                                      Eigen::VectorXd::Ones(grid.num_nodes()));
    const tfpde::Trajectory traj = solver.solve(source, zero_field);
    const double err =
        (traj.values.col(n_steps) - grid.evaluate(exact)).cwiseAbs().maxCoeff();
    errors.emplace_back(1.0 / (n - 1), err);
  }
  return errors;
}

void run_forward_convergence(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  std::ofstream out = open_out(config.out_dir + "/forward_convergence.csv");
  out << "study,alpha,h_or_dt,error,rate\n";

  auto emit = [&](const char* study, double alpha,
                  const std::vector<std::pair<double, double>>& errs) {
    for (std::size_t i = 0; i < errs.size(); ++i) {
      out << study << "," << alpha << "," << errs[i].first << "," << errs[i].second << ",";
      if (i > 0)
        out << std::log(errs[i - 1].second / errs[i].second) /
                   std::log(errs[i - 1].first / errs[i].first);
      out << "\n";
    }
  };

  for (double alpha : {0.3, config.alpha, 0.8}) {
    emit("temporal", alpha, temporal_convergence(alpha, {25, 50, 100, 200}, 21));
  }
  emit("spatial", config.alpha, spatial_convergence(config.alpha, {11, 21, 41}, 400));
}

}  // namespace rbeki::experiments
