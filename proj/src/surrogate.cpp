#include "rbeki/surrogate.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rbeki::surrogate {

CoefficientTensor build_training_set(const std::vector<tfpde::Trajectory>& trajectories,
                                     const Eigen::MatrixXd& params,
                                     const std::vector<int>& time_indices,
                                     const tfpde::TimeGrid& tgrid,
                                     const pod::PodBasis& basis) {
  if (static_cast<Eigen::Index>(trajectories.size()) != params.rows())
    throw std::invalid_argument("build_training_set: trajectory/parameter count mismatch");
  if (time_indices.empty())
    throw std::invalid_argument("build_training_set: empty training times");

  const int p = basis.p();
  const int n_t = static_cast<int>(time_indices.size());
  const int n_theta = static_cast<int>(params.rows());

  CoefficientTensor tensor;
  tensor.params = params;
  tensor.times.resize(n_t);
  for (int i = 0; i < n_t; ++i) tensor.times[i] = tgrid.time(time_indices[i]);
  tensor.q.assign(p, Eigen::MatrixXd(n_t, n_theta));

  for (int j = 0; j < n_theta; ++j) {
    const auto& traj = trajectories[j];
    if (traj.values.rows() != basis.modes.rows())
      throw std::invalid_argument("build_training_set: grid dimension mismatch");
    for (int i = 0; i < n_t; ++i) {
      const Eigen::VectorXd a = basis.modes.transpose() * traj.values.col(time_indices[i]);
      for (int k = 0; k < p; ++k) tensor.q[k](i, j) = a[k];
    }
  }
  return tensor;
}

CoefficientTensor build_training_set(const SolverFn& solver, const Eigen::MatrixXd& params,
                                     const std::vector<int>& time_indices,
                                     const tfpde::TimeGrid& tgrid,
                                     const pod::PodBasis& basis) {
  std::vector<tfpde::Trajectory> trajectories;
  trajectories.reserve(params.rows());
  for (Eigen::Index j = 0; j < params.rows(); ++j) {
    try {
      trajectories.push_back(solver(params.row(j)));
    } catch (const std::exception& e) {
      throw std::runtime_error("build_training_set: solver failed at parameter index " +
                               std::to_string(j) + ": " + e.what());
    }
  }
  return build_training_set(trajectories, params, time_indices, tgrid, basis);
}

TensorModes tensor_decompose(const Eigen::MatrixXd& qk, int q_fixed, double energy) {
  TensorModes modes;
  if (qk.norm() == 0.0) {
    // coefficient identically zero: q_k = 0, caller records the warning
    modes.lambda.resize(0);
    modes.psi.resize(qk.rows(), 0);
    modes.phi.resize(qk.cols(), 0);
    return modes;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(qk, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();

  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > sv[0] * 1e-14) rank = i + 1;

  Eigen::Index q;
  if (q_fixed >= 1) {
    q = std::min<Eigen::Index>(q_fixed, rank);
  } else {
    const double total = sv.squaredNorm();
    double acc = 0.0;
    q = rank;
    for (Eigen::Index i = 0; i < rank; ++i) {
      acc += sv[i] * sv[i];
      if (acc / total > energy) {
        q = i + 1;
        break;
      }
    }
  }

  modes.lambda = sv.head(q);
  modes.psi = svd.matrixU().leftCols(q);
  modes.phi = svd.matrixV().leftCols(q);
  // same sign convention as the POD basis, compensated on the parameter side
  for (Eigen::Index l = 0; l < q; ++l) {
    Eigen::Index imax;
    modes.psi.col(l).cwiseAbs().maxCoeff(&imax);
    if (modes.psi(imax, l) < 0.0) {
      modes.psi.col(l) = -modes.psi.col(l);
      modes.phi.col(l) = -modes.phi.col(l);
    }
  }
  return modes;
}

Surrogate::Surrogate(pod::PodBasis basis, std::vector<std::vector<ModePair>> modes,
                     Eigen::MatrixXd sensor_rows, Eigen::VectorXd sensor_times,
                     Eigen::VectorXd theta_lo, Eigen::VectorXd theta_hi, double t_lo,
                     double t_hi)
    : basis_(std::move(basis)),
      modes_(std::move(modes)),
      sensor_rows_(std::move(sensor_rows)),
      sensor_times_(std::move(sensor_times)),
      theta_lo_(std::move(theta_lo)),
      theta_hi_(std::move(theta_hi)),
      t_lo_(t_lo),
      t_hi_(t_hi) {
  if (static_cast<int>(modes_.size()) != basis_.p())
    throw std::invalid_argument("Surrogate: mode family count must equal basis size");
  cache_sensor_time_modes();
}

void Surrogate::cache_sensor_time_modes() {
  sensor_time_modes_.clear();
  for (const auto& family : modes_) {
    Eigen::MatrixXd table(family.size(), sensor_times_.size());
    for (std::size_t l = 0; l < family.size(); ++l)
      for (Eigen::Index j = 0; j < sensor_times_.size(); ++j)
        table(l, j) = family[l].lambda * family[l].time_model.predict_scalar(sensor_times_[j]);
    sensor_time_modes_.push_back(std::move(table));
  }
}

Eigen::VectorXd Surrogate::clamp_theta(const Eigen::VectorXd& theta) const {
  if (theta.size() != theta_lo_.size())
    throw std::invalid_argument("Surrogate: parameter dimension mismatch");
  Eigen::VectorXd clamped = theta;
  bool any = false;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (clamped[i] < theta_lo_[i]) {
      clamped[i] = theta_lo_[i];
      any = true;
    } else if (clamped[i] > theta_hi_[i]) {
      clamped[i] = theta_hi_[i];
      any = true;
    }
  }
  if (any) ++clamp_count_;
  return clamped;
}

Eigen::VectorXd Surrogate::eval_coefficients(double t, const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd th = clamp_theta(theta);
  double tc = t;
  if (tc < t_lo_) {
    tc = t_lo_;
    ++clamp_count_;
  } else if (tc > t_hi_) {
    tc = t_hi_;
    ++clamp_count_;
  }
  Eigen::VectorXd a = Eigen::VectorXd::Zero(basis_.p());
  for (int k = 0; k < basis_.p(); ++k)
    for (const auto& mode : modes_[k])
      a[k] += mode.lambda * mode.time_model.predict_scalar(tc) *
              mode.param_model.predict_scalar(th);
  return a;
}

Eigen::VectorXd Surrogate::reduced_solution(double t, const Eigen::VectorXd& theta) const {
  return basis_.modes * eval_coefficients(t, theta);
}

Eigen::VectorXd Surrogate::reduced_observe(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd th = clamp_theta(theta);
  const int p = basis_.p();
  const int mx = static_cast<int>(sensor_rows_.rows());
  const int mt = static_cast<int>(sensor_times_.size());

  // parameter modes depend only on theta: evaluate once, reuse across times
  std::vector<Eigen::VectorXd> param_values(p);
  for (int k = 0; k < p; ++k) {
    param_values[k].resize(modes_[k].size());
    for (std::size_t l = 0; l < modes_[k].size(); ++l)
      param_values[k][l] = modes_[k][l].param_model.predict_scalar(th);
  }

  Eigen::VectorXd y(mx * mt);
  Eigen::VectorXd a(p);
  for (int j = 0; j < mt; ++j) {
    for (int k = 0; k < p; ++k)
      a[k] = modes_[k].empty() ? 0.0 : sensor_time_modes_[k].col(j).dot(param_values[k]);
    y.segment(j * mx, mx) = sensor_rows_ * a;
  }
  return y;
}

Surrogate train(const CoefficientTensor& tensor, const pod::PodBasis& basis,
                const tfpde::ObservationSetup& obs, const tfpde::TimeGrid& tgrid,
                const TrainOptions& options, const RngStream& rng) {
  if (static_cast<int>(tensor.q.size()) != basis.p())
    throw std::invalid_argument("train: tensor size does not match basis");
  for (int k : obs.time_indices()) {
    const double t = tgrid.time(k);
    bool found = false;
    for (Eigen::Index i = 0; i < tensor.times.size(); ++i)
      if (std::abs(tensor.times[i] - t) < 1e-12) found = true;
    if (!found)
      throw std::invalid_argument("train: sensor time " + std::to_string(t) +
                                  " is not a training time");
  }

  std::vector<std::vector<ModePair>> families;
  for (int k = 0; k < basis.p(); ++k) {
    const TensorModes dm = tensor_decompose(tensor.q[k], options.q_fixed, options.q_energy);
    std::vector<ModePair> family;
    const RngStream rk = rng.child(k);
    for (Eigen::Index l = 0; l < dm.lambda.size(); ++l) {
      const RngStream rl = rk.child(l);
      ModePair mode;
      mode.lambda = dm.lambda[l];
      try {
        dsrbf::TrainingSet time_ts{tensor.times, dm.psi.col(l)};
        const auto time_dist = dsrbf::build_shape_distribution(
            time_ts, options.kernel, options.n_obs, options.n_rv, options.bounds,
            rl.child(0));
        mode.time_model = dsrbf::fit(time_ts, options.kernel, time_dist, rl.child(1));

        dsrbf::TrainingSet param_ts{tensor.params, dm.phi.col(l)};
        const auto param_dist = dsrbf::build_shape_distribution(
            param_ts, options.kernel, options.n_obs, options.n_rv, options.bounds,
            rl.child(2));
        mode.param_model = dsrbf::fit(param_ts, options.kernel, param_dist, rl.child(3));
      } catch (const std::exception& e) {
        // A mode carrying negligible energy can produce a noise-like target that
        // defeats the collocation solve; dropping it changes nothing measurable.
        if (l > 0 && dm.lambda[l] <= 1e-3 * dm.lambda[0]) continue;
        throw std::runtime_error("train: DSRBF fit failed at mode (k=" + std::to_string(k) +
                                 ", l=" + std::to_string(l) +
                                 ", lambda_ratio=" + std::to_string(dm.lambda[l] / dm.lambda[0]) +
                                 "): " + e.what());
      }
      family.push_back(std::move(mode));
    }
    families.push_back(std::move(family));
  }

  Eigen::MatrixXd sensor_rows(obs.num_sensors(), basis.p());
  for (int i = 0; i < obs.num_sensors(); ++i)
    sensor_rows.row(i) = basis.modes.row(obs.sensor_nodes()[i]);
  Eigen::VectorXd sensor_times(obs.num_times());
  for (int j = 0; j < obs.num_times(); ++j) sensor_times[j] = tgrid.time(obs.time_indices()[j]);

  return Surrogate(basis, std::move(families), std::move(sensor_rows), std::move(sensor_times),
                   tensor.params.colwise().minCoeff(), tensor.params.colwise().maxCoeff(),
                   tensor.times.minCoeff(), tensor.times.maxCoeff());
}

ValidationErrors validation_errors(const Surrogate& s, const Eigen::MatrixXd& test_params,
                                   const std::vector<int>& test_time_indices,
                                   const tfpde::TimeGrid& tgrid, const SolverFn& solver) {
  if (test_params.rows() < 1)
    throw std::invalid_argument("validation_errors: need at least one test parameter");
  ValidationErrors err;
  int counted = 0;
  for (Eigen::Index i = 0; i < test_params.rows(); ++i) {
    const Eigen::VectorXd theta = test_params.row(i);
    const tfpde::Trajectory traj = solver(theta);

    double full2 = 0.0, approx2 = 0.0, proj2 = 0.0, coeff2 = 0.0;
    for (int t_idx : test_time_indices) {
      const double t = tgrid.time(t_idx);
      const Eigen::VectorXd u = traj.values.col(t_idx);
      const Eigen::VectorXd a = pod::project(s.basis(), u);
      const Eigen::VectorXd a_tilde = s.eval_coefficients(t, theta);
      full2 += u.squaredNorm();
      approx2 += (u - pod::reconstruct(s.basis(), a_tilde)).squaredNorm();
      proj2 += (u - pod::reconstruct(s.basis(), a)).squaredNorm();
      coeff2 += (a - a_tilde).squaredNorm();
    }
    if (full2 == 0.0) {
      ++err.skipped;
      continue;
    }
    const double scale = std::sqrt(full2);
    err.eps_a += std::sqrt(approx2) / scale;
    err.eps_p += std::sqrt(proj2) / scale;
    err.eps_c += std::sqrt(coeff2) / scale;
    ++counted;
  }
  if (counted > 0) {
    err.eps_a /= counted;
    err.eps_p /= counted;
    err.eps_c /= counted;
  }
  return err;
}

namespace {

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  out << v.size() << "\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  out << "\n";
}

Eigen::VectorXd read_vector(std::istream& in) {
  Eigen::Index n;
  if (!(in >> n)) throw std::runtime_error("Surrogate::load: truncated vector");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(in >> v[i])) throw std::runtime_error("Surrogate::load: truncated vector body");
  return v;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  out << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << "\n";
  }
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  Eigen::Index rows, cols;
  if (!(in >> rows >> cols)) throw std::runtime_error("Surrogate::load: truncated matrix");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j))) throw std::runtime_error("Surrogate::load: truncated matrix body");
  return m;
}

}  // namespace

void Surrogate::save(std::ostream& out) const {
  out.precision(17);
  out << "rbeki-surrogate v1\n";
  write_matrix(out, basis_.modes);
  write_vector(out, basis_.singular_values);
  out << basis_.energy_tol << "\n";
  write_matrix(out, sensor_rows_);
  write_vector(out, sensor_times_);
  write_vector(out, theta_lo_);
  write_vector(out, theta_hi_);
  out << t_lo_ << " " << t_hi_ << "\n";
  out << modes_.size() << "\n";
  for (const auto& family : modes_) {
    out << family.size() << "\n";
    for (const auto& mode : family) {
      out << mode.lambda << "\n";
      mode.time_model.save(out);
      mode.param_model.save(out);
    }
  }
}

Surrogate Surrogate::load(std::istream& in) {
  std::string magic, version;
  if (!(in >> magic >> version) || magic != "rbeki-surrogate" || version != "v1")
    throw std::runtime_error("Surrogate::load: unrecognized header");
  pod::PodBasis basis;
  basis.modes = read_matrix(in);
  basis.singular_values = read_vector(in);
  in >> basis.energy_tol;
  Eigen::MatrixXd sensor_rows = read_matrix(in);
  Eigen::VectorXd sensor_times = read_vector(in);
  Eigen::VectorXd theta_lo = read_vector(in);
  Eigen::VectorXd theta_hi = read_vector(in);
  double t_lo, t_hi;
  in >> t_lo >> t_hi;
  std::size_t p;
  in >> p;
  std::vector<std::vector<ModePair>> families(p);
  for (auto& family : families) {
    std::size_t q;
    if (!(in >> q)) throw std::runtime_error("Surrogate::load: truncated mode table");
    family.resize(q);
    for (auto& mode : family) {
      in >> mode.lambda;
      mode.time_model = dsrbf::DsrbfModel::load(in);
      mode.param_model = dsrbf::DsrbfModel::load(in);
    }
  }
  return Surrogate(std::move(basis), std::move(families), std::move(sensor_rows),
                   std::move(sensor_times), std::move(theta_lo), std::move(theta_hi), t_lo,
                   t_hi);
}

}  // namespace rbeki::surrogate
