#include "rbeki/dsrbf.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <optional>
#include <stdexcept>
#include <string>

namespace rbeki::dsrbf {

simd::Rbf to_profile(Kernel k) {
  switch (k) {
    case Kernel::Gaussian: return simd::Rbf::Gaussian;
    case Kernel::MQ: return simd::Rbf::Multiquadric;
    case Kernel::IMQ: return simd::Rbf::InverseMultiquadric;
  }
  throw std::logic_error("unknown kernel");
}

double kernel_eval(Kernel kind, double r) {
  if (r < 0.0) throw std::domain_error("kernel_eval: r must be nonnegative");
  switch (kind) {
    case Kernel::Gaussian: return std::exp(-r * r);
    case Kernel::MQ: return std::sqrt(1.0 + r * r);
    case Kernel::IMQ: return 1.0 / std::sqrt(1.0 + r * r);
  }
  throw std::logic_error("unknown kernel");
}

InputScaling InputScaling::from_centers(const Eigen::MatrixXd& centers) {
  InputScaling s;
  s.lo = centers.colwise().minCoeff();
  Eigen::VectorXd hi = centers.colwise().maxCoeff();
  s.span = hi - s.lo;
  for (Eigen::Index d = 0; d < s.span.size(); ++d)
    if (s.span[d] <= 0.0) s.span[d] = 1.0;
  return s;
}

Eigen::MatrixXd InputScaling::apply(const Eigen::MatrixXd& points) const {
  return (points.rowwise() - lo.transpose()).array().rowwise() /
         span.transpose().array();
}

Eigen::VectorXd InputScaling::apply(const Eigen::VectorXd& point) const {
  return (point - lo).cwiseQuotient(span);
}

namespace {

std::vector<double> dim_major(const Eigen::MatrixXd& centers) {
  const std::size_t n = centers.rows(), s = centers.cols();
  std::vector<double> flat(n * s);
  for (std::size_t d = 0; d < s; ++d)
    for (std::size_t i = 0; i < n; ++i) flat[d * n + i] = centers(i, d);
  return flat;
}

void validate_training_set(const TrainingSet& ts) {
  if (ts.size() < 2) throw std::invalid_argument("TrainingSet: need at least 2 centers");
  if (ts.values.rows() != ts.centers.rows())
    throw std::invalid_argument("TrainingSet: values/centers row mismatch");
  if (!ts.centers.allFinite() || !ts.values.allFinite())
    throw std::invalid_argument("TrainingSet: non-finite entries");
}

Eigen::MatrixXd assemble_scaled(const std::vector<double>& flat, int n, int dim,
                                const Eigen::MatrixXd& centers_scaled,
                                const Eigen::VectorXd& shapes, Kernel kind) {
  Eigen::MatrixXd a(n, n);
  std::vector<double> r2(n);
  std::vector<double> eps(n);
  std::vector<double> col(n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd q = centers_scaled.row(j);
    simd::squared_distance(flat.data(), n, dim, q.data(), r2.data());
    std::fill(eps.begin(), eps.end(), shapes[j]);
    simd::rbf_profile(to_profile(kind), eps.data(), r2.data(), col.data(), n);
    for (int i = 0; i < n; ++i) a(i, j) = col[i];
  }
  return a;
}

Eigen::MatrixXd normal_matrix(int rows, int cols, std::mt19937_64& eng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd w(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) w(i, j) = normal(eng);
  return w;
}

// Rank-revealing pseudo-inverse applied to f: V^+ f with singular values
// below 1e-10 * sigma_max truncated.
Eigen::MatrixXd pinv_apply(const Eigen::MatrixXd& v, const Eigen::MatrixXd& f) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? 1e-10 * sv[0] : 0.0;
  Eigen::MatrixXd ut_f = svd.matrixU().transpose() * f;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    ut_f.row(i) *= (sv[i] > cutoff) ? 1.0 / sv[i] : 0.0;
  return svd.matrixV() * ut_f;
}

Eigen::MatrixXd loocv_cost_scaled(double eps, const Eigen::MatrixXd& centers_scaled,
                                  const Eigen::MatrixXd& values, Kernel kind,
                                  const Eigen::MatrixXd& probes) {
  const int n = static_cast<int>(centers_scaled.rows());
  const Eigen::VectorXd shapes = Eigen::VectorXd::Constant(n, eps);
  const std::vector<double> flat = dim_major(centers_scaled);
  const Eigen::MatrixXd a =
      assemble_scaled(flat, n, static_cast<int>(centers_scaled.cols()), centers_scaled,
                      shapes, kind);
  const Eigen::MatrixXd v = a * probes;

  const Eigen::VectorXd num = (v.array() * probes.array()).rowwise().sum();
  const Eigen::VectorXd den = v.array().square().rowwise().sum();
  Eigen::VectorXd beta1(n);
  for (int i = 0; i < n; ++i) {
    if (den[i] == 0.0)
      throw std::runtime_error("stochastic_loocv_cost: zero denominator at component " +
                               std::to_string(i));
    beta1[i] = num[i] / den[i];
  }
  const Eigen::MatrixXd beta2 = probes * pinv_apply(v, values);
  Eigen::MatrixXd e = beta2;
  for (int i = 0; i < n; ++i) {
    if (beta1[i] == 0.0)
      throw std::runtime_error("stochastic_loocv_cost: zero beta1 at component " +
                               std::to_string(i));
    e.row(i) /= beta1[i];
  }
  return e;
}

}  // namespace

Eigen::MatrixXd assemble_matrix(const Eigen::MatrixXd& centers,
                                const Eigen::VectorXd& shapes, Kernel kind) {
  if (shapes.size() != centers.rows())
    throw std::invalid_argument("assemble_matrix: shape count mismatch");
  if ((shapes.array() <= 0.0).any())
    throw std::invalid_argument("assemble_matrix: shapes must be positive");
  return assemble_scaled(dim_major(centers), static_cast<int>(centers.rows()),
                         static_cast<int>(centers.cols()), centers, shapes, kind);
}

Eigen::MatrixXd stochastic_loocv_cost(double eps, const TrainingSet& ts, Kernel kind,
                                      int n_rv, const RngStream& rng) {
  validate_training_set(ts);
  if (!(eps > 0.0)) throw std::invalid_argument("stochastic_loocv_cost: eps must be positive");
  if (n_rv < 1 || n_rv >= ts.size())
    throw std::invalid_argument("stochastic_loocv_cost: need 1 <= N_rv < n_Z");
  auto eng = rng.engine();
  const Eigen::MatrixXd probes = normal_matrix(ts.size(), n_rv, eng);
  const InputScaling scaling = InputScaling::from_centers(ts.centers);
  return loocv_cost_scaled(eps, scaling.apply(ts.centers), ts.values, kind, probes);
}

double select_optimal_shape(const TrainingSet& ts, Kernel kind, int n_rv,
                            const ShapeSearchBounds& bounds, const RngStream& rng) {
  validate_training_set(ts);
  if (!(bounds.lo > 0.0 && bounds.lo < bounds.hi))
    throw std::invalid_argument("select_optimal_shape: need 0 < lo < hi");

  auto eng = rng.engine();
  const Eigen::MatrixXd probes = normal_matrix(ts.size(), n_rv, eng);
  const InputScaling scaling = InputScaling::from_centers(ts.centers);
  const Eigen::MatrixXd scaled = scaling.apply(ts.centers);

  auto objective = [&](double eps) {
    const double cost = loocv_cost_scaled(eps, scaled, ts.values, kind, probes).norm();
    if (!std::isfinite(cost))
      throw std::runtime_error("select_optimal_shape: non-finite objective at eps=" +
                               std::to_string(eps));
    return cost;
  };

  // golden-section search on [lo, hi]
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = bounds.lo, b = bounds.hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > 1e-3) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = objective(d);
    }
  }
  return 0.5 * (a + b);
}

ShapeDistribution build_shape_distribution(const TrainingSet& ts, Kernel kind, int n_obs,
                                           int n_rv, const ShapeSearchBounds& bounds,
                                           const RngStream& rng) {
  if (n_obs < 1) throw std::invalid_argument("build_shape_distribution: N_obs >= 1");
  double sum = 0.0;
  for (int j = 0; j < n_obs; ++j)
    sum += select_optimal_shape(ts, kind, n_rv, bounds, rng.child(j));
  return ShapeDistribution{sum / n_obs, bounds.lo, bounds.hi};
}

DsrbfModel::DsrbfModel(Kernel kind, InputScaling scaling, Eigen::MatrixXd centers_scaled,
                       Eigen::VectorXd shapes, Eigen::MatrixXd coefficients,
                       double fit_residual)
    : kernel_(kind),
      scaling_(std::move(scaling)),
      shapes_(std::move(shapes)),
      coefficients_(std::move(coefficients)),
      n_centers_(static_cast<int>(centers_scaled.rows())),
      input_dim_(static_cast<int>(centers_scaled.cols())),
      fit_residual_(fit_residual) {
  centers_dim_major_ = dim_major(centers_scaled);
}

Eigen::VectorXd DsrbfModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim_)
    throw std::invalid_argument("DsrbfModel::predict: input dimension mismatch");
  const Eigen::VectorXd q = scaling_.apply(x);
  std::vector<double> r2(n_centers_), phi(n_centers_);
  simd::squared_distance(centers_dim_major_.data(), n_centers_, input_dim_, q.data(),
                         r2.data());
  simd::rbf_profile(to_profile(kernel_), shapes_.data(), r2.data(), phi.data(), n_centers_);
  Eigen::VectorXd out(coefficients_.cols());
  for (Eigen::Index j = 0; j < coefficients_.cols(); ++j)
    out[j] = simd::dot(phi.data(), coefficients_.col(j).data(), n_centers_);
  return out;
}

double DsrbfModel::predict_scalar(const Eigen::VectorXd& x) const { return predict(x)[0]; }

double DsrbfModel::predict_scalar(double x) const {
  Eigen::VectorXd v(1);
  v[0] = x;
  return predict(v)[0];
}

DsrbfModel fit(const TrainingSet& ts, Kernel kind, const ShapeDistribution& dist,
               const RngStream& rng) {
  validate_training_set(ts);
  if (!(dist.dof > 0.0)) throw std::invalid_argument("fit: shape distribution dof must be positive");

  const InputScaling scaling = InputScaling::from_centers(ts.centers);
  const Eigen::MatrixXd scaled = scaling.apply(ts.centers);
  const std::vector<double> flat = dim_major(scaled);
  const int n = ts.size();
  const double f_norm = ts.values.norm();

  // LU with one step of iterative refinement; MQ collocation matrices are
  // routinely ill conditioned, so judge the solve by its refined residual
  auto try_shapes = [&](const Eigen::VectorXd& shapes,
                        double tol) -> std::optional<DsrbfModel> {
    const Eigen::MatrixXd a =
        assemble_scaled(flat, n, ts.input_dim(), scaled, shapes, kind);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::MatrixXd coeffs = lu.solve(ts.values);
    coeffs += lu.solve(ts.values - a * coeffs);
    const double residual = (a * coeffs - ts.values).norm() / f_norm;
    if (std::isfinite(residual) && residual <= tol)
      return DsrbfModel(kind, scaling, scaled, shapes, coeffs, residual);
    return std::nullopt;
  };

  for (int attempt = 0; attempt < 3; ++attempt) {
    auto eng = rng.child(attempt).engine();
    // chi-square(dof) with non-integer dof = Gamma(dof/2, scale 2)
    std::gamma_distribution<double> chi2(dist.dof / 2.0, 2.0);
    Eigen::VectorXd shapes(n);
    for (int i = 0; i < n; ++i) shapes[i] = std::clamp(chi2(eng), dist.lo, dist.hi);

    if (f_norm == 0.0)
      return DsrbfModel(kind, scaling, scaled, shapes,
                        Eigen::MatrixXd::Zero(n, ts.values.cols()), 0.0);

    if (auto model = try_shapes(shapes, 1e-6)) return *model;
  }
  // all stochastic draws produced numerically singular systems (common when the
  // fitted dof is small and chi-square mass piles up near zero); fall back to
  // deterministic constant shapes, escalating the shape because a more peaked
  // kernel always improves the conditioning of the collocation matrix
  for (double mult = 1.0; mult <= 64.0; mult *= 2.0)
    if (auto model = try_shapes(Eigen::VectorXd::Constant(n, mult * std::max(dist.dof, 1e-3)),
                                1e-4))
      return *model;
  throw std::runtime_error("dsrbf::fit: collocation system numerically singular after 3 draws");
}

namespace {

const char* kernel_tag(Kernel k) {
  switch (k) {
    case Kernel::Gaussian: return "gaussian";
    case Kernel::MQ: return "mq";
    case Kernel::IMQ: return "imq";
  }
  return "?";
}

Kernel kernel_from_tag(const std::string& tag) {
  if (tag == "gaussian") return Kernel::Gaussian;
  if (tag == "mq") return Kernel::MQ;
  if (tag == "imq") return Kernel::IMQ;
  throw std::runtime_error("DsrbfModel::load: unknown kernel tag " + tag);
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
  if (!(in >> rows >> cols)) throw std::runtime_error("DsrbfModel::load: truncated matrix header");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j))) throw std::runtime_error("DsrbfModel::load: truncated matrix body");
  return m;
}

}  // namespace

void DsrbfModel::save(std::ostream& out) const {
  out.precision(17);
  out << "dsrbf " << kernel_tag(kernel_) << " " << n_centers_ << " " << input_dim_ << " "
      << fit_residual_ << "\n";
  write_matrix(out, scaling_.lo.transpose());
  write_matrix(out, scaling_.span.transpose());
  Eigen::MatrixXd centers(n_centers_, input_dim_);
  for (int d = 0; d < input_dim_; ++d)
    for (int i = 0; i < n_centers_; ++i) centers(i, d) = centers_dim_major_[d * n_centers_ + i];
  write_matrix(out, centers);
  write_matrix(out, shapes_.transpose());
  write_matrix(out, coefficients_);
}

DsrbfModel DsrbfModel::load(std::istream& in) {
  std::string magic, tag;
  int n, dim;
  double residual;
  if (!(in >> magic >> tag >> n >> dim >> residual) || magic != "dsrbf")
    throw std::runtime_error("DsrbfModel::load: bad header");
  InputScaling scaling;
  scaling.lo = read_matrix(in).transpose();
  scaling.span = read_matrix(in).transpose();
  Eigen::MatrixXd centers = read_matrix(in);
  Eigen::VectorXd shapes = read_matrix(in).transpose();
  Eigen::MatrixXd coeffs = read_matrix(in);
  return DsrbfModel(kernel_from_tag(tag), scaling, centers, shapes, coeffs, residual);
}

}  // namespace rbeki::dsrbf
