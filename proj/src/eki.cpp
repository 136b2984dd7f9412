#include "rbeki/eki.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rbeki::eki {

PriorSpec PriorSpec::uniform_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (lo.size() != hi.size() || lo.size() < 1)
    throw std::invalid_argument("PriorSpec: bound dimension mismatch");
  if (((hi - lo).array() <= 0.0).any())
    throw std::invalid_argument("PriorSpec: need lo < hi per dimension");
  PriorSpec s;
  s.kind = Kind::UniformBox;
  s.lo = lo;
  s.hi = hi;
  s.dim = static_cast<int>(lo.size());
  return s;
}

PriorSpec PriorSpec::standard_normal(int dim) {
  if (dim < 1) throw std::invalid_argument("PriorSpec: dim >= 1");
  PriorSpec s;
  s.kind = Kind::StandardNormal;
  s.dim = dim;
  return s;
}

Ensemble sample_prior(const PriorSpec& spec, int n_members, const RngStream& rng) {
  if (n_members < 2) throw std::invalid_argument("sample_prior: N_e >= 2");
  auto eng = rng.engine();
  Ensemble ens;
  ens.members.resize(n_members, spec.dim);
  if (spec.kind == PriorSpec::Kind::UniformBox) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int j = 0; j < n_members; ++j)
      for (int d = 0; d < spec.dim; ++d)
        ens.members(j, d) = spec.lo[d] + (spec.hi[d] - spec.lo[d]) * unit(eng);
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int j = 0; j < n_members; ++j)
      for (int d = 0; d < spec.dim; ++d) ens.members(j, d) = normal(eng);
  }
  return ens;
}

namespace {

Eigen::LLT<Eigen::MatrixXd> cholesky_spd(const Eigen::MatrixXd& gamma) {
  if (gamma.rows() != gamma.cols())
    throw std::invalid_argument("noise covariance must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(gamma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("noise covariance must be symmetric positive definite");
  return llt;
}

// ||Gamma^{-1/2} r|| via the Cholesky factor
double gamma_inv_norm(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& r) {
  return std::sqrt(r.dot(llt.solve(r)));
}

}  // namespace

Eigen::MatrixXd perturb_observations(const Eigen::VectorXd& y_obs,
                                     const Eigen::MatrixXd& gamma, int n_members,
                                     const RngStream& rng) {
  const auto llt = cholesky_spd(gamma);
  auto eng = rng.engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd perturbed(y_obs.size(), n_members);
  Eigen::VectorXd z(y_obs.size());
  for (int j = 0; j < n_members; ++j) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(eng);
    perturbed.col(j) = y_obs + llt.matrixL() * z;
  }
  return perturbed;
}

EnsembleStats ensemble_stats(const Ensemble& ensemble, const Eigen::MatrixXd& outputs) {
  const int n = ensemble.size();
  if (n < 2) throw std::invalid_argument("ensemble_stats: N_e >= 2");
  if (outputs.rows() != n)
    throw std::invalid_argument("ensemble_stats: outputs row count mismatch");

  EnsembleStats st;
  st.theta_mean = ensemble.members.colwise().mean();
  st.omega_mean = outputs.colwise().mean();
  const Eigen::MatrixXd dtheta = ensemble.members.rowwise() - st.theta_mean.transpose();
  const Eigen::MatrixXd domega = outputs.rowwise() - st.omega_mean.transpose();
  st.c_theta_omega = dtheta.transpose() * domega / (n - 1);
  st.c_omega_omega = domega.transpose() * domega / (n - 1);
  return st;
}

double select_gamma(const Eigen::MatrixXd& c_omega_omega, const Eigen::MatrixXd& gamma_cov,
                    const Eigen::VectorXd& residual, double rho, double gamma0) {
  if (!(gamma0 > 0.0)) throw std::invalid_argument("select_gamma: gamma0 > 0");
  const auto llt = cholesky_spd(gamma_cov);
  const double rhs = rho * gamma_inv_norm(llt, residual);
  double gamma = gamma0;
  // terminates: as gamma grows the left side tends to ||Gamma^{-1/2} r|| > rhs
  for (;;) {
    const Eigen::MatrixXd sys = c_omega_omega + gamma * gamma_cov;
    const Eigen::VectorXd x = sys.ldlt().solve(residual);
    const double lhs = gamma * std::sqrt(x.dot(gamma_cov * x));
    if (lhs >= rhs) return gamma;
    gamma *= 2.0;
  }
}

Ensemble eki_update(const Ensemble& ensemble, const Eigen::MatrixXd& outputs,
                    const Eigen::MatrixXd& perturbed_obs, double gamma,
                    const Eigen::MatrixXd& gamma_cov) {
  const EnsembleStats st = ensemble_stats(ensemble, outputs);
  const Eigen::MatrixXd sys = st.c_omega_omega + gamma * gamma_cov;
  Eigen::LLT<Eigen::MatrixXd> llt(sys);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("eki_update: update system factorization failed");

  // innovations per member: y^{(j)} - omega^{(j)}
  const Eigen::MatrixXd innovations = perturbed_obs - outputs.transpose();
  const Eigen::MatrixXd solved = llt.solve(innovations);  // m x N_e

  Ensemble next = ensemble;
  next.members += (st.c_theta_omega * solved).transpose();
  next.iteration = ensemble.iteration + 1;
  return next;
}

bool discrepancy_stop(double misfit, double noise_level, double tau) {
  if (noise_level < 0.0) throw std::invalid_argument("discrepancy_stop: noise_level >= 0");
  return misfit <= tau * noise_level;
}

InversionResult run_eki(const ForwardMap& forward, const PriorSpec& spec,
                        const Eigen::VectorXd& y_obs, const Eigen::MatrixXd& gamma_cov,
                        const EkiOptions& opts, const RngStream& rng,
                        const Eigen::VectorXd* truth) {
  if (!(opts.rho < 1.0) || !(opts.tau * opts.rho >= 1.0))
    throw std::invalid_argument("run_eki: need rho < 1 and tau * rho >= 1");
  if (opts.max_iters < 0) throw std::invalid_argument("run_eki: max_iters >= 0");
  const auto llt = cholesky_spd(gamma_cov);

  Ensemble ens = sample_prior(spec, opts.n_members, rng.child(0));
  const RngStream perturb_rng = rng.child(1);

  InversionResult result;
  auto record_for = [&](int n, double misfit) {
    IterationRecord rec;
    rec.n = n;
    rec.mean = ens.mean();
    rec.misfit = misfit;
    if (truth != nullptr) {
      const double tn = truth->norm();
      if (tn == 0.0) throw std::invalid_argument("run_eki: zero-norm truth");
      rec.e_theta = (rec.mean - *truth).norm() / tn;
    }
    if (opts.clamp_probe) rec.clamps = opts.clamp_probe();
    return rec;
  };

  if (opts.max_iters == 0) {
    result.history.push_back(record_for(0, std::nan("")));
    result.final_ensemble = ens;
    result.reason = StopReason::MaxIters;
    return result;
  }

  Eigen::MatrixXd outputs(opts.n_members, y_obs.size());
  for (int n = 0;; ++n) {
    const auto iter_start = std::chrono::steady_clock::now();
    for (int j = 0; j < opts.n_members; ++j) {
      try {
        outputs.row(j) = forward(ens.members.row(j));
      } catch (const std::exception& e) {
        throw std::runtime_error("run_eki: forward map failed at iteration " +
                                 std::to_string(n) + ", member " + std::to_string(j) + ": " +
                                 e.what());
      }
    }
    const Eigen::VectorXd omega_mean = outputs.colwise().mean();
    const Eigen::VectorXd residual = y_obs - omega_mean;
    const double misfit = gamma_inv_norm(llt, residual);

    IterationRecord rec = record_for(n, misfit);
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - iter_start)
          .count();
    };
    if (discrepancy_stop(misfit, opts.noise_level, opts.tau)) {
      rec.wall_s = elapsed();
      result.history.push_back(rec);
      result.reason = StopReason::Discrepancy;
      break;
    }
    if (n >= opts.max_iters) {
      rec.wall_s = elapsed();
      result.history.push_back(rec);
      result.reason = StopReason::MaxIters;
      break;
    }

    const EnsembleStats st = ensemble_stats(ens, outputs);
    const double gamma =
        residual.norm() == 0.0
            ? opts.gamma0
            : select_gamma(st.c_omega_omega, gamma_cov, residual, opts.rho, opts.gamma0);
    rec.gamma = gamma;
    // observation perturbations are redrawn every iteration; reusing one draw
    // collapses the ensemble early and biases the stopped mean
    const Eigen::MatrixXd perturbed =
        perturb_observations(y_obs, gamma_cov, opts.n_members, perturb_rng.child(n));
    ens = eki_update(ens, outputs, perturbed, gamma, gamma_cov);
    rec.wall_s = elapsed();
    result.history.push_back(rec);
  }
  result.final_ensemble = ens;
  return result;
}

}  // namespace rbeki::eki
