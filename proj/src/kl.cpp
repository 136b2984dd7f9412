#include "rbeki/kl.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace rbeki::kl {

Eigen::VectorXd KlField::log_kappa(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim())
    throw std::invalid_argument("KlField::log_kappa: coefficient dimension mismatch");
  Eigen::VectorXd field = Eigen::VectorXd::Zero(eigenfunctions.rows());
  for (int i = 0; i < dim(); ++i)
    field += theta[i] * std::sqrt(eigenvalues[i]) * eigenfunctions.col(i);
  return field;
}

Eigen::VectorXd KlField::kappa(const Eigen::VectorXd& theta) const {
  return log_kappa(theta).array().exp();
}

KlField kl_expansion(double sigma2, double length_scale, int d,
                     const tfpde::SpatialGrid& grid) {
  const int n = grid.num_nodes();
  if (d < 1 || d > n) throw std::invalid_argument("kl_expansion: need 1 <= d <= n_h");
  if (!(sigma2 > 0.0 && length_scale > 0.0))
    throw std::invalid_argument("kl_expansion: sigma2 and length scale must be positive");

  const double w = grid.hx() * grid.hy();  // uniform quadrature weight
  Eigen::MatrixXd kernel(n, n);
  const double inv_2l2 = 1.0 / (2.0 * length_scale * length_scale);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      const int i = grid.node(ix, iy);
      for (int jy = 0; jy < grid.ny; ++jy)
        for (int jx = 0; jx < grid.nx; ++jx) {
          const int j = grid.node(jx, jy);
          const double dx = grid.x(ix) - grid.x(jx);
          const double dy = grid.y(iy) - grid.y(jy);
          kernel(i, j) = sigma2 * std::exp(-(dx * dx + dy * dy) * inv_2l2);
        }
    }

  // Nystrom with uniform weights: eigenpairs of w*K, eigenfunctions rescaled
  // to unit norm in the weighted inner product.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w * kernel);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("kl_expansion: eigen decomposition failed");

  const Eigen::VectorXd& all = eig.eigenvalues();  // ascending
  int rank = 0;
  for (Eigen::Index i = 0; i < all.size(); ++i)
    if (all[i] > all[all.size() - 1] * 1e-12) ++rank;
  if (d > rank)
    throw std::runtime_error("kl_expansion: requested d exceeds numerical rank " +
                             std::to_string(rank));

  KlField field;
  field.sigma2 = sigma2;
  field.length_scale = length_scale;
  field.total_energy = w * kernel.trace();
  field.eigenvalues.resize(d);
  field.eigenfunctions.resize(n, d);
  const double inv_sqrt_w = 1.0 / std::sqrt(w);
  for (int i = 0; i < d; ++i) {
    const Eigen::Index src = all.size() - 1 - i;
    field.eigenvalues[i] = all[src];
    Eigen::VectorXd phi = eig.eigenvectors().col(src) * inv_sqrt_w;
    // deterministic sign: largest-magnitude entry positive
    Eigen::Index imax;
    phi.cwiseAbs().maxCoeff(&imax);
    if (phi[imax] < 0.0) phi = -phi;
    field.eigenfunctions.col(i) = phi;
  }
  return field;
}

Eigen::VectorXd interpolate_bilinear(const tfpde::SpatialGrid& from,
                                     const Eigen::VectorXd& values,
                                     const tfpde::SpatialGrid& to) {
  if (values.size() != from.num_nodes())
    throw std::invalid_argument("interpolate_bilinear: value size mismatch");
  Eigen::VectorXd out(to.num_nodes());
  for (int iy = 0; iy < to.ny; ++iy) {
    for (int ix = 0; ix < to.nx; ++ix) {
      const double x = to.x(ix), y = to.y(iy);
      int cx = std::min(static_cast<int>(x / from.hx()), from.nx - 2);
      int cy = std::min(static_cast<int>(y / from.hy()), from.ny - 2);
      const double fx = (x - from.x(cx)) / from.hx();
      const double fy = (y - from.y(cy)) / from.hy();
      out[to.node(ix, iy)] =
          (1 - fx) * (1 - fy) * values[from.node(cx, cy)] +
          fx * (1 - fy) * values[from.node(cx + 1, cy)] +
          (1 - fx) * fy * values[from.node(cx, cy + 1)] +
          fx * fy * values[from.node(cx + 1, cy + 1)];
    }
  }
  return out;
}

}  // namespace rbeki::kl
