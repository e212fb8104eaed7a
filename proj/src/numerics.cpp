#include "fedsac/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsac/errors.hpp"

namespace fedsac {

namespace {

// One-sided Jacobi on the columns of g (m x n, m >= n is not required but
// convergence is fastest for tall matrices). Rotations orthogonalize
// column pairs; v accumulates them, so on exit g = g_in * v and the
// columns of g are mutually orthogonal.
void jacobi_orthogonalize(Matrix& g, Matrix& v) {
  const std::size_t m = g.rows();
  const std::size_t n = g.cols();
  v = Matrix::identity(n);
  if (n < 2) return;

  constexpr double kTol = 1e-15;
  constexpr int kMaxSweeps = 60;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0;
        double aqq = 0.0;
        double apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double gp = g(i, p);
          const double gq = g(i, q);
          app += gp * gp;
          aqq += gq * gq;
          apq += gp * gq;
        }
        if (std::abs(apq) <= kTol * std::sqrt(app * aqq)) continue;
        rotated = true;

        // Jacobi rotation that annihilates the (p, q) Gram entry.
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double gp = g(i, p);
          const double gq = g(i, q);
          g(i, p) = c * gp - s * gq;
          g(i, q) = s * gp + c * gq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
}

// Fill the columns of u whose singular value vanished with unit vectors
// orthogonal to the existing ones, so u stays column-orthonormal.
void complete_orthonormal_columns(Matrix& u, const std::vector<bool>& missing) {
  const std::size_t m = u.rows();
  const std::size_t r = u.cols();
  for (std::size_t j = 0; j < r; ++j) {
    if (!missing[j]) continue;
    for (std::size_t cand = 0; cand < m; ++cand) {
      std::vector<double> e(m, 0.0);
      e[cand] = 1.0;
      for (std::size_t l = 0; l < r; ++l) {
        if (missing[l] && l >= j) continue;  // only project against filled columns
        double d = 0.0;
        for (std::size_t i = 0; i < m; ++i) d += e[i] * u(i, l);
        for (std::size_t i = 0; i < m; ++i) e[i] -= d * u(i, l);
      }
      double nrm = 0.0;
      for (double x : e) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 1e-8) {
        for (std::size_t i = 0; i < m; ++i) u(i, j) = e[i] / nrm;
        break;
      }
    }
  }
}

SvdResult thin_svd_tall(const Matrix& x) {
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();  // n <= m
  Matrix g = x;
  Matrix v;
  jacobi_orthogonalize(g, v);

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += g(i, j) * g(i, j);
    sigma[j] = std::sqrt(s);
  }

  // Stable descending order; equal singular values keep column order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  const double scale = sigma.empty() ? 0.0 : sigma[order[0]];
  SvdResult out;
  out.singular_values.resize(n);
  out.u = Matrix(m, n);
  out.v = Matrix(n, n);
  std::vector<bool> zero_col(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.singular_values[j] = sigma[src];
    const bool degenerate = sigma[src] <= scale * 1e-300 || sigma[src] == 0.0;
    zero_col[j] = degenerate;
    if (!degenerate) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, j) = g(i, src) / sigma[src];
    }
    for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, src);
  }
  complete_orthonormal_columns(out.u, zero_col);
  return out;
}

}  // namespace

SvdResult thin_svd(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw InvalidInput("thin_svd: empty matrix");
  if (!x.all_finite()) throw InvalidInput("thin_svd: non-finite entries");

  if (x.rows() >= x.cols()) return thin_svd_tall(x);

  // Wide case: decompose the transpose and swap the factors.
  SvdResult t = thin_svd_tall(transpose(x));
  SvdResult out;
  out.u = std::move(t.v);
  out.v = std::move(t.u);
  out.singular_values = std::move(t.singular_values);
  return out;
}

Subspace representative_subspace(const Matrix& x, std::size_t k) {
  const std::size_t r = std::min(x.rows(), x.cols());
  if (k == 0 || k > r) throw InvalidInput("representative_subspace: k must be in [1, min(m, d)]");

  const SvdResult svd = thin_svd(x);
  Subspace sub;
  sub.ambient_dim = x.cols();
  sub.k = k;
  sub.basis = Matrix(x.cols(), k);
  for (std::size_t j = 0; j < k; ++j) {
    // Deterministic sign: largest-magnitude entry non-negative.
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < x.cols(); ++i) {
      const double a = std::abs(svd.v(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    const double flip = svd.v(arg, j) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < x.cols(); ++i) sub.basis(i, j) = flip * svd.v(i, j);
  }
  return sub;
}

std::vector<double> principal_angles(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim != b.ambient_dim || a.k != b.k) {
    throw DimensionMismatch("principal_angles: subspaces not comparable");
  }
  const Matrix product = matmul_at_b(a.basis, b.basis);  // k x k
  const SvdResult svd = thin_svd(product);
  std::vector<double> angles(a.k);
  for (std::size_t l = 0; l < a.k; ++l) {
    angles[l] = std::acos(std::clamp(svd.singular_values[l], 0.0, 1.0));
  }
  // Singular values descend, so the angles already ascend.
  return angles;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("cosine: length mismatch");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) throw DegenerateVector("cosine: zero vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::vector<double> project_simplex(std::span<const double> c) {
  if (c.empty()) throw InvalidInput("project_simplex: empty vector");
  for (double x : c) {
    if (!std::isfinite(x)) throw InvalidInput("project_simplex: non-finite entries");
  }
  std::vector<double> u(c.begin(), c.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  std::size_t rho = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) {
      rho = j + 1;
      theta = candidate;
    }
  }
  (void)rho;
  std::vector<double> w(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) w[i] = std::max(c[i] - theta, 0.0);
  return w;
}

}  // namespace fedsac
