// Independent oracles used by the tests: a brute-force simplex-mesh
// minimizer, a two-sided Jacobi eigensolver for symmetric matrices, and
// central finite differences. None of these share code with the library
// paths they check.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "fedsac/matrix.hpp"
#include "fedsac/rng.hpp"

namespace oracle {

// Enumerates every point of the simplex mesh {w_i = k_i/m, sum k_i = m}
// and returns the minimizer of f. Optional per-coordinate bounds (in grid
// units) restrict the search box for coarse-to-fine refinement.
inline std::vector<double> mesh_minimize(
    std::size_t n, std::size_t m, const std::function<double(const std::vector<double>&)>& f,
    const std::vector<std::pair<std::size_t, std::size_t>>* bounds = nullptr) {
  std::vector<std::size_t> units(n, 0);
  std::vector<double> point(n, 0.0);
  std::vector<double> best;
  double best_value = std::numeric_limits<double>::infinity();

  const double h = 1.0 / static_cast<double>(m);
  std::function<void(std::size_t, std::size_t)> recurse = [&](std::size_t coord,
                                                              std::size_t remaining) {
    if (coord + 1 == n) {
      if (bounds != nullptr &&
          (remaining < (*bounds)[coord].first || remaining > (*bounds)[coord].second)) {
        return;
      }
      units[coord] = remaining;
      for (std::size_t i = 0; i < n; ++i) point[i] = static_cast<double>(units[i]) * h;
      const double v = f(point);
      if (v < best_value) {
        best_value = v;
        best = point;
      }
      return;
    }
    std::size_t lo = 0;
    std::size_t hi = remaining;
    if (bounds != nullptr) {
      lo = std::max(lo, (*bounds)[coord].first);
      hi = std::min(hi, (*bounds)[coord].second);
    }
    for (std::size_t k = lo; k <= hi; ++k) {
      units[coord] = k;
      recurse(coord + 1, remaining - k);
    }
  };
  recurse(0, m);
  return best;
}

// Full mesh at step 1/m for n <= 3; for n = 4 a coarse pass at 1/100
// followed by a fine pass restricted to a generous box around the coarse
// argmin. Valid for convex objectives (all uses here are strictly convex
// quadratics), where the minimizer of the fine mesh lies near the coarse
// one.
inline std::vector<double> mesh_minimize_fine(
    std::size_t n, std::size_t m, const std::function<double(const std::vector<double>&)>& f) {
  if (n <= 3) return mesh_minimize(n, m, f);

  const std::size_t coarse_m = 100;
  const std::vector<double> coarse = mesh_minimize(n, coarse_m, f);
  const std::size_t ratio = m / coarse_m;
  const std::size_t margin = 4 * ratio;  // 4 coarse cells on each side
  std::vector<std::pair<std::size_t, std::size_t>> bounds(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto center = static_cast<std::size_t>(std::llround(coarse[i] * static_cast<double>(m)));
    bounds[i].first = center > margin ? center - margin : 0;
    bounds[i].second = std::min(center + margin, m);
  }
  return mesh_minimize(n, m, f, &bounds);
}

// Two-sided Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues descending with matching eigenvector columns.
inline void symmetric_eigen(const fedsac::Matrix& a_in, std::vector<double>& eigenvalues,
                            fedsac::Matrix& eigenvectors) {
  const std::size_t n = a_in.rows();
  fedsac::Matrix a = a_in;
  fedsac::Matrix v = fedsac::Matrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-26) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t =
            (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p);
          const double aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i);
          const double aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  eigenvalues.resize(n);
  eigenvectors = fedsac::Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) eigenvectors(i, j) = v(i, order[j]);
  }
}

inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double step) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double save = x[i];
    x[i] = save + step;
    const double up = f(x);
    x[i] = save - step;
    const double down = f(x);
    x[i] = save;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

inline fedsac::Matrix random_matrix(std::size_t rows, std::size_t cols, fedsac::Rng& rng) {
  fedsac::Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.normal();
  return m;
}

// Random orthogonal matrix via Gram-Schmidt on a Gaussian sample.
inline fedsac::Matrix random_orthogonal(std::size_t n, fedsac::Rng& rng) {
  fedsac::Matrix q = random_matrix(n, n, rng);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t prev = 0; prev < j; ++prev) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += q(i, j) * q(i, prev);
      for (std::size_t i = 0; i < n; ++i) q(i, j) -= d * q(i, prev);
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
  }
  return q;
}

inline double frobenius_norm(const fedsac::Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace oracle
