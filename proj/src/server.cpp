#include "fedsac/server.hpp"

#include <cmath>
#include <numeric>

#include "fedsac/errors.hpp"
#include "fedsac/numerics.hpp"
#include "fedsac/rng.hpp"

namespace fedsac {

namespace {

void require_reports(std::span<const ClientReport> reports) {
  if (reports.size() < 2) throw InvalidInput("need at least two reports");
  for (const auto& r : reports) {
    if (!(r.params.spec == reports.front().params.spec)) {
      throw DimensionMismatch("report specs differ");
    }
  }
}

// Upper-triangle pairs (i < j) flattened for the parallel loop.
std::vector<std::pair<std::size_t, std::size_t>> upper_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

}  // namespace

Matrix similarity_matrix(std::span<const ClientReport> reports, Exec exec) {
  require_reports(reports);
  const std::size_t n = reports.size();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) s(i, i) = 1.0;
  const auto pairs = upper_pairs(n);
  parallel_for(exec, pairs.size(), [&](std::size_t t) {
    const auto [i, j] = pairs[t];
    const double v = cosine(reports[i].params.values, reports[j].params.values);
    s(i, j) = v;
    s(j, i) = v;
  });
  return s;
}

Matrix complementarity_matrix(std::span<const ClientReport> reports, Exec exec) {
  if (reports.size() < 2) throw InvalidInput("need at least two reports");
  const std::size_t n = reports.size();
  for (const auto& r : reports) {
    if (r.subspace.ambient_dim != reports.front().subspace.ambient_dim ||
        r.subspace.k != reports.front().subspace.k) {
      throw DimensionMismatch("subspace shapes differ");
    }
  }
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i) c(i, i) = 1.0;
  const auto pairs = upper_pairs(n);
  parallel_for(exec, pairs.size(), [&](std::size_t t) {
    const auto [i, j] = pairs[t];
    const auto angles = principal_angles(reports[i].subspace, reports[j].subspace);
    const double mean =
        std::accumulate(angles.begin(), angles.end(), 0.0) / static_cast<double>(angles.size());
    const double v = std::cos(mean);
    c(i, j) = v;
    c(j, i) = v;
  });
  return c;
}

std::vector<double> solve_row(std::size_t i, std::span<const double> p, const Matrix& s,
                              const Matrix& c, double alpha, double beta) {
  const std::size_t n = p.size();
  if (s.rows() != n || s.cols() != n || c.rows() != n || c.cols() != n || i >= n) {
    throw DimensionMismatch("solve_row: shape mismatch");
  }
  double sum = 0.0;
  for (double v : p) {
    if (v < -1e-12) throw InvalidInput("solve_row: p has negative entries");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("solve_row: p not on the simplex");

  std::vector<double> target(n);
  for (std::size_t j = 0; j < n; ++j) {
    target[j] = p[j] - (alpha * c(i, j) - beta * s(i, j)) / 2.0;
  }
  return project_simplex(target);
}

CooperationMatrix solve_cooperation(std::span<const double> p, const Matrix& s, const Matrix& c,
                                    double alpha, double beta, Exec exec) {
  const std::size_t n = p.size();
  CooperationMatrix w{Matrix(n, n)};
  parallel_for(exec, n, [&](std::size_t i) {
    const auto row = solve_row(i, p, s, c, alpha, beta);
    std::copy(row.begin(), row.end(), w.w.row(i).begin());
  });
  return w;
}

std::vector<ParamVector> aggregate(const CooperationMatrix& w, std::span<const ClientReport> reports,
                                   Exec exec) {
  const std::size_t n = reports.size();
  if (w.w.rows() != n || w.w.cols() != n) throw DimensionMismatch("aggregate: W shape mismatch");
  for (const auto& r : reports) {
    if (!(r.params.spec == reports.front().params.spec)) {
      throw DimensionMismatch("aggregate: report specs differ");
    }
  }
  std::vector<ParamVector> out(n);
  parallel_for(exec, n, [&](std::size_t i) {
    out[i].spec = reports.front().params.spec;
    out[i].values.assign(reports.front().params.values.size(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double wij = w.w(i, j);
      if (wij == 0.0) continue;
      const auto& src = reports[j].params.values;
      for (std::size_t t = 0; t < src.size(); ++t) out[i].values[t] += wij * src[t];
    }
  });
  return out;
}

double effective_alpha(std::size_t round, std::size_t total_rounds, const ServerConfig& cfg) {
  if (round >= total_rounds) throw InvalidInput("effective_alpha: round out of range");
  const double cutoff = cfg.anneal_fraction * static_cast<double>(total_rounds);
  return static_cast<double>(round) < cutoff ? cfg.alpha : 0.0;
}

std::vector<std::size_t> subsample_clients(std::size_t n, std::size_t k_sub, std::uint64_t round,
                                           std::uint64_t seed) {
  if (k_sub < 2) throw InvalidInput("subsample_clients: need k >= 2");
  if (k_sub >= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  Rng rng(derive_seed(derive_seed(seed, seed_tag::kSubsample), round));
  return rng.sample_without_replacement(n, k_sub);
}

}  // namespace fedsac
