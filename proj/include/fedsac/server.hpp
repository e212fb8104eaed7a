#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedsac/client.hpp"
#include "fedsac/matrix.hpp"
#include "fedsac/parallel.hpp"

namespace fedsac {

// Adjacency matrix of the cooperation network: row i holds the mixing
// weights for client i's personalized aggregate. Row-stochastic.
struct CooperationMatrix {
  Matrix w;
};

struct ServerConfig {
  double alpha = 0.9;  // complementarity weight (penalizes subspace overlap)
  double beta = 1.4;   // similarity weight (rewards parameter cosine)
  std::size_t k = 3;   // subspace rank
  double anneal_fraction = 0.7;
  std::optional<std::size_t> subsample;
};

// S_ij = cos(theta_i, theta_j); symmetric, unit diagonal.
Matrix similarity_matrix(std::span<const ClientReport> reports, Exec exec = Exec::Serial);

// C_ij = cos(mean principal angle between the clients' subspaces);
// symmetric, unit diagonal. High values mean overlapping feature
// distributions, which the row objective penalizes.
Matrix complementarity_matrix(std::span<const ClientReport> reports, Exec exec = Exec::Serial);

// Closed-form minimizer of row i of the cooperation objective
//   sum_j (W_ij - p_j)^2 + alpha C_ij W_ij - beta S_ij W_ij
// over the probability simplex: complete the square and project.
std::vector<double> solve_row(std::size_t i, std::span<const double> p, const Matrix& s,
                              const Matrix& c, double alpha, double beta);

// All rows; rows are independent, so they may run on parallel workers.
CooperationMatrix solve_cooperation(std::span<const double> p, const Matrix& s, const Matrix& c,
                                    double alpha, double beta, Exec exec = Exec::Serial);

// Personalized aggregates: theta~_i = sum_j W_ij theta_j.
std::vector<ParamVector> aggregate(const CooperationMatrix& w, std::span<const ClientReport> reports,
                                   Exec exec = Exec::Serial);

// Complementarity is switched off after the first anneal_fraction of the
// schedule so cooperation settles toward similarity only.
double effective_alpha(std::size_t round, std::size_t total_rounds, const ServerConfig& cfg);

// Uniform without-replacement cohort for the round, seeded by (seed, round).
std::vector<std::size_t> subsample_clients(std::size_t n, std::size_t k_sub, std::uint64_t round,
                                           std::uint64_t seed);

}  // namespace fedsac
