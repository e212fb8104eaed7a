#pragma once

#include <cstdint>

#include "fedsac/data.hpp"
#include "fedsac/model.hpp"
#include "fedsac/numerics.hpp"

namespace fedsac {

// One simulated client. Owned by exactly one worker per round; all
// randomness comes from seeds derived per (seed, client, round), so
// parallel scheduling cannot change results.
struct ClientState {
  std::size_t id = 0;
  ClientShard shard;
  ParamVector params;
  std::uint64_t seed = 0;  // run-level seed; per-round streams are derived
  int local_iters = 100;
  std::size_t batch_size = 64;
  double lr = 0.01;
};

// What a client sends back: final parameters and its representative
// subspace. No raw data leaves the client.
struct ClientReport {
  std::size_t id = 0;
  ParamVector params;
  Subspace subspace;
  std::size_t num_train = 0;
};

// Adopt the aggregated model, run local_iters minibatch SGD steps with the
// aggregated model as the cosine anchor, then extract the top-k feature
// directions from forward passes over at most subsample_m training points.
ClientReport local_round(ClientState& state, const ParamVector& aggregated, double lambda,
                         std::size_t k, std::size_t subsample_m, std::uint64_t round);

// Argmax-logit accuracy on the client's own test split; ties go to the
// lowest class index.
double evaluate(const ClientState& state);

}  // namespace fedsac
