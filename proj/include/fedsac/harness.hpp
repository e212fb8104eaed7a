#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedsac/client.hpp"
#include "fedsac/config.hpp"
#include "fedsac/server.hpp"

namespace fedsac {

// Per-round snapshot. per_client_accuracy covers the full cohort (every
// client is evaluated every round); mean_accuracy averages participants
// only, which matters in subsampled rounds.
struct RoundRecord {
  std::size_t round = 0;
  std::vector<double> per_client_accuracy;
  double mean_accuracy = 0.0;
  std::vector<std::size_t> participants;
  std::optional<Matrix> w;
  std::optional<Matrix> s;
  std::optional<Matrix> c;
};

struct RunResult {
  std::vector<RoundRecord> history;
  std::vector<ParamVector> final_models;
};

// Dataset/shard construction shared by all methods (and reusable from
// tests, so expected partition quantities can be recomputed).
LabeledDataset build_dataset(const ExperimentConfig& cfg);
std::vector<ClientShard> build_shards(const ExperimentConfig& cfg, const LabeledDataset& ds);

RunResult run_fedsac(const ExperimentConfig& cfg);
RunResult run_fedavg(const ExperimentConfig& cfg);
RunResult run_local(const ExperimentConfig& cfg);
RunResult run_hetero_arch(const ExperimentConfig& cfg);

// Dispatch on cfg.method.
RunResult run_experiment(const ExperimentConfig& cfg);

enum class SweepAxis { Covariate, Concept };

struct SweepRow {
  double level = 0.0;
  std::uint64_t seed = 0;
  double model_similarity = 0.0;
  double subspace_overlap = 0.0;  // C_01: cos(mean principal angle)
  double peer_weight = 0.0;       // W_01: how much client 0 takes from 1
  double coop_accuracy = 0.0;     // mean accuracy of the aggregated models
  double local_accuracy = 0.0;    // mean accuracy before aggregation
};

// Two-client shift sweep: client 0 at shift zero, client 1 at each level;
// one cooperation round per point with equal relative sizes and a common
// initialization, repeated over num_seeds consecutive seeds.
std::vector<SweepRow> run_complementarity_sweep(const ExperimentConfig& cfg,
                                                const std::vector<double>& levels, SweepAxis axis,
                                                int num_seeds);

}  // namespace fedsac
