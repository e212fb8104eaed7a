#include "fedsac/client.hpp"

#include <algorithm>

#include "fedsac/errors.hpp"
#include "fedsac/rng.hpp"

namespace fedsac {

namespace {

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto row = src.row(idx[i]);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

ClientReport local_round(ClientState& state, const ParamVector& aggregated, double lambda,
                         std::size_t k, std::size_t subsample_m, std::uint64_t round) {
  if (!(aggregated.spec == state.params.spec)) {
    throw DimensionMismatch("local_round: aggregated spec mismatch");
  }
  const std::size_t n_train = state.shard.train.size();
  if (n_train == 0) throw InvalidInput("local_round: empty train split");
  const std::size_t feature_samples = std::min(subsample_m, n_train);
  if (k > std::min(feature_samples, state.params.spec.representation_dim())) {
    throw InvalidInput("local_round: shard too small for subspace rank k");
  }

  state.params = aggregated;
  Rng rng(derive_seed(derive_seed(state.seed, seed_tag::kLocalRound, state.id), round));

  const std::size_t batch = std::min(state.batch_size, n_train);
  std::vector<std::size_t> batch_idx;
  for (int it = 0; it < state.local_iters; ++it) {
    batch_idx = rng.sample_without_replacement(n_train, batch);
    const Matrix x = gather_rows(state.shard.train.features, batch_idx);
    std::vector<int> y(batch);
    for (std::size_t i = 0; i < batch; ++i) y[i] = state.shard.train.labels[batch_idx[i]];
    const LossGrad lg =
        loss_and_grad(state.params, x, y, lambda > 0.0 ? &aggregated : nullptr, lambda);
    state.params = sgd_step(state.params, lg.grad, state.lr);
  }

  const std::vector<std::size_t> feat_idx = rng.sample_without_replacement(n_train, feature_samples);
  const Matrix probe = gather_rows(state.shard.train.features, feat_idx);
  const ForwardResult fwd = forward(state.params, probe);

  ClientReport report;
  report.id = state.id;
  report.params = state.params;
  report.subspace = representative_subspace(fwd.features, k);
  report.num_train = n_train;
  return report;
}

double evaluate(const ClientState& state) {
  const std::size_t n = state.shard.test.size();
  if (n == 0) throw InvalidInput("evaluate: empty test split");
  const ForwardResult fwd = forward(state.params, state.shard.test.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = fwd.logits.row(i);
    std::size_t arg = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[arg]) arg = j;  // strict: ties keep the lower index
    }
    if (static_cast<int>(arg) == state.shard.test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace fedsac
