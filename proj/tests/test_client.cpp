#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fedsac/client.hpp"
#include "fedsac/errors.hpp"
#include "fedsac/rng.hpp"

using namespace fedsac;

namespace {

ClientState make_state(const LabeledDataset& ds, std::uint64_t seed, int iters = 100,
                       std::vector<std::size_t> hidden = {16}) {
  const MlpSpec spec{ds.features.cols(), std::move(hidden), static_cast<std::size_t>(ds.num_classes)};
  ClientState state;
  state.id = 0;
  state.shard = make_shard(ds, 0, 1.0, seed);
  state.params = init_params(spec, derive_seed(seed, seed_tag::kInit, 0));
  state.seed = seed;
  state.local_iters = iters;
  state.batch_size = 32;
  state.lr = 0.05;
  return state;
}

}  // namespace

TEST_CASE("local_round with zero iterations returns the aggregated params") {
  const LabeledDataset ds = generate_synthetic(1, 3, 6, 40, ShiftSpec{});
  ClientState state = make_state(ds, 4, /*iters=*/0);
  const ParamVector aggregated = init_params(state.params.spec, 999);

  const ClientReport report = local_round(state, aggregated, 0.01, 3, 64, 0);
  CHECK(report.params.values == aggregated.values);
  CHECK(report.id == 0);
  CHECK(report.num_train == state.shard.train.size());
  CHECK(report.subspace.k == 3);
  CHECK(report.subspace.ambient_dim == 16);
}

TEST_CASE("local_round reaches high accuracy on separable data") {
  // Two well-separated Gaussians: effectively a logistic-regression task.
  const LabeledDataset ds = generate_synthetic(2, 2, 4, 200, ShiftSpec{});
  ClientState state = make_state(ds, 8, /*iters=*/300);
  local_round(state, state.params, 0.0, 2, 64, 0);
  CHECK(evaluate(state) >= 0.95);
}

TEST_CASE("local_round is bit-identical across repeated runs") {
  const LabeledDataset ds = generate_synthetic(3, 3, 6, 60, ShiftSpec{});
  ClientState a = make_state(ds, 10);
  ClientState b = make_state(ds, 10);
  const ParamVector start = a.params;

  const ClientReport ra = local_round(a, start, 0.01, 3, 64, 2);
  const ClientReport rb = local_round(b, start, 0.01, 3, 64, 2);
  CHECK(ra.params.values == rb.params.values);
  CHECK(ra.subspace.basis == rb.subspace.basis);

  // A different round number draws different batches.
  ClientState c = make_state(ds, 10);
  const ClientReport rc = local_round(c, start, 0.01, 3, 64, 3);
  CHECK(ra.params.values != rc.params.values);
}

TEST_CASE("anchor term pulls parameters toward the aggregate") {
  const LabeledDataset ds = generate_synthetic(12, 3, 6, 80, ShiftSpec{});
  for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
    ClientState tight = make_state(ds, seed, 150);
    ClientState loose = make_state(ds, seed, 150);
    const ParamVector anchor = tight.params;

    local_round(tight, anchor, 10.0, 3, 64, 0);
    local_round(loose, anchor, 0.0, 3, 64, 0);

    const double cos_tight = cosine(tight.params.values, anchor.values);
    const double cos_loose = cosine(loose.params.values, anchor.values);
    CHECK(cos_tight >= cos_loose);
  }
}

TEST_CASE("local_round validates spec and subspace rank") {
  const LabeledDataset ds = generate_synthetic(5, 3, 6, 10, ShiftSpec{});
  ClientState state = make_state(ds, 5);

  const MlpSpec other{6, {8}, 3};
  CHECK_THROWS_AS(local_round(state, init_params(other, 1), 0.0, 3, 64, 0), DimensionMismatch);

  // subsample_m smaller than k makes the subspace infeasible.
  CHECK_THROWS_AS(local_round(state, state.params, 0.0, 3, 2, 0), InvalidInput);
}

TEST_CASE("evaluate random parameters on balanced classes is near chance") {
  const int classes = 4;
  const LabeledDataset ds = generate_synthetic(30, classes, 6, 500, ShiftSpec{});
  ClientState state = make_state(ds, 31);
  // Fresh random init, never trained; test split is ~400 samples.
  const double acc = evaluate(state);
  const double n = static_cast<double>(state.shard.test.size());
  const double p = 1.0 / classes;
  const double bound = 5.0 * std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(acc - p) <= bound);

  CHECK(evaluate(state) == acc);  // deterministic
}

TEST_CASE("evaluate on a single-sample test split is zero or one") {
  LabeledDataset tiny = generate_synthetic(2, 2, 4, 3, ShiftSpec{});
  ClientState state = make_state(tiny, 40);
  REQUIRE(state.shard.test.size() >= 1);
  const double acc = evaluate(state);
  const double scaled = acc * static_cast<double>(state.shard.test.size());
  CHECK(scaled == doctest::Approx(std::round(scaled)));

  state.shard.test = LabeledDataset{Matrix(0, 4), {}, 2};
  CHECK_THROWS_AS(evaluate(state), InvalidInput);
}
