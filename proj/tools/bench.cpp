// Serial vs OpenMP timing for the data-parallel phases: client training
// within a round, the pairwise server matrices, and the row solves.
// The two paths must agree bit-for-bit; this binary also checks that.

#include <chrono>
#include <cstdio>
#include <numeric>
#include <vector>

#include "fedsac/harness.hpp"
#include "fedsac/rng.hpp"

using namespace fedsac;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig bench_config(bool parallel) {
  ExperimentConfig cfg;
  cfg.method = Method::FedSac;
  cfg.num_clients = 8;
  cfg.rounds = 3;
  cfg.seed = 7;
  cfg.parallel = parallel;
  cfg.data.classes = 10;
  cfg.data.feature_dim = 32;
  cfg.data.samples_per_class = 400;
  cfg.partition.scheme = PartitionScheme::Dirichlet;
  cfg.partition.alpha = 0.5;
  cfg.client.local_iters = 60;
  return cfg;
}

std::vector<ClientReport> make_reports(std::size_t n) {
  const MlpSpec spec{32, {84}, 10};
  std::vector<ClientReport> reports(n);
  for (std::size_t i = 0; i < n; ++i) {
    reports[i].id = i;
    reports[i].params = init_params(spec, derive_seed(123, i));
    Rng rng(derive_seed(321, i));
    Matrix feats(128, 84);
    for (auto& v : feats.data()) v = rng.normal();
    reports[i].subspace = representative_subspace(feats, 3);
    reports[i].num_train = 128;
  }
  return reports;
}

}  // namespace

int main() {
  std::printf("%-28s %10s %10s %8s\n", "phase", "serial[s]", "openmp[s]", "speedup");

  // Full rounds: clients train in parallel, server phases follow.
  double t_serial = 0.0;
  double t_parallel = 0.0;
  RunResult serial_result;
  RunResult parallel_result;
  {
    auto t0 = std::chrono::steady_clock::now();
    serial_result = run_fedsac(bench_config(false));
    t_serial = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    parallel_result = run_fedsac(bench_config(true));
    t_parallel = seconds_since(t0);
  }
  std::printf("%-28s %10.3f %10.3f %7.2fx\n", "fedsac round loop (N=8,T=3)", t_serial, t_parallel,
              t_serial / t_parallel);

  bool identical = serial_result.final_models.size() == parallel_result.final_models.size();
  for (std::size_t i = 0; identical && i < serial_result.final_models.size(); ++i) {
    identical = serial_result.final_models[i].values == parallel_result.final_models[i].values;
  }

  // Server-side phases on a 50-client cohort.
  const auto reports = make_reports(50);
  Matrix s;
  Matrix c;
  {
    auto t0 = std::chrono::steady_clock::now();
    s = similarity_matrix(reports, Exec::Serial);
    c = complementarity_matrix(reports, Exec::Serial);
    t_serial = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const Matrix s2 = similarity_matrix(reports, Exec::Parallel);
    const Matrix c2 = complementarity_matrix(reports, Exec::Parallel);
    t_parallel = seconds_since(t0);
    identical = identical && s == s2 && c == c2;
  }
  std::printf("%-28s %10.3f %10.3f %7.2fx\n", "pairwise matrices (N=50)", t_serial, t_parallel,
              t_serial / t_parallel);

  {
    std::vector<double> p(reports.size(), 1.0 / static_cast<double>(reports.size()));
    auto t0 = std::chrono::steady_clock::now();
    CooperationMatrix w1;
    for (int rep = 0; rep < 200; ++rep) w1 = solve_cooperation(p, s, c, 0.9, 1.4, Exec::Serial);
    t_serial = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    CooperationMatrix w2;
    for (int rep = 0; rep < 200; ++rep) w2 = solve_cooperation(p, s, c, 0.9, 1.4, Exec::Parallel);
    t_parallel = seconds_since(t0);
    identical = identical && w1.w == w2.w;
    std::printf("%-28s %10.3f %10.3f %7.2fx\n", "row solves x200 (N=50)", t_serial, t_parallel,
                t_serial / t_parallel);
  }

  std::printf("serial/openmp results identical: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
