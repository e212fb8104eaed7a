#include "fedsac/harness.hpp"
#include <bit>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsac/errors.hpp"
#include "fedsac/rng.hpp"

namespace fedsac {

namespace {

struct RoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Attach round/client context to whatever a module throws.
template <typename F>
auto with_context(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw RoundError(where + ": " + e.what());
  }
}

// Every client starts from one broadcast initial model (round 0 then
//"aggregates" it by identity). A shared starting point is what makes
// parameter cosines informative across clients.
std::vector<ClientState> make_clients(const ExperimentConfig& cfg, const MlpSpec& spec,
                                      std::vector<ClientShard> shards, std::uint64_t init_salt = 0) {
  const ParamVector init = init_params(spec, derive_seed(cfg.seed, seed_tag::kInit, init_salt));
  std::vector<ClientState> clients(shards.size());
  for (std::size_t i = 0; i < shards.size(); ++i) {
    clients[i].id = i;
    clients[i].shard = std::move(shards[i]);
    clients[i].params = init;
    clients[i].seed = cfg.seed;
    clients[i].local_iters = cfg.client.local_iters;
    clients[i].batch_size = cfg.client.batch_size;
    clients[i].lr = cfg.client.lr;
  }
  return clients;
}

// A shard can be too small to act on (fewer training points than the
// subspace rank, or no test split at all); such clients sit out the whole
// run and score zero. Extreme partitions produce them occasionally.
std::vector<std::size_t> active_clients(const std::vector<ClientState>& clients, std::size_t k) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (clients[i].shard.train.size() >= k && clients[i].shard.test.size() >= 1) {
      active.push_back(i);
    }
  }
  if (active.empty()) throw InvalidInput("no client has enough data to participate");
  return active;
}

std::vector<double> evaluate_all(const std::vector<ClientState>& clients,
                                 const std::vector<std::size_t>& active, Exec exec) {
  std::vector<double> acc(clients.size(), 0.0);
  parallel_for(exec, active.size(), [&](std::size_t t) {
    const std::size_t i = active[t];
    acc[i] = with_context("evaluate client " + std::to_string(i),
                          [&] { return evaluate(clients[i]); });
  });
  return acc;
}

RoundRecord make_record(std::size_t round, const std::vector<ClientState>& clients,
                        const std::vector<std::size_t>& active,
                        const std::vector<std::size_t>& participants, Exec exec) {
  RoundRecord rec;
  rec.round = round;
  rec.participants = participants;
  rec.per_client_accuracy = evaluate_all(clients, active, exec);
  double sum = 0.0;
  for (std::size_t i : participants) sum += rec.per_client_accuracy[i];
  rec.mean_accuracy = participants.empty() ? 0.0 : sum / static_cast<double>(participants.size());
  return rec;
}

// Accuracy of one shared model on every client's test split; this is the
// record a single-global-model method reports.
RoundRecord make_global_record(std::size_t round, const ParamVector& global,
                               const std::vector<ClientState>& clients,
                               const std::vector<std::size_t>& active,
                               const std::vector<std::size_t>& participants, Exec exec) {
  std::vector<ClientState> probes = clients;
  for (auto& p : probes) p.params = global;
  return make_record(round, probes, active, participants, exec);
}

// Relative train sizes over a cohort, renormalized to the simplex.
std::vector<double> cohort_sizes(const std::vector<ClientState>& clients,
                                 const std::vector<std::size_t>& cohort) {
  std::vector<double> p(cohort.size());
  double total = 0.0;
  for (std::size_t t = 0; t < cohort.size(); ++t) {
    p[t] = static_cast<double>(clients[cohort[t]].shard.train.size());
    total += p[t];
  }
  for (auto& v : p) v /= total;
  return p;
}

std::vector<ParamVector> extract_params(const std::vector<ClientState>& clients) {
  std::vector<ParamVector> out;
  out.reserve(clients.size());
  for (const auto& c : clients) out.push_back(c.params);
  return out;
}

}  // namespace

LabeledDataset build_dataset(const ExperimentConfig& cfg) {
  switch (cfg.data.source) {
    case DataSource::Synthetic:
      return generate_synthetic(cfg.seed, cfg.data.classes, cfg.data.feature_dim,
                                cfg.data.samples_per_class, cfg.data.shift);
    case DataSource::Idx:
      return load_idx(cfg.data.images, cfg.data.labels);
    case DataSource::Csv:
      return load_csv(cfg.data.path);
  }
  throw InvalidInput("build_dataset: unknown source");
}

std::vector<ClientShard> build_shards(const ExperimentConfig& cfg, const LabeledDataset& ds) {
  switch (cfg.partition.scheme) {
    case PartitionScheme::Homogeneous:
      return partition_homogeneous(ds, cfg.num_clients, cfg.seed);
    case PartitionScheme::Dirichlet:
      return partition_dirichlet(ds, cfg.num_clients, cfg.partition.alpha, cfg.seed);
    case PartitionScheme::Pathological:
      return partition_pathological(ds, cfg.num_clients, cfg.partition.classes_per_client, cfg.seed);
  }
  throw InvalidInput("build_shards: unknown scheme");
}

RunResult run_fedsac(const ExperimentConfig& cfg) {
  const Exec exec = cfg.parallel ? Exec::Parallel : Exec::Serial;
  const LabeledDataset ds = build_dataset(cfg);
  MlpSpec spec{static_cast<std::size_t>(ds.features.cols()), cfg.hidden_dims,
               static_cast<std::size_t>(ds.num_classes)};
  std::vector<ClientState> clients = make_clients(cfg, spec, build_shards(cfg, ds));
  const std::vector<std::size_t> active = active_clients(clients, cfg.server.k);

  // Round 0 starts from identity aggregation: every client trains from
  // its own initial parameters. An aggregate is consumed in the round
  // right after it was built; a client re-selected later than that has
  // moved on and trains from its own parameters again.
  std::vector<ParamVector> incoming = extract_params(clients);
  std::vector<std::size_t> incoming_round(clients.size(), 0);

  RunResult result;
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    std::vector<std::size_t> cohort;
    if (cfg.server.subsample) {
      for (std::size_t pos :
           subsample_clients(active.size(), *cfg.server.subsample, round, cfg.seed)) {
        cohort.push_back(active[pos]);
      }
      for (std::size_t i : cohort) {
        if (incoming_round[i] != round) {
          incoming[i] = clients[i].params;
          incoming_round[i] = round;
        }
      }
    } else {
      cohort = active;
    }
    const double alpha_t = effective_alpha(round, cfg.rounds, cfg.server);

    std::vector<ClientReport> reports(cohort.size());
    parallel_for(exec, cohort.size(), [&](std::size_t t) {
      const std::size_t i = cohort[t];
      reports[t] = with_context(
          "round " + std::to_string(round) + " client " + std::to_string(i), [&] {
            return local_round(clients[i], incoming[i], cfg.client.lambda, cfg.server.k,
                               cfg.client.subsample_m, round);
          });
    });

    Matrix s;
    Matrix c;
    CooperationMatrix w;
    std::vector<ParamVector> agg;
    if (cohort.size() == 1) {
      w.w = Matrix(1, 1, 1.0);
      s = Matrix(1, 1, 1.0);
      c = Matrix(1, 1, 1.0);
      agg = {reports.front().params};
    } else {
      const std::vector<double> p = cohort_sizes(clients, cohort);
      s = with_context("round " + std::to_string(round) + " similarity",
                       [&] { return similarity_matrix(reports, exec); });
      c = with_context("round " + std::to_string(round) + " complementarity",
                       [&] { return complementarity_matrix(reports, exec); });
      w = with_context("round " + std::to_string(round) + " cooperation solve",
                       [&] { return solve_cooperation(p, s, c, alpha_t, cfg.server.beta, exec); });
      agg = aggregate(w, reports, exec);
    }
    for (std::size_t t = 0; t < cohort.size(); ++t) {
      incoming[cohort[t]] = std::move(agg[t]);
      incoming_round[cohort[t]] = round + 1;
    }

    RoundRecord rec = make_record(round, clients, active, cohort, exec);
    if (cfg.trace_matrices) {
      rec.w = w.w;
      rec.s = s;
      rec.c = c;
    }
    result.history.push_back(std::move(rec));
  }
  result.final_models = extract_params(clients);
  return result;
}

RunResult run_fedavg(const ExperimentConfig& cfg) {
  const Exec exec = cfg.parallel ? Exec::Parallel : Exec::Serial;
  const LabeledDataset ds = build_dataset(cfg);
  MlpSpec spec{static_cast<std::size_t>(ds.features.cols()), cfg.hidden_dims,
               static_cast<std::size_t>(ds.num_classes)};
  std::vector<ClientState> clients = make_clients(cfg, spec, build_shards(cfg, ds));
  const std::vector<std::size_t> active = active_clients(clients, cfg.server.k);

  std::vector<ParamVector> incoming = extract_params(clients);
  RunResult result;
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    parallel_for(exec, active.size(), [&](std::size_t t) {
      const std::size_t i = active[t];
      with_context("round " + std::to_string(round) + " client " + std::to_string(i), [&] {
        // Plain empirical risk: no anchor term in the FedAvg baseline.
        return local_round(clients[i], incoming[i], 0.0, cfg.server.k, cfg.client.subsample_m,
                           round);
      });
    });

    // Single global model, weighted by relative dataset sizes. The
    // round's accuracy is that model's accuracy on each client's test.
    const std::vector<double> p = cohort_sizes(clients, active);
    ParamVector global;
    global.spec = spec;
    global.values.assign(spec.param_count(), 0.0);
    for (std::size_t t = 0; t < active.size(); ++t) {
      const auto& src = clients[active[t]].params.values;
      for (std::size_t j = 0; j < global.values.size(); ++j) global.values[j] += p[t] * src[j];
    }
    for (std::size_t i : active) incoming[i] = global;

    result.history.push_back(make_global_record(round, global, clients, active, active, exec));
  }
  result.final_models = extract_params(clients);
  return result;
}

RunResult run_local(const ExperimentConfig& cfg) {
  const Exec exec = cfg.parallel ? Exec::Parallel : Exec::Serial;
  const LabeledDataset ds = build_dataset(cfg);
  MlpSpec spec{static_cast<std::size_t>(ds.features.cols()), cfg.hidden_dims,
               static_cast<std::size_t>(ds.num_classes)};
  std::vector<ClientState> clients = make_clients(cfg, spec, build_shards(cfg, ds));
  const std::vector<std::size_t> active = active_clients(clients, cfg.server.k);

  RunResult result;
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    parallel_for(exec, active.size(), [&](std::size_t t) {
      const std::size_t i = active[t];
      with_context("round " + std::to_string(round) + " client " + std::to_string(i), [&] {
        const ParamVector own = clients[i].params;
        return local_round(clients[i], own, 0.0, cfg.server.k, cfg.client.subsample_m, round);
      });
    });
    result.history.push_back(make_record(round, clients, active, active, exec));
  }
  result.final_models = extract_params(clients);
  return result;
}

namespace {

std::span<const double> head_span(const ParamVector& p) {
  const std::size_t off = p.spec.head_offset();
  return {p.values.data() + off, p.values.size() - off};
}

// Head-only similarity across all clients; architectures may differ in
// the body, the head shape is shared.
Matrix head_similarity(const std::vector<ClientReport>& reports, Exec exec) {
  const std::size_t n = reports.size();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) s(i, i) = 1.0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  parallel_for(exec, pairs.size(), [&](std::size_t t) {
    const auto [i, j] = pairs[t];
    const double v = cosine(head_span(reports[i].params), head_span(reports[j].params));
    s(i, j) = v;
    s(j, i) = v;
  });
  return s;
}

}  // namespace

RunResult run_hetero_arch(const ExperimentConfig& cfg) {
  const Exec exec = cfg.parallel ? Exec::Parallel : Exec::Serial;
  const LabeledDataset ds = build_dataset(cfg);
  const std::size_t n = cfg.num_clients;
  const std::size_t split = cfg.hetero.group_a_count;
  if (split == 0 || split >= n) throw InvalidInput("run_hetero_arch: invalid group split");
  if (cfg.hetero.group_a_hidden.back() != cfg.hetero.group_b_hidden.back()) {
    throw InvalidInput("run_hetero_arch: head-shape mismatch between groups");
  }

  const MlpSpec spec_a{static_cast<std::size_t>(ds.features.cols()), cfg.hetero.group_a_hidden,
                       static_cast<std::size_t>(ds.num_classes)};
  const MlpSpec spec_b{static_cast<std::size_t>(ds.features.cols()), cfg.hetero.group_b_hidden,
                       static_cast<std::size_t>(ds.num_classes)};

  std::vector<ClientShard> shards = build_shards(cfg, ds);
  const ParamVector init_a = init_params(spec_a, derive_seed(cfg.seed, seed_tag::kInit, 0));
  const ParamVector init_b = init_params(spec_b, derive_seed(cfg.seed, seed_tag::kInit, 1));
  std::vector<ClientState> clients(n);
  for (std::size_t i = 0; i < n; ++i) {
    clients[i].id = i;
    clients[i].shard = std::move(shards[i]);
    clients[i].params = i < split ? init_a : init_b;
    clients[i].seed = cfg.seed;
    clients[i].local_iters = cfg.client.local_iters;
    clients[i].batch_size = cfg.client.batch_size;
    clients[i].lr = cfg.client.lr;
  }
  const std::vector<std::size_t> active = active_clients(clients, cfg.server.k);

  std::vector<std::vector<std::size_t>> groups(2);
  for (std::size_t i : active) groups[i < split ? 0 : 1].push_back(i);

  std::vector<ParamVector> incoming = extract_params(clients);
  RunResult result;
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    const double alpha_t = effective_alpha(round, cfg.rounds, cfg.server);

    std::vector<ClientReport> reports(n);
    parallel_for(exec, active.size(), [&](std::size_t t) {
      const std::size_t i = active[t];
      reports[i] = with_context(
          "round " + std::to_string(round) + " client " + std::to_string(i), [&] {
            return local_round(clients[i], incoming[i], cfg.client.lambda, cfg.server.k,
                               cfg.client.subsample_m, round);
          });
    });

    // Within-group: the full machinery on complete parameter vectors.
    std::vector<ParamVector> agg(n);
    for (const auto& group : groups) {
      std::vector<ClientReport> sub;
      for (std::size_t i : group) sub.push_back(reports[i]);
      if (group.size() == 1) {
        agg[group.front()] = sub.front().params;
        continue;
      }
      const std::vector<double> p = cohort_sizes(clients, group);
      const Matrix s = similarity_matrix(sub, exec);
      const Matrix c = complementarity_matrix(sub, exec);
      const CooperationMatrix w = solve_cooperation(p, s, c, alpha_t, cfg.server.beta, exec);
      std::vector<ParamVector> group_agg = aggregate(w, sub, exec);
      for (std::size_t t = 0; t < group.size(); ++t) agg[group[t]] = std::move(group_agg[t]);
    }

    // Across everyone active: heads only, similarity-only weights (alpha
    // = 0 regardless of the configured complementarity weight).
    std::vector<ClientReport> active_reports;
    for (std::size_t i : active) active_reports.push_back(reports[i]);
    const Matrix s_head = head_similarity(active_reports, exec);
    const Matrix c_zero(active.size(), active.size());
    const std::vector<double> p_all = cohort_sizes(clients, active);
    const CooperationMatrix w_head =
        solve_cooperation(p_all, s_head, c_zero, 0.0, cfg.server.beta, exec);
    parallel_for(exec, active.size(), [&](std::size_t t) {
      const std::size_t i = active[t];
      const std::size_t off = agg[i].spec.head_offset();
      const std::size_t head_len = agg[i].values.size() - off;
      for (std::size_t u = 0; u < head_len; ++u) {
        double v = 0.0;
        for (std::size_t tj = 0; tj < active.size(); ++tj) {
          const ParamVector& peer = reports[active[tj]].params;
          v += w_head.w(t, tj) * peer.values[peer.spec.head_offset() + u];
        }
        agg[i].values[off + u] = v;
      }
    });

    for (std::size_t i : active) incoming[i] = std::move(agg[i]);
    RoundRecord rec = make_record(round, clients, active, active, exec);
    if (cfg.trace_matrices) {
      rec.w = w_head.w;
      rec.s = s_head;
    }
    result.history.push_back(std::move(rec));
  }
  result.final_models = extract_params(clients);
  return result;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.method) {
    case Method::FedSac: return run_fedsac(cfg);
    case Method::FedAvg: return run_fedavg(cfg);
    case Method::Local: return run_local(cfg);
    case Method::Hetero: return run_hetero_arch(cfg);
  }
  throw InvalidInput("run_experiment: unknown method");
}

std::vector<SweepRow> run_complementarity_sweep(const ExperimentConfig& cfg,
                                                const std::vector<double>& levels, SweepAxis axis,
                                                int num_seeds) {
  if (cfg.num_clients != 2) throw InvalidInput("sweep requires exactly 2 clients");
  if (cfg.data.source != DataSource::Synthetic) throw InvalidInput("sweep requires synthetic data");
  if (levels.empty() || levels.front() != 0.0 || !std::is_sorted(levels.begin(), levels.end())) {
    throw InvalidInput("sweep levels must be ascending and start at 0");
  }
  if (num_seeds < 1) throw InvalidInput("sweep needs at least one seed");

  const Exec exec = cfg.parallel ? Exec::Parallel : Exec::Serial;
  std::vector<SweepRow> rows;
  for (int rep = 0; rep < num_seeds; ++rep) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(rep);
    for (const double level : levels) {
      ShiftSpec base;
      ShiftSpec shifted;
      if (axis == SweepAxis::Covariate) {
        shifted.covariate_level = level;
      } else {
        shifted.concept_level = level;
      }
      // Level 0 means zero complementarity: the two clients hold the same
      // dataset, so cooperation has nothing to offer. Any positive level
      // gives client 1 an independent draw from the shifted distribution,
      // so complementarity (new samples at growing distribution distance)
      // rises with the level and nothing else changes.
      const std::uint64_t data_seed = derive_seed(seed, 0xA);
      const std::uint64_t partner_seed =
          level == 0.0 ? data_seed : derive_seed(data_seed, std::bit_cast<std::uint64_t>(level));
      const LabeledDataset ds0 = generate_synthetic(data_seed, cfg.data.classes,
                                                    cfg.data.feature_dim,
                                                    cfg.data.samples_per_class, base);
      const LabeledDataset ds1 = generate_synthetic(partner_seed, cfg.data.classes,
                                                    cfg.data.feature_dim,
                                                    cfg.data.samples_per_class, shifted);
      const MlpSpec spec{static_cast<std::size_t>(ds0.features.cols()), cfg.hidden_dims,
                         static_cast<std::size_t>(ds0.num_classes)};

      const ParamVector theta0 = init_params(spec, derive_seed(seed, seed_tag::kInit));
      std::vector<ClientState> clients(2);
      for (std::size_t i = 0; i < 2; ++i) {
        clients[i].id = i;
        clients[i].shard = make_shard(i == 0 ? ds0 : ds1, 0, 0.5, seed);
        clients[i].shard.client_id = i;
        clients[i].params = theta0;
        clients[i].seed = seed;
        clients[i].local_iters = cfg.client.local_iters;
        clients[i].batch_size = cfg.client.batch_size;
        clients[i].lr = cfg.client.lr;
      }

      std::vector<ClientReport> reports(2);
      parallel_for(exec, 2, [&](std::size_t i) {
        reports[i] = local_round(clients[i], theta0, cfg.client.lambda, cfg.server.k,
                                 cfg.client.subsample_m, 0);
      });

      SweepRow row;
      row.level = level;
      row.seed = seed;
      {
        const auto acc = evaluate_all(clients, {0, 1}, exec);
        row.local_accuracy = (acc[0] + acc[1]) / 2.0;
      }
      const std::vector<double> p{0.5, 0.5};
      const Matrix s = similarity_matrix(reports, exec);
      const Matrix c = complementarity_matrix(reports, exec);
      row.model_similarity = s(0, 1);
      row.subspace_overlap = c(0, 1);
      const CooperationMatrix w =
          solve_cooperation(p, s, c, cfg.server.alpha, cfg.server.beta, exec);
      row.peer_weight = w.w(0, 1);
      std::vector<ParamVector> agg = aggregate(w, reports, exec);
      for (std::size_t i = 0; i < 2; ++i) clients[i].params = std::move(agg[i]);
      {
        const auto acc = evaluate_all(clients, {0, 1}, exec);
        row.coop_accuracy = (acc[0] + acc[1]) / 2.0;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace fedsac
