#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsac/data.hpp"
#include "fedsac/server.hpp"

#include "json.hpp"

namespace fedsac {

enum class Method { FedSac, FedAvg, Local, Hetero };
enum class DataSource { Synthetic, Idx, Csv };
enum class PartitionScheme { Homogeneous, Dirichlet, Pathological };

struct DataConfig {
  DataSource source = DataSource::Synthetic;
  int classes = 10;
  int feature_dim = 32;
  int samples_per_class = 1000;
  ShiftSpec shift;
  std::string images;  // idx
  std::string labels;  // idx
  std::string path;    // csv
};

struct PartitionConfig {
  PartitionScheme scheme = PartitionScheme::Homogeneous;
  double alpha = 0.5;          // dirichlet
  int classes_per_client = 2;  // pathological
};

struct ClientConfig {
  double lr = 0.01;
  int local_iters = 100;
  std::size_t batch_size = 64;
  double lambda = 0.01;
  std::size_t subsample_m = 256;
};

// Heterogeneous-architecture mode: two groups with different hidden
// stacks that share the representation width and the head shape.
struct HeteroConfig {
  std::vector<std::size_t> group_a_hidden{84};
  std::vector<std::size_t> group_b_hidden{84};
  std::size_t group_a_count = 0;
};

struct ExperimentConfig {
  Method method = Method::FedSac;
  std::size_t num_clients = 10;
  std::size_t rounds = 20;
  std::uint64_t seed = 1;
  std::string output_dir = "runs/out";
  bool parallel = true;
  bool trace_matrices = false;
  std::vector<std::size_t> hidden_dims{84};
  DataConfig data;
  PartitionConfig partition;
  ClientConfig client;
  ServerConfig server;
  HeteroConfig hetero;
};

// Sectioned key=value text format ('#' comments). Unknown sections or
// keys are rejected so typos fail loudly.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical form written back into the run directory for provenance.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

std::string method_name(Method m);

}  // namespace fedsac
