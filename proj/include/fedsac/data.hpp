#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsac/matrix.hpp"

namespace fedsac {

struct LabeledDataset {
  Matrix features;          // n x f
  std::vector<int> labels;  // class ids in [0, num_classes)
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
};

// One client's private split. relative_size is the client's share of the
// total training data across a shard set (sums to 1).
struct ClientShard {
  std::size_t client_id = 0;
  LabeledDataset train;
  LabeledDataset test;
  double relative_size = 0.0;
};

// Heterogeneity knobs for the synthetic generator. covariate_level moves
// p(x) only (rotation plus translation of the class means); concept_level
// remaps labels, changing p(y|x) while p(x) stays fixed.
struct ShiftSpec {
  double covariate_level = 0.0;
  double concept_level = 0.0;
};

// Class means for the synthetic generator: unit directions on a scaled
// sphere, fixed by (num_classes, feature_dim) alone and then shifted per
// the spec. Exposed so tests and the sweep can recompute them.
Matrix synthetic_class_means(int num_classes, int feature_dim, const ShiftSpec& shift);

// Isotropic unit-variance Gaussian clusters around the shifted means.
// Samples are deterministic per seed; means do not depend on the seed.
LabeledDataset generate_synthetic(std::uint64_t seed, int num_classes, int feature_dim,
                                  int samples_per_class, const ShiftSpec& shift);

std::vector<ClientShard> partition_homogeneous(const LabeledDataset& ds, std::size_t n_clients,
                                               std::uint64_t seed);

std::vector<ClientShard> partition_dirichlet(const LabeledDataset& ds, std::size_t n_clients,
                                             double alpha, std::uint64_t seed,
                                             std::vector<std::string>* warnings = nullptr);

std::vector<ClientShard> partition_pathological(const LabeledDataset& ds, std::size_t n_clients,
                                                int classes_per_client, std::uint64_t seed);

// 80/20 stratified split of a standalone dataset into one shard.
ClientShard make_shard(const LabeledDataset& ds, std::size_t client_id, double relative_size,
                       std::uint64_t seed);

// IDX (big-endian, magic-numbered) image/label pair; pixels scaled to [0,1].
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

// CSV with a header row; label is the last column, features everything else.
LabeledDataset load_csv(const std::string& path);

}  // namespace fedsac
