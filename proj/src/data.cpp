#include "fedsac/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fedsac/errors.hpp"
#include "fedsac/rng.hpp"

namespace fedsac {

namespace {

// Cluster geometry: unit-variance Gaussians whose means sit evenly
// spaced on a ring of radius 3. Adjacent classes on the ring overlap
// heavily, so the full multi-class problem is hard, while the handful of
// (typically non-adjacent) classes a skewed client holds separate
// cleanly. When the feature dimension allows, the ring lives outside the
// (0,1) rotation plane and only a small echo of it (kEchoRadius) lies
// inside: rotating then perturbs p(x) without redrawing the class
// boundaries, per the covariate-shift definition, while the translation
// along axis 2 moves the cloud through empty feature space.
constexpr double kMeanRadius = 3.0;
constexpr double kEchoRadius = 0.5;
constexpr double kTranslationScale = 3.0;  // full-level covariate translation

void validate_levels(const ShiftSpec& shift) {
  if (shift.covariate_level < 0.0 || shift.covariate_level > 1.0 ||
      shift.concept_level < 0.0 || shift.concept_level > 1.0) {
    throw InvalidInput("ShiftSpec levels must lie in [0, 1]");
  }
}

// Cyclic relabeling of the first ceil(t*C) classes. Labels move; the
// feature clusters they came from do not, so p(x) is untouched.
std::vector<int> concept_label_map(int num_classes, double level) {
  std::vector<int> map(num_classes);
  std::iota(map.begin(), map.end(), 0);
  const int affected = static_cast<int>(std::ceil(level * num_classes));
  if (affected >= 2) {
    for (int c = 0; c < affected; ++c) map[c] = (c + 1) % affected;
  }
  return map;
}

}  // namespace

Matrix synthetic_class_means(int num_classes, int feature_dim, const ShiftSpec& shift) {
  if (num_classes < 2 || feature_dim < 2) {
    throw InvalidInput("synthetic_class_means: need num_classes >= 2 and feature_dim >= 2");
  }
  validate_levels(shift);

  Matrix means(num_classes, feature_dim);
  for (int c = 0; c < num_classes; ++c) {
    const double angle = 2.0 * std::numbers::pi * c / num_classes;
    if (feature_dim >= 5) {
      means(c, 0) = kEchoRadius * std::cos(angle);
      means(c, 1) = kEchoRadius * std::sin(angle);
      means(c, 3) = kMeanRadius * std::cos(angle);
      means(c, 4) = kMeanRadius * std::sin(angle);
    } else {
      means(c, 0) = kMeanRadius * std::cos(angle);
      means(c, 1) = kMeanRadius * std::sin(angle);
    }
  }

  const double s = shift.covariate_level;
  if (s > 0.0) {
    // Rotate in the fixed (0, 1) coordinate plane, then translate along
    // the fixed axis 2 (feature_dim >= 2 guarantees the plane exists).
    const double angle = s * std::numbers::pi / 2.0;
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (int c = 0; c < num_classes; ++c) {
      auto row = means.row(c);
      const double x0 = row[0];
      const double x1 = row[1];
      row[0] = ca * x0 - sa * x1;
      row[1] = sa * x0 + ca * x1;
      if (feature_dim > 2) {
        row[2] += s * kTranslationScale;
      } else {
        row[0] += s * kTranslationScale;
      }
    }
  }
  return means;
}

LabeledDataset generate_synthetic(std::uint64_t seed, int num_classes, int feature_dim,
                                  int samples_per_class, const ShiftSpec& shift) {
  if (num_classes < 2 || feature_dim < 2 || samples_per_class < 1) {
    throw InvalidInput("generate_synthetic: invalid sizes");
  }
  validate_levels(shift);

  const Matrix means = synthetic_class_means(num_classes, feature_dim, shift);
  const std::vector<int> label_map = concept_label_map(num_classes, shift.concept_level);

  LabeledDataset ds;
  ds.num_classes = num_classes;
  ds.features = Matrix(static_cast<std::size_t>(num_classes) * samples_per_class, feature_dim);
  ds.labels.resize(ds.features.rows());

  Rng rng(derive_seed(seed, seed_tag::kDataset));
  std::size_t i = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int s = 0; s < samples_per_class; ++s, ++i) {
      auto row = ds.features.row(i);
      for (int j = 0; j < feature_dim; ++j) row[j] = means(c, j) + rng.normal();
      ds.labels[i] = label_map[c];
    }
  }
  return ds;
}

namespace {

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& idx) {
  LabeledDataset out;
  out.num_classes = ds.num_classes;
  out.features = Matrix(idx.size(), ds.features.cols());
  out.labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = ds.features.row(idx[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels[i] = ds.labels[idx[i]];
  }
  return out;
}

// 80/20 stratified by label. Singleton label groups go to train; every
// group of two or more keeps at least one sample on each side.
void split_train_test(const LabeledDataset& ds, const std::vector<std::size_t>& members, Rng& rng,
                      std::vector<std::size_t>& train_idx, std::vector<std::size_t>& test_idx) {
  std::vector<std::vector<std::size_t>> by_label(ds.num_classes);
  for (std::size_t idx : members) by_label[static_cast<std::size_t>(ds.labels[idx])].push_back(idx);
  for (auto& group : by_label) {
    if (group.empty()) continue;
    rng.shuffle(group);
    const std::size_t g = group.size();
    std::size_t n_train = g == 1 ? 1
                                 : std::clamp<std::size_t>(
                                       static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(g))),
                                       1, g - 1);
    for (std::size_t i = 0; i < g; ++i) {
      (i < n_train ? train_idx : test_idx).push_back(group[i]);
    }
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
}

std::vector<ClientShard> shards_from_assignment(const LabeledDataset& ds,
                                                const std::vector<std::vector<std::size_t>>& members,
                                                std::uint64_t seed) {
  std::vector<ClientShard> shards(members.size());
  std::size_t total_train = 0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    Rng rng(derive_seed(seed, seed_tag::kPartition, i + 1));
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    split_train_test(ds, members[i], rng, train_idx, test_idx);
    shards[i].client_id = i;
    shards[i].train = subset(ds, train_idx);
    shards[i].test = subset(ds, test_idx);
    total_train += train_idx.size();
  }
  for (auto& s : shards) {
    s.relative_size = total_train == 0
                          ? 0.0
                          : static_cast<double>(s.train.size()) / static_cast<double>(total_train);
  }
  return shards;
}

}  // namespace

ClientShard make_shard(const LabeledDataset& ds, std::size_t client_id, double relative_size,
                       std::uint64_t seed) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  Rng rng(derive_seed(seed, seed_tag::kPartition, client_id + 1));
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  split_train_test(ds, all, rng, train_idx, test_idx);
  ClientShard shard;
  shard.client_id = client_id;
  shard.train = subset(ds, train_idx);
  shard.test = subset(ds, test_idx);
  shard.relative_size = relative_size;
  return shard;
}

std::vector<ClientShard> partition_homogeneous(const LabeledDataset& ds, std::size_t n_clients,
                                               std::uint64_t seed) {
  if (n_clients < 1) throw InvalidInput("partition_homogeneous: need at least one client");
  if (ds.size() < n_clients) throw InvalidInput("partition_homogeneous: fewer samples than clients");
  Rng rng(derive_seed(seed, seed_tag::kPartition));
  std::vector<std::vector<std::size_t>> members(n_clients);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    members[rng.uniform_below(n_clients)].push_back(i);
  }
  return shards_from_assignment(ds, members, seed);
}

std::vector<ClientShard> partition_dirichlet(const LabeledDataset& ds, std::size_t n_clients,
                                             double alpha, std::uint64_t seed,
                                             std::vector<std::string>* warnings) {
  if (n_clients < 1) throw InvalidInput("partition_dirichlet: need at least one client");
  if (!(alpha > 0.0)) throw InvalidInput("partition_dirichlet: alpha must be > 0");

  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }

  Rng rng(derive_seed(seed, seed_tag::kPartition));
  std::vector<std::vector<std::size_t>> members(n_clients);
  for (int c = 0; c < ds.num_classes; ++c) {
    auto& pool = by_class[static_cast<std::size_t>(c)];
    if (pool.empty()) {
      if (warnings != nullptr) {
        warnings->push_back("class " + std::to_string(c) + " has no samples; skipped");
      }
      continue;
    }
    const std::vector<double> prop = rng.dirichlet(alpha, n_clients);
    rng.shuffle(pool);

    // Largest-remainder rounding of prop * |pool|.
    const double g = static_cast<double>(pool.size());
    std::vector<std::size_t> counts(n_clients);
    std::vector<std::pair<double, std::size_t>> remainders(n_clients);
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < n_clients; ++j) {
      const double exact = prop[j] * g;
      counts[j] = static_cast<std::size_t>(std::floor(exact));
      remainders[j] = {exact - std::floor(exact), j};
      assigned += counts[j];
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; assigned < pool.size(); ++j, ++assigned) {
      counts[remainders[j % n_clients].second] += 1;
    }

    std::size_t cursor = 0;
    for (std::size_t j = 0; j < n_clients; ++j) {
      for (std::size_t t = 0; t < counts[j]; ++t) members[j].push_back(pool[cursor++]);
    }
  }
  return shards_from_assignment(ds, members, seed);
}

std::vector<ClientShard> partition_pathological(const LabeledDataset& ds, std::size_t n_clients,
                                                int classes_per_client, std::uint64_t seed) {
  if (classes_per_client < 1) throw InvalidInput("partition_pathological: classes_per_client >= 1");
  const std::size_t c = static_cast<std::size_t>(ds.num_classes);
  const std::size_t cpc = static_cast<std::size_t>(classes_per_client);
  if (cpc * n_clients < c || cpc > c) {
    throw InvalidInput("partition_pathological: infeasible class assignment");
  }

  Rng rng(derive_seed(seed, seed_tag::kPartition));
  std::vector<std::size_t> perm(c);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);

  // Slot t of the round-robin gets class perm[t mod C]; client i owns
  // slots [i*cpc, (i+1)*cpc). cpc <= C keeps a client's classes distinct.
  std::vector<std::vector<std::size_t>> holders(c);  // class -> owning clients
  for (std::size_t i = 0; i < n_clients; ++i) {
    for (std::size_t t = i * cpc; t < (i + 1) * cpc; ++t) {
      holders[perm[t % c]].push_back(i);
    }
  }

  std::vector<std::vector<std::size_t>> by_class(c);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  }

  std::vector<std::vector<std::size_t>> members(n_clients);
  for (std::size_t k = 0; k < c; ++k) {
    auto& pool = by_class[k];
    rng.shuffle(pool);
    const auto& own = holders[k];
    const std::size_t base = pool.size() / own.size();
    const std::size_t extra = pool.size() % own.size();
    std::size_t cursor = 0;
    for (std::size_t j = 0; j < own.size(); ++j) {
      const std::size_t take = base + (j < extra ? 1 : 0);
      for (std::size_t t = 0; t < take; ++t) members[own[j]].push_back(pool[cursor++]);
    }
  }
  return shards_from_assignment(ds, members, seed);
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) throw FormatError("truncated IDX file: " + path);
  return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

}  // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot open " + labels_path);

  if (read_be32(img, images_path) != 0x00000803u) {
    throw FormatError("bad IDX image magic in " + images_path);
  }
  const std::uint32_t n = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);

  if (read_be32(lab, labels_path) != 0x00000801u) {
    throw FormatError("bad IDX label magic in " + labels_path);
  }
  const std::uint32_t n_labels = read_be32(lab, labels_path);
  if (n != n_labels) throw FormatError("IDX image/label count mismatch");

  LabeledDataset ds;
  ds.features = Matrix(n, static_cast<std::size_t>(rows) * cols);
  ds.labels.resize(n);
  std::vector<unsigned char> pixel_row(static_cast<std::size_t>(rows) * cols);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(pixel_row.data()),
                  static_cast<std::streamsize>(pixel_row.size()))) {
      throw FormatError("truncated IDX file: " + images_path);
    }
    auto dst = ds.features.row(i);
    for (std::size_t j = 0; j < pixel_row.size(); ++j) dst[j] = pixel_row[j] / 255.0;
    char l = 0;
    if (!lab.read(&l, 1)) throw FormatError("truncated IDX file: " + labels_path);
    ds.labels[i] = static_cast<unsigned char>(l);
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  return ds;
}

LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("CSV missing header row: " + path);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t width = 0;
  int max_label = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) throw FormatError("");
        cells.push_back(v);
      } catch (...) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
      }
    }
    if (cells.size() < 2) throw FormatError(path + ":" + std::to_string(line_no) + ": too few columns");
    if (width == 0) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": ragged row");
    }
    const double raw = cells.back();
    const int label = static_cast<int>(raw);
    if (raw != label || label < 0) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": label must be a non-negative integer");
    }
    cells.pop_back();
    rows.push_back(std::move(cells));
    labels.push_back(label);
    max_label = std::max(max_label, label);
  }
  if (rows.empty()) throw FormatError("CSV has no data rows: " + path);

  LabeledDataset ds;
  ds.features = Matrix(rows.size(), width - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), ds.features.row(i).begin());
  }
  ds.labels = std::move(labels);
  ds.num_classes = max_label + 1;
  return ds;
}

}  // namespace fedsac
