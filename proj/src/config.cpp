#include "fedsac/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "fedsac/errors.hpp"

namespace fedsac {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

using Section = std::map<std::string, std::string>;

std::map<std::string, Section> parse_sections(const std::string& text) {
  std::map<std::string, Section> sections;
  std::istringstream in(text);
  std::string line;
  std::string current;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    if (current.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!sections[current].emplace(key, value).second) {
      throw ConfigError("duplicate key '" + key + "' in [" + current + "]");
    }
  }
  return sections;
}

// Typed reader over one section that tracks which keys were consumed.
class SectionReader {
 public:
  SectionReader(const std::string& name, const Section* section) : name_(name), section_(section) {}

  bool has(const std::string& key) const {
    return section_ != nullptr && section_->count(key) > 0;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    consumed_.push_back(key);
    return section_->at(key);
  }

  double get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    consumed_.push_back(key);
    const std::string& v = section_->at(key);
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return d;
    } catch (...) {
      throw ConfigError("[" + name_ + "] " + key + ": expected a number, got '" + v + "'");
    }
  }

  long long get_int(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    consumed_.push_back(key);
    const std::string& v = section_->at(key);
    try {
      std::size_t pos = 0;
      const long long d = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("");
      return d;
    } catch (...) {
      throw ConfigError("[" + name_ + "] " + key + ": expected an integer, got '" + v + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    consumed_.push_back(key);
    const std::string& v = section_->at(key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("[" + name_ + "] " + key + ": expected true/false, got '" + v + "'");
  }

  std::vector<std::size_t> get_size_list(const std::string& key, std::vector<std::size_t> fallback) {
    if (!has(key)) return fallback;
    consumed_.push_back(key);
    const std::string& v = section_->at(key);
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = trim(cell);
      try {
        std::size_t pos = 0;
        const long long d = std::stoll(cell, &pos);
        if (pos != cell.size() || d < 1) throw std::invalid_argument("");
        out.push_back(static_cast<std::size_t>(d));
      } catch (...) {
        throw ConfigError("[" + name_ + "] " + key + ": expected positive integers, got '" + v + "'");
      }
    }
    if (out.empty()) throw ConfigError("[" + name_ + "] " + key + ": empty list");
    return out;
  }

  void finish() const {
    if (section_ == nullptr) return;
    for (const auto& [key, value] : *section_) {
      if (std::find(consumed_.begin(), consumed_.end(), key) == consumed_.end()) {
        throw ConfigError("unknown key '" + key + "' in [" + name_ + "]");
      }
    }
  }

 private:
  std::string name_;
  const Section* section_;
  std::vector<std::string> consumed_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  const auto sections = parse_sections(text);
  static const std::vector<std::string> known = {"experiment", "model",  "data",  "partition",
                                                 "client",     "server", "hetero"};
  for (const auto& [name, _] : sections) {
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  auto section = [&](const std::string& name) -> const Section* {
    const auto it = sections.find(name);
    return it == sections.end() ? nullptr : &it->second;
  };

  ExperimentConfig cfg;

  SectionReader exp("experiment", section("experiment"));
  const std::string method = exp.get_string("method", "fedsac");
  if (method == "fedsac") {
    cfg.method = Method::FedSac;
  } else if (method == "fedavg") {
    cfg.method = Method::FedAvg;
  } else if (method == "local") {
    cfg.method = Method::Local;
  } else if (method == "hetero") {
    cfg.method = Method::Hetero;
  } else {
    throw ConfigError("unknown method '" + method + "'");
  }
  cfg.num_clients = static_cast<std::size_t>(exp.get_int("clients", 10));
  cfg.rounds = static_cast<std::size_t>(exp.get_int("rounds", 20));
  cfg.seed = static_cast<std::uint64_t>(exp.get_int("seed", 1));
  cfg.output_dir = exp.get_string("output_dir", "runs/out");
  cfg.parallel = exp.get_bool("parallel", true);
  cfg.trace_matrices = exp.get_bool("trace_matrices", false);
  exp.finish();

  SectionReader model("model", section("model"));
  cfg.hidden_dims = model.get_size_list("hidden_dims", {84});
  model.finish();

  SectionReader data("data", section("data"));
  const std::string source = data.get_string("source", "synthetic");
  if (source == "synthetic") {
    cfg.data.source = DataSource::Synthetic;
  } else if (source == "idx") {
    cfg.data.source = DataSource::Idx;
  } else if (source == "csv") {
    cfg.data.source = DataSource::Csv;
  } else {
    throw ConfigError("unknown data source '" + source + "'");
  }
  cfg.data.classes = static_cast<int>(data.get_int("classes", 10));
  cfg.data.feature_dim = static_cast<int>(data.get_int("feature_dim", 32));
  cfg.data.samples_per_class = static_cast<int>(data.get_int("samples_per_class", 1000));
  cfg.data.shift.covariate_level = data.get_double("covariate_level", 0.0);
  cfg.data.shift.concept_level = data.get_double("concept_level", 0.0);
  cfg.data.images = data.get_string("images", "");
  cfg.data.labels = data.get_string("labels", "");
  cfg.data.path = data.get_string("path", "");
  data.finish();
  if (cfg.data.source == DataSource::Idx && (cfg.data.images.empty() || cfg.data.labels.empty())) {
    throw ConfigError("[data] source=idx requires images and labels paths");
  }
  if (cfg.data.source == DataSource::Csv && cfg.data.path.empty()) {
    throw ConfigError("[data] source=csv requires path");
  }

  SectionReader part("partition", section("partition"));
  const std::string scheme = part.get_string("scheme", "homo");
  if (scheme == "homo") {
    cfg.partition.scheme = PartitionScheme::Homogeneous;
  } else if (scheme == "dirichlet") {
    cfg.partition.scheme = PartitionScheme::Dirichlet;
  } else if (scheme == "pathological") {
    cfg.partition.scheme = PartitionScheme::Pathological;
  } else {
    throw ConfigError("unknown partition scheme '" + scheme + "'");
  }
  cfg.partition.alpha = part.get_double("alpha", 0.5);
  cfg.partition.classes_per_client = static_cast<int>(part.get_int("classes_per_client", 2));
  part.finish();

  SectionReader cli("client", section("client"));
  cfg.client.lr = cli.get_double("lr", 0.01);
  cfg.client.local_iters = static_cast<int>(cli.get_int("local_iters", 100));
  cfg.client.batch_size = static_cast<std::size_t>(cli.get_int("batch_size", 64));
  cfg.client.lambda = cli.get_double("lambda", 0.01);
  cfg.client.subsample_m = static_cast<std::size_t>(cli.get_int("subsample_m", 256));
  cli.finish();

  SectionReader srv("server", section("server"));
  cfg.server.alpha = srv.get_double("alpha", 0.9);
  cfg.server.beta = srv.get_double("beta", 1.4);
  cfg.server.k = static_cast<std::size_t>(srv.get_int("k", 3));
  cfg.server.anneal_fraction = srv.get_double("anneal_fraction", 0.7);
  if (srv.has("subsample")) {
    cfg.server.subsample = static_cast<std::size_t>(srv.get_int("subsample", 0));
  }
  srv.finish();

  SectionReader het("hetero", section("hetero"));
  cfg.hetero.group_a_hidden = het.get_size_list("group_a_hidden", {84});
  cfg.hetero.group_b_hidden = het.get_size_list("group_b_hidden", {84});
  cfg.hetero.group_a_count = static_cast<std::size_t>(het.get_int("group_a_count", 0));
  het.finish();

  // Cross-field validation.
  if (cfg.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (cfg.num_clients < 1) throw ConfigError("clients must be >= 1");
  if (!(cfg.client.lr > 0.0)) throw ConfigError("lr must be > 0");
  if (cfg.client.local_iters < 0) throw ConfigError("local_iters must be >= 0");
  if (cfg.client.lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (cfg.server.alpha < 0.0 || cfg.server.beta < 0.0) throw ConfigError("alpha/beta must be >= 0");
  if (cfg.server.anneal_fraction < 0.0 || cfg.server.anneal_fraction > 1.0) {
    throw ConfigError("anneal_fraction must lie in [0, 1]");
  }
  if (cfg.server.k < 1) throw ConfigError("k must be >= 1");
  if (cfg.client.subsample_m < cfg.server.k) throw ConfigError("subsample_m must be >= k");
  if (cfg.server.subsample) {
    if (cfg.method != Method::FedSac) throw ConfigError("subsample is only supported with method=fedsac");
    if (*cfg.server.subsample < 2) throw ConfigError("subsample must be >= 2");
  }
  if (cfg.partition.scheme == PartitionScheme::Dirichlet && !(cfg.partition.alpha > 0.0)) {
    throw ConfigError("partition alpha must be > 0");
  }
  if (cfg.method == Method::Hetero) {
    if (cfg.hetero.group_a_count == 0 || cfg.hetero.group_a_count >= cfg.num_clients) {
      throw ConfigError("[hetero] group_a_count must split clients into two non-empty groups");
    }
    if (cfg.hetero.group_a_hidden.back() != cfg.hetero.group_b_hidden.back()) {
      throw ConfigError("[hetero] groups must share the representation width (head-shape mismatch)");
    }
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string method_name(Method m) {
  switch (m) {
    case Method::FedSac: return "fedsac";
    case Method::FedAvg: return "fedavg";
    case Method::Local: return "local";
    case Method::Hetero: return "hetero";
  }
  return "unknown";
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["experiment"] = {
      {"method", method_name(cfg.method)}, {"clients", cfg.num_clients},
      {"rounds", cfg.rounds},              {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},      {"parallel", cfg.parallel},
      {"trace_matrices", cfg.trace_matrices},
  };
  j["model"] = {{"hidden_dims", cfg.hidden_dims}};
  switch (cfg.data.source) {
    case DataSource::Synthetic:
      j["data"] = {{"source", "synthetic"},
                   {"classes", cfg.data.classes},
                   {"feature_dim", cfg.data.feature_dim},
                   {"samples_per_class", cfg.data.samples_per_class},
                   {"covariate_level", cfg.data.shift.covariate_level},
                   {"concept_level", cfg.data.shift.concept_level}};
      break;
    case DataSource::Idx:
      j["data"] = {{"source", "idx"}, {"images", cfg.data.images}, {"labels", cfg.data.labels}};
      break;
    case DataSource::Csv:
      j["data"] = {{"source", "csv"}, {"path", cfg.data.path}};
      break;
  }
  switch (cfg.partition.scheme) {
    case PartitionScheme::Homogeneous:
      j["partition"] = {{"scheme", "homo"}};
      break;
    case PartitionScheme::Dirichlet:
      j["partition"] = {{"scheme", "dirichlet"}, {"alpha", cfg.partition.alpha}};
      break;
    case PartitionScheme::Pathological:
      j["partition"] = {{"scheme", "pathological"},
                        {"classes_per_client", cfg.partition.classes_per_client}};
      break;
  }
  j["client"] = {{"lr", cfg.client.lr},
                 {"local_iters", cfg.client.local_iters},
                 {"batch_size", cfg.client.batch_size},
                 {"lambda", cfg.client.lambda},
                 {"subsample_m", cfg.client.subsample_m}};
  j["server"] = {{"alpha", cfg.server.alpha},
                 {"beta", cfg.server.beta},
                 {"k", cfg.server.k},
                 {"anneal_fraction", cfg.server.anneal_fraction}};
  if (cfg.server.subsample) j["server"]["subsample"] = *cfg.server.subsample;
  if (cfg.method == Method::Hetero) {
    j["hetero"] = {{"group_a_hidden", cfg.hetero.group_a_hidden},
                   {"group_b_hidden", cfg.hetero.group_b_hidden},
                   {"group_a_count", cfg.hetero.group_a_count}};
  }
  return j;
}

}  // namespace fedsac
