#include "fedsac/emit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "fedsac/errors.hpp"

namespace fedsac {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: identical bytes everywhere
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_sig9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_matrix_csv(const Matrix& m, const std::string& path) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_sig9(m(i, j));
    }
    out << '\n';
  }
}

void write_heatmap_svg(const Matrix& m, const std::string& path) {
  const std::size_t n_rows = m.rows();
  const std::size_t n_cols = m.cols();
  const int cell = 48;
  const bool annotate = n_rows <= 12 && n_cols <= 12;

  double lo = m.data().empty() ? 0.0 : m.data().front();
  double hi = lo;
  for (double v : m.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;

  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << n_cols * cell << "\" height=\""
      << n_rows * cell << "\">\n";
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      const double v = m(i, j);
      const double unit = span > 0.0 ? (v - lo) / span : 0.5;
      // Linear grayscale, dark = large.
      const int g = static_cast<int>(std::lround(255.0 * (1.0 - unit)));
      out << "  <rect x=\"" << j * cell << "\" y=\"" << i * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
      if (annotate) {
        char label[32];
        std::snprintf(label, sizeof(label), "%.3g", v);
        const char* text_color = g < 128 ? "#ffffff" : "#000000";
        out << "  <text x=\"" << j * cell + cell / 2 << "\" y=\"" << i * cell + cell / 2 + 4
            << "\" font-family=\"monospace\" font-size=\"10\" fill=\"" << text_color
            << "\" text-anchor=\"middle\">" << label << "</text>\n";
      }
    }
  }
  out << "</svg>\n";
}

namespace {

void write_models(const std::vector<ParamVector>& models, const fs::path& dir) {
  ensure_dir(dir);
  for (std::size_t i = 0; i < models.size(); ++i) {
    std::ofstream out = open_out(dir / ("client_" + std::to_string(i) + ".bin"));
    const char magic[4] = {'F', 'S', 'M', 'V'};
    out.write(magic, 4);
    const std::uint64_t count = models[i].values.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(models[i].values.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
  }
}

}  // namespace

void emit_outputs(const RunResult& result, const ExperimentConfig& cfg) {
  if (result.history.empty()) throw InvalidInput("emit_outputs: empty history");
  const fs::path dir(cfg.output_dir);
  ensure_dir(dir);

  {
    std::ofstream out = open_out(dir / "run_config.json");
    out << config_to_json(cfg).dump(2) << '\n';
  }

  {
    std::ofstream out = open_out(dir / "metrics.csv");
    out << "round,client,accuracy\n";
    for (const RoundRecord& rec : result.history) {
      for (std::size_t i = 0; i < rec.per_client_accuracy.size(); ++i) {
        out << rec.round << ',' << i << ',' << format_sig9(rec.per_client_accuracy[i]) << '\n';
      }
    }
  }

  for (const RoundRecord& rec : result.history) {
    const std::map<std::string, const std::optional<Matrix>*> mats = {
        {"W", &rec.w}, {"S", &rec.s}, {"C", &rec.c}};
    bool any = false;
    for (const auto& [name, mat] : mats) any = any || mat->has_value();
    if (!any) continue;
    const fs::path mat_dir = dir / "matrices" / std::to_string(rec.round);
    ensure_dir(mat_dir);
    for (const auto& [name, mat] : mats) {
      if (!mat->has_value()) continue;
      write_matrix_csv(**mat, (mat_dir / (name + ".csv")).string());
      write_heatmap_svg(**mat,
                        (dir / ("heatmap_" + name + "_" + std::to_string(rec.round) + ".svg")).string());
    }
  }

  write_models(result.final_models, dir / "models");
}

void emit_sweep(const std::vector<SweepRow>& rows, const ExperimentConfig& cfg,
                const std::vector<double>& levels, SweepAxis axis, int num_seeds) {
  const fs::path dir(cfg.output_dir);
  ensure_dir(dir);

  {
    nlohmann::json j = config_to_json(cfg);
    j["sweep"] = {
        {"axis", axis == SweepAxis::Covariate ? "covariate" : "concept"},
        {"levels", levels},
        {"seeds", num_seeds},
        {"protocol",
         "one cooperation round per level; two clients with equal relative sizes and a "
         "common initialization; client 0 at shift zero, client 1 at the level"},
    };
    std::ofstream out = open_out(dir / "run_config.json");
    out << j.dump(2) << '\n';
  }

  {
    std::ofstream out = open_out(dir / "sweep_seeds.csv");
    out << "level,seed,model_similarity,subspace_overlap,peer_weight,coop_accuracy,local_accuracy\n";
    for (const SweepRow& r : rows) {
      out << format_sig9(r.level) << ',' << r.seed << ',' << format_sig9(r.model_similarity)
          << ',' << format_sig9(r.subspace_overlap) << ',' << format_sig9(r.peer_weight) << ','
          << format_sig9(r.coop_accuracy) << ',' << format_sig9(r.local_accuracy) << '\n';
    }
  }

  {
    // One row per level, averaged over seeds.
    std::ofstream out = open_out(dir / "sweep.csv");
    out << "level,model_similarity,subspace_overlap,peer_weight,coop_accuracy,local_accuracy\n";
    for (const double level : levels) {
      double sim = 0.0;
      double overlap = 0.0;
      double weight = 0.0;
      double coop = 0.0;
      double local = 0.0;
      int count = 0;
      for (const SweepRow& r : rows) {
        if (r.level != level) continue;
        sim += r.model_similarity;
        overlap += r.subspace_overlap;
        weight += r.peer_weight;
        coop += r.coop_accuracy;
        local += r.local_accuracy;
        ++count;
      }
      if (count == 0) continue;
      out << format_sig9(level) << ',' << format_sig9(sim / count) << ','
          << format_sig9(overlap / count) << ',' << format_sig9(weight / count) << ','
          << format_sig9(coop / count) << ',' << format_sig9(local / count) << '\n';
    }
  }
}

void emit_compare(const std::vector<std::pair<std::string, std::vector<RoundRecord>>>& runs,
                  const std::string& out_path) {
  std::ofstream out = open_out(out_path);
  out << "round";
  std::size_t max_rounds = 0;
  for (const auto& [label, history] : runs) {
    out << ",mean_" << label;
    max_rounds = std::max(max_rounds, history.size());
  }
  out << '\n';
  for (std::size_t r = 0; r < max_rounds; ++r) {
    out << r;
    for (const auto& [label, history] : runs) {
      out << ',';
      if (r < history.size()) out << format_sig9(history[r].mean_accuracy);
    }
    out << '\n';
  }
}

}  // namespace fedsac
