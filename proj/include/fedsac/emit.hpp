#pragma once

#include <string>
#include <vector>

#include "fedsac/harness.hpp"

namespace fedsac {

// Writes run_config.json, metrics.csv, per-round matrix CSVs and SVG
// heatmaps (when traced), and the final personalized models. All output
// is byte-deterministic for a fixed (config, seed).
void emit_outputs(const RunResult& result, const ExperimentConfig& cfg);

// sweep.csv (one row per level, seed-averaged) plus sweep_seeds.csv with
// the per-seed points, and the canonical config with the protocol note.
void emit_sweep(const std::vector<SweepRow>& rows, const ExperimentConfig& cfg,
                const std::vector<double>& levels, SweepAxis axis, int num_seeds);

// Joint mean-accuracy curves for `compare`, one column per run label.
void emit_compare(const std::vector<std::pair<std::string, std::vector<RoundRecord>>>& runs,
                  const std::string& out_path);

std::string format_sig9(double v);

void write_matrix_csv(const Matrix& m, const std::string& path);
void write_heatmap_svg(const Matrix& m, const std::string& path);

}  // namespace fedsac
