#pragma once

#include <string>
#include <vector>

#include "gast/config.hpp"
#include "gast/theory.hpp"
#include "gast/trainer.hpp"

namespace gast {

// All CSVs: UTF-8, '\n' newlines, '.' decimal, doubles printed with %.17g so
// regenerating under the same config and seed is byte-identical.

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);

// One row per (step, layer, selected sample); the sample column holds the
// dataset row the batch slot came from.
void write_selection_log_csv(const std::string& path, const std::vector<SelectionPlan>& plans,
                             const std::vector<std::vector<std::size_t>>& batch_rows);

// One row per (step, layer, batch slot) with that slot's sampling
// probability; every (step, layer) group sums to 1.
void write_probs_heatmap_csv(const std::string& path, const std::vector<SelectionProbs>& probs);

// Per dataset row: mean number of layers that trained on it per batch
// appearance, ranked descending.
void write_layer_histogram_csv(const std::string& path, const std::vector<SelectionPlan>& plans,
                               const std::vector<std::vector<std::size_t>>& batch_rows,
                               std::size_t train_size);

void write_theory_report_csv(const std::string& path, const std::vector<TheoryReport>& reports);

void write_compare_curves_csv(const std::string& path, const std::vector<StrategyStats>& stats);
void write_compare_table_csv(const std::string& path, const std::vector<StrategyStats>& stats);

void write_manifest(const std::string& path, const RunConfig& cfg);

// Derived conveniences; no promises about pixel content.
void write_loss_curve_svg(const std::string& path, const std::vector<MetricsRecord>& records);
void write_probs_heatmap_svg(const std::string& path, const SelectionProbs& probs);
void write_layer_histogram_svg(const std::string& path, const std::vector<double>& values);
void write_compare_curves_svg(const std::string& path, const std::vector<StrategyStats>& stats);

// Minimal CSV reader for report/validation paths: returns rows of cells,
// header included.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

} // namespace gast
