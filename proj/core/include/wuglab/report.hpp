#pragma once

#include <filesystem>
#include <vector>

#include "wuglab/experiment.hpp"

namespace wuglab {

// Writes results.csv plus one SVG per phenomenon (accuracy vs. n, one
// series per evidence level, dotted n=0 baseline) and an interference
// chart when int_* rows are present. Pure function of the store rows.
void emit_report(const ResultStore& store, const std::filesystem::path& out_dir);

// Exposed for tests: a single accuracy-vs-n chart.
struct SeriesPoint {
    int64_t n = 0;
    double accuracy = 0.0;
};
struct Series {
    std::string label;
    std::vector<SeriesPoint> points;
};
std::string render_accuracy_svg(const std::string& title, const std::vector<Series>& series,
                                double baseline, bool has_baseline);

} // namespace wuglab
