#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "disentlab/harness/experiment.hpp"

namespace disentlab::harness {

struct CorrelationEntry {
    std::string method;
    std::string metric_x;
    std::string metric_y;
    int n = 0;
    std::optional<double> r;  // empty when undefined (too few or constant)
};

/// Pearson r between two metrics within each method group (ok records only).
std::vector<CorrelationEntry> correlation_report(const std::vector<RunRecord>& records, const std::string& metric_x,
                                                 const std::string& metric_y);

/// Method rows x (x~y) columns, "undefined" where r is missing.
std::string correlation_markdown(const std::vector<CorrelationEntry>& entries);
void write_correlation_csv(const std::filesystem::path& path, const std::vector<CorrelationEntry>& entries);

/// Mean and population std of one metric over a group of runs.
struct CellStat {
    std::string method;
    int unit_dim = 1;
    double gamma = 0.0;
    int ratio_train = 1;
    int ratio_test = 9;
    std::string metric;
    double mean = 0.0;
    double std = 0.0;
    int n = 0;

    bool operator==(const CellStat&) const = default;
};

/// One entry per (method, D, gamma, ratio, metric), seeds pooled.
std::vector<CellStat> aggregate_cells(const std::vector<RunRecord>& records);

/// "0.98 ± 0.01"
std::string format_mean_std(double mean, double std);

void write_cells_csv(const std::filesystem::path& path, const std::vector<CellStat>& cells);
std::vector<CellStat> read_cells_csv(const std::filesystem::path& path);

/// Writes table1.md and table1.csv (mean ± std per cell), curves_vs_d.csv
/// and curves_vs_gamma.csv. Throws on an empty record set.
void emit_report(const std::vector<RunRecord>& records, const std::filesystem::path& out_dir);

}  // namespace disentlab::harness
