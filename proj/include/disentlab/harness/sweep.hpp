#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "disentlab/harness/experiment.hpp"

namespace disentlab::harness {

/// Canonical run order: methods x D x gamma x ratio x split seed x model
/// seed, last varying fastest. Scalar methods ignore the D grid, and runs
/// whose configs coincide are listed once.
std::vector<RunConfig> expand_sweep(const ExperimentConfig& cfg);

struct SweepOptions {
    int workers = 1;
    bool force = false;
    /// Called after each finished run (from the worker thread, serialized).
    std::function<void(const RunRecord&)> on_record;
};

/// Runs every pending config of the sweep into <out>/results.jsonl.
/// Finished records are appended as they complete; runs whose hash is
/// already present are skipped unless `force`. At the end the file is
/// rewritten in canonical order, so its bytes do not depend on `workers`.
std::vector<RunRecord> run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out,
                                 const SweepOptions& opts = {});

std::vector<RunRecord> read_records(const std::filesystem::path& jsonl);
void write_records(const std::filesystem::path& jsonl, const std::vector<RunRecord>& records);
/// Record JSON with wall-time fields removed, for reproducibility checks.
nlohmann::json without_wall_time(const RunRecord& r);

}  // namespace disentlab::harness
