#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <json.hpp>

#include "disentlab/losses/model.hpp"
#include "disentlab/metrics/report.hpp"
#include "disentlab/synthdata/dataset.hpp"
#include "disentlab/synthdata/grid.hpp"

namespace disentlab::harness {

struct DatasetConfig {
    synth::FactorGrid grid = synth::FactorGrid::defaults();
    synth::ObservationSpec observation;
    std::pair<int, int> split_ratio{1, 9};
    std::uint64_t split_seed = 0;

    nlohmann::json to_json() const;
    static DatasetConfig from_json(const nlohmann::json& j);
};

struct EvalConfig {
    std::uint64_t eval_seed = 0;
    int train_pool = 2000;   // rows encoded from the train combinations
    int test_pool = 5000;    // rows encoded from the test combinations
    int log_every = 100;     // loss-curve sampling interval in steps
    metrics::EvalOptions options;

    nlohmann::json to_json() const;
    static EvalConfig from_json(const nlohmann::json& j);
};

struct SweepSpec {
    std::vector<losses::Method> methods{losses::Method::vec_beta_tcvae};
    std::vector<int> unit_dims{1, 2, 4, 8, 16, 24, 32, 64};
    std::vector<double> gammas{0.1, 1, 2, 4, 5, 10, 20};
    std::vector<std::pair<int, int>> split_ratios{{3, 7}, {1, 9}, {5, 95}};
    std::vector<std::uint64_t> split_seeds{0, 1, 2};
    std::vector<std::uint64_t> model_seeds{0, 1, 2, 3, 4};

    /// Seed lists may also be given as a count n, meaning 0..n-1.
    nlohmann::json to_json() const;
    static SweepSpec from_json(const nlohmann::json& j);
};

/// One configuration file with sections dataset, model, sweep and eval.
/// Missing sections and fields take their defaults.
struct ExperimentConfig {
    DatasetConfig dataset;
    losses::ModelConfig model;
    SweepSpec sweep;
    EvalConfig eval;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::filesystem::path& path);
};

/// Everything that determines one run's record.
struct RunConfig {
    losses::ModelConfig model;
    DatasetConfig dataset;
    EvalConfig eval;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    /// 16 hex digits of FNV-1a over the canonical JSON dump.
    std::string hash() const;
};

}  // namespace disentlab::harness
