#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "disentlab/harness/config.hpp"
#include "disentlab/losses/model.hpp"
#include "disentlab/metrics/report.hpp"
#include "disentlab/synthdata/dataset.hpp"

namespace disentlab::harness {

struct RunRecord {
    std::string hash;
    RunConfig config;
    metrics::MetricsReport metrics;
    std::string loss_curve;   // path relative to the output root
    double wall_time = 0.0;   // seconds, training + evaluation
    std::string status = "ok";  // ok | failed
    long failed_step = -1;
    std::string error;

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);
};

/// An exported dataset directory reopened: the generator is rebuilt from
/// the header (its hash must match) and the split is read from split.json.
struct OpenedDataset {
    DatasetConfig config;
    synth::ObservationModel model;
    synth::SplitMask split;
};
OpenedDataset open_dataset(const std::filesystem::path& dir);

/// Evaluation pools: distinct combinations drawn from each side of the split
/// with the eval seed, rendered with per-row noise streams.
struct EvalPools {
    IndexMatrix train_tuples;
    IndexMatrix test_tuples;
    Matrix train_obs;
    Matrix test_obs;
};
EvalPools make_eval_pools(const synth::ObservationModel& data, const synth::SplitMask& split, const EvalConfig& eval);

/// Posterior means of the pool observations as representation matrices.
std::pair<metrics::RepresentationMatrix, metrics::RepresentationMatrix> encode_pools(const losses::VaeModel& model,
                                                                                     const EvalPools& pools);

struct TrainResult {
    losses::VaeModel model;
    std::string status = "ok";
    long failed_step = -1;
    std::string error;
};

/// Trains for config.steps batches drawn from the train side. The loss curve
/// (step,recon,kl,tc,disc_acc) goes to `loss_csv` when given.
TrainResult train_model(const losses::ModelConfig& config, const synth::ObservationModel& data,
                        const synth::SplitMask& split, int log_every,
                        const std::optional<std::filesystem::path>& loss_csv = std::nullopt);

/// Train, encode the pools with posterior means, evaluate. With an output
/// root, writes runs/<hash>/{loss.csv, model.ckpt, record.json}. A diverged
/// run yields status "failed" and the failing step; its record is still kept.
RunRecord run_experiment(const RunConfig& config, const synth::ObservationModel& data, const synth::SplitMask& split,
                         const std::optional<std::filesystem::path>& out_root = std::nullopt);

}  // namespace disentlab::harness
