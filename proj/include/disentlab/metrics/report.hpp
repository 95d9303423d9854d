#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "disentlab/metrics/representation.hpp"
#include "disentlab/metrics/scores.hpp"

namespace disentlab::metrics {

struct EvalOptions {
    int n_label = 500;
    int votes = 800;
    int probe_batch = 64;
    int beta_points = 800;
    int beta_pair_batch = 64;
    int mig_bins = 20;
    ForestOptions forest;
    double dci_train_fraction = 0.8;

    nlohmann::json to_json() const;
    static EvalOptions from_json(const nlohmann::json& j);
};

struct MetricsReport {
    double r2 = 0.0;
    double acc = 0.0;
    double factor_vae_score = 0.0;
    double dci = 0.0;
    double mig = 0.0;
    double beta_vae_score = 0.0;
    std::string config_hash;
    std::uint64_t split_seed = 0;
    std::uint64_t eval_seed = 0;
    double wall_time = 0.0;  // seconds
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
    /// Looks a score up by name: r2, acc, factor_vae_score, dci, mig, beta_vae_score.
    double score(const std::string& name) const;
};

/// R2/ACC probe the raw codes (train -> test). The disentanglement scores run
/// on the PCA post-processed test side.
MetricsReport evaluate_all(const RepresentationMatrix& train, const RepresentationMatrix& test,
                           const synth::FactorGrid& grid, std::uint64_t eval_seed, const EvalOptions& opts = {});

}  // namespace disentlab::metrics
