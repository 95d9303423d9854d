#include "disentlab/metrics/report.hpp"

#include <chrono>
#include <stdexcept>

namespace disentlab::metrics {

nlohmann::json EvalOptions::to_json() const {
    return {{"n_label", n_label},
            {"votes", votes},
            {"probe_batch", probe_batch},
            {"beta_points", beta_points},
            {"beta_pair_batch", beta_pair_batch},
            {"mig_bins", mig_bins},
            {"trees", forest.trees},
            {"depth", forest.max_depth},
            {"dci_train_fraction", dci_train_fraction}};
}

EvalOptions EvalOptions::from_json(const nlohmann::json& j) {
    EvalOptions o;
    o.n_label = j.value("n_label", o.n_label);
    o.votes = j.value("votes", o.votes);
    o.probe_batch = j.value("probe_batch", o.probe_batch);
    o.beta_points = j.value("beta_points", o.beta_points);
    o.beta_pair_batch = j.value("beta_pair_batch", o.beta_pair_batch);
    o.mig_bins = j.value("mig_bins", o.mig_bins);
    o.forest.trees = j.value("trees", o.forest.trees);
    o.forest.max_depth = j.value("depth", o.forest.max_depth);
    o.dci_train_fraction = j.value("dci_train_fraction", o.dci_train_fraction);
    return o;
}

nlohmann::json MetricsReport::to_json() const {
    return {{"r2", r2},
            {"acc", acc},
            {"factor_vae_score", factor_vae_score},
            {"dci", dci},
            {"mig", mig},
            {"beta_vae_score", beta_vae_score},
            {"config_hash", config_hash},
            {"split_seed", split_seed},
            {"eval_seed", eval_seed},
            {"wall_time", wall_time},
            {"warnings", warnings}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.r2 = j.at("r2").get<double>();
    r.acc = j.at("acc").get<double>();
    r.factor_vae_score = j.at("factor_vae_score").get<double>();
    r.dci = j.at("dci").get<double>();
    r.mig = j.at("mig").get<double>();
    r.beta_vae_score = j.at("beta_vae_score").get<double>();
    r.config_hash = j.value("config_hash", std::string{});
    r.split_seed = j.value("split_seed", std::uint64_t{0});
    r.eval_seed = j.value("eval_seed", std::uint64_t{0});
    r.wall_time = j.value("wall_time", 0.0);
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
}

double MetricsReport::score(const std::string& name) const {
    if (name == "r2") return r2;
    if (name == "acc") return acc;
    if (name == "factor_vae_score" || name == "factorvae") return factor_vae_score;
    if (name == "dci") return dci;
    if (name == "mig") return mig;
    if (name == "beta_vae_score" || name == "betavae") return beta_vae_score;
    throw std::invalid_argument("unknown metric: " + name);
}

MetricsReport evaluate_all(const RepresentationMatrix& train, const RepresentationMatrix& test,
                           const synth::FactorGrid& grid, std::uint64_t eval_seed, const EvalOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    const numerics::RngStream root(eval_seed);
    MetricsReport report;
    report.eval_seed = eval_seed;

    const auto probes = comp_gen_eval(train, test, grid, root.child("comp-gen"), opts.n_label);
    report.r2 = probes.r2;
    report.acc = probes.acc;
    report.warnings = probes.warnings;

    const auto post = pca_postprocess(train, test);
    for (int u : post.degenerate_units) report.warnings.push_back("unit " + std::to_string(u) + " has zero variance");
    const auto& rep = post.test;
    report.factor_vae_score = factor_vae_score(rep, grid, root.child("factor-vae"), opts.votes, opts.probe_batch);
    report.mig = mig(rep, grid, opts.mig_bins).score;
    report.beta_vae_score = beta_vae_score(rep, grid, root.child("beta-vae"), opts.beta_points, opts.beta_pair_batch);
    report.dci = dci(rep, grid, root.child("dci"), opts.forest, opts.dci_train_fraction).disentanglement;

    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace disentlab::metrics
