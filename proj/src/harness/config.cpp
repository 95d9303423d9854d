#include "disentlab/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "disentlab/numerics/rng.hpp"

namespace disentlab::harness {

namespace {

std::pair<int, int> ratio_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("split ratio must be a pair [train, test]");
    std::pair<int, int> r{j[0].get<int>(), j[1].get<int>()};
    if (r.first < 1 || r.second < 1) throw std::invalid_argument("split ratio parts must be positive");
    return r;
}

std::vector<std::uint64_t> seeds_from_json(const nlohmann::json& j) {
    std::vector<std::uint64_t> out;
    if (j.is_number_integer()) {
        const auto n = j.get<std::int64_t>();
        if (n < 1) throw std::invalid_argument("seed count must be positive");
        for (std::int64_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint64_t>(i));
    } else {
        out = j.get<std::vector<std::uint64_t>>();
    }
    if (out.empty()) throw std::invalid_argument("seed list is empty");
    return out;
}

}  // namespace

nlohmann::json DatasetConfig::to_json() const {
    return {{"grid", synth::to_json(grid)},
            {"observation", observation.to_json()},
            {"split_ratio", {split_ratio.first, split_ratio.second}},
            {"split_seed", split_seed}};
}

DatasetConfig DatasetConfig::from_json(const nlohmann::json& j) {
    DatasetConfig c;
    if (j.contains("grid")) c.grid = synth::grid_from_json(j.at("grid"));
    if (j.contains("observation")) c.observation = synth::ObservationSpec::from_json(j.at("observation"));
    if (j.contains("split_ratio")) c.split_ratio = ratio_from_json(j.at("split_ratio"));
    c.split_seed = j.value("split_seed", c.split_seed);
    c.grid.validate();
    return c;
}

nlohmann::json EvalConfig::to_json() const {
    auto j = options.to_json();
    j["eval_seed"] = eval_seed;
    j["train_pool"] = train_pool;
    j["test_pool"] = test_pool;
    j["log_every"] = log_every;
    return j;
}

EvalConfig EvalConfig::from_json(const nlohmann::json& j) {
    EvalConfig c;
    c.options = metrics::EvalOptions::from_json(j);
    c.eval_seed = j.value("eval_seed", c.eval_seed);
    c.train_pool = j.value("train_pool", c.train_pool);
    c.test_pool = j.value("test_pool", c.test_pool);
    c.log_every = j.value("log_every", c.log_every);
    if (c.train_pool < c.options.n_label) throw std::invalid_argument("eval: train_pool smaller than n_label");
    if (c.test_pool < 10 || c.log_every < 1) throw std::invalid_argument("eval: bad pool or logging settings");
    return c;
}

nlohmann::json SweepSpec::to_json() const {
    std::vector<std::string> names;
    for (auto m : methods) names.push_back(losses::to_string(m));
    nlohmann::json ratios = nlohmann::json::array();
    for (const auto& [a, b] : split_ratios) ratios.push_back({a, b});
    return {{"methods", names},         {"unit_dims", unit_dims},     {"gammas", gammas},
            {"split_ratios", ratios},   {"split_seeds", split_seeds}, {"model_seeds", model_seeds}};
}

SweepSpec SweepSpec::from_json(const nlohmann::json& j) {
    SweepSpec s;
    if (j.contains("methods")) {
        s.methods.clear();
        for (const auto& m : j.at("methods")) s.methods.push_back(losses::method_from_string(m.get<std::string>()));
    }
    if (j.contains("unit_dims")) s.unit_dims = j.at("unit_dims").get<std::vector<int>>();
    if (j.contains("gammas")) s.gammas = j.at("gammas").get<std::vector<double>>();
    if (j.contains("split_ratios")) {
        s.split_ratios.clear();
        for (const auto& r : j.at("split_ratios")) s.split_ratios.push_back(ratio_from_json(r));
    }
    if (j.contains("split_seeds")) s.split_seeds = seeds_from_json(j.at("split_seeds"));
    if (j.contains("model_seeds")) s.model_seeds = seeds_from_json(j.at("model_seeds"));
    if (s.methods.empty() || s.unit_dims.empty() || s.gammas.empty() || s.split_ratios.empty())
        throw std::invalid_argument("sweep: every grid needs at least one value");
    for (int d : s.unit_dims)
        if (d < 1) throw std::invalid_argument("sweep: unit dims must be positive");
    for (double g : s.gammas)
        if (g < 0.0) throw std::invalid_argument("sweep: gammas must be nonnegative");
    return s;
}

nlohmann::json ExperimentConfig::to_json() const {
    return {{"dataset", dataset.to_json()}, {"model", model.to_json()}, {"sweep", sweep.to_json()}, {"eval", eval.to_json()}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (key != "dataset" && key != "model" && key != "sweep" && key != "eval")
            throw std::invalid_argument("unknown config section: " + key);
    if (j.contains("dataset")) c.dataset = DatasetConfig::from_json(j.at("dataset"));
    if (j.contains("model")) c.model = losses::ModelConfig::from_json(j.at("model"));
    if (j.contains("sweep")) c.sweep = SweepSpec::from_json(j.at("sweep"));
    if (j.contains("eval")) c.eval = EvalConfig::from_json(j.at("eval"));
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad config " + path.string() + ": " + e.what());
    }
}

nlohmann::json RunConfig::to_json() const {
    return {{"model", model.to_json()}, {"dataset", dataset.to_json()}, {"eval", eval.to_json()}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    return {losses::ModelConfig::from_json(j.at("model")), DatasetConfig::from_json(j.at("dataset")),
            EvalConfig::from_json(j.at("eval"))};
}

std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(numerics::fnv1a64(to_json().dump())));
    return buf;
}

}  // namespace disentlab::harness
