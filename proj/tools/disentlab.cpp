// disentlab command line: dataset export, training, evaluation, sweeps,
// the ideal-representation table and report/correlation emission.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "disentlab/harness/config.hpp"
#include "disentlab/harness/experiment.hpp"
#include "disentlab/harness/report.hpp"
#include "disentlab/harness/sweep.hpp"
#include "disentlab/idealrep/idealrep.hpp"
#include "disentlab/neural/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace disentlab;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::string data;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool force = false;
};

harness::ExperimentConfig load_config(const Common& c) {
    return c.config.empty() ? harness::ExperimentConfig{} : harness::ExperimentConfig::load(c.config);
}

fs::path data_dir(const Common& c) {
    if (!c.data.empty()) return c.data;
    if (const char* env = std::getenv("DISENTLAB_DATA_DIR"); env && *env) return env;
    throw std::runtime_error("no dataset: pass --data or set DISENTLAB_DATA_DIR");
}

void refuse_overwrite(const fs::path& p, bool force) {
    if (fs::exists(p) && !force) throw std::runtime_error(p.string() + " exists (use --force to overwrite)");
}

int gen_data(const Common& c) {
    auto cfg = load_config(c);
    if (c.seed) cfg.dataset.split_seed = *c.seed;
    const fs::path out = c.out;
    refuse_overwrite(out / "dataset.bin", c.force);
    const synth::ObservationModel model(cfg.dataset.grid, cfg.dataset.observation);
    const auto split = synth::split_combinations(cfg.dataset.grid, cfg.dataset.split_ratio, cfg.dataset.split_seed);
    synth::export_dataset(out, model, split);
    std::cout << "wrote " << model.grid().total_combinations() << " observations (" << split.train.size() << " train, "
              << split.test.size() << " test combinations) to " << out << '\n';
    return 0;
}

int train(const Common& c) {
    auto cfg = load_config(c);
    if (c.seed) cfg.model.seed = *c.seed;
    const auto data = harness::open_dataset(data_dir(c));
    const fs::path out = c.out;
    refuse_overwrite(out / "model.ckpt", c.force);
    fs::create_directories(out);
    auto result = harness::train_model(cfg.model, data.model, data.split, cfg.eval.log_every, out / "loss.csv");
    if (result.status != "ok") {
        std::cerr << "training failed: " << result.error << '\n';
        return 1;
    }
    neural::save_checkpoint(out / "model.ckpt", result.model.to_checkpoint());
    std::ofstream(out / "config.json") << cfg.model.to_json().dump(2) << '\n';
    std::cout << "trained " << losses::to_string(result.model.config().method) << " for " << result.model.step()
              << " steps; checkpoint in " << out / "model.ckpt" << '\n';
    return 0;
}

int eval(const Common& c, const std::string& checkpoint) {
    auto cfg = load_config(c);
    if (c.seed) cfg.eval.eval_seed = *c.seed;
    const auto data = harness::open_dataset(data_dir(c));
    const auto model = losses::VaeModel::from_checkpoint(neural::load_checkpoint(checkpoint));
    if (model.input_dim() != data.model.spec().d_x) throw std::runtime_error("checkpoint input width does not match dataset");
    const auto pools = harness::make_eval_pools(data.model, data.split, cfg.eval);
    const auto [tr, te] = harness::encode_pools(model, pools);
    auto report = metrics::evaluate_all(tr, te, data.model.grid(), cfg.eval.eval_seed, cfg.eval.options);
    report.split_seed = data.split.seed;
    harness::RunConfig rc{model.config(), data.config, cfg.eval};
    report.config_hash = rc.hash();
    const auto line = report.to_json().dump();
    if (c.out.empty()) {
        std::cout << line << '\n';
    } else {
        std::ofstream out(c.out, std::ios::app);
        if (!out) throw std::runtime_error("cannot write " + c.out);
        out << line << '\n';
        std::cout << line << '\n';
    }
    return 0;
}

int sweep(const Common& c) {
    auto cfg = load_config(c);
    if (!c.data.empty() || std::getenv("DISENTLAB_DATA_DIR")) {
        // grid and generator come from the exported dataset when one is given
        try {
            const auto data = harness::open_dataset(data_dir(c));
            cfg.dataset.grid = data.config.grid;
            cfg.dataset.observation = data.config.observation;
        } catch (const std::exception& e) {
            if (!c.data.empty()) throw;
        }
    }
    if (c.seed) cfg.eval.eval_seed = *c.seed;
    if (c.out.empty()) throw std::runtime_error("sweep needs --out");
    const auto total = harness::expand_sweep(cfg).size();
    std::size_t finished = 0;
    harness::SweepOptions opts{c.workers, c.force, [&](const harness::RunRecord& r) {
                                   std::cout << '[' << ++finished << "] " << r.hash << ' '
                                             << losses::to_string(r.config.model.method) << " D="
                                             << r.config.model.unit_dim << " gamma=" << r.config.model.gamma
                                             << " seed=" << r.config.model.seed << ' ' << r.status << " acc="
                                             << r.metrics.acc << '\n'
                                             << std::flush;
                               }};
    std::cout << total << " runs in sweep\n";
    const auto records = harness::run_sweep(cfg, c.out, opts);
    std::size_t failed = 0;
    for (const auto& r : records) failed += r.status != "ok";
    std::cout << records.size() << " records (" << failed << " failed) in " << fs::path(c.out) / "results.jsonl" << '\n';
    return 0;
}

int ideal_exp(const Common& c, const std::vector<std::string>& checkpoints, bool no_learned, int unit_dim) {
    auto cfg = load_config(c);
    if (c.seed) cfg.eval.eval_seed = *c.seed;
    const auto data = harness::open_dataset(data_dir(c));
    const auto pools = harness::make_eval_pools(data.model, data.split, cfg.eval);

    std::vector<idealrep::LearnedSource> sources;
    auto add_source = [&](const losses::VaeModel& m) {
        const auto [tr, te] = harness::encode_pools(m, pools);
        sources.push_back({losses::to_string(m.config().method), tr, te});
    };
    for (const auto& path : checkpoints) {
        const auto m = losses::VaeModel::from_checkpoint(neural::load_checkpoint(path));
        if (m.config().unit_dim != 1) throw std::runtime_error(path + ": mapped rows need a scalar model");
        add_source(m);
    }
    if (checkpoints.empty() && !no_learned) {
        for (auto method : {losses::Method::beta_tcvae, losses::Method::factor_vae}) {
            auto mc = cfg.model;
            mc.method = method;
            mc.unit_dim = 1;
            if (mc.gamma == 0.0) mc.gamma = 10.0;
            std::cout << "training " << losses::to_string(method) << " (" << mc.steps << " steps)\n" << std::flush;
            auto trained = harness::train_model(mc, data.model, data.split, cfg.eval.log_every);
            if (trained.status != "ok") throw std::runtime_error(trained.error);
            add_source(trained.model);
        }
    }

    idealrep::Table2Options opts;
    opts.unit_dim = unit_dim;
    opts.eval_seed = cfg.eval.eval_seed;
    opts.eval = cfg.eval.options;
    const auto rows = idealrep::run_table2(data.model.grid(), pools.train_tuples, pools.test_tuples, sources, opts);
    const fs::path out = c.out.empty() ? fs::path("table2.csv") : fs::path(c.out);
    idealrep::write_table2_csv(out, rows);
    for (const auto& r : rows)
        std::cout << r.group << ',' << r.method << ',' << r.report.r2 << ',' << r.report.acc << ',' << r.report.dci << '\n';
    std::cout << "wrote " << out << '\n';
    return 0;
}

int report(const Common& c, const std::string& results) {
    const auto records = harness::read_records(results);
    if (records.empty()) throw std::runtime_error("no records in " + results);
    const fs::path out = c.out.empty() ? fs::path("report") : fs::path(c.out);
    harness::emit_report(records, out);
    std::cout << "report for " << records.size() << " records in " << out << '\n';
    return 0;
}

int correlate(const Common& c, const std::string& results, std::vector<std::string> xs, std::vector<std::string> ys) {
    const auto records = harness::read_records(results);
    if (records.empty()) throw std::runtime_error("no records in " + results);
    std::vector<harness::CorrelationEntry> entries;
    for (const auto& x : xs)
        for (const auto& y : ys) {
            auto e = harness::correlation_report(records, x, y);
            entries.insert(entries.end(), e.begin(), e.end());
        }
    std::cout << harness::correlation_markdown(entries);
    if (!c.out.empty()) harness::write_correlation_csv(c.out, entries);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"disentlab: vector-based disentanglement laboratory"};
    app.require_subcommand(1);
    Common c;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", c.config, "JSON config with dataset/model/sweep/eval sections")->check(CLI::ExistingFile);
        sub->add_option("--out", c.out, "output path");
        sub->add_option("--seed", c.seed, "seed override");
        sub->add_flag("--force", c.force, "overwrite existing outputs / re-run finished runs");
    };
    auto add_data = [&](CLI::App* sub) {
        sub->add_option("--data", c.data, "dataset directory (default $DISENTLAB_DATA_DIR)");
    };

    auto* gen = app.add_subcommand("gen-data", "render the synthetic dataset and its split");
    add_common(gen);
    gen->get_option("--out")->required();

    auto* tr = app.add_subcommand("train", "train one model from the config's model section");
    add_common(tr);
    add_data(tr);
    tr->get_option("--out")->required();

    std::string checkpoint;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint, printing one JSON metrics line");
    add_common(ev);
    add_data(ev);
    ev->add_option("--checkpoint", checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);

    auto* sw = app.add_subcommand("sweep", "run the config's sweep into <out>/results.jsonl");
    add_common(sw);
    add_data(sw);
    sw->add_option("--workers", c.workers, "parallel runs")->check(CLI::PositiveNumber);

    std::vector<std::string> sources;
    bool no_learned = false;
    int unit_dim = 16;
    auto* ideal = app.add_subcommand("ideal-exp", "ideal/corrupted/mapped representation table");
    add_common(ideal);
    add_data(ideal);
    ideal->add_option("--checkpoint", sources, "scalar model checkpoint(s) for the mapped rows");
    ideal->add_flag("--no-learned", no_learned, "only the ideal rows");
    ideal->add_option("--unit-dim", unit_dim, "vector size of the vector rows")->check(CLI::Range(2, 1024));

    std::string results;
    auto* rep = app.add_subcommand("report", "mean/std tables and curves from a results file");
    add_common(rep);
    rep->add_option("results", results, "results.jsonl")->required()->check(CLI::ExistingFile);

    std::vector<std::string> xs{"dci", "factor_vae_score"}, ys{"acc", "r2"};
    auto* cor = app.add_subcommand("correlate", "per-method Pearson r between metrics");
    add_common(cor);
    cor->add_option("results", results, "results.jsonl")->required()->check(CLI::ExistingFile);
    cor->add_option("--x", xs, "disentanglement metrics");
    cor->add_option("--y", ys, "generalization metrics");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return gen_data(c);
        if (*tr) return train(c);
        if (*ev) return eval(c, checkpoint);
        if (*sw) return sweep(c);
        if (*ideal) return ideal_exp(c, sources, no_learned, unit_dim);
        if (*rep) return report(c, results);
        if (*cor) return correlate(c, results, xs, ys);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
