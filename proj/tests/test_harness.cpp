#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "disentlab/harness/config.hpp"
#include "disentlab/harness/experiment.hpp"
#include "disentlab/harness/report.hpp"
#include "disentlab/harness/sweep.hpp"

using namespace disentlab;
using namespace disentlab::harness;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("disentlab_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Small enough for a full train + evaluate in well under a second.
ExperimentConfig tiny_config() {
    auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(R"({
      "dataset": {"grid": {"names": ["a", "b", "c"], "cardinalities": [4, 3, 5]}, "split_ratio": [1, 1]},
      "model": {"steps": 40, "hidden": 16, "batch": 8, "units": 3, "gamma": 2},
      "sweep": {"methods": ["vec_beta_tcvae", "vec_factor_vae"], "unit_dims": [1, 2], "gammas": [2],
                "split_ratios": [[1, 1]], "split_seeds": [0], "model_seeds": 2},
      "eval": {"train_pool": 30, "test_pool": 30, "n_label": 20, "votes": 60, "beta_points": 60, "log_every": 10}
    })"));
    return cfg;
}

RunRecord fake_record(const std::string& method, int d, std::uint64_t seed, double acc, double dci) {
    RunRecord r;
    r.config.model.method = losses::method_from_string(method);
    r.config.model.unit_dim = d;
    r.config.model.gamma = 10;
    r.config.model.seed = seed;
    r.config.dataset.split_ratio = {1, 9};
    r.metrics.acc = acc;
    r.metrics.dci = dci;
    r.hash = r.config.hash();
    return r;
}

}  // namespace

TEST_CASE("config: defaults, sections and seed counts") {
    const auto cfg = ExperimentConfig::from_json(nlohmann::json::object());
    CHECK(cfg.dataset.grid.cardinalities == synth::FactorGrid::defaults().cardinalities);
    CHECK(cfg.dataset.split_ratio == std::pair{1, 9});
    CHECK(cfg.model.steps == 20000);
    CHECK(cfg.eval.train_pool == 2000);
    CHECK(cfg.sweep.unit_dims == std::vector<int>{1, 2, 4, 8, 16, 24, 32, 64});

    const auto t = tiny_config();
    CHECK(t.sweep.model_seeds == std::vector<std::uint64_t>{0, 1});
    CHECK(t.eval.options.votes == 60);
    CHECK(t.model.hidden == 16);
    CHECK(ExperimentConfig::from_json(t.to_json()).to_json() == t.to_json());

    CHECK_THROWS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"modle": {}})")));
    CHECK_THROWS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"eval": {"train_pool": 10}})")));
    CHECK_THROWS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"sweep": {"methods": ["vqvae"]}})")));

    const auto dir = fresh_dir("config");
    std::ofstream(dir / "c.json") << t.to_json().dump();
    CHECK(ExperimentConfig::load(dir / "c.json").to_json() == t.to_json());
    CHECK_THROWS(ExperimentConfig::load(dir / "missing.json"));
}

TEST_CASE("sweep expansion: counts, order, scalar collapse") {
    const auto runs = expand_sweep(tiny_config());
    REQUIRE(runs.size() == 8);
    CHECK(runs[0].model.method == losses::Method::vec_beta_tcvae);
    CHECK(runs[0].model.unit_dim == 1);
    CHECK(runs[1].model.seed == 1);
    CHECK(runs[2].model.unit_dim == 2);
    CHECK(runs[7].model.method == losses::Method::vec_factor_vae);

    auto cfg = tiny_config();
    cfg.sweep.methods = {losses::Method::beta_tcvae};
    cfg.sweep.unit_dims = {1, 16};
    CHECK(expand_sweep(cfg).size() == 2);
}

TEST_CASE("run hashes are unique over the default sweep grid") {
    const auto cfg = ExperimentConfig::from_json(nlohmann::json::object());
    const auto runs = expand_sweep(cfg);
    CHECK(runs.size() == 8 * 7 * 3 * 3 * 5);
    std::set<std::string> hashes;
    for (const auto& r : runs) {
        const auto h = r.hash();
        CHECK(h.size() == 16);
        hashes.insert(h);
    }
    CHECK(hashes.size() == runs.size());
}

TEST_CASE("run_experiment: AE smoke, determinism, persisted files") {
    auto cfg = tiny_config();
    const synth::ObservationModel data(cfg.dataset.grid, cfg.dataset.observation);
    const auto split = synth::split_combinations(cfg.dataset.grid, cfg.dataset.split_ratio, 0);
    RunConfig rc{cfg.model, cfg.dataset, cfg.eval};
    rc.model.method = losses::Method::ae;
    const auto dir = fresh_dir("experiment");
    const auto a = run_experiment(rc, data, split, dir);
    CHECK(a.status == "ok");
    CHECK(a.hash == rc.hash());
    CHECK(a.metrics.config_hash == a.hash);
    for (const char* s : {"acc", "factor_vae_score", "dci", "mig", "beta_vae_score"}) {
        CHECK(a.metrics.score(s) >= 0.0);
        CHECK(a.metrics.score(s) <= 1.0);
    }
    CHECK(a.metrics.r2 <= 1.0);
    const auto run_dir = dir / "runs" / a.hash;
    CHECK(fs::exists(run_dir / "model.ckpt"));
    CHECK(fs::exists(run_dir / "record.json"));
    CHECK(a.loss_curve == (fs::path("runs") / a.hash / "loss.csv").string());
    std::ifstream curve(dir / a.loss_curve);
    std::string header;
    std::getline(curve, header);
    CHECK(header == "step,recon,kl,tc,disc_acc");
    int lines = 0;
    for (std::string l; std::getline(curve, l);) ++lines;
    CHECK(lines == 5);  // steps 0, 10, 20, 30 and the last

    const auto b = run_experiment(rc, data, split, fresh_dir("experiment_again"));
    CHECK(without_wall_time(a) == without_wall_time(b));
    CHECK(RunRecord::from_json(a.to_json()).to_json() == a.to_json());
}

TEST_CASE("run_experiment: divergence is recorded, not thrown") {
    auto cfg = tiny_config();
    const synth::ObservationModel data(cfg.dataset.grid, cfg.dataset.observation);
    const auto split = synth::split_combinations(cfg.dataset.grid, cfg.dataset.split_ratio, 0);
    RunConfig rc{cfg.model, cfg.dataset, cfg.eval};
    rc.model.method = losses::Method::vae;
    rc.model.lr = 1e200;
    rc.model.grad_clip = 1e300;
    const auto dir = fresh_dir("diverge");
    const auto r = run_experiment(rc, data, split, dir);
    CHECK(r.status == "failed");
    CHECK(r.failed_step >= 0);
    CHECK_FALSE(r.error.empty());
    CHECK(fs::exists(dir / "runs" / r.hash / "record.json"));
}

TEST_CASE("run_sweep: worker count does not change the bytes; resume completes") {
    const auto cfg = tiny_config();
    const auto one = fresh_dir("sweep1");
    const auto three = fresh_dir("sweep3");
    const auto r1 = run_sweep(cfg, one, {1, false, {}});
    const auto r3 = run_sweep(cfg, three, {3, false, {}});
    REQUIRE(r1.size() == 8);
    REQUIRE(r3.size() == 8);
    const auto a = read_records(one / "results.jsonl");
    const auto b = read_records(three / "results.jsonl");
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(without_wall_time(a[i]).dump() == without_wall_time(b[i]).dump());

    // second call is a no-op
    int reran = 0;
    run_sweep(cfg, one, {1, false, [&](const RunRecord&) { ++reran; }});
    CHECK(reran == 0);

    // keep three finished lines plus a torn fourth, then resume
    const auto resumed = fresh_dir("sweep_resume");
    {
        std::ifstream in(one / "results.jsonl");
        std::ofstream out(resumed / "results.jsonl");
        std::string line;
        for (int i = 0; i < 3 && std::getline(in, line); ++i) out << line << '\n';
        std::getline(in, line);
        out << line.substr(0, line.size() / 2);
    }
    CHECK(read_records(resumed / "results.jsonl").size() == 3);
    run_sweep(cfg, resumed, {2, false, [&](const RunRecord&) { ++reran; }});
    CHECK(reran == 5);
    const auto c = read_records(resumed / "results.jsonl");
    REQUIRE(c.size() == 8);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(without_wall_time(a[i]).dump() == without_wall_time(c[i]).dump());

    // force reruns everything
    reran = 0;
    run_sweep(cfg, resumed, {2, true, [&](const RunRecord&) { ++reran; }});
    CHECK(reran == 8);
}

TEST_CASE("records: write/read round trip") {
    const auto dir = fresh_dir("records");
    std::vector<RunRecord> recs{fake_record("vec_beta_tcvae", 4, 0, 0.5, 0.6), fake_record("beta_tcvae", 1, 1, 0.3, 0.2)};
    write_records(dir / "r.jsonl", recs);
    const auto back = read_records(dir / "r.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[1].to_json() == recs[1].to_json());
    CHECK(read_records(dir / "none.jsonl").empty());
}

TEST_CASE("correlation_report: identities, undefined cases, tables") {
    std::vector<RunRecord> recs;
    for (int i = 0; i < 6; ++i) recs.push_back(fake_record("vec_beta_tcvae", 16, i, 0.1 * i, 0.1 * i));
    for (int i = 0; i < 4; ++i) recs.push_back(fake_record("factor_vae", 1, i, 0.5, 0.1 * i));
    for (int i = 0; i < 2; ++i) recs.push_back(fake_record("beta_tcvae", 1, i, 0.1 * i, 0.2 * i));
    auto failed = fake_record("vec_beta_tcvae", 16, 9, 100.0, -100.0);
    failed.status = "failed";
    recs.push_back(failed);

    const auto entries = correlation_report(recs, "dci", "acc");
    REQUIRE(entries.size() == 3);
    std::map<std::string, CorrelationEntry> by;
    for (const auto& e : entries) by[e.method] = e;
    REQUIRE(by["vec_beta_tcvae"].r.has_value());
    CHECK(*by["vec_beta_tcvae"].r == doctest::Approx(1.0));
    CHECK(by["vec_beta_tcvae"].n == 6);
    CHECK_FALSE(by["factor_vae"].r.has_value());
    CHECK_FALSE(by["beta_tcvae"].r.has_value());

    const auto md = correlation_markdown(entries);
    CHECK(md.find("undefined") != std::string::npos);
    CHECK(md.find("vec_beta_tcvae") != std::string::npos);
    const auto dir = fresh_dir("corr");
    write_correlation_csv(dir / "c.csv", entries);
    CHECK(slurp(dir / "c.csv").find("method") == 0);
    CHECK_THROWS(correlation_report(recs, "dci", "accuracy"));
}

TEST_CASE("report: cells, formatting, CSV round trip, files") {
    std::vector<RunRecord> recs;
    for (int s = 0; s < 3; ++s) recs.push_back(fake_record("vec_beta_tcvae", 16, s, 0.5 + 0.1 * s, 0.4));
    recs.push_back(fake_record("beta_tcvae", 1, 0, 0.3, 0.2));
    const auto cells = aggregate_cells(recs);
    const auto find = [&](const std::string& m, const std::string& metric) {
        for (const auto& c : cells)
            if (c.method == m && c.metric == metric) return c;
        FAIL("missing cell");
        return CellStat{};
    };
    const auto acc = find("vec_beta_tcvae", "acc");
    CHECK(acc.n == 3);
    CHECK(acc.mean == doctest::Approx(0.6));
    CHECK(acc.std == doctest::Approx(std::sqrt(0.02 / 3.0)));
    const auto single = find("beta_tcvae", "acc");
    CHECK(single.std == 0.0);
    CHECK(format_mean_std(single.mean, single.std) == "0.30 ± 0.00");
    CHECK(format_mean_std(0.98, 0.0149) == "0.98 ± 0.01");

    const auto dir = fresh_dir("report");
    write_cells_csv(dir / "cells.csv", cells);
    CHECK(read_cells_csv(dir / "cells.csv") == cells);

    emit_report(recs, dir / "out");
    for (const char* f : {"cells.csv", "table1.md", "table1.csv", "curves_vs_d.csv", "curves_vs_gamma.csv"})
        CHECK(fs::exists(dir / "out" / f));
    CHECK(slurp(dir / "out" / "table1.md").find("0.30 ± 0.00") != std::string::npos);
    CHECK_THROWS(emit_report({}, dir / "empty"));
}

TEST_CASE("open_dataset: exported directory reopens to the same generator") {
    auto cfg = tiny_config();
    const synth::ObservationModel data(cfg.dataset.grid, cfg.dataset.observation);
    const auto split = synth::split_combinations(cfg.dataset.grid, cfg.dataset.split_ratio, 0);
    const auto dir = fresh_dir("open");
    synth::export_dataset(dir, data, split);
    const auto opened = open_dataset(dir);
    CHECK(opened.model.spec_hash() == data.spec_hash());
    CHECK(opened.split.train == split.train);
    CHECK(opened.model.render({1, 2, 3}) == data.render({1, 2, 3}));

    const auto pools = make_eval_pools(opened.model, opened.split, cfg.eval);
    CHECK(pools.train_tuples.rows() == 30);
    std::set<std::uint64_t> seen;
    for (Eigen::Index r = 0; r < pools.test_tuples.rows(); ++r) {
        synth::FactorTuple t(3);
        for (int f = 0; f < 3; ++f) t[static_cast<std::size_t>(f)] = pools.test_tuples(r, f);
        seen.insert(data.grid().index_of(t));
    }
    CHECK(seen.size() == 30);
    CHECK(std::includes(split.test.begin(), split.test.end(), seen.begin(), seen.end()));
}
