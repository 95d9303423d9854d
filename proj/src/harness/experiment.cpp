#include "disentlab/harness/experiment.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

#include "disentlab/errors.hpp"

namespace disentlab::harness {

nlohmann::json RunRecord::to_json() const {
    nlohmann::json j{{"hash", hash},
                     {"config", config.to_json()},
                     {"metrics", metrics.to_json()},
                     {"loss_curve", loss_curve},
                     {"wall_time", wall_time},
                     {"status", status}};
    if (status != "ok") {
        j["failed_step"] = failed_step;
        j["error"] = error;
    }
    return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
    RunRecord r;
    r.hash = j.at("hash").get<std::string>();
    r.config = RunConfig::from_json(j.at("config"));
    r.metrics = metrics::MetricsReport::from_json(j.at("metrics"));
    r.loss_curve = j.value("loss_curve", std::string{});
    r.wall_time = j.value("wall_time", 0.0);
    r.status = j.value("status", std::string{"ok"});
    r.failed_step = j.value("failed_step", -1L);
    r.error = j.value("error", std::string{});
    return r;
}

OpenedDataset open_dataset(const std::filesystem::path& dir) {
    const auto header = synth::read_dataset_header(dir);
    auto split = synth::read_split(dir);
    DatasetConfig cfg;
    cfg.grid = header.grid;
    cfg.observation = header.spec;
    cfg.split_ratio = split.ratio;
    cfg.split_seed = split.seed;
    synth::ObservationModel model(header.grid, header.spec, false);
    if (model.spec_hash() != header.spec_hash)
        throw std::runtime_error(dir.string() + ": generator hash does not match the dataset header");
    return {std::move(cfg), std::move(model), std::move(split)};
}

namespace {

IndexMatrix draw_pool(const synth::FactorGrid& grid, const std::vector<std::uint64_t>& side, int size,
                      numerics::RngStream rng) {
    const auto n = std::min<std::size_t>(side.size(), static_cast<std::size_t>(size));
    // partial Fisher-Yates over positions
    std::vector<std::uint64_t> pos(side.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
    std::vector<std::uint64_t> picked(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pos.size() - i));
        std::swap(pos[i], pos[j]);
        picked[i] = side[pos[i]];
    }
    return synth::tuples_to_matrix(grid, picked);
}

}  // namespace

EvalPools make_eval_pools(const synth::ObservationModel& data, const synth::SplitMask& split, const EvalConfig& eval) {
    const numerics::RngStream root = numerics::RngStream(eval.eval_seed).child("pools");
    EvalPools p;
    p.train_tuples = draw_pool(data.grid(), split.train, eval.train_pool, root.child("train"));
    p.test_tuples = draw_pool(data.grid(), split.test, eval.test_pool, root.child("test"));
    const bool noisy = data.spec().noise_std > 0.0;
    const auto train_noise = root.child("train-noise"), test_noise = root.child("test-noise");
    p.train_obs = data.render_batch(p.train_tuples, noisy ? &train_noise : nullptr);
    p.test_obs = data.render_batch(p.test_tuples, noisy ? &test_noise : nullptr);
    return p;
}

std::pair<metrics::RepresentationMatrix, metrics::RepresentationMatrix> encode_pools(const losses::VaeModel& model,
                                                                                     const EvalPools& pools) {
    const auto& c = model.config();
    return {metrics::RepresentationMatrix{model.encode_mean(pools.train_obs), pools.train_tuples, c.units, c.unit_dim,
                                          synth::Side::train},
            metrics::RepresentationMatrix{model.encode_mean(pools.test_obs), pools.test_tuples, c.units, c.unit_dim,
                                          synth::Side::test}};
}

TrainResult train_model(const losses::ModelConfig& config, const synth::ObservationModel& data,
                        const synth::SplitMask& split, int log_every,
                        const std::optional<std::filesystem::path>& loss_csv) {
    auto cfg = config.normalized();
    if (cfg.dataset_size == 0) cfg.dataset_size = split.train.size();
    TrainResult result{losses::VaeModel(cfg, data.spec().d_x), "ok", -1, {}};
    std::ofstream log;
    if (loss_csv) {
        log.open(*loss_csv);
        if (!log) throw std::runtime_error("cannot write " + loss_csv->string());
        log << "step,recon,kl,tc,disc_acc\n";
    }
    const numerics::RngStream root(cfg.seed);
    auto batch_rng = root.child("batches");
    auto step_rng = root.child("steps");
    try {
        for (long step = 0; step < cfg.steps; ++step) {
            const auto batch = synth::sample_batch(data, split, synth::Side::train, cfg.batch, batch_rng);
            const auto loss = result.model.train_step(batch.observations, step_rng);
            if (log.is_open() && (step % log_every == 0 || step + 1 == cfg.steps))
                log << step << ',' << loss.recon << ',' << loss.kl << ',' << loss.tc << ',' << loss.disc_acc << '\n';
        }
    } catch (const DivergenceError& e) {
        result.status = "failed";
        result.failed_step = e.step();
        result.error = e.what();
    }
    return result;
}

RunRecord run_experiment(const RunConfig& config, const synth::ObservationModel& data, const synth::SplitMask& split,
                         const std::optional<std::filesystem::path>& out_root) {
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config = config;
    rec.hash = config.hash();

    std::optional<std::filesystem::path> run_dir, loss_csv;
    if (out_root) {
        const auto rel = std::filesystem::path("runs") / rec.hash;
        run_dir = *out_root / rel;
        std::filesystem::create_directories(*run_dir);
        loss_csv = *run_dir / "loss.csv";
        rec.loss_curve = (rel / "loss.csv").generic_string();
    }

    auto trained = train_model(config.model, data, split, config.eval.log_every, loss_csv);
    rec.status = trained.status;
    rec.failed_step = trained.failed_step;
    rec.error = trained.error;
    if (rec.status == "ok") {
        const auto pools = make_eval_pools(data, split, config.eval);
        const auto [train, test] = encode_pools(trained.model, pools);
        rec.metrics = metrics::evaluate_all(train, test, data.grid(), config.eval.eval_seed, config.eval.options);
        if (run_dir) neural::save_checkpoint(*run_dir / "model.ckpt", trained.model.to_checkpoint());
    }
    rec.metrics.config_hash = rec.hash;
    rec.metrics.split_seed = split.seed;
    rec.metrics.eval_seed = config.eval.eval_seed;
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (run_dir) {
        std::ofstream(*run_dir / "record.json") << rec.to_json().dump(2) << '\n';
    }
    return rec;
}

}  // namespace disentlab::harness
