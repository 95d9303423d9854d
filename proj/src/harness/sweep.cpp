#include "disentlab/harness/sweep.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

namespace disentlab::harness {

std::vector<RunConfig> expand_sweep(const ExperimentConfig& cfg) {
    std::vector<RunConfig> out;
    std::set<std::string> seen;
    const auto& s = cfg.sweep;
    for (auto method : s.methods) {
        const std::vector<int> dims = losses::is_vector_method(method) ? s.unit_dims : std::vector<int>{1};
        for (int d : dims)
            for (double gamma : s.gammas)
                for (const auto& ratio : s.split_ratios)
                    for (auto split_seed : s.split_seeds)
                        for (auto model_seed : s.model_seeds) {
                            RunConfig rc{cfg.model, cfg.dataset, cfg.eval};
                            rc.model.method = method;
                            rc.model.unit_dim = d;
                            rc.model.gamma = gamma;
                            rc.model.seed = model_seed;
                            rc.model = rc.model.normalized();
                            rc.dataset.split_ratio = ratio;
                            rc.dataset.split_seed = split_seed;
                            if (seen.insert(rc.hash()).second) out.push_back(std::move(rc));
                        }
    }
    return out;
}

std::vector<RunRecord> read_records(const std::filesystem::path& jsonl) {
    std::vector<RunRecord> out;
    std::ifstream in(jsonl);
    if (!in) return out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(RunRecord::from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception&) {
            // a torn final line from an interrupted append; anything earlier is corruption
            if (in.peek() != std::char_traits<char>::eof())
                throw std::runtime_error(jsonl.string() + ":" + std::to_string(lineno) + ": malformed record");
        }
    }
    return out;
}

void write_records(const std::filesystem::path& jsonl, const std::vector<RunRecord>& records) {
    const auto tmp = std::filesystem::path(jsonl.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        for (const auto& r : records) out << r.to_json().dump() << '\n';
    }
    std::filesystem::rename(tmp, jsonl);
}

nlohmann::json without_wall_time(const RunRecord& r) {
    auto j = r.to_json();
    j.erase("wall_time");
    j["metrics"].erase("wall_time");
    return j;
}

std::vector<RunRecord> run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out,
                                 const SweepOptions& opts) {
    if (opts.workers < 1) throw std::invalid_argument("run_sweep: workers must be >= 1");
    std::filesystem::create_directories(out);
    const auto results = out / "results.jsonl";
    const auto configs = expand_sweep(cfg);

    std::map<std::string, RunRecord> done;
    if (!opts.force)
        for (auto& r : read_records(results)) done.insert_or_assign(r.hash, std::move(r));
    std::vector<const RunConfig*> pending;
    for (const auto& c : configs)
        if (!done.contains(c.hash())) pending.push_back(&c);

    if (!pending.empty()) {
        const synth::ObservationModel data(cfg.dataset.grid, cfg.dataset.observation);
        std::map<std::pair<std::pair<int, int>, std::uint64_t>, synth::SplitMask> splits;
        for (const auto* c : pending) {
            const auto key = std::pair{c->dataset.split_ratio, c->dataset.split_seed};
            if (!splits.contains(key))
                splits.emplace(key, synth::split_combinations(cfg.dataset.grid, key.first, key.second));
        }

        std::ofstream journal;
        if (opts.force) {
            journal.open(results, std::ios::trunc);
        } else {
            // rewrite what survived (drops a torn trailing line) before appending
            std::vector<RunRecord> kept;
            for (const auto& [_, r] : done) kept.push_back(r);
            write_records(results, kept);
            journal.open(results, std::ios::app);
        }
        if (!journal) throw std::runtime_error("cannot write " + results.string());

        std::mutex mu;
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= pending.size()) return;
                const auto* c = pending[i];
                try {
                    RunRecord rec;
                    try {
                        rec = run_experiment(*c, data, splits.at({c->dataset.split_ratio, c->dataset.split_seed}), out);
                    } catch (const std::exception& e) {
                        rec.hash = c->hash();
                        rec.config = *c;
                        rec.status = "failed";
                        rec.error = e.what();
                        rec.metrics.config_hash = rec.hash;
                    }
                    std::lock_guard lock(mu);
                    journal << rec.to_json().dump() << '\n' << std::flush;
                    if (opts.on_record) opts.on_record(rec);
                    done.insert_or_assign(rec.hash, std::move(rec));
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        };
        std::vector<std::thread> threads;
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(opts.workers), pending.size());
        for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        journal.close();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<RunRecord> ordered;
    for (const auto& c : configs) ordered.push_back(done.at(c.hash()));
    // records from earlier sweeps that are not part of this spec stay at the end
    std::set<std::string> in_spec;
    for (const auto& c : configs) in_spec.insert(c.hash());
    std::vector<RunRecord> all = ordered;
    for (const auto& [h, r] : done)
        if (!in_spec.contains(h)) all.push_back(r);
    write_records(results, all);
    return ordered;
}

}  // namespace disentlab::harness
