#include "disentlab/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "disentlab/numerics/stats.hpp"

namespace disentlab::harness {

namespace {

const std::vector<std::string> kMetrics{"r2", "acc", "factor_vae_score", "dci", "mig", "beta_vae_score"};

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

using CellKey = std::tuple<std::string, int, double, int, int>;

CellKey key_of(const RunRecord& r) {
    const auto& m = r.config.model;
    return {losses::to_string(m.method), m.unit_dim, m.gamma, r.config.dataset.split_ratio.first,
            r.config.dataset.split_ratio.second};
}

}  // namespace

std::vector<CorrelationEntry> correlation_report(const std::vector<RunRecord>& records, const std::string& metric_x,
                                                 const std::string& metric_y) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : records) {
        if (r.status != "ok") continue;
        auto& g = groups[losses::to_string(r.config.model.method)];
        g.first.push_back(r.metrics.score(metric_x));
        g.second.push_back(r.metrics.score(metric_y));
    }
    std::vector<CorrelationEntry> out;
    for (const auto& [method, xy] : groups) {
        CorrelationEntry e{method, metric_x, metric_y, static_cast<int>(xy.first.size()), std::nullopt};
        if (e.n >= 3) {
            try {
                e.r = numerics::pearson_correlation(xy.first, xy.second);
            } catch (const std::domain_error&) {
                // constant metric within the group
            }
        }
        out.push_back(e);
    }
    return out;
}

std::string correlation_markdown(const std::vector<CorrelationEntry>& entries) {
    std::vector<std::string> methods, pairs;
    std::map<std::pair<std::string, std::string>, const CorrelationEntry*> cell;
    for (const auto& e : entries) {
        const auto pair = e.metric_x + " ~ " + e.metric_y;
        if (std::find(methods.begin(), methods.end(), e.method) == methods.end()) methods.push_back(e.method);
        if (std::find(pairs.begin(), pairs.end(), pair) == pairs.end()) pairs.push_back(pair);
        cell[{e.method, pair}] = &e;
    }
    std::ostringstream out;
    out << "| method |";
    for (const auto& p : pairs) out << ' ' << p << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < pairs.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& m : methods) {
        out << "| " << m << " |";
        for (const auto& p : pairs) {
            const auto it = cell.find({m, p});
            if (it == cell.end() || !it->second->r) {
                out << " undefined |";
            } else {
                char buf[32];
                std::snprintf(buf, sizeof buf, " %.3f |", *it->second->r);
                out << buf;
            }
        }
        out << '\n';
    }
    return out.str();
}

void write_correlation_csv(const std::filesystem::path& path, const std::vector<CorrelationEntry>& entries) {
    auto out = open_out(path);
    out << "method,metric_x,metric_y,n,r\n";
    for (const auto& e : entries)
        out << e.method << ',' << e.metric_x << ',' << e.metric_y << ',' << e.n << ',' << (e.r ? exact(*e.r) : "undefined")
            << '\n';
}

std::vector<CellStat> aggregate_cells(const std::vector<RunRecord>& records) {
    std::map<CellKey, std::vector<const RunRecord*>> groups;
    for (const auto& r : records)
        if (r.status == "ok") groups[key_of(r)].push_back(&r);
    std::vector<CellStat> out;
    for (const auto& [key, runs] : groups) {
        for (const auto& metric : kMetrics) {
            double sum = 0.0;
            for (const auto* r : runs) sum += r->metrics.score(metric);
            const double n = static_cast<double>(runs.size());
            const double mean = sum / n;
            double ss = 0.0;
            for (const auto* r : runs) ss += (r->metrics.score(metric) - mean) * (r->metrics.score(metric) - mean);
            const auto& [method, d, gamma, a, b] = key;
            out.push_back({method, d, gamma, a, b, metric, mean, std::sqrt(ss / n), static_cast<int>(runs.size())});
        }
    }
    return out;
}

std::string format_mean_std(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean, std);
    return buf;
}

void write_cells_csv(const std::filesystem::path& path, const std::vector<CellStat>& cells) {
    auto out = open_out(path);
    out << "method,unit_dim,gamma,ratio_train,ratio_test,metric,mean,std,n\n";
    for (const auto& c : cells)
        out << c.method << ',' << c.unit_dim << ',' << exact(c.gamma) << ',' << c.ratio_train << ',' << c.ratio_test
            << ',' << c.metric << ',' << exact(c.mean) << ',' << exact(c.std) << ',' << c.n << '\n';
}

std::vector<CellStat> read_cells_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "method,unit_dim,gamma,ratio_train,ratio_test,metric,mean,std,n")
        throw std::runtime_error(path.string() + ": unexpected header");
    std::vector<CellStat> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 9) throw std::runtime_error(path.string() + ": malformed row: " + line);
        out.push_back({f[0], std::stoi(f[1]), std::strtod(f[2].c_str(), nullptr), std::stoi(f[3]), std::stoi(f[4]), f[5],
                       std::strtod(f[6].c_str(), nullptr), std::strtod(f[7].c_str(), nullptr), std::stoi(f[8])});
    }
    return out;
}

void emit_report(const std::vector<RunRecord>& records, const std::filesystem::path& out_dir) {
    const auto cells = aggregate_cells(records);
    if (cells.empty()) throw std::runtime_error("emit_report: no successful records");
    std::filesystem::create_directories(out_dir);
    write_cells_csv(out_dir / "cells.csv", cells);

    // one row per (method, D, gamma, ratio), metrics in kMetrics order
    std::map<CellKey, std::map<std::string, const CellStat*>> rows;
    for (const auto& c : cells) rows[{c.method, c.unit_dim, c.gamma, c.ratio_train, c.ratio_test}][c.metric] = &c;

    auto md = open_out(out_dir / "table1.md");
    auto csv = open_out(out_dir / "table1.csv");
    md << "| method | D | gamma | split | runs |";
    csv << "method,unit_dim,gamma,split,runs";
    for (const auto& m : kMetrics) {
        md << ' ' << m << " |";
        csv << ',' << m;
    }
    md << "\n|---|---|---|---|---|";
    for (std::size_t i = 0; i < kMetrics.size(); ++i) md << "---|";
    md << '\n';
    csv << '\n';
    for (const auto& [key, stats] : rows) {
        const auto& [method, d, gamma, a, b] = key;
        const int n = stats.begin()->second->n;
        md << "| " << method << " | " << d << " | " << gamma << " | " << a << ':' << b << " | " << n << " |";
        csv << method << ',' << d << ',' << gamma << ',' << a << ':' << b << ',' << n;
        for (const auto& m : kMetrics) {
            const auto s = format_mean_std(stats.at(m)->mean, stats.at(m)->std);
            md << ' ' << s << " |";
            csv << ',' << s;
        }
        md << '\n';
        csv << '\n';
    }

    auto curve = [&](const std::filesystem::path& p, bool by_d) {
        auto out = open_out(p);
        out << "method," << (by_d ? "gamma,split,unit_dim" : "unit_dim,split,gamma");
        for (const auto& m : kMetrics) out << ',' << m << "_mean," << m << "_std";
        out << '\n';
        std::vector<std::pair<CellKey, const std::map<std::string, const CellStat*>*>> order;
        for (const auto& [key, stats] : rows) order.emplace_back(key, &stats);
        std::stable_sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
            const auto& [m1, d1, g1, a1, b1] = x.first;
            const auto& [m2, d2, g2, a2, b2] = y.first;
            return by_d ? std::tie(m1, g1, a1, b1, d1) < std::tie(m2, g2, a2, b2, d2)
                        : std::tie(m1, d1, a1, b1, g1) < std::tie(m2, d2, a2, b2, g2);
        });
        for (const auto& [key, stats] : order) {
            const auto& [method, d, gamma, a, b] = key;
            if (by_d)
                out << method << ',' << exact(gamma) << ',' << a << ':' << b << ',' << d;
            else
                out << method << ',' << d << ',' << a << ':' << b << ',' << exact(gamma);
            for (const auto& m : kMetrics) out << ',' << exact(stats->at(m)->mean) << ',' << exact(stats->at(m)->std);
            out << '\n';
        }
    };
    curve(out_dir / "curves_vs_d.csv", true);
    curve(out_dir / "curves_vs_gamma.csv", false);
}

}  // namespace disentlab::harness
