#include "disentlab/metrics/scores.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "disentlab/numerics/stats.hpp"

namespace disentlab::metrics {

namespace {

void require_scalar_units(const RepresentationMatrix& rep, const char* who) {
    rep.validate();
    if (rep.unit_dim != 1) throw std::invalid_argument(std::string(who) + ": expects one column per unit");
    if (rep.rows() < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 rows");
}

std::size_t distinct_count(const std::vector<int>& v) { return std::set<int>(v.begin(), v.end()).size(); }

/// buckets[f][value] = rows with that value of factor f.
std::vector<std::map<int, std::vector<Eigen::Index>>> factor_buckets(const RepresentationMatrix& rep) {
    std::vector<std::map<int, std::vector<Eigen::Index>>> out(static_cast<std::size_t>(rep.factors.cols()));
    for (Eigen::Index r = 0; r < rep.rows(); ++r)
        for (Eigen::Index f = 0; f < rep.factors.cols(); ++f) out[static_cast<std::size_t>(f)][rep.factors(r, f)].push_back(r);
    return out;
}

/// Entropy of a nonnegative weight vector normalized to a distribution,
/// in units of log(base). Zero when base <= 1.
double normalized_entropy(const Vector& w, double base) {
    if (base <= 1.0) return 0.0;
    const double s = w.sum();
    if (s <= 0.0) return 0.0;
    double h = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double p = w(i) / s;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h / std::log(base);
}

}  // namespace

CompGenResult comp_gen_eval(const RepresentationMatrix& train, const RepresentationMatrix& test,
                            const synth::FactorGrid& grid, numerics::RngStream rng, int n_label) {
    train.validate();
    test.validate();
    if (train.codes.cols() != test.codes.cols()) throw std::invalid_argument("comp_gen_eval: code widths differ");
    if (train.factors.cols() != static_cast<Eigen::Index>(grid.num_factors()) ||
        test.factors.cols() != train.factors.cols())
        throw std::invalid_argument("comp_gen_eval: factor count does not match grid");
    if (n_label < 5 || train.rows() < n_label)
        throw std::invalid_argument("comp_gen_eval: train side has fewer than n_label rows");
    if (test.rows() < 1) throw std::invalid_argument("comp_gen_eval: empty test side");

    auto subsample = [&](numerics::RngStream s) {
        auto perm = s.permutation(static_cast<std::size_t>(train.rows()));
        std::vector<Eigen::Index> rows(perm.begin(), perm.begin() + n_label);
        std::sort(rows.begin(), rows.end());
        return train.select_rows(rows);
    };
    const RepresentationMatrix labeled = subsample(rng.child("subsample"));

    CompGenResult out;
    double r2_sum = 0.0, acc_sum = 0.0;
    int used = 0;
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t f = 0; f < grid.num_factors(); ++f) {
        const auto fi = static_cast<Eigen::Index>(f);
        RepresentationMatrix fit = labeled;
        if (distinct_count(fit.factor_column(fi)) < 2) {
            fit = subsample(rng.child("resample").child(f));
            if (distinct_count(fit.factor_column(fi)) < 2) {
                out.warnings.push_back("factor " + grid.names[f] + " dropped: single value in labeled subsample");
                out.r2_per_factor.push_back(nan);
                out.acc_per_factor.push_back(nan);
                continue;
            }
        }
        Vector y_fit(fit.rows()), y_test(test.rows());
        for (Eigen::Index r = 0; r < fit.rows(); ++r) y_fit(r) = grid.normalized(f, fit.factors(r, fi));
        for (Eigen::Index r = 0; r < test.rows(); ++r) y_test(r) = grid.normalized(f, test.factors(r, fi));
        const auto ridge = ridge_cv_fit(fit.codes, y_fit);
        for (const auto& w : ridge.warnings) out.warnings.push_back("factor " + grid.names[f] + ": " + w);
        const double r2 = r2_score(y_test, ridge.predict(test.codes));

        const auto logit = logistic_cv_fit(fit.codes, fit.factor_column(fi));
        const double acc = logit.model.accuracy(test.codes, test.factor_column(fi));

        out.r2_per_factor.push_back(r2);
        out.acc_per_factor.push_back(acc);
        r2_sum += r2;
        acc_sum += acc;
        ++used;
    }
    if (used == 0) throw std::runtime_error("comp_gen_eval: every factor was dropped");
    out.r2 = r2_sum / used;
    out.acc = acc_sum / used;
    return out;
}

double factor_vae_score(const RepresentationMatrix& rep, const synth::FactorGrid& grid, numerics::RngStream rng,
                        int votes, int probe_batch) {
    require_scalar_units(rep, "factor_vae_score");
    if (votes < 1 || probe_batch < 2) throw std::invalid_argument("factor_vae_score: bad vote settings");
    const auto nf = static_cast<Eigen::Index>(grid.num_factors());
    const Eigen::Index m = rep.codes.cols();

    const Vector mean = rep.codes.colwise().mean().transpose();
    const Vector sd = ((rep.codes.rowwise() - mean.transpose()).array().square().colwise().sum() /
                       static_cast<double>(rep.rows()))
                          .sqrt()
                          .transpose();
    std::vector<Eigen::Index> active;
    for (Eigen::Index c = 0; c < m; ++c)
        if (sd(c) > 0.0) active.push_back(c);
    if (active.empty()) return 0.0;

    const auto buckets = factor_buckets(rep);
    auto vote = [&](numerics::RngStream& s) {
        const auto k = static_cast<Eigen::Index>(s.below(static_cast<std::uint64_t>(nf)));
        const auto anchor = static_cast<Eigen::Index>(s.below(static_cast<std::uint64_t>(rep.rows())));
        const auto& bucket = buckets[static_cast<std::size_t>(k)].at(rep.factors(anchor, k));
        Matrix probe(probe_batch, m);
        for (int i = 0; i < probe_batch; ++i)
            probe.row(i) = rep.codes.row(bucket[static_cast<std::size_t>(s.below(bucket.size()))]);
        const Vector pm = probe.colwise().mean().transpose();
        Eigen::Index best = active.front();
        double best_var = std::numeric_limits<double>::infinity();
        for (auto c : active) {
            const double v = (probe.col(c).array() - pm(c)).square().mean() / (sd(c) * sd(c));
            if (v < best_var) {
                best_var = v;
                best = c;
            }
        }
        return std::pair{best, k};
    };

    Eigen::MatrixXi tally = Eigen::MatrixXi::Zero(m, nf);
    auto train_rng = rng.child("train-votes");
    for (int v = 0; v < votes; ++v) {
        const auto [c, k] = vote(train_rng);
        ++tally(c, k);
    }
    std::vector<Eigen::Index> classifier(static_cast<std::size_t>(m));
    for (Eigen::Index c = 0; c < m; ++c) tally.row(c).maxCoeff(&classifier[static_cast<std::size_t>(c)]);

    auto eval_rng = rng.child("eval-votes");
    int hit = 0;
    for (int v = 0; v < votes; ++v) {
        const auto [c, k] = vote(eval_rng);
        hit += classifier[static_cast<std::size_t>(c)] == k;
    }
    return static_cast<double>(hit) / votes;
}

MigResult mig(const RepresentationMatrix& rep, const synth::FactorGrid& grid, int bins) {
    require_scalar_units(rep, "mig");
    const auto nf = static_cast<Eigen::Index>(grid.num_factors());
    const Eigen::Index m = rep.codes.cols();
    MigResult out;
    out.mutual_information = Matrix::Zero(m, nf);
    std::vector<double> column(static_cast<std::size_t>(rep.rows()));
    for (Eigen::Index u = 0; u < m; ++u) {
        for (Eigen::Index r = 0; r < rep.rows(); ++r) column[static_cast<std::size_t>(r)] = rep.codes(r, u);
        for (Eigen::Index f = 0; f < nf; ++f) {
            const auto labels = rep.factor_column(f);
            out.mutual_information(u, f) = numerics::discretized_mutual_information(column, labels, bins);
        }
    }
    double sum = 0.0;
    int used = 0;
    for (Eigen::Index f = 0; f < nf; ++f) {
        const auto labels = rep.factor_column(f);
        const double h = numerics::discrete_entropy(labels);
        if (h <= 0.0) continue;
        std::vector<double> mi(out.mutual_information.col(f).data(), out.mutual_information.col(f).data() + m);
        std::sort(mi.begin(), mi.end(), std::greater<>());
        const double gap = mi[0] - (m > 1 ? mi[1] : 0.0);
        sum += gap / h;
        ++used;
    }
    out.score = used ? std::clamp(sum / used, 0.0, 1.0) : 0.0;
    return out;
}

double beta_vae_score(const RepresentationMatrix& rep, const synth::FactorGrid& grid, numerics::RngStream rng,
                      int points, int pair_batch) {
    require_scalar_units(rep, "beta_vae_score");
    if (points < 10 || pair_batch < 1) throw std::invalid_argument("beta_vae_score: bad point settings");
    const auto nf = static_cast<Eigen::Index>(grid.num_factors());
    if (nf == 1) return 1.0;
    const Eigen::Index m = rep.codes.cols();
    const auto buckets = factor_buckets(rep);

    Matrix features(points, m);
    std::vector<int> labels(static_cast<std::size_t>(points));
    for (int p = 0; p < points; ++p) {
        auto s = rng.child(static_cast<std::uint64_t>(p));
        const auto k = static_cast<Eigen::Index>(s.below(static_cast<std::uint64_t>(nf)));
        Vector acc = Vector::Zero(m);
        for (int l = 0; l < pair_batch; ++l) {
            const auto a = static_cast<Eigen::Index>(s.below(static_cast<std::uint64_t>(rep.rows())));
            const auto& bucket = buckets[static_cast<std::size_t>(k)].at(rep.factors(a, k));
            const auto b = bucket[static_cast<std::size_t>(s.below(bucket.size()))];
            acc += (rep.codes.row(a) - rep.codes.row(b)).cwiseAbs().transpose();
        }
        features.row(p) = acc.transpose() / pair_batch;
        labels[static_cast<std::size_t>(p)] = static_cast<int>(k);
    }
    const int n_train = points * 4 / 5;
    const Matrix x_train = features.topRows(n_train);
    const Matrix x_eval = features.bottomRows(points - n_train);
    const std::vector<int> y_train(labels.begin(), labels.begin() + n_train);
    const std::vector<int> y_eval(labels.begin() + n_train, labels.end());
    if (distinct_count(y_train) < 2) return 0.0;
    const auto fit = logistic_cv_fit(x_train, y_train);
    return fit.model.accuracy(x_eval, y_eval);
}

double dci_disentanglement(const Matrix& importance) {
    const double total = importance.sum();
    if (total <= 0.0) return 0.0;
    const auto nf = static_cast<double>(importance.cols());
    double out = 0.0;
    for (Eigen::Index u = 0; u < importance.rows(); ++u) {
        const Vector row = importance.row(u).transpose();
        const double mass = row.sum();
        if (mass <= 0.0) continue;
        out += mass / total * (1.0 - normalized_entropy(row, nf));
    }
    return out;
}

double dci_completeness(const Matrix& importance) {
    return dci_disentanglement(importance.transpose());
}

DciResult dci(const RepresentationMatrix& rep, const synth::FactorGrid& grid, numerics::RngStream rng,
              const ForestOptions& forest, double train_fraction) {
    require_scalar_units(rep, "dci");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("dci: train_fraction in (0,1)");
    const auto nf = static_cast<Eigen::Index>(grid.num_factors());
    const auto order = rng.child("rows").permutation(static_cast<std::size_t>(rep.rows()));
    const auto n_train = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::llround(train_fraction * static_cast<double>(rep.rows()))), 1, rep.rows() - 1);
    std::vector<Eigen::Index> train_rows(order.begin(), order.begin() + n_train);
    std::vector<Eigen::Index> test_rows(order.begin() + n_train, order.end());
    const auto train = rep.select_rows(train_rows);
    const auto test = rep.select_rows(test_rows);

    DciResult out;
    out.importance = Matrix::Zero(rep.codes.cols(), nf);
    double info = 0.0;
    for (Eigen::Index f = 0; f < nf; ++f) {
        RandomForest rf;
        rf.fit(train.codes, train.factor_column(f), forest, rng.child("forest").child(static_cast<std::uint64_t>(f)));
        out.importance.col(f) = rf.importance();
        info += rf.accuracy(test.codes, test.factor_column(f));
    }
    out.informativeness = info / static_cast<double>(nf);
    out.disentanglement = dci_disentanglement(out.importance);
    out.completeness = dci_completeness(out.importance);
    return out;
}

}  // namespace disentlab::metrics
