#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "disentlab/metrics/forest.hpp"
#include "disentlab/metrics/linear.hpp"
#include "disentlab/metrics/report.hpp"
#include "disentlab/metrics/representation.hpp"
#include "disentlab/metrics/scores.hpp"
#include "disentlab/numerics/stats.hpp"
#include "disentlab/synthdata/dataset.hpp"

using namespace disentlab;
using namespace disentlab::metrics;

namespace {

Matrix normals(Eigen::Index r, Eigen::Index c, numerics::RngStream& rng) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
}

Matrix random_rotation(Eigen::Index n, numerics::RngStream& rng) {
    Eigen::HouseholderQR<Matrix> qr(normals(n, n, rng));
    return qr.householderQ() * Matrix::Identity(n, n);
}

const synth::FactorGrid& test_grid() {
    static const synth::FactorGrid g{{"a", "b", "c", "d"}, {8, 6, 5, 10}};
    return g;
}

/// Rows for one side of a (1,1) split of the test grid.
RepresentationMatrix ideal_side(synth::Side side) {
    const auto& g = test_grid();
    const auto split = synth::split_combinations(g, {1, 1}, 0);
    const auto& idx = split.side(side);
    RepresentationMatrix rep;
    rep.factors = synth::tuples_to_matrix(g, idx);
    rep.codes.resize(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(g.num_factors()));
    for (Eigen::Index r = 0; r < rep.codes.rows(); ++r)
        for (Eigen::Index f = 0; f < rep.codes.cols(); ++f)
            rep.codes(r, f) = g.normalized(static_cast<std::size_t>(f), rep.factors(r, f));
    rep.units = static_cast<int>(g.num_factors());
    rep.side = side;
    return rep;
}

RepresentationMatrix with_codes(RepresentationMatrix rep, Matrix codes) {
    rep.codes = std::move(codes);
    return rep;
}

double chance_acc(const synth::FactorGrid& g) {
    double s = 0.0;
    for (int c : g.cardinalities) s += 1.0 / c;
    return s / static_cast<double>(g.num_factors());
}

/// Held-out squared error of ridge with unpenalized intercept, solved
/// directly, pooled over all rows.
double oracle_ridge_mse(const Matrix& x, const Vector& y, const std::vector<int>& fold, int k, double alpha) {
    double total = 0.0;
    for (int f = 0; f < k; ++f) {
        std::vector<Eigen::Index> tr, te;
        for (Eigen::Index r = 0; r < x.rows(); ++r) (fold[static_cast<std::size_t>(r)] == f ? te : tr).push_back(r);
        const Matrix xt = x(tr, Eigen::all);
        const Vector yt = y(tr);
        const Eigen::RowVectorXd mx = xt.colwise().mean();
        const double my = yt.mean();
        const Matrix xc = xt.rowwise() - mx;
        const Matrix a = xc.transpose() * xc + alpha * Matrix::Identity(x.cols(), x.cols());
        const Vector w = a.ldlt().solve(xc.transpose() * (yt.array() - my).matrix());
        double se = 0.0;
        for (auto r : te) {
            const double pred = my + (x.row(r) - mx).dot(w);
            se += (pred - y(r)) * (pred - y(r));
        }
        total += se;
    }
    return total / static_cast<double>(x.rows());
}

}  // namespace

// ---------------------------------------------------------------- folds

TEST_CASE("folds: contiguous sizes") {
    const auto f = kfold_assignment(12, 5);
    CHECK(f == std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2, 3, 3, 4, 4});
    CHECK_THROWS(kfold_assignment(3, 5));
}

TEST_CASE("folds: stratified keeps every class in every fold") {
    std::vector<int> y;
    for (int i = 0; i < 53; ++i) y.push_back(i % 4 == 3 ? 2 : i % 2);
    int used = 0;
    const auto f = stratified_fold_assignment(y, 5, used);
    CHECK(used == 5);
    for (int k = 0; k < 5; ++k) {
        std::set<int> seen;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (f[i] == k) seen.insert(y[i]);
        CHECK(seen.size() == 3);
    }
    // a class with 3 members limits the folds to 3
    std::vector<int> rare{0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1};
    stratified_fold_assignment(rare, 5, used);
    CHECK(used == 3);
}

// ---------------------------------------------------------------- ridge

TEST_CASE("ridge: exact linear data") {
    numerics::RngStream rng(1);
    const Matrix x = normals(60, 4, rng);
    Vector w(4);
    w << 1.0, -2.0, 0.5, 3.0;
    const Vector y = (x * w).array() + 0.7;
    const auto model = ridge_cv_fit(x, y);
    CHECK(model.alpha == 0.0);
    CHECK(r2_score(y, model.predict(x)) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK((model.coef - w).norm() < 1e-8);
    CHECK(model.intercept == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(model.alphas == std::vector<double>{0.0, 0.01, 0.1, 1.0, 10.0});
}

TEST_CASE("ridge: CV choice equals brute-force fold evaluation") {
    numerics::RngStream rng(2);
    for (int t = 0; t < 10; ++t) {
        const Eigen::Index n = 30 + static_cast<Eigen::Index>(rng.below(40));
        const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(8));
        const Matrix x = normals(n, d, rng);
        const Vector y = x * normals(d, 1, rng) * 0.3 + 2.0 * normals(n, 1, rng);
        const auto model = ridge_cv_fit(x, y);
        const auto fold = kfold_assignment(n, 5);
        std::vector<double> mse;
        for (double a : model.alphas) mse.push_back(oracle_ridge_mse(x, y, fold, 5, a));
        for (std::size_t i = 0; i < mse.size(); ++i) CHECK(model.cv_mse[i] == doctest::Approx(mse[i]).epsilon(1e-8));
        const auto best = std::min_element(mse.begin(), mse.end()) - mse.begin();
        CHECK(model.alpha == model.alphas[static_cast<std::size_t>(best)]);
    }
}

TEST_CASE("ridge: singular Gram skips alpha 0 with a warning") {
    numerics::RngStream rng(3);
    Matrix x(40, 3);
    x.leftCols(2) = normals(40, 2, rng);
    x.col(2) = x.col(0);
    const Vector y = x.col(0) + 0.1 * normals(40, 1, rng);
    const auto model = ridge_cv_fit(x, y);
    CHECK(model.alphas == std::vector<double>{0.01, 0.1, 1.0, 10.0});
    REQUIRE(model.warnings.size() == 1);
    CHECK(model.warnings[0].find("alpha=0") != std::string::npos);
    CHECK(model.coef.allFinite());
}

TEST_CASE("r2_score: reference values") {
    Vector y(4), p(4);
    y << 1, 2, 3, 4;
    CHECK(r2_score(y, y) == 1.0);
    p.setConstant(2.5);
    CHECK(r2_score(y, p) == doctest::Approx(0.0));
    p << 4, 3, 2, 1;
    CHECK(r2_score(y, p) == doctest::Approx(-3.0));
}

// ---------------------------------------------------------------- logistic

TEST_CASE("logistic: separable data is fit perfectly") {
    numerics::RngStream rng(4);
    // keep a margin around the boundary
    Matrix x(80, 2);
    std::vector<int> y;
    for (Eigen::Index r = 0; r < 80;) {
        const double a = rng.normal(), b = rng.normal();
        if (std::abs(a + 0.5 * b) < 0.5) continue;
        x.row(r++) << a, b;
        y.push_back(a + 0.5 * b > 0.0 ? 7 : 3);
    }
    const auto cv = logistic_cv_fit(x, y);
    CHECK(cv.model.classes == std::vector<int>{3, 7});
    CHECK(cv.model.accuracy(x, y) == 1.0);
    CHECK(cv.cv_accuracy.size() == 10);
}

TEST_CASE("logistic: solver reaches the gradient tolerance") {
    numerics::RngStream rng(5);
    const Matrix x = normals(120, 3, rng);
    std::vector<int> y;
    for (Eigen::Index r = 0; r < 120; ++r) y.push_back(static_cast<int>(rng.below(3)));
    const auto m = logistic_fit(x, y, 1.0);
    CHECK(m.converged);
    CHECK(m.grad_norm < 1e-6);
    // warm start from the solution converges at once
    const auto again = logistic_fit(x, y, 1.0, {}, {}, &m);
    CHECK(again.iterations <= 2);
    CHECK((again.weights - m.weights).norm() < 1e-5);
}

TEST_CASE("logistic: labels independent of X score chance") {
    numerics::RngStream rng(6);
    const int c = 4, n = 2000;
    const Matrix x = normals(n, 5, rng), xt = normals(n, 5, rng);
    std::vector<int> y, yt;
    for (int i = 0; i < n; ++i) {
        y.push_back(i % c);
        yt.push_back(static_cast<int>(rng.below(c)));
    }
    const double acc = logistic_cv_fit(x, y).model.accuracy(xt, yt);
    const double sd = std::sqrt(0.25 * 0.75 / n);
    CHECK(std::abs(acc - 0.25) < 3.0 * sd);
}

TEST_CASE("logistic: duplicating a feature column barely moves accuracy") {
    numerics::RngStream rng(7);
    const Matrix x = normals(400, 3, rng), xt = normals(2000, 3, rng);
    auto label = [&](const Matrix& m, Eigen::Index r) {
        const double s = m(r, 0) - m(r, 1) + 0.5 * rng.normal();
        return s < -0.5 ? 0 : (s < 0.5 ? 1 : 2);
    };
    std::vector<int> y, yt;
    for (Eigen::Index r = 0; r < x.rows(); ++r) y.push_back(label(x, r));
    for (Eigen::Index r = 0; r < xt.rows(); ++r) yt.push_back(label(xt, r));
    Matrix xd(x.rows(), 4), xtd(xt.rows(), 4);
    xd << x, x.col(0);
    xtd << xt, xt.col(0);
    const double a = logistic_cv_fit(x, y).model.accuracy(xt, yt);
    const double b = logistic_cv_fit(xd, y).model.accuracy(xtd, yt);
    CHECK(std::abs(a - b) < 0.01);
}

TEST_CASE("logistic: CV choice equals brute-force fold evaluation") {
    numerics::RngStream rng(8);
    for (int t = 0; t < 6; ++t) {
        const Eigen::Index n = 60 + static_cast<Eigen::Index>(rng.below(60));
        const Matrix x = normals(n, 3, rng);
        std::vector<int> y;
        for (Eigen::Index r = 0; r < n; ++r) y.push_back(x(r, 0) + rng.normal() > 0 ? 1 : (x(r, 1) > 0.8 ? 2 : 0));
        const auto cv = logistic_cv_fit(x, y);
        int used = 0;
        const auto fold = stratified_fold_assignment(y, 5, used);
        const auto cs = LogisticCvOptions::default_cs();
        std::vector<double> acc(cs.size(), 0.0);
        for (int f = 0; f < used; ++f) {
            std::vector<Eigen::Index> tr, te;
            for (Eigen::Index r = 0; r < n; ++r) (fold[static_cast<std::size_t>(r)] == f ? te : tr).push_back(r);
            std::vector<int> ytr, yte;
            for (auto r : tr) ytr.push_back(y[static_cast<std::size_t>(r)]);
            for (auto r : te) yte.push_back(y[static_cast<std::size_t>(r)]);
            for (std::size_t i = 0; i < cs.size(); ++i)
                acc[i] += logistic_fit(x(tr, Eigen::all), ytr, cs[i], {}, {0, 1, 2}).accuracy(x(te, Eigen::all), yte) / used;
        }
        const auto best = std::max_element(acc.begin(), acc.end()) - acc.begin();
        CHECK(cv.best_c == cs[static_cast<std::size_t>(best)]);
        for (std::size_t i = 0; i < cs.size(); ++i) CHECK(cv.cv_accuracy[i] == doctest::Approx(acc[i]).epsilon(1e-12));
    }
}

// ---------------------------------------------------------------- PCA post-processing

TEST_CASE("pca_postprocess: identity at D = 1, idempotent") {
    const auto train = ideal_side(synth::Side::train), test = ideal_side(synth::Side::test);
    const auto once = pca_postprocess(train, test);
    CHECK(once.train.codes == train.codes);
    CHECK(once.test.codes == test.codes);
    const auto twice = pca_postprocess(once.train, once.test);
    CHECK(twice.test.codes == once.test.codes);
}

TEST_CASE("pca_postprocess: rank-one unit recovers its signal") {
    numerics::RngStream rng(9);
    const Eigen::Index n = 300, d = 8;
    Vector v = normals(d, 1, rng);
    v.normalize();
    auto make = [&](Eigen::Index rows, Vector& s) {
        RepresentationMatrix r;
        s = normals(rows, 1, rng);
        r.codes.resize(rows, 2 * d);
        r.codes.leftCols(d) = s * v.transpose();
        r.codes.rightCols(d).setConstant(4.0);  // degenerate unit
        r.factors = IndexMatrix::Zero(rows, 1);
        r.units = 2;
        r.unit_dim = static_cast<int>(d);
        return r;
    };
    Vector s_train, s_test;
    const auto tr = make(n, s_train);
    const auto te = make(n, s_test);
    const auto out = pca_postprocess(tr, te);
    CHECK(out.test.unit_dim == 1);
    CHECK(out.test.codes.cols() == 2);
    const Vector c = out.test.codes.col(0);
    CHECK(std::abs(numerics::pearson_correlation({c.data(), static_cast<std::size_t>(n)},
                                                 {s_test.data(), static_cast<std::size_t>(n)})) > 0.999);
    CHECK(out.degenerate_units == std::vector<int>{1});
    CHECK(out.test.codes.col(1).isZero());
}

// ---------------------------------------------------------------- probes

TEST_CASE("comp_gen_eval: ideal representation") {
    const auto r = comp_gen_eval(ideal_side(synth::Side::train), ideal_side(synth::Side::test), test_grid(),
                                 numerics::RngStream(10));
    CHECK(r.r2 >= 0.999);
    CHECK(r.acc >= 0.99);
    CHECK(r.r2 <= 1.0);
    CHECK(r.warnings.empty());
}

TEST_CASE("comp_gen_eval: noise representation is at chance") {
    numerics::RngStream rng(11);
    auto train = ideal_side(synth::Side::train), test = ideal_side(synth::Side::test);
    train.codes = normals(train.rows(), 4, rng);
    test.codes = normals(test.rows(), 4, rng);
    const auto r = comp_gen_eval(train, test, test_grid(), numerics::RngStream(12));
    CHECK(std::abs(r.r2) < 0.05);
    CHECK(std::abs(r.acc - chance_acc(test_grid())) < 0.05);
    CHECK_THROWS(comp_gen_eval(train, test, test_grid(), numerics::RngStream(12), 5000));
}

TEST_CASE("comp_gen_eval: constant factor is dropped with a warning") {
    const synth::FactorGrid g{{"a", "b"}, {1, 30}};
    auto rep = [&](int lo, int hi) {
        RepresentationMatrix r;
        r.codes.resize(hi - lo, 2);
        r.factors.resize(hi - lo, 2);
        for (int i = lo; i < hi; ++i) {
            r.factors(i - lo, 0) = 0;
            r.factors(i - lo, 1) = i % 30;
            r.codes(i - lo, 0) = 0.0;
            r.codes(i - lo, 1) = (i % 30) / 29.0;
        }
        r.units = 2;
        return r;
    };
    const auto r = comp_gen_eval(rep(0, 600), rep(600, 900), g, numerics::RngStream(13));
    CHECK(std::isnan(r.acc_per_factor[0]));
    CHECK_FALSE(r.warnings.empty());
    CHECK(r.acc >= 0.99);
}

// ---------------------------------------------------------------- disentanglement scores

TEST_CASE("factor_vae_score: ideal, rotated, trivial") {
    const auto test = ideal_side(synth::Side::test);
    CHECK(factor_vae_score(test, test_grid(), numerics::RngStream(14)) >= 0.98);
    numerics::RngStream rng(15);
    const auto rotated = with_codes(test, test.codes * random_rotation(4, rng));
    CHECK(factor_vae_score(rotated, test_grid(), numerics::RngStream(14)) < 0.8);

    const synth::FactorGrid one{{"a"}, {5}};
    RepresentationMatrix r;
    r.codes = normals(50, 1, rng);
    r.factors.resize(50, 1);
    for (int i = 0; i < 50; ++i) r.factors(i, 0) = i % 5;
    r.units = 1;
    CHECK(factor_vae_score(r, one, numerics::RngStream(1)) == 1.0);
}

TEST_CASE("factor_vae_score: constant columns are excluded") {
    auto test = ideal_side(synth::Side::test);
    Matrix codes(test.rows(), 5);
    codes << test.codes, Matrix::Constant(test.rows(), 1, 3.0);
    test.codes = codes;
    test.units = 5;
    CHECK(factor_vae_score(test, test_grid(), numerics::RngStream(14)) >= 0.98);
}

TEST_CASE("mig: ideal, copies, noise") {
    const auto test = ideal_side(synth::Side::test);
    const auto ideal = mig(test, test_grid());
    CHECK(ideal.score >= 0.9);
    CHECK(ideal.score <= 1.0);
    CHECK(ideal.mutual_information.rows() == 4);

    Matrix copies(test.rows(), 4);
    for (int i = 0; i < 4; ++i) copies.col(i) = test.codes.col(0);
    CHECK(mig(with_codes(test, copies), test_grid()).score < 1e-12);

    numerics::RngStream rng(16);
    CHECK(mig(with_codes(test, normals(test.rows(), 4, rng)), test_grid()).score < 0.05);
}

TEST_CASE("beta_vae_score: ideal, zero features, rotation") {
    const auto test = ideal_side(synth::Side::test);
    CHECK(beta_vae_score(test, test_grid(), numerics::RngStream(17)) >= 0.98);
    const double zero = beta_vae_score(with_codes(test, Matrix::Zero(test.rows(), 4)), test_grid(), numerics::RngStream(17));
    // 160 held-out points, 4 factors
    CHECK(std::abs(zero - 0.25) < 3.0 * std::sqrt(0.25 * 0.75 / 160));
    numerics::RngStream rng(18);
    const auto rotated = with_codes(test, test.codes * random_rotation(4, rng));
    CHECK(beta_vae_score(rotated, test_grid(), numerics::RngStream(17)) >= 0.25);
}

TEST_CASE("dci: importance-matrix scores") {
    CHECK(dci_disentanglement(Matrix::Identity(4, 4)) == doctest::Approx(1.0));
    CHECK(dci_completeness(Matrix::Identity(4, 4)) == doctest::Approx(1.0));
    CHECK(dci_disentanglement(Matrix::Constant(4, 4, 0.25)) == doctest::Approx(0.0).scale(1.0));
    // an all-zero row carries no weight
    Matrix r = Matrix::Zero(5, 4);
    r.topRows(4) = Matrix::Identity(4, 4);
    CHECK(dci_disentanglement(r) == doctest::Approx(1.0));
    Matrix one(1, 1);
    one << 0.7;
    CHECK(dci_disentanglement(one) == 1.0);
}

TEST_CASE("dci: ideal, rotated, single factor") {
    const auto test = ideal_side(synth::Side::test);
    const auto ideal = dci(test, test_grid(), numerics::RngStream(19));
    CHECK(ideal.disentanglement >= 0.95);
    CHECK(ideal.informativeness >= 0.95);
    numerics::RngStream rng(20);
    const auto rotated = with_codes(test, test.codes * random_rotation(4, rng));
    CHECK(dci(rotated, test_grid(), numerics::RngStream(19)).disentanglement <= 0.4);

    const synth::FactorGrid one{{"a"}, {5}};
    RepresentationMatrix r;
    r.codes.resize(100, 1);
    r.factors.resize(100, 1);
    for (int i = 0; i < 100; ++i) {
        r.factors(i, 0) = i % 5;
        r.codes(i, 0) = i % 5;
    }
    r.units = 1;
    CHECK(dci(r, one, numerics::RngStream(1)).disentanglement == 1.0);
}

// ---------------------------------------------------------------- forest

TEST_CASE("forest: learns a threshold and credits the right feature") {
    numerics::RngStream rng(21);
    const Matrix x = normals(400, 3, rng);
    std::vector<int> y;
    for (Eigen::Index r = 0; r < 400; ++r) y.push_back(x(r, 1) > 0.3 ? 1 : 0);
    RandomForest f;
    f.fit(x, y, {}, numerics::RngStream(22));
    CHECK(f.accuracy(x, y) == 1.0);
    CHECK(f.importance().sum() == doctest::Approx(1.0));
    CHECK(f.importance()(1) > 0.9);

    RandomForest g;
    g.fit(x, y, {}, numerics::RngStream(22));
    CHECK(g.importance() == f.importance());
    CHECK(g.predict(x) == f.predict(x));
}

TEST_CASE("forest: depth limit") {
    numerics::RngStream rng(23);
    const Matrix x = normals(300, 2, rng);
    std::vector<int> y;
    for (Eigen::Index r = 0; r < 300; ++r) y.push_back(static_cast<int>(rng.below(2)));
    RandomForest stump;
    ForestOptions opts;
    opts.trees = 1;
    opts.max_depth = 1;
    stump.fit(x, y, opts, numerics::RngStream(1));
    // one split leaves at most two distinct predictions
    const auto p = stump.predict(x);
    CHECK(std::set<int>(p.begin(), p.end()).size() <= 2);
}

// ---------------------------------------------------------------- evaluate_all

TEST_CASE("evaluate_all: ideal representation and determinism") {
    const auto train = ideal_side(synth::Side::train), test = ideal_side(synth::Side::test);
    const auto a = evaluate_all(train, test, test_grid(), 5);
    CHECK(a.r2 >= 0.999);
    CHECK(a.acc >= 0.95);
    CHECK(a.factor_vae_score >= 0.95);
    CHECK(a.dci >= 0.95);
    CHECK(a.mig >= 0.9);
    CHECK(a.beta_vae_score >= 0.95);
    CHECK(a.eval_seed == 5);
    auto b = evaluate_all(train, test, test_grid(), 5);
    b.wall_time = a.wall_time;
    CHECK(a.to_json() == b.to_json());
    const auto back = MetricsReport::from_json(a.to_json());
    CHECK(back.to_json() == a.to_json());
    CHECK(back.score("mig") == a.mig);
    CHECK_THROWS(back.score("nope"));
}

TEST_CASE("evaluate_all: noise representation") {
    numerics::RngStream rng(24);
    auto train = ideal_side(synth::Side::train), test = ideal_side(synth::Side::test);
    train.codes = normals(train.rows(), 4, rng);
    test.codes = normals(test.rows(), 4, rng);
    const auto r = evaluate_all(train, test, test_grid(), 5);
    CHECK(std::abs(r.r2) < 0.05);
    CHECK(r.mig < 0.05);
    CHECK(r.dci < 0.2);
    for (const char* name : {"acc", "factor_vae_score", "dci", "mig", "beta_vae_score"}) {
        CHECK(r.score(name) >= 0.0);
        CHECK(r.score(name) <= 1.0);
    }
}

TEST_CASE("evaluate_all: unit order does not matter for the probes") {
    const auto train = ideal_side(synth::Side::train), test = ideal_side(synth::Side::test);
    const std::vector<int> order{2, 0, 3, 1};
    const auto a = evaluate_all(train, test, test_grid(), 6);
    const auto b = evaluate_all(with_codes(train, train.codes(Eigen::all, order)), with_codes(test, test.codes(Eigen::all, order)),
                                test_grid(), 6);
    CHECK(b.r2 == doctest::Approx(a.r2).epsilon(1e-9));
    CHECK(b.acc == doctest::Approx(a.acc).epsilon(0.01));
    CHECK(b.mig == doctest::Approx(a.mig).epsilon(1e-9));
}
