#include "disentlab/metrics/linear.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <stdexcept>

namespace disentlab::metrics {

std::vector<int> kfold_assignment(Eigen::Index n, int folds) {
    if (folds < 2 || n < folds) throw std::invalid_argument("kfold_assignment: need 2 <= folds <= n");
    std::vector<int> fold(static_cast<std::size_t>(n));
    const Eigen::Index base = n / folds, extra = n % folds;
    Eigen::Index row = 0;
    for (int f = 0; f < folds; ++f) {
        const Eigen::Index size = base + (f < extra ? 1 : 0);
        for (Eigen::Index i = 0; i < size; ++i) fold[static_cast<std::size_t>(row++)] = f;
    }
    return fold;
}

std::vector<int> stratified_fold_assignment(const std::vector<int>& labels, int folds, int& folds_used) {
    std::map<int, int> count;
    for (int l : labels) ++count[l];
    int smallest = std::numeric_limits<int>::max();
    for (const auto& [_, c] : count) smallest = std::min(smallest, c);
    folds_used = std::max(2, std::min(folds, smallest));
    std::map<int, int> seen;
    std::vector<int> fold(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) fold[i] = seen[labels[i]]++ % folds_used;
    return fold;
}

namespace {

Matrix rows_where(const Matrix& x, const std::vector<int>& fold, int f, bool equal) {
    Eigen::Index n = 0;
    for (int v : fold) n += ((v == f) == equal);
    Matrix out(n, x.cols());
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if ((fold[i] == f) == equal) out.row(r++) = x.row(static_cast<Eigen::Index>(i));
    return out;
}

Vector rows_where(const Vector& y, const std::vector<int>& fold, int f, bool equal) {
    Matrix m = rows_where(Matrix(y), fold, f, equal);
    return m.col(0);
}

template <typename T>
std::vector<T> items_where(const std::vector<T>& y, const std::vector<int>& fold, int f, bool equal) {
    std::vector<T> out;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if ((fold[i] == f) == equal) out.push_back(y[i]);
    return out;
}

/// Centered ridge problem solved through the eigendecomposition of X^T X.
struct RidgeSolver {
    Vector x_mean;
    double y_mean = 0.0;
    Matrix vecs;
    Vector vals;
    Vector proj;  // V^T X^T y
    bool singular = false;

    RidgeSolver(const Matrix& x, const Vector& y) {
        x_mean = x.colwise().mean().transpose();
        y_mean = y.mean();
        const Matrix xc = x.rowwise() - x_mean.transpose();
        const Vector yc = y.array() - y_mean;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(xc.transpose() * xc);
        vecs = eig.eigenvectors();
        vals = eig.eigenvalues().cwiseMax(0.0);
        proj = vecs.transpose() * (xc.transpose() * yc);
        const double top = vals.size() ? vals.maxCoeff() : 0.0;
        singular = vals.size() == 0 || vals.minCoeff() <= 1e-10 * std::max(top, 1e-300);
    }

    RidgeModel solve(double alpha) const {
        RidgeModel m;
        m.alpha = alpha;
        Vector scaled(proj.size());
        for (Eigen::Index i = 0; i < proj.size(); ++i) {
            const double denom = vals(i) + alpha;
            scaled(i) = denom > 0.0 ? proj(i) / denom : 0.0;
        }
        m.coef = vecs * scaled;
        m.intercept = y_mean - x_mean.dot(m.coef);
        return m;
    }
};

}  // namespace

Vector RidgeModel::predict(const Matrix& x) const { return (x * coef).array() + intercept; }

double r2_score(const Vector& y_true, const Vector& y_pred) {
    const double mean = y_true.mean();
    const double ss_tot = (y_true.array() - mean).square().sum();
    const double ss_res = (y_true - y_pred).squaredNorm();
    if (ss_tot <= 0.0) return ss_res <= 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

RidgeModel ridge_fit(const Matrix& x, const Vector& y, double alpha) {
    if (x.rows() != y.size()) throw std::invalid_argument("ridge_fit: row mismatch");
    RidgeSolver solver(x, y);
    auto m = solver.solve(alpha);
    m.alphas = {alpha};
    return m;
}

RidgeModel ridge_cv_fit(const Matrix& x, const Vector& y, const RidgeCvOptions& opts) {
    if (x.rows() != y.size()) throw std::invalid_argument("ridge_cv_fit: row mismatch");
    if (x.rows() < 5) throw std::invalid_argument("ridge_cv_fit: need at least 5 rows");
    if (opts.alphas.empty()) throw std::invalid_argument("ridge_cv_fit: empty alpha grid");
    const auto fold = kfold_assignment(x.rows(), opts.folds);

    std::vector<RidgeSolver> solvers;
    bool singular = false;
    for (int f = 0; f < opts.folds; ++f) {
        solvers.emplace_back(rows_where(x, fold, f, false), rows_where(y, fold, f, false));
        singular = singular || solvers.back().singular;
    }
    const RidgeSolver full(x, y);
    singular = singular || full.singular;

    RidgeModel best;
    std::vector<std::string> warnings;
    std::vector<double> alphas, scores;
    for (double alpha : opts.alphas) {
        if (alpha <= 0.0 && singular) {
            warnings.push_back("alpha=0 skipped: singular Gram matrix");
            continue;
        }
        double sse = 0.0;
        for (int f = 0; f < opts.folds; ++f) {
            const auto m = solvers[static_cast<std::size_t>(f)].solve(alpha);
            sse += (rows_where(y, fold, f, true) - m.predict(rows_where(x, fold, f, true))).squaredNorm();
        }
        alphas.push_back(alpha);
        scores.push_back(sse / static_cast<double>(x.rows()));
    }
    if (alphas.empty()) throw std::runtime_error("ridge_cv_fit: no usable alpha");
    const auto pick = static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
    best = full.solve(alphas[pick]);
    best.alphas = std::move(alphas);
    best.cv_mse = std::move(scores);
    best.warnings = std::move(warnings);
    return best;
}

// ------------------------------------------------------------------ logistic

std::vector<double> LogisticCvOptions::default_cs() {
    std::vector<double> cs;
    for (int i = 0; i < 10; ++i) cs.push_back(std::pow(10.0, -4.0 + 8.0 * i / 9.0));
    return cs;
}

std::vector<int> LogisticModel::predict(const Matrix& x) const {
    const Matrix logits = (x * weights).rowwise() + intercepts.transpose();
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < logits.cols(); ++k)
            if (logits(r, k) > logits(r, best)) best = k;
        out[static_cast<std::size_t>(r)] = classes[static_cast<std::size_t>(best)];
    }
    return out;
}

double LogisticModel::accuracy(const Matrix& x, const std::vector<int>& y) const {
    if (y.empty()) return 0.0;
    const auto pred = predict(x);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
    return static_cast<double>(hit) / static_cast<double>(y.size());
}

namespace {

struct LogisticProblem {
    const Matrix& x;
    Matrix onehot;  // n x K
    double lambda;  // 1 / (C n)
    Eigen::Index d, k;

    /// theta = [vec(W) (d x K, column-major); b (K)]
    double eval(const Vector& theta, Vector& grad) const {
        const Eigen::Map<const Matrix> w(theta.data(), d, k);
        const Eigen::Map<const Vector> b(theta.data() + d * k, k);
        Matrix logits = (x * w).rowwise() + b.transpose();
        const Vector mx = logits.rowwise().maxCoeff();
        logits.colwise() -= mx;
        Matrix p = logits.array().exp().matrix();
        const Vector z = p.rowwise().sum();
        const Vector lse = z.array().log().matrix();
        const double n = static_cast<double>(x.rows());
        double ce = 0.0;
        for (Eigen::Index r = 0; r < x.rows(); ++r) ce += lse(r) - logits.row(r).dot(onehot.row(r));
        p.array().colwise() /= z.array();
        const Matrix resid = (p - onehot) / n;
        grad.resize(theta.size());
        Eigen::Map<Matrix> gw(grad.data(), d, k);
        Eigen::Map<Vector> gb(grad.data() + d * k, k);
        gw.noalias() = x.transpose() * resid;
        gw += lambda * w;
        gb = resid.colwise().sum().transpose();
        return ce / n + 0.5 * lambda * w.squaredNorm();
    }
};

}  // namespace

LogisticModel logistic_fit(const Matrix& x, const std::vector<int>& y, double c, const LogisticOptions& opts,
                           const std::vector<int>& classes, const LogisticModel* warm) {
    if (x.rows() != static_cast<Eigen::Index>(y.size())) throw std::invalid_argument("logistic_fit: row mismatch");
    if (!(c > 0.0)) throw std::invalid_argument("logistic_fit: C must be positive");
    LogisticModel model;
    model.classes = classes;
    if (model.classes.empty()) {
        model.classes = y;
        std::sort(model.classes.begin(), model.classes.end());
        model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
    }
    if (model.classes.size() < 2) throw std::invalid_argument("logistic_fit: need at least 2 classes");
    model.c = c;
    const Eigen::Index d = x.cols();
    const auto k = static_cast<Eigen::Index>(model.classes.size());

    LogisticProblem prob{x, Matrix::Zero(x.rows(), k), 1.0 / (c * static_cast<double>(x.rows())), d, k};
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto it = std::lower_bound(model.classes.begin(), model.classes.end(), y[i]);
        if (it == model.classes.end() || *it != y[i]) throw std::invalid_argument("logistic_fit: label outside class set");
        prob.onehot(static_cast<Eigen::Index>(i), it - model.classes.begin()) = 1.0;
    }

    Vector theta = Vector::Zero(d * k + k);
    if (warm != nullptr && warm->weights.rows() == d && warm->weights.cols() == k) {
        theta.head(d * k) = Eigen::Map<const Vector>(warm->weights.data(), d * k);
        theta.tail(k) = warm->intercepts;
    }

    Vector g;
    double f = prob.eval(theta, g);
    std::deque<std::pair<Vector, Vector>> history;  // (s, y)
    int it = 0;
    for (; it < opts.max_iter && g.lpNorm<Eigen::Infinity>() >= opts.gtol; ++it) {
        // two-loop recursion
        Vector q = g;
        std::vector<double> alpha(history.size());
        for (std::size_t h = history.size(); h-- > 0;) {
            const auto& [s, yv] = history[h];
            alpha[h] = s.dot(q) / yv.dot(s);
            q -= alpha[h] * yv;
        }
        if (!history.empty()) {
            const auto& [s, yv] = history.back();
            q *= s.dot(yv) / yv.squaredNorm();
        } else {
            q /= std::max(1.0, g.norm());
        }
        for (std::size_t h = 0; h < history.size(); ++h) {
            const auto& [s, yv] = history[h];
            const double beta = yv.dot(q) / yv.dot(s);
            q += (alpha[h] - beta) * s;
        }
        Vector dir = -q;
        double slope = g.dot(dir);
        if (slope >= 0.0) {
            history.clear();
            dir = -g / std::max(1.0, g.norm());
            slope = g.dot(dir);
        }
        double step = 1.0;
        Vector next, g_next;
        double f_next = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            next = theta + step * dir;
            f_next = prob.eval(next, g_next);
            if (std::isfinite(f_next) && f_next <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        Vector s = next - theta;
        Vector yv = g_next - g;
        if (s.dot(yv) > 1e-12 * s.norm() * yv.norm()) {
            history.emplace_back(std::move(s), std::move(yv));
            if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
        }
        theta = std::move(next);
        g = std::move(g_next);
        f = f_next;
    }
    model.iterations = it;
    model.grad_norm = g.lpNorm<Eigen::Infinity>();
    model.converged = model.grad_norm < opts.gtol;
    model.weights = Eigen::Map<const Matrix>(theta.data(), d, k);
    model.intercepts = theta.tail(k);
    return model;
}

LogisticCvResult logistic_cv_fit(const Matrix& x, const std::vector<int>& y, const LogisticCvOptions& opts) {
    if (x.rows() != static_cast<Eigen::Index>(y.size())) throw std::invalid_argument("logistic_cv_fit: row mismatch");
    std::vector<int> classes = y;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw std::invalid_argument("logistic_cv_fit: need at least 2 classes");
    if (opts.cs.empty()) throw std::invalid_argument("logistic_cv_fit: empty C grid");

    std::vector<double> cs = opts.cs;
    std::sort(cs.begin(), cs.end());

    LogisticCvResult result;
    const auto fold = stratified_fold_assignment(y, opts.folds, result.folds_used);
    const std::size_t nc = cs.size();
    std::vector<double> acc(nc, 0.0);
    std::vector<std::vector<LogisticModel>> path(nc);
    for (int f = 0; f < result.folds_used; ++f) {
        const Matrix xtr = rows_where(x, fold, f, false);
        const Matrix xte = rows_where(x, fold, f, true);
        const auto ytr = items_where(y, fold, f, false);
        const auto yte = items_where(y, fold, f, true);
        const LogisticModel* warm = nullptr;
        for (std::size_t ci = 0; ci < nc; ++ci) {
            path[ci].push_back(logistic_fit(xtr, ytr, cs[ci], opts.solver, classes, warm));
            warm = &path[ci].back();
            acc[ci] += path[ci].back().accuracy(xte, yte) / result.folds_used;
        }
    }
    std::size_t best = 0;
    for (std::size_t ci = 1; ci < nc; ++ci)
        if (acc[ci] > acc[best]) best = ci;
    result.best_c = cs[best];
    result.cv_accuracy = acc;

    LogisticModel start = path[best].front();
    for (std::size_t f = 1; f < path[best].size(); ++f) {
        start.weights += path[best][f].weights;
        start.intercepts += path[best][f].intercepts;
    }
    start.weights /= static_cast<double>(path[best].size());
    start.intercepts /= static_cast<double>(path[best].size());
    result.model = logistic_fit(x, y, cs[best], opts.solver, classes, &start);
    return result;
}

}  // namespace disentlab::metrics
