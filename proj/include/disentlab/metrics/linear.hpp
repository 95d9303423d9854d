#pragma once

#include <string>
#include <vector>

#include "disentlab/linalg.hpp"

namespace disentlab::metrics {

/// Contiguous K-fold assignment, fold sizes differing by at most one
/// (the first n % k folds are larger). Returns the fold id of each row.
std::vector<int> kfold_assignment(Eigen::Index n, int folds);

/// Stratified assignment: within each class, rows go round-robin to folds in
/// order of appearance. Folds are reduced to the smallest class count (>= 2)
/// when a class is too rare. Returns fold ids; `folds_used` receives the count.
std::vector<int> stratified_fold_assignment(const std::vector<int>& labels, int folds, int& folds_used);

// ---------------------------------------------------------------- ridge

struct RidgeModel {
    Vector coef;
    double intercept = 0.0;
    double alpha = 0.0;
    std::vector<double> alphas;     // grid actually evaluated
    std::vector<double> cv_mse;     // mean held-out squared error per alpha
    std::vector<std::string> warnings;

    Vector predict(const Matrix& x) const;
};

struct RidgeCvOptions {
    std::vector<double> alphas{0.0, 0.01, 0.1, 1.0, 10.0};
    int folds = 5;
};

/// Closed-form ridge with an unpenalized intercept, alpha picked by K-fold
/// held-out MSE (ties go to the earlier alpha). Each fold's centered Gram
/// matrix is eigendecomposed once and reused across the grid. alpha = 0 is
/// dropped, with a warning, when any Gram matrix is numerically singular.
RidgeModel ridge_cv_fit(const Matrix& x, const Vector& y, const RidgeCvOptions& opts = {});

/// Single-alpha fit (same solver).
RidgeModel ridge_fit(const Matrix& x, const Vector& y, double alpha);

double r2_score(const Vector& y_true, const Vector& y_pred);

// ---------------------------------------------------------------- logistic

struct LogisticModel {
    std::vector<int> classes;  // sorted label values
    Matrix weights;            // d x K
    Vector intercepts;         // K
    double c = 1.0;
    int iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;

    /// argmax class; ties go to the smaller label.
    std::vector<int> predict(const Matrix& x) const;
    double accuracy(const Matrix& x, const std::vector<int>& y) const;
};

struct LogisticOptions {
    double gtol = 1e-6;
    int max_iter = 1000;
    int memory = 10;
};

/// Multinomial logistic regression minimizing
///   mean_i CE_i + ||W||^2 / (2 C n)
/// (the C-weighted sum objective divided by C n), by L-BFGS with backtracking
/// until ||grad||_inf < gtol. `classes` fixes the class set; empty means the
/// sorted unique labels of y. `warm` optionally supplies the start.
LogisticModel logistic_fit(const Matrix& x, const std::vector<int>& y, double c, const LogisticOptions& opts = {},
                           const std::vector<int>& classes = {}, const LogisticModel* warm = nullptr);

struct LogisticCvOptions {
    std::vector<double> cs = default_cs();
    int folds = 5;
    LogisticOptions solver;

    /// 10 values log-spaced over [1e-4, 1e4].
    static std::vector<double> default_cs();
};

struct LogisticCvResult {
    LogisticModel model;
    double best_c = 0.0;
    int folds_used = 0;
    std::vector<double> cv_accuracy;  // mean held-out accuracy per C
};

/// C chosen by stratified K-fold held-out accuracy (ties go to the smaller C).
/// Within a fold the C path is walked upward with warm starts; the final
/// refit on all rows starts from the fold-average solution at the best C.
LogisticCvResult logistic_cv_fit(const Matrix& x, const std::vector<int>& y, const LogisticCvOptions& opts = {});

}  // namespace disentlab::metrics
