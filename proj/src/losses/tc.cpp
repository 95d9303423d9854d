#include "disentlab/losses/tc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "disentlab/errors.hpp"

namespace disentlab::losses {

std::string to_string(TcNormalization n) {
    switch (n) {
        case TcNormalization::stratified: return "stratified";
        case TcNormalization::uniform: return "uniform";
        case TcNormalization::verbatim: return "verbatim";
    }
    return "stratified";
}

TcNormalization tc_normalization_from_string(const std::string& s) {
    if (s == "stratified") return TcNormalization::stratified;
    if (s == "uniform") return TcNormalization::uniform;
    if (s == "verbatim") return TcNormalization::verbatim;
    throw std::invalid_argument("unknown TC normalization '" + s + "'");
}

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

void validate(const PosteriorSample& s, std::uint64_t dataset_size) {
    const Eigen::Index m = s.units();
    if (s.batch() < 2) throw std::invalid_argument("tc: need a batch of at least 2");
    if (m == 0 || s.z.cols() % m != 0 || s.mu.rows() != s.z.rows() || s.mu.cols() != s.z.cols() ||
        s.sigma.rows() != s.z.rows())
        throw std::invalid_argument("tc: z/mu/sigma layout mismatch");
    if ((s.sigma.array() <= 0.0).any()) throw std::invalid_argument("tc: sigma must be positive");
    if (dataset_size < static_cast<std::uint64_t>(s.batch()))
        throw std::invalid_argument("tc: dataset size must be at least the batch size");
}

/// Log weight matrix (M x M), row k = evaluated sample, column l = posterior.
Matrix log_weights(Eigen::Index batch, std::uint64_t dataset_size, TcNormalization norm) {
    const auto m = static_cast<double>(batch);
    const auto k = static_cast<double>(dataset_size);
    switch (norm) {
        case TcNormalization::uniform: return Matrix::Constant(batch, batch, -std::log(m));
        case TcNormalization::verbatim: return Matrix::Constant(batch, batch, -std::log(m * k));
        case TcNormalization::stratified: {
            const double others = m - 1.0;
            Matrix w = Matrix::Constant(batch, batch, -std::log(others));
            const double strat = std::log((k - others) / (k * others));
            for (Eigen::Index r = 0; r < batch; ++r) {
                w(r, r) = -std::log(k);
                w(r, (r + 1) % batch) = strat;
            }
            return w;
        }
    }
    return {};
}

/// Per-unit log densities E[(k*M + l)*m + i] = ln q(z_k,i | x_l).
std::vector<double> unit_log_densities(const PosteriorSample& s) {
    const Eigen::Index batch = s.batch(), m = s.units(), d = s.unit_dim();
    std::vector<double> e(static_cast<std::size_t>(batch * batch * m));
    const Matrix log_sigma = s.sigma.array().log().matrix();
    const Matrix inv_var = s.sigma.array().square().inverse().matrix();
    for (Eigen::Index k = 0; k < batch; ++k)
        for (Eigen::Index l = 0; l < batch; ++l)
            for (Eigen::Index i = 0; i < m; ++i) {
                double sq = 0.0;
                for (Eigen::Index j = 0; j < d; ++j) {
                    const double diff = s.z(k, i * d + j) - s.mu(l, i * d + j);
                    sq += diff * diff;
                }
                const double val = -static_cast<double>(d) * (kHalfLog2Pi + log_sigma(l, i)) - 0.5 * sq * inv_var(l, i);
                e[static_cast<std::size_t>((k * batch + l) * m + i)] = val;
            }
    return e;
}

struct Softmaxes {
    double value = 0.0;
    // coefficient on d E[k,l,i]
    std::vector<double> coef;
};

Softmaxes combine(const std::vector<double>& e, Eigen::Index batch, Eigen::Index m, const Matrix& logw,
                  double constant, bool want_coef) {
    Softmaxes out;
    if (want_coef) out.coef.assign(e.size(), 0.0);
    std::vector<double> joint(static_cast<std::size_t>(batch));
    std::vector<double> per(static_cast<std::size_t>(batch));
    const double inv_b = 1.0 / static_cast<double>(batch);
    double total = 0.0;
    for (Eigen::Index k = 0; k < batch; ++k) {
        // joint: sum over units, then log-sum-exp over posteriors l
        double jmax = -std::numeric_limits<double>::infinity();
        for (Eigen::Index l = 0; l < batch; ++l) {
            double acc = logw(k, l);
            for (Eigen::Index i = 0; i < m; ++i) acc += e[static_cast<std::size_t>((k * batch + l) * m + i)];
            joint[static_cast<std::size_t>(l)] = acc;
            jmax = std::max(jmax, acc);
        }
        double jsum = 0.0;
        for (Eigen::Index l = 0; l < batch; ++l) jsum += std::exp(joint[static_cast<std::size_t>(l)] - jmax);
        const double log_qz = jmax + std::log(jsum);
        if (want_coef)
            for (Eigen::Index l = 0; l < batch; ++l) {
                const double p = std::exp(joint[static_cast<std::size_t>(l)] - log_qz) * inv_b;
                for (Eigen::Index i = 0; i < m; ++i) out.coef[static_cast<std::size_t>((k * batch + l) * m + i)] += p;
            }

        double log_prod = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            double pmax = -std::numeric_limits<double>::infinity();
            for (Eigen::Index l = 0; l < batch; ++l) {
                const double v = e[static_cast<std::size_t>((k * batch + l) * m + i)] + logw(k, l);
                per[static_cast<std::size_t>(l)] = v;
                pmax = std::max(pmax, v);
            }
            double psum = 0.0;
            for (Eigen::Index l = 0; l < batch; ++l) psum += std::exp(per[static_cast<std::size_t>(l)] - pmax);
            const double log_qi = pmax + std::log(psum);
            log_prod += log_qi - constant;
            if (want_coef)
                for (Eigen::Index l = 0; l < batch; ++l)
                    out.coef[static_cast<std::size_t>((k * batch + l) * m + i)] -=
                        std::exp(per[static_cast<std::size_t>(l)] - log_qi) * inv_b;
        }
        total += (log_qz - constant) - log_prod;
    }
    out.value = total * inv_b;
    if (!std::isfinite(out.value)) throw NonFiniteError("tc_minibatch: non-finite log densities");
    return out;
}

TcGradient minibatch_impl(const PosteriorSample& s, std::uint64_t dataset_size, TcNormalization norm, bool grad) {
    validate(s, dataset_size);
    const Eigen::Index batch = s.batch(), m = s.units(), d = s.unit_dim();
    const auto e = unit_log_densities(s);
    for (double v : e)
        if (!std::isfinite(v)) throw NonFiniteError("tc_minibatch: non-finite log densities");
    // The stratified weights already sum to one; the other two schemes
    // fold their normalizer into logw so that constant stays zero here.
    const Matrix logw = log_weights(batch, dataset_size, norm);
    const auto sm = combine(e, batch, m, logw, 0.0, grad);

    TcGradient out;
    out.estimate = {sm.value, TcEstimator::minibatch, batch, dataset_size};
    if (!grad) return out;

    out.d_z = Matrix::Zero(s.z.rows(), s.z.cols());
    out.d_mu = Matrix::Zero(s.mu.rows(), s.mu.cols());
    out.d_sigma = Matrix::Zero(s.sigma.rows(), s.sigma.cols());
    for (Eigen::Index k = 0; k < batch; ++k)
        for (Eigen::Index l = 0; l < batch; ++l)
            for (Eigen::Index i = 0; i < m; ++i) {
                const double c = sm.coef[static_cast<std::size_t>((k * batch + l) * m + i)];
                if (c == 0.0) continue;
                const double sig = s.sigma(l, i);
                const double inv_var = 1.0 / (sig * sig);
                double sq = 0.0;
                for (Eigen::Index j = 0; j < d; ++j) {
                    const double diff = s.z(k, i * d + j) - s.mu(l, i * d + j);
                    sq += diff * diff;
                    out.d_z(k, i * d + j) -= c * diff * inv_var;
                    out.d_mu(l, i * d + j) += c * diff * inv_var;
                }
                out.d_sigma(l, i) += c * (-static_cast<double>(d) / sig + sq * inv_var / sig);
            }
    return out;
}

PosteriorSample slice(const PosteriorSample& s, Eigen::Index j) {
    const Eigen::Index m = s.units(), d = s.unit_dim();
    PosteriorSample out;
    out.z.resize(s.batch(), m);
    out.mu.resize(s.batch(), m);
    for (Eigen::Index i = 0; i < m; ++i) {
        out.z.col(i) = s.z.col(i * d + j);
        out.mu.col(i) = s.mu.col(i * d + j);
    }
    out.sigma = s.sigma;
    return out;
}

TcGradient per_dimension_impl(const PosteriorSample& s, std::uint64_t dataset_size, TcNormalization norm,
                              bool grad) {
    validate(s, dataset_size);
    const Eigen::Index m = s.units(), d = s.unit_dim();
    TcGradient out;
    if (grad) {
        out.d_z = Matrix::Zero(s.z.rows(), s.z.cols());
        out.d_mu = Matrix::Zero(s.mu.rows(), s.mu.cols());
        out.d_sigma = Matrix::Zero(s.sigma.rows(), s.sigma.cols());
    }
    double total = 0.0;
    const double inv_d = 1.0 / static_cast<double>(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto part = minibatch_impl(slice(s, j), dataset_size, norm, grad);
        total += part.estimate.value;
        if (!grad) continue;
        for (Eigen::Index i = 0; i < m; ++i) {
            out.d_z.col(i * d + j) = part.d_z.col(i) * inv_d;
            out.d_mu.col(i * d + j) = part.d_mu.col(i) * inv_d;
        }
        out.d_sigma += part.d_sigma * inv_d;
    }
    out.estimate = {total / static_cast<double>(d), TcEstimator::per_dimension, s.batch(), dataset_size};
    return out;
}

}  // namespace

TcEstimate tc_minibatch(const PosteriorSample& s, std::uint64_t dataset_size, TcNormalization norm) {
    return minibatch_impl(s, dataset_size, norm, false).estimate;
}

TcGradient tc_minibatch_grad(const PosteriorSample& s, std::uint64_t dataset_size, TcNormalization norm) {
    return minibatch_impl(s, dataset_size, norm, true);
}

TcEstimate tc_per_dimension(const PosteriorSample& s, std::uint64_t dataset_size, TcNormalization norm) {
    return per_dimension_impl(s, dataset_size, norm, false).estimate;
}

TcGradient tc_per_dimension_grad(const PosteriorSample& s, std::uint64_t dataset_size, TcNormalization norm) {
    return per_dimension_impl(s, dataset_size, norm, true);
}

PrecisionReport density_precision_check(const PosteriorSample& s, std::uint64_t dataset_size) {
    validate(s, dataset_size);
    const Eigen::Index batch = s.batch(), m = s.units();
    const auto e = unit_log_densities(s);
    PrecisionReport rep;
    rep.densities = static_cast<Eigen::Index>(e.size());
    rep.min_log_density = *std::min_element(e.begin(), e.end());
    for (double v : e) {
        if (std::exp(static_cast<float>(v)) == 0.0f) ++rep.zero_in_f32;
        if (std::exp(v) == 0.0) ++rep.zero_in_f64;
    }
    rep.stable_tc = tc_minibatch(s, dataset_size, TcNormalization::verbatim).value;

    // Same estimator with exp/log done naively in float.
    const float log_mk = std::log(static_cast<float>(batch) * static_cast<float>(dataset_size));
    float total = 0.0f;
    for (Eigen::Index k = 0; k < batch; ++k) {
        float joint = 0.0f;
        for (Eigen::Index l = 0; l < batch; ++l) {
            float acc = 0.0f;
            for (Eigen::Index i = 0; i < m; ++i) acc += static_cast<float>(e[static_cast<std::size_t>((k * batch + l) * m + i)]);
            joint += std::exp(acc);
        }
        float prod = 0.0f;
        for (Eigen::Index i = 0; i < m; ++i) {
            float acc = 0.0f;
            for (Eigen::Index l = 0; l < batch; ++l)
                acc += std::exp(static_cast<float>(e[static_cast<std::size_t>((k * batch + l) * m + i)]));
            prod += std::log(acc) - log_mk;
        }
        total += (std::log(joint) - log_mk) - prod;
    }
    rep.naive_f32_tc = static_cast<double>(total) / static_cast<double>(batch);
    return rep;
}

}  // namespace disentlab::losses
