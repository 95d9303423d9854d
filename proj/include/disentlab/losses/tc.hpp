#pragma once

#include <cstdint>
#include <string>

#include "disentlab/linalg.hpp"

namespace disentlab::losses {

/// How the minibatch sum over conditioning posteriors is normalized.
///  - stratified: importance weights 1/K on the sample's own posterior,
///    1/(M-1) on the others (one stratum weight (K-M+1)/(K(M-1))); weights sum to 1.
///  - uniform:   log-sum-exp minus ln M.
///  - verbatim:  log-sum-exp minus ln(M K). Differs from `uniform` by the
///    constant (m-1) ln K, so gradients agree but the value is offset.
enum class TcNormalization { stratified, uniform, verbatim };

std::string to_string(TcNormalization n);
TcNormalization tc_normalization_from_string(const std::string& s);

enum class TcEstimator { minibatch, per_dimension, discriminator };

struct TcEstimate {
    double value = 0.0;  // nats
    TcEstimator estimator = TcEstimator::minibatch;
    Eigen::Index batch = 0;
    std::uint64_t dataset_size = 0;
};

/// Sampled codes z (M x m*D) with the posteriors that produced them:
/// means mu (M x m*D) and one std per unit (M x m).
struct PosteriorSample {
    Matrix z;
    Matrix mu;
    Matrix sigma;

    Eigen::Index batch() const { return z.rows(); }
    Eigen::Index units() const { return sigma.cols(); }
    Eigen::Index unit_dim() const { return sigma.cols() == 0 ? 0 : z.cols() / sigma.cols(); }
};

struct TcGradient {
    TcEstimate estimate;
    Matrix d_z;
    Matrix d_mu;
    Matrix d_sigma;
};

/// Minibatch estimate of KL(q(z) || prod_i q(z_i)) over whole units:
/// for each sample k, ln q(z_k) ~ LSE_l[ln q(z_k | x_l) + w_kl] and likewise
/// per unit, then E[ln q(z) - sum_i ln q(z_i)]. Log densities are summed over
/// each unit's D entries and combined with a max-shifted log-sum-exp.
TcEstimate tc_minibatch(const PosteriorSample& s, std::uint64_t dataset_size,
                        TcNormalization norm = TcNormalization::stratified);
TcGradient tc_minibatch_grad(const PosteriorSample& s, std::uint64_t dataset_size,
                             TcNormalization norm = TcNormalization::stratified);

/// (1/D) sum_j TC of the scalar slice {z_1j, ..., z_mj}, each slice estimated
/// by tc_minibatch with the unit's shared sigma.
TcEstimate tc_per_dimension(const PosteriorSample& s, std::uint64_t dataset_size,
                            TcNormalization norm = TcNormalization::stratified);
TcGradient tc_per_dimension_grad(const PosteriorSample& s, std::uint64_t dataset_size,
                                 TcNormalization norm = TcNormalization::stratified);

/// What happens to exp(E(z_i | x)) when the per-unit log densities are
/// exponentiated in single precision, as a naive implementation would.
struct PrecisionReport {
    Eigen::Index densities = 0;        // number of (k, l, i) entries
    Eigen::Index zero_in_f32 = 0;      // exp(E) == 0 in float
    Eigen::Index zero_in_f64 = 0;      // exp(E) == 0 in double
    double min_log_density = 0.0;
    double stable_tc = 0.0;            // log-sum-exp in double
    double naive_f32_tc = 0.0;         // log(sum(exp(.))) in float, no shift
    bool underflow_reproduced() const { return zero_in_f32 > zero_in_f64; }
};

PrecisionReport density_precision_check(const PosteriorSample& s, std::uint64_t dataset_size);

}  // namespace disentlab::losses
