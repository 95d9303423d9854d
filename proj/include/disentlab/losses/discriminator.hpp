#pragma once

#include "disentlab/linalg.hpp"
#include "disentlab/neural/mlp.hpp"
#include "disentlab/numerics/rng.hpp"

namespace disentlab::losses {

/// For each unit independently, shuffle the batch axis, moving the unit's
/// whole D-vector as one block. Intra-unit structure is preserved.
Matrix permute_units(const Matrix& z, Eigen::Index units, numerics::RngStream& rng);

/// Density-ratio TC estimate mean_b[logit_real - logit_perm], i.e.
/// E[ln D(z) - ln(1 - D(z))] with D = softmax(logits)[0].
struct DiscriminatorTc {
    double value = 0.0;
    Matrix d_z;  // gradient of value w.r.t. z
};

DiscriminatorTc discriminator_tc(const neural::MlpSpec& spec, const neural::ParamBlock& params, const Matrix& z);

/// Cross-entropy of real (class 0) vs permuted (class 1) codes, averaged over
/// both halves, with its parameter gradient and the classification accuracy.
struct DiscriminatorLoss {
    double loss = 0.0;
    double accuracy = 0.0;
    Vector d_params;
};

DiscriminatorLoss discriminator_loss(const neural::MlpSpec& spec, const neural::ParamBlock& params,
                                     const Matrix& z_real, const Matrix& z_perm);

}  // namespace disentlab::losses
