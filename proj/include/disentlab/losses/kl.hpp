#pragma once

#include "disentlab/linalg.hpp"

namespace disentlab::losses {

struct KlResult {
    double value = 0.0;
    Matrix d_mu;     // batch x (m*D)
    Matrix d_sigma;  // batch x m, w.r.t. the sampling std
};

/// Batch-averaged KL(q(z|x) || N(0, I)) for spherical units N(mu_i, sigma_i^2 I_D):
///   0.5 * (1/D sum_ij mu_ij^2 + sum_i (v_i - ln v_i) - m),  v_i = sigma_i^2,
/// multiplied by D when keep_multiplier_d is set (the exact KL). Training uses
/// the bracket alone so the scale matches a scalar VAE.
KlResult kl_vec_spherical(const Matrix& mu, const Matrix& sigma_units, bool keep_multiplier_d);

}  // namespace disentlab::losses
