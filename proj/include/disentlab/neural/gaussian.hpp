#pragma once

#include "disentlab/linalg.hpp"
#include "disentlab/numerics/rng.hpp"

namespace disentlab::neural {

inline constexpr double kSigmaFloor = 1e-6;

/// sigma = softplus(raw) + 1e-6, elementwise.
Matrix sigma_from_raw(const Matrix& raw);
/// d sigma / d raw = logistic(raw).
Matrix sigma_from_raw_derivative(const Matrix& raw);

struct Reparameterized {
    Matrix z;    // batch x (m*D)
    Matrix eps;  // standard normal noise used, same shape
};

/// z_ij = mu_ij + sigma_i * eps_ij, one sigma shared across the D entries of unit i.
/// Columns of mu are laid out unit-major: unit i occupies [i*D, (i+1)*D).
Reparameterized reparameterize(const Matrix& mu, const Matrix& sigma_units, numerics::RngStream& rng);

/// Pathwise gradients: dL/dmu = dL/dz, dL/dsigma_i = sum_j eps_ij dL/dz_ij.
Matrix reparameterize_sigma_grad(const Matrix& eps, const Matrix& dz, Eigen::Index units);

/// sum_j log N(z_j; mu_j, sigma^2) over the D entries of one unit.
double diag_gaussian_log_density(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& mu, double sigma);

}  // namespace disentlab::neural
