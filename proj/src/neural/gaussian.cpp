#include "disentlab/neural/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace disentlab::neural {

Matrix sigma_from_raw(const Matrix& raw) {
    // softplus(x) = max(x, 0) + log1p(exp(-|x|))
    return raw.unaryExpr([](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) + kSigmaFloor; });
}

Matrix sigma_from_raw_derivative(const Matrix& raw) {
    return raw.unaryExpr([](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    });
}

Reparameterized reparameterize(const Matrix& mu, const Matrix& sigma_units, numerics::RngStream& rng) {
    const Eigen::Index units = sigma_units.cols();
    if (units == 0 || mu.cols() % units != 0 || mu.rows() != sigma_units.rows())
        throw std::invalid_argument("reparameterize: mu/sigma layout mismatch");
    if ((sigma_units.array() <= 0.0).any()) throw std::invalid_argument("reparameterize: sigma must be positive");
    const Eigen::Index d = mu.cols() / units;
    Reparameterized out;
    out.eps.resize(mu.rows(), mu.cols());
    for (Eigen::Index r = 0; r < mu.rows(); ++r)
        for (Eigen::Index c = 0; c < mu.cols(); ++c) out.eps(r, c) = rng.normal();
    out.z = mu;
    for (Eigen::Index i = 0; i < units; ++i)
        out.z.middleCols(i * d, d).array() += out.eps.middleCols(i * d, d).array().colwise() * sigma_units.col(i).array();
    return out;
}

Matrix reparameterize_sigma_grad(const Matrix& eps, const Matrix& dz, Eigen::Index units) {
    const Eigen::Index d = dz.cols() / units;
    Matrix g(dz.rows(), units);
    for (Eigen::Index i = 0; i < units; ++i)
        g.col(i) = eps.middleCols(i * d, d).cwiseProduct(dz.middleCols(i * d, d)).rowwise().sum();
    return g;
}

double diag_gaussian_log_density(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& mu, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("diag_gaussian_log_density: sigma must be positive");
    if (z.size() != mu.size()) throw std::invalid_argument("diag_gaussian_log_density: size mismatch");
    constexpr double half_log_2pi = 0.91893853320467274178;
    const double log_sigma = std::log(sigma);
    double total = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double t = (z(j) - mu(j)) / sigma;
        total += -half_log_2pi - log_sigma - 0.5 * t * t;
    }
    return total;
}

}  // namespace disentlab::neural
