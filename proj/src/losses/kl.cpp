#include "disentlab/losses/kl.hpp"

#include <cmath>
#include <stdexcept>

namespace disentlab::losses {

KlResult kl_vec_spherical(const Matrix& mu, const Matrix& sigma_units, bool keep_multiplier_d) {
    const Eigen::Index batch = mu.rows();
    const Eigen::Index m = sigma_units.cols();
    if (batch == 0 || m == 0 || sigma_units.rows() != batch || mu.cols() % m != 0)
        throw std::invalid_argument("kl_vec_spherical: mu/sigma layout mismatch");
    if ((sigma_units.array() <= 0.0).any()) throw std::invalid_argument("kl_vec_spherical: sigma must be positive");
    const auto d = static_cast<double>(mu.cols() / m);
    const double scale = keep_multiplier_d ? d : 1.0;
    const double inv_b = 1.0 / static_cast<double>(batch);

    double total = 0.0;
    for (Eigen::Index r = 0; r < batch; ++r) {
        const double mu_sq = mu.row(r).squaredNorm();
        double var_term = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double s = sigma_units(r, i);
            const double v = s * s;
            var_term += v - std::log(v);
        }
        total += 0.5 * (mu_sq / d + var_term - static_cast<double>(m));
    }

    KlResult out;
    out.value = scale * total * inv_b;
    out.d_mu = mu * (scale * inv_b / d);
    out.d_sigma = (sigma_units.array() - sigma_units.array().inverse()).matrix() * (scale * inv_b);
    return out;
}

}  // namespace disentlab::losses
