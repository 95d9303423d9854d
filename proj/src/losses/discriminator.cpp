#include "disentlab/losses/discriminator.hpp"

#include <cmath>
#include <stdexcept>

#include "disentlab/errors.hpp"

namespace disentlab::losses {

Matrix permute_units(const Matrix& z, Eigen::Index units, numerics::RngStream& rng) {
    if (units <= 0 || z.cols() % units != 0) throw std::invalid_argument("permute_units: layout mismatch");
    const Eigen::Index d = z.cols() / units;
    Matrix out(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < units; ++i) {
        const auto perm = rng.permutation(static_cast<std::size_t>(z.rows()));
        for (Eigen::Index r = 0; r < z.rows(); ++r)
            out.block(r, i * d, 1, d) = z.block(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(r)]), i * d, 1, d);
    }
    return out;
}

DiscriminatorTc discriminator_tc(const neural::MlpSpec& spec, const neural::ParamBlock& params, const Matrix& z) {
    if (spec.output_dim() != 2) throw std::invalid_argument("discriminator_tc: discriminator must output 2 logits");
    auto fwd = neural::mlp_forward(spec, params, z);
    if (!fwd.output.allFinite()) throw NonFiniteError("discriminator_tc: non-finite logits");
    const double inv_b = 1.0 / static_cast<double>(z.rows());
    DiscriminatorTc out;
    out.value = (fwd.output.col(0) - fwd.output.col(1)).sum() * inv_b;
    Matrix upstream(z.rows(), 2);
    upstream.col(0).setConstant(inv_b);
    upstream.col(1).setConstant(-inv_b);
    out.d_z = neural::backprop(spec, params, fwd.tape, upstream).input;
    return out;
}

namespace {

/// Accumulates -mean log softmax(logits)[label] into loss/upstream.
double cross_entropy(const Matrix& logits, int label, double weight, Matrix& upstream, Eigen::Index& correct) {
    double loss = 0.0;
    upstream.resize(logits.rows(), 2);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double a = logits(r, 0), b = logits(r, 1);
        const double mx = std::max(a, b);
        const double lse = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
        const double p0 = std::exp(a - lse), p1 = std::exp(b - lse);
        loss -= weight * ((label == 0 ? a : b) - lse);
        upstream(r, 0) = weight * (p0 - (label == 0 ? 1.0 : 0.0));
        upstream(r, 1) = weight * (p1 - (label == 1 ? 1.0 : 0.0));
        if ((label == 0 && a >= b) || (label == 1 && b > a)) ++correct;
    }
    return loss;
}

}  // namespace

DiscriminatorLoss discriminator_loss(const neural::MlpSpec& spec, const neural::ParamBlock& params,
                                     const Matrix& z_real, const Matrix& z_perm) {
    const auto real = neural::mlp_forward(spec, params, z_real);
    const auto perm = neural::mlp_forward(spec, params, z_perm);
    if (!real.output.allFinite() || !perm.output.allFinite())
        throw NonFiniteError("discriminator_loss: non-finite logits");
    Eigen::Index correct = 0;
    Matrix up_real, up_perm;
    DiscriminatorLoss out;
    out.loss = cross_entropy(real.output, 0, 0.5 / static_cast<double>(z_real.rows()), up_real, correct) +
               cross_entropy(perm.output, 1, 0.5 / static_cast<double>(z_perm.rows()), up_perm, correct);
    out.accuracy = static_cast<double>(correct) / static_cast<double>(z_real.rows() + z_perm.rows());
    out.d_params = neural::backprop(spec, params, real.tape, up_real).params +
                   neural::backprop(spec, params, perm.tape, up_perm).params;
    return out;
}

}  // namespace disentlab::losses
