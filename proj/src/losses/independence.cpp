#include "disentlab/losses/independence.hpp"

#include <stdexcept>

#include "disentlab/numerics/stats.hpp"

namespace disentlab::losses {

std::vector<double> theorem2_independence_check(const VectorPairSampler& sampler, Eigen::Index n,
                                                numerics::RngStream& rng, IndependenceCheckOptions opts) {
    const auto [z1, z2] = sampler(n, rng);
    if (z1.rows() != n || z2.rows() != n || z1.cols() != z2.cols())
        throw std::invalid_argument("theorem2_independence_check: sampler returned mismatched shapes");
    std::vector<double> mi;
    mi.reserve(static_cast<std::size_t>(z1.cols()));
    for (Eigen::Index i = 0; i < z1.cols(); ++i) {
        const Vector a = z1.col(i);
        const Vector b = z2.col(i);
        const auto labels = numerics::equal_count_bins(std::span<const double>(b.data(), static_cast<std::size_t>(b.size())),
                                                       opts.label_bins);
        mi.push_back(numerics::discretized_mutual_information(
            std::span<const double>(a.data(), static_cast<std::size_t>(a.size())), labels, opts.bins));
    }
    return mi;
}

}  // namespace disentlab::losses
