#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "disentlab/linalg.hpp"
#include "disentlab/numerics/rng.hpp"

namespace disentlab::losses {

/// Draws n paired D-vectors (z1, z2); each returned matrix is n x D.
using VectorPairSampler = std::function<std::pair<Matrix, Matrix>(Eigen::Index n, numerics::RngStream& rng)>;

struct IndependenceCheckOptions {
    int bins = 20;        // equal-count bins for z1 entries
    int label_bins = 10;  // equal-count bins turning z2 entries into labels
};

/// Per-entry plug-in MI (nats) between z1_i and the binned z2_i. Independent
/// vectors imply independent entries, so every value should sit at the
/// estimator's bias floor, roughly (bins-1)(label_bins-1)/(2n).
std::vector<double> theorem2_independence_check(const VectorPairSampler& sampler, Eigen::Index n,
                                                numerics::RngStream& rng, IndependenceCheckOptions opts = {});

}  // namespace disentlab::losses
