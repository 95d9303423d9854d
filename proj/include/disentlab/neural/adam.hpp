#pragma once

#include "disentlab/linalg.hpp"

namespace disentlab::neural {

struct AdamState {
    long step = 0;
    Vector m;
    Vector v;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_size(Eigen::Index n, double lr = 1e-4);
};

/// Bias-corrected Adam update in place. Throws on non-finite gradients.
void adam_step(AdamState& state, Vector& params, const Vector& grad);

/// Rescales grad so its L2 norm is at most max_norm. Returns the original norm.
double clip_grad_norm(Vector& grad, double max_norm);

}  // namespace disentlab::neural
