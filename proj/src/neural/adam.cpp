#include "disentlab/neural/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "disentlab/errors.hpp"

namespace disentlab::neural {

AdamState AdamState::for_size(Eigen::Index n, double lr) {
    AdamState s;
    s.m = Vector::Zero(n);
    s.v = Vector::Zero(n);
    s.lr = lr;
    return s;
}

void adam_step(AdamState& state, Vector& params, const Vector& grad) {
    if (grad.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    if (!grad.allFinite()) throw NonFiniteError("adam_step: non-finite gradient");
    ++state.step;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const double step_size = state.lr / c1;
    params.array() -= step_size * state.m.array() / ((state.v.array() / c2).sqrt() + state.eps);
}

double clip_grad_norm(Vector& grad, double max_norm) {
    const double norm = grad.norm();
    if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
    return norm;
}

}  // namespace disentlab::neural
