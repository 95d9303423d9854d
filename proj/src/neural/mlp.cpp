#include "disentlab/neural/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "disentlab/errors.hpp"
#include "disentlab/numerics/rng.hpp"

namespace disentlab::neural {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::none: return "none";
    }
    return "none";
}

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "none") return Activation::none;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
    if (layer_widths.size() < 2) throw std::invalid_argument("MlpSpec: need at least one layer");
    for (int w : layer_widths)
        if (w <= 0) throw std::invalid_argument("MlpSpec: layer widths must be positive");
    if (activations.size() != layer_widths.size() - 2)
        throw std::invalid_argument("MlpSpec: expected one activation per hidden layer");
}

MlpSpec MlpSpec::uniform(std::vector<int> widths, Activation hidden, std::uint64_t seed) {
    MlpSpec spec;
    const std::size_t hidden_layers = widths.size() >= 2 ? widths.size() - 2 : 0;
    spec.layer_widths = std::move(widths);
    spec.activations.assign(hidden_layers, hidden);
    spec.init_seed = seed;
    spec.validate();
    return spec;
}

ParamBlock::ParamBlock(const MlpSpec& spec) {
    spec.validate();
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        LayerSlice s;
        s.in = spec.layer_widths[l];
        s.out = spec.layer_widths[l + 1];
        s.weight_offset = offset;
        offset += static_cast<Eigen::Index>(s.in) * s.out;
        s.bias_offset = offset;
        offset += s.out;
        layout_.push_back(s);
    }
    values_ = Vector::Zero(offset);
}

Eigen::Map<Matrix> ParamBlock::weight(std::size_t layer) {
    const auto& s = layout_.at(layer);
    return {values_.data() + s.weight_offset, s.out, s.in};
}

Eigen::Map<const Matrix> ParamBlock::weight(std::size_t layer) const {
    const auto& s = layout_.at(layer);
    return {values_.data() + s.weight_offset, s.out, s.in};
}

Eigen::Map<Vector> ParamBlock::bias(std::size_t layer) {
    const auto& s = layout_.at(layer);
    return {values_.data() + s.bias_offset, s.out};
}

Eigen::Map<const Vector> ParamBlock::bias(std::size_t layer) const {
    const auto& s = layout_.at(layer);
    return {values_.data() + s.bias_offset, s.out};
}

ParamBlock init_params(const MlpSpec& spec, double gain) {
    ParamBlock params(spec);
    numerics::RngStream rng(spec.init_seed);
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
        auto w = params.weight(l);
        const double bound = gain / std::sqrt(static_cast<double>(w.cols()));
        // Column-major fill order is part of the determinism contract.
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
    }
    return params;
}

namespace {

void apply_activation(Activation a, Matrix& m) {
    switch (a) {
        case Activation::relu: m = m.cwiseMax(0.0); break;
        case Activation::tanh: m = m.array().tanh().matrix(); break;
        case Activation::none: break;
    }
}

void check_shapes(const MlpSpec& spec, const ParamBlock& params, const Matrix& input) {
    if (input.cols() != spec.input_dim())
        throw std::invalid_argument("mlp_forward: input width " + std::to_string(input.cols()) +
                                    " does not match spec input " + std::to_string(spec.input_dim()));
    if (params.layout().size() != spec.num_layers())
        throw std::invalid_argument("mlp_forward: parameter block does not match spec");
}

}  // namespace

ForwardResult mlp_forward(const MlpSpec& spec, const ParamBlock& params, const Matrix& input) {
    check_shapes(spec, params, input);
    ForwardResult result;
    const std::size_t layers = spec.num_layers();
    result.tape.inputs.reserve(layers);
    result.tape.pre.reserve(layers);
    Matrix h = input;
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix pre = h * params.weight(l).transpose();
        pre.rowwise() += params.bias(l).transpose();
        if (!pre.allFinite()) throw NonFiniteError("mlp_forward: non-finite activations in layer " + std::to_string(l));
        result.tape.inputs.push_back(std::move(h));
        h = pre;
        if (l + 1 < layers) apply_activation(spec.activations[l], h);
        result.tape.pre.push_back(std::move(pre));
    }
    result.output = std::move(h);
    return result;
}

Matrix mlp_apply(const MlpSpec& spec, const ParamBlock& params, const Matrix& input) {
    check_shapes(spec, params, input);
    Matrix h = input;
    const std::size_t layers = spec.num_layers();
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix pre = h * params.weight(l).transpose();
        pre.rowwise() += params.bias(l).transpose();
        if (!pre.allFinite()) throw NonFiniteError("mlp_apply: non-finite activations in layer " + std::to_string(l));
        if (l + 1 < layers) apply_activation(spec.activations[l], pre);
        h = std::move(pre);
    }
    return h;
}

Gradient backprop(const MlpSpec& spec, const ParamBlock& params, const Tape& tape, const Matrix& upstream) {
    const std::size_t layers = spec.num_layers();
    if (tape.inputs.size() != layers || tape.pre.size() != layers)
        throw std::invalid_argument("backprop: tape does not match spec");
    if (upstream.cols() != spec.output_dim() || upstream.rows() != tape.pre.back().rows())
        throw std::invalid_argument("backprop: upstream shape mismatch");

    Gradient grad;
    grad.params = Vector::Zero(params.size());
    Matrix g = upstream;
    for (std::size_t li = layers; li-- > 0;) {
        if (li + 1 < layers) {
            const Matrix& pre = tape.pre[li];
            switch (spec.activations[li]) {
                case Activation::relu: g = g.cwiseProduct((pre.array() > 0.0).cast<double>().matrix()); break;
                case Activation::tanh: g = g.cwiseProduct((1.0 - pre.array().tanh().square()).matrix()); break;
                case Activation::none: break;
            }
        }
        const auto& s = params.layout()[li];
        Eigen::Map<Matrix> dw(grad.params.data() + s.weight_offset, s.out, s.in);
        Eigen::Map<Vector> db(grad.params.data() + s.bias_offset, s.out);
        dw.noalias() = g.transpose() * tape.inputs[li];
        db = g.colwise().sum().transpose();
        g = g * params.weight(li);
    }
    grad.input = std::move(g);
    return grad;
}

}  // namespace disentlab::neural
