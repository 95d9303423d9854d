#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "disentlab/linalg.hpp"

namespace disentlab::neural {

enum class Activation { relu, tanh, none };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// layer_widths = [d_in, hidden..., d_out]; one activation per hidden layer.
/// The output layer is always linear.
struct MlpSpec {
    std::vector<int> layer_widths;
    std::vector<Activation> activations;
    std::uint64_t init_seed = 0;

    int input_dim() const { return layer_widths.front(); }
    int output_dim() const { return layer_widths.back(); }
    std::size_t num_layers() const { return layer_widths.size() - 1; }
    void validate() const;

    static MlpSpec uniform(std::vector<int> widths, Activation hidden, std::uint64_t seed);
};

struct LayerSlice {
    Eigen::Index weight_offset = 0;  // out x in, column-major
    Eigen::Index bias_offset = 0;
    int in = 0;
    int out = 0;
};

/// Flat parameter vector plus the layer -> weight/bias index map.
class ParamBlock {
public:
    ParamBlock() = default;
    explicit ParamBlock(const MlpSpec& spec);

    Vector& values() { return values_; }
    const Vector& values() const { return values_; }
    Eigen::Index size() const { return values_.size(); }
    const std::vector<LayerSlice>& layout() const { return layout_; }

    Eigen::Map<Matrix> weight(std::size_t layer);
    Eigen::Map<const Matrix> weight(std::size_t layer) const;
    Eigen::Map<Vector> bias(std::size_t layer);
    Eigen::Map<const Vector> bias(std::size_t layer) const;

private:
    Vector values_;
    std::vector<LayerSlice> layout_;
};

/// Fan-in scaled uniform init: W ~ U(-1/sqrt(in), 1/sqrt(in)) * gain, b = 0.
ParamBlock init_params(const MlpSpec& spec, double gain = 1.0);

/// Activations kept for the backward pass. inputs[l] feeds layer l;
/// pre[l] is its affine output before the activation.
struct Tape {
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre;
};

struct ForwardResult {
    Matrix output;
    Tape tape;
};

struct Gradient {
    Vector params;  // same layout as ParamBlock
    Matrix input;   // d loss / d input, batch x d_in
};

ForwardResult mlp_forward(const MlpSpec& spec, const ParamBlock& params, const Matrix& input);

/// Forward pass without recording a tape.
Matrix mlp_apply(const MlpSpec& spec, const ParamBlock& params, const Matrix& input);

Gradient backprop(const MlpSpec& spec, const ParamBlock& params, const Tape& tape, const Matrix& upstream);

}  // namespace disentlab::neural
