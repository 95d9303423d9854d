#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "disentlab/linalg.hpp"
#include "disentlab/losses/tc.hpp"
#include "disentlab/neural/adam.hpp"
#include "disentlab/neural/checkpoint.hpp"
#include "disentlab/neural/mlp.hpp"
#include "disentlab/numerics/rng.hpp"

namespace disentlab::losses {

enum class Method { ae, vae, beta_tcvae, factor_vae, vec_beta_tcvae, vec_factor_vae };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
bool is_vector_method(Method m);
bool uses_discriminator(Method m);
bool is_stochastic(Method m);

struct ModelConfig {
    Method method = Method::vae;
    int units = 10;       // m
    int unit_dim = 1;     // D; forced to 1 for scalar methods
    double gamma = 0.0;
    std::uint64_t seed = 0;
    long steps = 20000;
    int batch = 32;
    std::uint64_t dataset_size = 0;  // K; 0 means "use the training split size"
    double lr = 1e-4;
    double disc_lr = 1e-4;
    int hidden = 256;
    int disc_hidden = 128;
    int disc_layers = 3;
    neural::Activation activation = neural::Activation::relu;
    bool keep_multiplier_d = false;
    TcNormalization tc_normalization = TcNormalization::stratified;
    double grad_clip = 100.0;

    /// D reset to 1 for scalar methods; throws on invalid values.
    ModelConfig normalized() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

struct LossBreakdown {
    double recon = 0.0;
    double kl = 0.0;
    double tc = 0.0;
    double total = 0.0;
    double disc_loss = 0.0;
    double disc_acc = 0.0;
};

/// Encoder [d_x, h, h, m*D + m] (mean head then one raw sigma per unit),
/// decoder [m*D, h, h, d_x], optional discriminator [m*D, hd x layers, 2].
class VaeModel {
public:
    VaeModel(const ModelConfig& config, int d_x);

    const ModelConfig& config() const { return config_; }
    int input_dim() const { return d_x_; }
    Eigen::Index code_dim() const { return static_cast<Eigen::Index>(config_.units) * config_.unit_dim; }

    const neural::MlpSpec& encoder_spec() const { return enc_spec_; }
    const neural::MlpSpec& decoder_spec() const { return dec_spec_; }
    const neural::MlpSpec& disc_spec() const { return disc_spec_; }
    neural::ParamBlock& encoder() { return enc_; }
    neural::ParamBlock& decoder() { return dec_; }
    neural::ParamBlock& discriminator() { return disc_; }
    const neural::ParamBlock& encoder() const { return enc_; }
    const neural::ParamBlock& decoder() const { return dec_; }
    const neural::ParamBlock& discriminator() const { return disc_; }
    long step() const { return step_; }

    /// Posterior means (the evaluated representation), rows x m*D.
    Matrix encode_mean(const Matrix& x) const;

    /// Generator objective recon + KL + gamma * TC for fixed noise, with its
    /// gradient w.r.t. [encoder; decoder] parameters. `eps` must be
    /// batch x m*D (ignored for the AE). The discriminator term is
    /// deterministic given the current discriminator.
    struct Objective {
        LossBreakdown loss;
        Vector grad;    // encoder params then decoder params
        Matrix z;       // sampled codes, for the discriminator step
    };
    Objective objective(const Matrix& x, const Matrix& eps) const;

    /// One optimizer step on a batch. FactorVAE variants follow it with one
    /// discriminator step on the same codes vs their unit-permuted copy.
    LossBreakdown train_step(const Matrix& x, numerics::RngStream& rng);

    /// Flat [encoder; decoder] parameter view helpers for gradient checks.
    Vector generator_params() const;
    void set_generator_params(const Vector& p);

    neural::Checkpoint to_checkpoint() const;
    static VaeModel from_checkpoint(const neural::Checkpoint& ckpt);

private:
    ModelConfig config_;
    int d_x_;
    neural::MlpSpec enc_spec_, dec_spec_, disc_spec_;
    neural::ParamBlock enc_, dec_, disc_;
    neural::AdamState gen_opt_, disc_opt_;
    long step_ = 0;
};

}  // namespace disentlab::losses
