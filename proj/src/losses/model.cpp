#include "disentlab/losses/model.hpp"

#include <cmath>
#include <stdexcept>

#include "disentlab/errors.hpp"
#include "disentlab/losses/discriminator.hpp"
#include "disentlab/losses/kl.hpp"
#include "disentlab/neural/gaussian.hpp"

namespace disentlab::losses {

std::string to_string(Method m) {
    switch (m) {
        case Method::ae: return "ae";
        case Method::vae: return "vae";
        case Method::beta_tcvae: return "beta_tcvae";
        case Method::factor_vae: return "factor_vae";
        case Method::vec_beta_tcvae: return "vec_beta_tcvae";
        case Method::vec_factor_vae: return "vec_factor_vae";
    }
    return "vae";
}

Method method_from_string(const std::string& s) {
    for (auto m : {Method::ae, Method::vae, Method::beta_tcvae, Method::factor_vae, Method::vec_beta_tcvae,
                   Method::vec_factor_vae})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown method '" + s + "'");
}

bool is_vector_method(Method m) {
    return m == Method::vec_beta_tcvae || m == Method::vec_factor_vae || m == Method::ae;
}

bool uses_discriminator(Method m) { return m == Method::factor_vae || m == Method::vec_factor_vae; }

bool is_stochastic(Method m) { return m != Method::ae; }

ModelConfig ModelConfig::normalized() const {
    ModelConfig c = *this;
    if (!is_vector_method(c.method)) c.unit_dim = 1;
    if (c.units < 1) throw std::invalid_argument("ModelConfig: units must be >= 1");
    if (c.unit_dim < 1) throw std::invalid_argument("ModelConfig: unit_dim must be >= 1");
    if (c.gamma < 0.0) throw std::invalid_argument("ModelConfig: gamma must be >= 0");
    if (c.batch < 2) throw std::invalid_argument("ModelConfig: batch must be >= 2");
    if (c.steps < 0) throw std::invalid_argument("ModelConfig: steps must be >= 0");
    return c;
}

nlohmann::json ModelConfig::to_json() const {
    return {{"method", to_string(method)},
            {"units", units},
            {"unit_dim", unit_dim},
            {"gamma", gamma},
            {"seed", seed},
            {"steps", steps},
            {"batch", batch},
            {"dataset_size", dataset_size},
            {"lr", lr},
            {"disc_lr", disc_lr},
            {"hidden", hidden},
            {"disc_hidden", disc_hidden},
            {"disc_layers", disc_layers},
            {"activation", neural::to_string(activation)},
            {"keep_multiplier_d", keep_multiplier_d},
            {"tc_normalization", losses::to_string(tc_normalization)},
            {"grad_clip", grad_clip}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
    c.units = j.value("units", c.units);
    c.unit_dim = j.value("unit_dim", c.unit_dim);
    c.gamma = j.value("gamma", c.gamma);
    c.seed = j.value("seed", c.seed);
    c.steps = j.value("steps", c.steps);
    c.batch = j.value("batch", c.batch);
    c.dataset_size = j.value("dataset_size", c.dataset_size);
    c.lr = j.value("lr", c.lr);
    c.disc_lr = j.value("disc_lr", c.disc_lr);
    c.hidden = j.value("hidden", c.hidden);
    c.disc_hidden = j.value("disc_hidden", c.disc_hidden);
    c.disc_layers = j.value("disc_layers", c.disc_layers);
    if (j.contains("activation")) c.activation = neural::activation_from_string(j.at("activation").get<std::string>());
    c.keep_multiplier_d = j.value("keep_multiplier_d", c.keep_multiplier_d);
    if (j.contains("tc_normalization"))
        c.tc_normalization = tc_normalization_from_string(j.at("tc_normalization").get<std::string>());
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    return c.normalized();
}

VaeModel::VaeModel(const ModelConfig& config, int d_x) : config_(config.normalized()), d_x_(d_x) {
    const numerics::RngStream root(config_.seed);
    const int code = config_.units * config_.unit_dim;
    const int h = config_.hidden;
    enc_spec_ = neural::MlpSpec::uniform({d_x, h, h, code + config_.units}, config_.activation,
                                         root.child("encoder").seed());
    dec_spec_ = neural::MlpSpec::uniform({code, h, h, d_x}, config_.activation, root.child("decoder").seed());
    enc_ = neural::init_params(enc_spec_);
    dec_ = neural::init_params(dec_spec_);
    gen_opt_ = neural::AdamState::for_size(enc_.size() + dec_.size(), config_.lr);
    if (uses_discriminator(config_.method)) {
        std::vector<int> widths{code};
        for (int l = 0; l < config_.disc_layers; ++l) widths.push_back(config_.disc_hidden);
        widths.push_back(2);
        disc_spec_ = neural::MlpSpec::uniform(widths, neural::Activation::relu, root.child("discriminator").seed());
        disc_ = neural::init_params(disc_spec_);
        disc_opt_ = neural::AdamState::for_size(disc_.size(), config_.disc_lr);
    }
}

Matrix VaeModel::encode_mean(const Matrix& x) const {
    return neural::mlp_apply(enc_spec_, enc_, x).leftCols(code_dim());
}

VaeModel::Objective VaeModel::objective(const Matrix& x, const Matrix& eps) const {
    const Eigen::Index batch = x.rows();
    const Eigen::Index code = code_dim();
    const Eigen::Index m = config_.units;
    const Method method = config_.method;
    const bool stochastic = is_stochastic(method);
    const double inv_b = 1.0 / static_cast<double>(batch);

    const auto enc = neural::mlp_forward(enc_spec_, enc_, x);
    const Matrix mu = enc.output.leftCols(code);
    const Matrix raw = enc.output.rightCols(m);
    const Matrix sigma = neural::sigma_from_raw(raw);

    Matrix z = mu;
    if (stochastic) {
        if (eps.rows() != batch || eps.cols() != code) throw std::invalid_argument("objective: noise shape mismatch");
        for (Eigen::Index i = 0; i < m; ++i)
            z.middleCols(i * config_.unit_dim, config_.unit_dim).array() +=
                eps.middleCols(i * config_.unit_dim, config_.unit_dim).array().colwise() * sigma.col(i).array();
    }

    const auto dec = neural::mlp_forward(dec_spec_, dec_, z);
    const Matrix resid = dec.output - x;

    Objective out;
    out.loss.recon = 0.5 * resid.squaredNorm() * inv_b;
    const auto dec_grad = neural::backprop(dec_spec_, dec_, dec.tape, resid * inv_b);

    Matrix d_z = dec_grad.input;
    Matrix d_mu = Matrix::Zero(batch, code);
    Matrix d_sigma = Matrix::Zero(batch, m);

    if (stochastic) {
        const auto kl = kl_vec_spherical(mu, sigma, config_.keep_multiplier_d);
        out.loss.kl = kl.value;
        d_mu += kl.d_mu;
        d_sigma += kl.d_sigma;
    }

    const double gamma = method == Method::vae || method == Method::ae ? 0.0 : config_.gamma;
    if (method == Method::beta_tcvae || method == Method::vec_beta_tcvae) {
        if (config_.dataset_size < static_cast<std::uint64_t>(batch))
            throw std::invalid_argument("objective: dataset_size must be set for TC methods");
        const PosteriorSample sample{z, mu, sigma};
        const auto tc = method == Method::beta_tcvae
                            ? tc_minibatch_grad(sample, config_.dataset_size, config_.tc_normalization)
                            : tc_per_dimension_grad(sample, config_.dataset_size, config_.tc_normalization);
        out.loss.tc = tc.estimate.value;
        d_z += gamma * tc.d_z;
        d_mu += gamma * tc.d_mu;
        d_sigma += gamma * tc.d_sigma;
    } else if (uses_discriminator(method)) {
        const auto tc = discriminator_tc(disc_spec_, disc_, z);
        out.loss.tc = tc.value;
        d_z += gamma * tc.d_z;
    }
    out.loss.total = out.loss.recon + out.loss.kl + gamma * out.loss.tc;
    if (!std::isfinite(out.loss.total)) throw NonFiniteError("objective: non-finite loss");

    // z = mu + sigma * eps
    d_mu += d_z;
    if (stochastic) d_sigma += neural::reparameterize_sigma_grad(eps, d_z, m);
    Matrix upstream(batch, code + m);
    upstream.leftCols(code) = d_mu;
    upstream.rightCols(m) = d_sigma.cwiseProduct(neural::sigma_from_raw_derivative(raw));
    const auto enc_grad = neural::backprop(enc_spec_, enc_, enc.tape, upstream);

    out.grad.resize(enc_.size() + dec_.size());
    out.grad << enc_grad.params, dec_grad.params;
    out.z = std::move(z);
    return out;
}

LossBreakdown VaeModel::train_step(const Matrix& x, numerics::RngStream& rng) {
    const long index = step_;
    try {
        Matrix eps;
        if (is_stochastic(config_.method)) {
            eps.resize(x.rows(), code_dim());
            for (Eigen::Index r = 0; r < eps.rows(); ++r)
                for (Eigen::Index c = 0; c < eps.cols(); ++c) eps(r, c) = rng.normal();
        }
        auto obj = objective(x, eps);
        if (!std::isfinite(obj.loss.total)) throw NonFiniteError("train_step: loss is not finite");
        neural::clip_grad_norm(obj.grad, config_.grad_clip);
        Vector params = generator_params();
        neural::adam_step(gen_opt_, params, obj.grad);
        set_generator_params(params);

        if (uses_discriminator(config_.method)) {
            const Matrix perm = permute_units(obj.z, config_.units, rng);
            auto d = discriminator_loss(disc_spec_, disc_, obj.z, perm);
            neural::clip_grad_norm(d.d_params, config_.grad_clip);
            neural::adam_step(disc_opt_, disc_.values(), d.d_params);
            obj.loss.disc_loss = d.loss;
            obj.loss.disc_acc = d.accuracy;
        }
        if (!enc_.values().allFinite() || !dec_.values().allFinite())
            throw NonFiniteError("train_step: parameters became non-finite");
        ++step_;
        return obj.loss;
    } catch (const NonFiniteError& e) {
        throw DivergenceError(std::string("training diverged at step ") + std::to_string(index) + ": " + e.what(),
                              index);
    }
}

Vector VaeModel::generator_params() const {
    Vector p(enc_.size() + dec_.size());
    p << enc_.values(), dec_.values();
    return p;
}

void VaeModel::set_generator_params(const Vector& p) {
    if (p.size() != enc_.size() + dec_.size()) throw std::invalid_argument("set_generator_params: size mismatch");
    enc_.values() = p.head(enc_.size());
    dec_.values() = p.tail(dec_.size());
}

neural::Checkpoint VaeModel::to_checkpoint() const {
    neural::Checkpoint c;
    c.seed = config_.seed;
    c.step = step_;
    c.metadata = {{"config", config_.to_json()}, {"d_x", d_x_}};
    c.blocks.push_back({"encoder", enc_spec_, enc_});
    c.blocks.push_back({"decoder", dec_spec_, dec_});
    if (uses_discriminator(config_.method)) c.blocks.push_back({"discriminator", disc_spec_, disc_});
    return c;
}

VaeModel VaeModel::from_checkpoint(const neural::Checkpoint& ckpt) {
    const auto config = ModelConfig::from_json(ckpt.metadata.at("config"));
    VaeModel model(config, ckpt.metadata.at("d_x").get<int>());
    model.enc_ = ckpt.block("encoder").params;
    model.dec_ = ckpt.block("decoder").params;
    if (uses_discriminator(config.method)) model.disc_ = ckpt.block("discriminator").params;
    model.step_ = ckpt.step;
    return model;
}

}  // namespace disentlab::losses
