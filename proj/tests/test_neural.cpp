#include <doctest.h>

#include <cmath>
#include <fstream>
#include <filesystem>
#include <numbers>

#include "disentlab/errors.hpp"
#include "disentlab/neural/adam.hpp"
#include "disentlab/neural/checkpoint.hpp"
#include "disentlab/neural/gaussian.hpp"
#include "disentlab/neural/mlp.hpp"
#include "disentlab/numerics/rng.hpp"
#include "disentlab/numerics/stats.hpp"

using namespace disentlab;
using namespace disentlab::neural;
using numerics::RngStream;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    RngStream s(seed);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = s.normal();
    return m;
}

// scalar loss sum(W_out .* out) so the upstream gradient is a fixed matrix
double weighted_sum(const Matrix& out, const Matrix& w) { return out.cwiseProduct(w).sum(); }

}  // namespace

TEST_CASE("mlp: zero final layer outputs zeros") {
    const auto spec = MlpSpec::uniform({4, 8, 3}, Activation::tanh, 1);
    auto p = init_params(spec);
    p.weight(1).setZero();
    CHECK(mlp_forward(spec, p, random_matrix(5, 4, 2)).output.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp: identity linear layer") {
    const auto spec = MlpSpec::uniform({3, 3}, Activation::none, 0);
    ParamBlock p(spec);
    p.weight(0) = Matrix::Identity(3, 3);
    const Matrix x = random_matrix(6, 3, 4);
    CHECK((mlp_forward(spec, p, x).output - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mlp: linear net gradient matches finite differences to 1e-5") {
    const auto spec = MlpSpec::uniform({3, 4, 2}, Activation::none, 7);
    auto p = init_params(spec);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.values()(i) += 0.1 * std::sin(static_cast<double>(i));
    const Matrix x = random_matrix(5, 3, 8), w = random_matrix(5, 2, 9);
    const auto fwd = mlp_forward(spec, p, x);
    const auto g = backprop(spec, p, fwd.tape, w);
    auto f = [&](const Vector& theta) {
        ParamBlock q = p;
        q.values() = theta;
        return weighted_sum(mlp_apply(spec, q, x), w);
    };
    CHECK(numerics::max_relative_error(g.params, numerics::finite_difference_gradient(f, p.values())) < 1e-5);
}

TEST_CASE("mlp: composite net gradients (params and input) match finite differences") {
    for (auto act : {Activation::tanh, Activation::relu}) {
        const auto spec = MlpSpec::uniform({3, 5, 4, 2}, act, 11);
        const auto p = init_params(spec, 1.5);
        const Matrix x = random_matrix(4, 3, 12), w = random_matrix(4, 2, 13);
        const auto fwd = mlp_forward(spec, p, x);
        const auto g = backprop(spec, p, fwd.tape, w);
        auto f = [&](const Vector& theta) {
            ParamBlock q = p;
            q.values() = theta;
            return weighted_sum(mlp_apply(spec, q, x), w);
        };
        CHECK(numerics::max_relative_error(g.params, numerics::finite_difference_gradient(f, p.values())) < 1e-3);
        auto fx = [&](const Vector& flat) {
            return weighted_sum(mlp_apply(spec, p, Eigen::Map<const Matrix>(flat.data(), 4, 3)), w);
        };
        const Vector xin = Eigen::Map<const Vector>(x.data(), x.size());
        const Vector gin = Eigen::Map<const Vector>(g.input.data(), g.input.size());
        CHECK(numerics::max_relative_error(gin, numerics::finite_difference_gradient(fx, xin)) < 1e-3);
    }
}

TEST_CASE("backprop: zero upstream, bias gradient, shape errors") {
    const auto spec = MlpSpec::uniform({2, 3}, Activation::none, 0);
    const auto p = init_params(spec);
    const Matrix x = random_matrix(8, 2, 1);
    const auto fwd = mlp_forward(spec, p, x);
    CHECK(backprop(spec, p, fwd.tape, Matrix::Zero(8, 3)).params.cwiseAbs().maxCoeff() == 0.0);
    // d mean(output[:, j]) / d b_j = 1/batch summed over batch -> 1, per unit of the mean -> 1/batch per row
    const auto g = backprop(spec, p, fwd.tape, Matrix::Constant(8, 3, 1.0 / 8.0));
    const auto& slice = p.layout()[0];
    for (int j = 0; j < 3; ++j) CHECK(g.params(slice.bias_offset + j) == doctest::Approx(1.0));
    CHECK_THROWS(backprop(spec, p, fwd.tape, Matrix::Zero(7, 3)));
    CHECK_THROWS(mlp_forward(spec, p, Matrix::Zero(2, 5)));
}

TEST_CASE("mlp: non-finite activations name the layer") {
    const auto spec = MlpSpec::uniform({2, 3, 1}, Activation::relu, 0);
    auto p = init_params(spec);
    p.weight(1)(0, 0) = std::numeric_limits<double>::infinity();
    try {
        mlp_forward(spec, p, Matrix::Ones(2, 2));
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
}

TEST_CASE("mlp: forward and backward are bit-deterministic") {
    const auto spec = MlpSpec::uniform({4, 16, 3}, Activation::relu, 5);
    const auto a = init_params(spec), b = init_params(spec);
    CHECK(a.values() == b.values());
    const Matrix x = random_matrix(7, 4, 6), w = random_matrix(7, 3, 7);
    const auto fa = mlp_forward(spec, a, x), fb = mlp_forward(spec, b, x);
    CHECK(fa.output == fb.output);
    CHECK(backprop(spec, a, fa.tape, w).params == backprop(spec, b, fb.tape, w).params);
}

TEST_CASE("adam: zero gradient, first step size, errors") {
    auto st = AdamState::for_size(3, 1e-3);
    Vector p = Vector::Constant(3, 2.0);
    adam_step(st, p, Vector::Zero(3));
    CHECK(p == Vector::Constant(3, 2.0));

    auto s1 = AdamState::for_size(1, 1e-3);
    Vector q = Vector::Constant(1, 1.0);
    adam_step(s1, q, Vector::Constant(1, 5.0));
    CHECK(q(0) == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
    CHECK(s1.step == 1);

    Vector bad = Vector::Constant(1, std::nan(""));
    CHECK_THROWS_AS(adam_step(s1, q, bad), NonFiniteError);
    CHECK_THROWS(adam_step(s1, q, Vector::Zero(2)));
}

TEST_CASE("adam: converges on a quadratic bowl") {
    Vector target(3);
    target << 0.3, -0.2, 0.1;
    Vector p = Vector::Zero(3);
    auto st = AdamState::for_size(3, 1e-2);
    for (int i = 0; i < 5000; ++i) {
        const Vector g = 2.0 * (p - target);
        adam_step(st, p, g);
    }
    CHECK((p - target).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("clip_grad_norm") {
    Vector g(2);
    g << 3.0, 4.0;
    CHECK(clip_grad_norm(g, 1.0) == doctest::Approx(5.0));
    CHECK(g.norm() == doctest::Approx(1.0));
    Vector h = Vector::Constant(2, 0.1);
    clip_grad_norm(h, 1.0);
    CHECK(h == Vector::Constant(2, 0.1));
}

TEST_CASE("reparameterize: shared sigma per unit") {
    const int units = 3, d = 4, n = 100000;
    Matrix mu = Matrix::Constant(n, units * d, 0.5);
    Matrix sigma(n, units);
    sigma.col(0).setConstant(0.3);
    sigma.col(1).setConstant(1.0);
    sigma.col(2).setConstant(2.5);
    RngStream rng(21);
    const auto r = reparameterize(mu, sigma, rng);
    for (int u = 0; u < units; ++u) {
        const double s = sigma(0, u);
        for (int j = 0; j < d; ++j) {
            const Vector dev = r.z.col(u * d + j).array() - 0.5;
            CHECK(dev.squaredNorm() / n == doctest::Approx(s * s).epsilon(0.03));
        }
        // entries within one unit carry independent noise
        const Vector a = r.z.col(u * d).array() - 0.5, b = r.z.col(u * d + 1).array() - 0.5;
        CHECK(std::abs(a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm())) < 0.02);
        // and it is exactly mu + sigma * eps with the unit's sigma
        CHECK((r.z.middleCols(u * d, d) - (mu.middleCols(u * d, d) + s * r.eps.middleCols(u * d, d))).cwiseAbs().maxCoeff() <
              1e-12);
    }
}

TEST_CASE("reparameterize: limits and errors") {
    Matrix mu = random_matrix(5, 2, 3);
    RngStream rng(1);
    const auto tiny = reparameterize(mu, Matrix::Constant(5, 2, 1e-12), rng);
    CHECK((tiny.z - mu).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS(reparameterize(mu, Matrix::Zero(5, 2), rng));
    CHECK_THROWS(reparameterize(mu, Matrix::Constant(5, 3, 1.0), rng));
    // D = 1 is the ordinary per-coordinate reparameterization
    RngStream a(4), b(4);
    const auto r = reparameterize(mu, Matrix::Constant(5, 2, 0.7), a);
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) CHECK(r.z(i, j) == mu(i, j) + 0.7 * r.eps(i, j));
    (void)b;
}

TEST_CASE("sigma parameterization") {
    Matrix raw(1, 3);
    raw << -50.0, 0.0, 30.0;
    const Matrix s = sigma_from_raw(raw);
    CHECK(s(0, 0) > 0.0);
    CHECK(s(0, 0) == doctest::Approx(1e-6).epsilon(1e-3));
    CHECK(s(0, 1) == doctest::Approx(std::log(2.0) + 1e-6));
    CHECK(s(0, 2) == doctest::Approx(30.0 + 1e-6));
    const Matrix ds = sigma_from_raw_derivative(raw);
    CHECK(ds(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("diag gaussian log density") {
    Vector z = Vector::Zero(1), mu = Vector::Zero(1);
    CHECK(diag_gaussian_log_density(z, mu, 1.0) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
    CHECK(diag_gaussian_log_density(z, mu, 1.0) == doctest::Approx(-0.9189).epsilon(1e-4));
    Vector z64 = Vector::Zero(64), mu64 = Vector::Zero(64);
    CHECK(diag_gaussian_log_density(z64, mu64, 1.0) == doctest::Approx(-58.81).epsilon(1e-4));

    // brute force: log of the product of 1-D densities evaluated one at a time
    RngStream r(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + static_cast<int>(r.below(8));
        Vector zz(d), mm(d);
        for (int j = 0; j < d; ++j) {
            zz(j) = r.normal();
            mm(j) = r.normal();
        }
        const double s = 0.2 + 2.0 * r.uniform();
        double prod = 1.0;
        for (int j = 0; j < d; ++j)
            prod *= std::exp(-0.5 * std::pow((zz(j) - mm(j)) / s, 2)) / (s * std::sqrt(2 * std::numbers::pi));
        CHECK(std::abs(diag_gaussian_log_density(zz, mm, s) - std::log(prod)) < 1e-10);
    }
    CHECK_THROWS(diag_gaussian_log_density(z, mu, 0.0));
}

TEST_CASE("checkpoint round trip") {
    const auto spec = MlpSpec::uniform({3, 5, 2}, Activation::tanh, 17);
    const auto p = init_params(spec);
    Checkpoint c;
    c.seed = 99;
    c.step = 1234;
    c.metadata = {{"note", "x"}};
    c.blocks.push_back({"encoder", spec, p});
    const auto path = std::filesystem::temp_directory_path() / "disentlab_ckpt_test.bin";
    save_checkpoint(path, c);
    const auto back = load_checkpoint(path);
    CHECK(back.seed == 99);
    CHECK(back.step == 1234);
    CHECK(back.metadata.at("note") == "x");
    CHECK(back.block("encoder").params.values() == p.values());
    CHECK(back.block("encoder").spec.layer_widths == spec.layer_widths);
    CHECK_THROWS(back.block("decoder"));

    {
        std::ofstream junk(path, std::ios::binary);
        junk << "NOTACKPT and some more bytes";
    }
    CHECK_THROWS(load_checkpoint(path));
    std::filesystem::remove(path);
}
