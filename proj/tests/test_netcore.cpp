// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cfgdp/adam.hpp"
#include "cfgdp/errors.hpp"
#include "cfgdp/gradcheck.hpp"
#include "cfgdp/mlp.hpp"

using namespace cfgdp;

namespace {

DenseLayer identity_layer(int n) {
    DenseLayer l;
    l.weights = Mat(n, n);
    for (int i = 0; i < n; ++i) l.weights.at(i, i) = 1.0;
    l.bias.assign(static_cast<std::size_t>(n), 0.0);
    l.activation = Activation::kIdentity;
    return l;
}

// Independent scalar-loop forward pass used as an oracle.
Vec scalar_loop_forward(const Mlp& net, const Vec& input) {
    Vec x = input;
    for (const auto& layer : net.layers) {
        Vec y(static_cast<std::size_t>(layer.out_dim()));
        for (int r = 0; r < layer.out_dim(); ++r) {
            double acc = layer.bias[static_cast<std::size_t>(r)];
            for (int c = 0; c < layer.in_dim(); ++c)
                acc += layer.weights.at(r, c) * x[static_cast<std::size_t>(c)];
            y[static_cast<std::size_t>(r)] = apply_activation(layer.activation, acc);
        }
        x = y;
    }
    return x;
}

}  // namespace

TEST_CASE("forward: identity layer passes input through") {
    Mlp net;
    net.layers.push_back(identity_layer(2));
    Vec out = mlp_forward(net, {1.0, 2.0});
    CHECK(out == Vec{1.0, 2.0});
}

TEST_CASE("forward: relu layer clips negatives") {
    Mlp net;
    net.layers.push_back(identity_layer(2));
    net.layers[0].activation = Activation::kReLU;
    Vec out = mlp_forward(net, {-3.0, 4.0});
    CHECK(out == Vec{0.0, 4.0});
}

TEST_CASE("forward: matches scalar-loop oracle on a random 2-layer net") {
    Rng rng(42);
    Mlp net = make_mlp({4, 6, 3}, {Activation::kMish, Activation::kIdentity}, rng);
    Vec input = {0.3, -0.7, 1.2, 0.05};
    Vec got = mlp_forward(net, input);
    Vec want = scalar_loop_forward(net, input);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("forward: deterministic bit pattern") {
    Rng rng(7);
    Mlp net = make_mlp({3, 5, 2}, {Activation::kMish, Activation::kIdentity}, rng);
    Vec input = {0.1, 0.2, -0.3};
    Vec a = mlp_forward(net, input);
    Vec b = mlp_forward(net, input);
    CHECK(a == b);
}

TEST_CASE("forward: dimension mismatch throws") {
    Mlp net;
    net.layers.push_back(identity_layer(2));
    CHECK_THROWS_AS(mlp_forward(net, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("backward: identity layer with sum loss") {
    Mlp net;
    net.layers.push_back(identity_layer(2));
    ForwardCache cache;
    mlp_forward(net, {1.0, 2.0}, cache);
    MlpGrads g = mlp_backward(net, cache, {1.0, 1.0});
    // d(sum)/dW[r][c] = input[c]
    CHECK(g.weights[0].at(0, 0) == 1.0);
    CHECK(g.weights[0].at(0, 1) == 2.0);
    CHECK(g.weights[0].at(1, 0) == 1.0);
    CHECK(g.weights[0].at(1, 1) == 2.0);
    CHECK(g.bias[0] == Vec{1.0, 1.0});
    CHECK(g.input_grad == Vec{1.0, 1.0});
}

TEST_CASE("backward: dead relu has zero parameter gradients") {
    Mlp net;
    net.layers.push_back(identity_layer(2));
    net.layers[0].activation = Activation::kReLU;
    net.layers[0].bias = {-10.0, -10.0};
    ForwardCache cache;
    mlp_forward(net, {0.5, 0.5}, cache);
    MlpGrads g = mlp_backward(net, cache, {1.0, 1.0});
    for (double v : g.weights[0].data) CHECK(v == 0.0);
    for (double v : g.bias[0]) CHECK(v == 0.0);
}

TEST_CASE("backward: matches central finite differences on random 3-layer nets") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        Mlp net = make_mlp({5, 8, 8, 4},
                           {Activation::kMish, Activation::kMish, Activation::kIdentity}, rng);
        Vec input(5), target(4);
        for (auto& v : input) v = rng.gaussian();
        for (auto& v : target) v = rng.gaussian();

        auto loss_fn = [&](const Vec& flat) {
            Mlp probe = net;
            probe.from_flat(flat);
            Vec y = mlp_forward(probe, input);
            double loss = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                double d = y[i] - target[i];
                loss += d * d;
            }
            return loss / static_cast<double>(y.size());
        };

        ForwardCache cache;
        Vec y = mlp_forward(net, input, cache);
        Vec dout(y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            dout[i] = 2.0 * (y[i] - target[i]) / static_cast<double>(y.size());
        MlpGrads grads = mlp_backward(net, cache, dout);
        Vec analytic;
        grads.to_flat(analytic);
        Vec params;
        net.to_flat(params);

        GradCheckReport report = grad_check(params, loss_fn, analytic, 1e-4);
        CHECK_MESSAGE(report.pass, "seed ", seed, " max rel err ", report.max_rel_error);
    }
}

TEST_CASE("adam: zero gradient is a fixed point for parameters") {
    Vec params = {1.0, -2.0, 3.0};
    Vec before = params;
    AdamState state(params.size(), AdamConfig{1e-2, 0.9, 0.999, 1e-8});
    adam_step(state, params, {0.0, 0.0, 0.0});
    CHECK(params == before);
    CHECK(state.step_count == 1);
}

TEST_CASE("adam: first step moves by about -lr*sign(g)") {
    Vec params = {0.0};
    AdamState state(1, AdamConfig{1e-3, 0.9, 0.999, 1e-8});
    adam_step(state, params, {2.5});
    CHECK(params[0] == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("adam: two steps match a scalar recurrence oracle") {
    const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.7;
    double p = 0.2, m = 0.0, v = 0.0;
    for (int t = 1; t <= 2; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        double mhat = m / (1 - std::pow(b1, t));
        double vhat = v / (1 - std::pow(b2, t));
        p -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    Vec params = {0.2};
    AdamState state(1, AdamConfig{lr, b1, b2, eps});
    adam_step(state, params, {g});
    adam_step(state, params, {g});
    CHECK(params[0] == doctest::Approx(p).epsilon(1e-12));
    CHECK(state.step_count == 2);
}

TEST_CASE("adam: non-finite gradient rejected, params untouched") {
    Vec params = {1.0};
    Vec before = params;
    AdamState state(1);
    CHECK_THROWS_AS(adam_step(state, params, {std::nan("")}), NumericError);
    CHECK(params == before);
    CHECK(state.step_count == 0);
}

TEST_CASE("grad_check: quadratic loss on a linear net is tight") {
    Rng rng(11);
    Mlp net = make_mlp({3, 2}, {Activation::kIdentity}, rng);
    Vec input = {0.4, -0.2, 0.9};
    auto loss_fn = [&](const Vec& flat) {
        Mlp probe = net;
        probe.from_flat(flat);
        Vec y = mlp_forward(probe, input);
        return 0.5 * squared_norm(y);
    };
    ForwardCache cache;
    Vec y = mlp_forward(net, input, cache);
    MlpGrads grads = mlp_backward(net, cache, y);
    Vec analytic, params;
    grads.to_flat(analytic);
    net.to_flat(params);
    GradCheckReport report = grad_check(params, loss_fn, analytic, 1e-7);
    CHECK(report.pass);
    CHECK(report.max_rel_error < 1e-7);
}

TEST_CASE("grad_check: zero-parameter degenerate case passes with empty report") {
    GradCheckReport report = grad_check({}, [](const Vec&) { return 0.0; }, {}, 1e-7);
    CHECK(report.pass);
    CHECK(report.n_params == 0);
}
