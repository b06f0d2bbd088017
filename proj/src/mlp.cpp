// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#include "cfgdp/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "cfgdp/errors.hpp"

namespace cfgdp {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::kReLU: return "relu";
        case Activation::kIdentity: return "identity";
        case Activation::kMish: return "mish";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::kReLU;
    if (name == "identity") return Activation::kIdentity;
    if (name == "mish") return Activation::kMish;
    throw ConfigError("unknown activation: " + name);
}

namespace {

double softplus(double x) {
    if (x > 20.0) return x;
    if (x < -20.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::kReLU: return x > 0.0 ? x : 0.0;
        case Activation::kIdentity: return x;
        case Activation::kMish: return x * std::tanh(softplus(x));
    }
    return x;
}

double activation_grad(Activation a, double x) {
    switch (a) {
        case Activation::kReLU: return x > 0.0 ? 1.0 : 0.0;
        case Activation::kIdentity: return 1.0;
        case Activation::kMish: {
            double t = std::tanh(softplus(x));
            return t + x * (1.0 - t * t) * sigmoid(x);
        }
    }
    return 1.0;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.data.size() + l.bias.size();
    return n;
}

void Mlp::to_flat(Vec& out) const {
    out.clear();
    out.reserve(param_count());
    for (const auto& l : layers) {
        out.insert(out.end(), l.weights.data.begin(), l.weights.data.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
}

void Mlp::from_flat(const Vec& flat) {
    if (flat.size() != param_count())
        throw std::invalid_argument("Mlp::from_flat: size mismatch");
    std::size_t off = 0;
    for (auto& l : layers) {
        std::copy(flat.begin() + off, flat.begin() + off + l.weights.data.size(),
                  l.weights.data.begin());
        off += l.weights.data.size();
        std::copy(flat.begin() + off, flat.begin() + off + l.bias.size(), l.bias.begin());
        off += l.bias.size();
    }
}

void MlpGrads::to_flat(Vec& out) const {
    out.clear();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        out.insert(out.end(), weights[i].data.begin(), weights[i].data.end());
        out.insert(out.end(), bias[i].begin(), bias[i].end());
    }
}

void MlpGrads::add_scaled(const MlpGrads& other, double scale) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
        for (std::size_t j = 0; j < weights[i].data.size(); ++j)
            weights[i].data[j] += scale * other.weights[i].data[j];
        for (std::size_t j = 0; j < bias[i].size(); ++j) bias[i][j] += scale * other.bias[i][j];
    }
}

MlpGrads zero_grads_like(const Mlp& net) {
    MlpGrads g;
    g.weights.reserve(net.layers.size());
    g.bias.reserve(net.layers.size());
    for (const auto& l : net.layers) {
        g.weights.emplace_back(l.out_dim(), l.in_dim());
        g.bias.emplace_back(static_cast<std::size_t>(l.out_dim()), 0.0);
    }
    g.input_grad.assign(static_cast<std::size_t>(net.input_dim()), 0.0);
    return g;
}

DenseLayer make_dense(int in, int out, Activation act, Rng& rng) {
    if (in <= 0 || out <= 0) throw std::invalid_argument("make_dense: dims must be positive");
    DenseLayer l;
    l.weights = Mat(out, in);
    l.bias.assign(static_cast<std::size_t>(out), 0.0);
    l.activation = act;
    double bound = 1.0 / std::sqrt(static_cast<double>(in));  // uniform fan-in scaling
    for (auto& w : l.weights.data) w = rng.uniform(-bound, bound);
    for (auto& b : l.bias) b = rng.uniform(-bound, bound);
    return l;
}

Mlp make_mlp(const std::vector<int>& dims, const std::vector<Activation>& acts, Rng& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw std::invalid_argument("make_mlp: need n+1 dims for n activations");
    Mlp net;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        net.layers.push_back(make_dense(dims[i], dims[i + 1], acts[i], rng));
    return net;
}

Vec mlp_forward(const Mlp& net, const Vec& input) {
    ForwardCache cache;
    return mlp_forward(net, input, cache);
}

Vec mlp_forward(const Mlp& net, const Vec& input, ForwardCache& cache) {
    if (static_cast<int>(input.size()) != net.input_dim())
        throw std::invalid_argument("mlp_forward: input length does not match input_dim");
    cache.inputs.resize(net.layers.size());
    cache.preactivations.resize(net.layers.size());
    Vec x = input;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const DenseLayer& l = net.layers[li];
        cache.inputs[li] = x;
        Vec& pre = cache.preactivations[li];
        matvec_add(l.weights, x, l.bias, pre);
        x.resize(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i) x[i] = apply_activation(l.activation, pre[i]);
    }
    return x;
}

MlpGrads mlp_backward(const Mlp& net, const ForwardCache& cache, const Vec& output_grad) {
    MlpGrads g;
    mlp_backward(net, cache, output_grad, g);
    return g;
}

void mlp_backward(const Mlp& net, const ForwardCache& cache, const Vec& output_grad, MlpGrads& g) {
    if (cache.inputs.size() != net.layers.size())
        throw std::invalid_argument("mlp_backward: cache does not match network");
    if (static_cast<int>(output_grad.size()) != net.output_dim())
        throw std::invalid_argument("mlp_backward: output_grad length mismatch");

    bool shapes_match = g.weights.size() == net.layers.size();
    for (std::size_t i = 0; shapes_match && i < g.weights.size(); ++i)
        shapes_match = g.weights[i].rows == net.layers[i].out_dim() &&
                       g.weights[i].cols == net.layers[i].in_dim();
    if (!shapes_match) g = zero_grads_like(net);
    Vec delta = output_grad;
    for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
        const DenseLayer& l = net.layers[static_cast<std::size_t>(li)];
        const Vec& pre = cache.preactivations[static_cast<std::size_t>(li)];
        const Vec& in = cache.inputs[static_cast<std::size_t>(li)];
        // through activation
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta[i] *= activation_grad(l.activation, pre[i]);
        // parameter grads
        Mat& gw = g.weights[static_cast<std::size_t>(li)];
        Vec& gb = g.bias[static_cast<std::size_t>(li)];
        for (int r = 0; r < l.out_dim(); ++r) {
            double d = delta[static_cast<std::size_t>(r)];
            gb[static_cast<std::size_t>(r)] = d;
            double* gwr = &gw.data[static_cast<std::size_t>(r) * gw.cols];
            for (int c = 0; c < l.in_dim(); ++c) gwr[c] = d * in[static_cast<std::size_t>(c)];
        }
        // input grad: W^T delta
        Vec next(static_cast<std::size_t>(l.in_dim()), 0.0);
        for (int r = 0; r < l.out_dim(); ++r) {
            double d = delta[static_cast<std::size_t>(r)];
            const double* wr = &l.weights.data[static_cast<std::size_t>(r) * l.weights.cols];
            for (int c = 0; c < l.in_dim(); ++c) next[static_cast<std::size_t>(c)] += d * wr[c];
        }
        delta = std::move(next);
    }
    g.input_grad = std::move(delta);
}

}  // namespace cfgdp
