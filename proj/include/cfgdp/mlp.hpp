// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cfgdp/linalg.hpp"
#include "cfgdp/rng.hpp"

namespace cfgdp {

enum class Activation { kReLU, kIdentity, kMish };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
    Mat weights;  // [out x in]
    Vec bias;     // [out]
    Activation activation = Activation::kIdentity;

    int in_dim() const { return weights.cols; }
    int out_dim() const { return weights.rows; }
};

struct Mlp {
    std::vector<DenseLayer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

    std::size_t param_count() const;
    // Flat views in declaration order: per layer, weights row-major then bias.
    void to_flat(Vec& out) const;
    void from_flat(const Vec& flat);
};

// Per-layer gradients mirroring Mlp shapes, plus the gradient w.r.t. the input.
struct MlpGrads {
    std::vector<Mat> weights;
    std::vector<Vec> bias;
    Vec input_grad;

    void to_flat(Vec& out) const;
    // Accumulate another gradient of identical shape, scaled.
    void add_scaled(const MlpGrads& other, double scale);
};

MlpGrads zero_grads_like(const Mlp& net);

struct ForwardCache {
    std::vector<Vec> inputs;          // input to each layer
    std::vector<Vec> preactivations;  // Wx+b per layer
};

DenseLayer make_dense(int in, int out, Activation act, Rng& rng);
Mlp make_mlp(const std::vector<int>& dims, const std::vector<Activation>& acts, Rng& rng);

Vec mlp_forward(const Mlp& net, const Vec& input);
Vec mlp_forward(const Mlp& net, const Vec& input, ForwardCache& cache);

// Backpropagates output_grad through a cached forward pass. The out-parameter
// form reuses g's storage when the shapes already match.
MlpGrads mlp_backward(const Mlp& net, const ForwardCache& cache, const Vec& output_grad);
void mlp_backward(const Mlp& net, const ForwardCache& cache, const Vec& output_grad, MlpGrads& g);

double apply_activation(Activation a, double x);
double activation_grad(Activation a, double x);

}  // namespace cfgdp
