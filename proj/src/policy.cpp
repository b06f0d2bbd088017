// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#include "cfgdp/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "cfgdp/errors.hpp"

namespace cfgdp {

std::size_t PolicyNet::param_count() const {
    return step_embed.weights.data.size() + step_embed.bias.size() + trunk.param_count();
}

void PolicyNet::to_flat(Vec& out) const {
    out.clear();
    out.reserve(param_count());
    out.insert(out.end(), step_embed.weights.data.begin(), step_embed.weights.data.end());
    out.insert(out.end(), step_embed.bias.begin(), step_embed.bias.end());
    Vec trunk_flat;
    trunk.to_flat(trunk_flat);
    out.insert(out.end(), trunk_flat.begin(), trunk_flat.end());
}

void PolicyNet::from_flat(const Vec& flat) {
    if (flat.size() != param_count()) throw std::invalid_argument("PolicyNet::from_flat: size mismatch");
    std::size_t off = 0;
    std::copy(flat.begin(), flat.begin() + step_embed.weights.data.size(),
              step_embed.weights.data.begin());
    off += step_embed.weights.data.size();
    std::copy(flat.begin() + off, flat.begin() + off + step_embed.bias.size(),
              step_embed.bias.begin());
    off += step_embed.bias.size();
    Vec trunk_flat(flat.begin() + off, flat.end());
    trunk.from_flat(trunk_flat);
}

PolicyNet make_policy_net(Rng& rng, int hidden_width, int hidden_layers) {
    PolicyNet net;
    net.step_embed = make_dense(2, kStepEmbedDim, Activation::kIdentity, rng);
    std::vector<int> dims;
    std::vector<Activation> acts;
    dims.push_back(kTrunkInputDim);
    for (int i = 0; i < hidden_layers; ++i) {
        dims.push_back(hidden_width);
        acts.push_back(Activation::kMish);
    }
    dims.push_back(kChunkDim);
    acts.push_back(Activation::kIdentity);
    net.trunk = make_mlp(dims, acts, rng);
    return net;
}

void sinusoidal_features(int k, Vec& out) {
    out.resize(kDiffFeatDim);
    const int half = kDiffFeatDim / 2;
    for (int j = 0; j < half; ++j) {
        double freq = std::pow(10000.0, -static_cast<double>(j) / half);
        out[static_cast<std::size_t>(2 * j)] = std::sin(k * freq);
        out[static_cast<std::size_t>(2 * j + 1)] = std::cos(k * freq);
    }
}

Vec predict_noise(const PolicyNet& net, const ObservationWindow& obs, bool conditioned,
                  double s_mean, int k, const Vec& x_k, PolicyCache* cache) {
    if (static_cast<int>(x_k.size()) != kChunkDim)
        throw std::invalid_argument("predict_noise: x_k length mismatch");
    thread_local Vec embed_in, embed_out, input, kfeat;
    embed_in.assign(2, 0.0);
    if (conditioned && !obs.condition_nulled) {
        embed_in[0] = obs.s_t / s_mean;
        embed_in[1] = 1.0;
    }
    matvec_add(net.step_embed.weights, embed_in, net.step_embed.bias, embed_out);

    input.clear();
    input.reserve(static_cast<std::size_t>(kTrunkInputDim));
    input.insert(input.end(), obs.features.begin(), obs.features.end());
    input.insert(input.end(), embed_out.begin(), embed_out.end());
    sinusoidal_features(k, kfeat);
    input.insert(input.end(), kfeat.begin(), kfeat.end());
    input.insert(input.end(), x_k.begin(), x_k.end());

    if (cache) {
        cache->embed_in = embed_in;
        return mlp_forward(net.trunk, input, cache->trunk_cache);
    }
    return mlp_forward(net.trunk, input);
}

Vec policy_backward_flat(const PolicyNet& net, const PolicyCache& cache, const Vec& output_grad) {
    MlpGrads trunk_grads = mlp_backward(net.trunk, cache.trunk_cache, output_grad);
    // slice of the trunk input gradient feeding the step embedding
    Vec flat;
    flat.reserve(net.param_count());
    // step_embed is Identity, so its output grad is the input-grad slice directly
    for (int r = 0; r < kStepEmbedDim; ++r) {
        double d = trunk_grads.input_grad[static_cast<std::size_t>(kWindowDim + r)];
        flat.push_back(d * cache.embed_in[0]);
        flat.push_back(d * cache.embed_in[1]);
    }
    for (int r = 0; r < kStepEmbedDim; ++r)
        flat.push_back(trunk_grads.input_grad[static_cast<std::size_t>(kWindowDim + r)]);
    Vec trunk_flat;
    trunk_grads.to_flat(trunk_flat);
    flat.insert(flat.end(), trunk_flat.begin(), trunk_flat.end());
    return flat;
}

double ddpm_loss(const PolicyNet& net, const NoiseSchedule& schedule, const TrainItem& item,
                 bool conditioned, double s_mean, Vec* grad_out, double grad_scale) {
    thread_local Vec x0, noise, x_k;
    thread_local PolicyCache cache;
    thread_local MlpGrads trunk_grads;
    x0.assign(item.chunk.values.begin(), item.chunk.values.end());
    noise.assign(item.noise.begin(), item.noise.end());
    x_k = forward_diffuse(schedule, x0, item.k, noise);

    Vec pred = predict_noise(net, item.obs, conditioned, s_mean, item.k, x_k,
                             grad_out ? &cache : nullptr);
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred[i] - noise[i];
        loss += d * d;
    }
    loss *= inv_n;
    if (grad_out) {
        Vec& dpred = pred;  // reuse in place: the scaled residual
        for (std::size_t i = 0; i < pred.size(); ++i)
            dpred[i] = 2.0 * (pred[i] - noise[i]) * inv_n;
        mlp_backward(net.trunk, cache.trunk_cache, dpred, trunk_grads);
        if (grad_out->size() != net.param_count()) grad_out->assign(net.param_count(), 0.0);
        Vec& g = *grad_out;
        std::size_t idx = 0;
        // step embedding: Identity layer fed by the trunk input-grad slice
        for (int r = 0; r < kStepEmbedDim; ++r) {
            double d = trunk_grads.input_grad[static_cast<std::size_t>(kWindowDim + r)];
            g[idx++] += grad_scale * (d * cache.embed_in[0]);
            g[idx++] += grad_scale * (d * cache.embed_in[1]);
        }
        for (int r = 0; r < kStepEmbedDim; ++r)
            g[idx++] += grad_scale *
                        trunk_grads.input_grad[static_cast<std::size_t>(kWindowDim + r)];
        for (std::size_t li = 0; li < trunk_grads.weights.size(); ++li) {
            for (double w : trunk_grads.weights[li].data) g[idx++] += grad_scale * w;
            for (double b : trunk_grads.bias[li]) g[idx++] += grad_scale * b;
        }
    }
    return loss;
}

ActionChunk sample_chunk_lambda(const PolicyNet& net, const NoiseSchedule& schedule,
                                const DdimPlan& plan, const ObservationWindow& obs_normalized,
                                double lambda, bool conditioned, double s_mean,
                                const NormStats& stats, std::uint64_t seed, bool denormalize) {
    if (!obs_normalized.normalized)
        throw std::invalid_argument("sample_chunk: observation window must be normalized");
    Rng rng = Rng::derive(seed, "init_noise");
    Vec x(static_cast<std::size_t>(kChunkDim));
    for (auto& v : x) v = rng.gaussian();

    for (std::size_t i = 0; i < plan.step_indices.size(); ++i) {
        int k = plan.step_indices[i];
        int k_prev = (i + 1 < plan.step_indices.size()) ? plan.step_indices[i + 1] : 0;
        Vec eps_uncond = predict_noise(net, obs_normalized, false, s_mean, k, x);
        Vec eps;
        if (lambda == 0.0) {
            eps = std::move(eps_uncond);
        } else {
            Vec eps_cond = predict_noise(net, obs_normalized, conditioned, s_mean, k, x);
            eps = cfg_combine(eps_cond, eps_uncond, lambda);
        }
        x = ddim_step(schedule, eps, x, k, k_prev);
    }
    if (!all_finite(x)) throw NumericError("sample_chunk: non-finite sample (untrained or NaN params?)");

    ActionChunk chunk;
    std::copy(x.begin(), x.end(), chunk.values.begin());
    chunk.normalized = true;
    if (denormalize) denormalize_chunk(chunk, stats);
    return chunk;
}

ActionChunk sample_chunk(const PolicyNet& net, const NoiseSchedule& schedule, const DdimPlan& plan,
                         const ObservationWindow& obs_normalized, const GuidanceConfig& guidance,
                         double s_t, bool conditioned, double s_mean, const NormStats& stats,
                         std::uint64_t seed, bool denormalize) {
    return sample_chunk_lambda(net, schedule, plan, obs_normalized, lambda_at(guidance, s_t),
                               conditioned, s_mean, stats, seed, denormalize);
}

}  // namespace cfgdp
