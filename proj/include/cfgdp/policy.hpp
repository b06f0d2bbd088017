// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "cfgdp/dataset.hpp"
#include "cfgdp/diffusion.hpp"
#include "cfgdp/mlp.hpp"

namespace cfgdp {

inline constexpr int kStepEmbedDim = 32;  // embedding of the environment-step count
inline constexpr int kDiffFeatDim = 32;   // sinusoidal features of the diffusion step k
inline constexpr int kTrunkInputDim = kWindowDim + kStepEmbedDim + kDiffFeatDim + kChunkDim;

// Shared denoiser. The step_embed layer receives [s_t / s_mean, 1] when the
// timestep condition is active and [0, 0] when nulled, in which case its bias
// acts as a learned null token.
struct PolicyNet {
    DenseLayer step_embed;  // 2 -> kStepEmbedDim, Identity
    Mlp trunk;

    std::size_t param_count() const;
    void to_flat(Vec& out) const;  // step_embed first, then trunk
    void from_flat(const Vec& flat);
};

PolicyNet make_policy_net(Rng& rng, int hidden_width = 256, int hidden_layers = 3);

void sinusoidal_features(int k, Vec& out);  // kDiffFeatDim values

struct PolicyCache {
    Vec embed_in;
    ForwardCache trunk_cache;
};

// Predicts the noise on a normalized, flattened action chunk x_k.
Vec predict_noise(const PolicyNet& net, const ObservationWindow& obs, bool conditioned,
                  double s_mean, int k, const Vec& x_k, PolicyCache* cache = nullptr);

// Gradient of a scalar loss w.r.t. all parameters, flat, in to_flat order.
Vec policy_backward_flat(const PolicyNet& net, const PolicyCache& cache, const Vec& output_grad);

// Denoising MSE on one training item. If grad_out is non-null the flat
// parameter gradient is accumulated into it (scaled by grad_scale).
double ddpm_loss(const PolicyNet& net, const NoiseSchedule& schedule, const TrainItem& item,
                 bool conditioned, double s_mean, Vec* grad_out = nullptr,
                 double grad_scale = 1.0);

// DDIM sampling (eta = 0) with classifier-free guidance held constant across
// the chunk's denoising. Returns the denormalized chunk.
ActionChunk sample_chunk(const PolicyNet& net, const NoiseSchedule& schedule, const DdimPlan& plan,
                         const ObservationWindow& obs_normalized, const GuidanceConfig& guidance,
                         double s_t, bool conditioned, double s_mean, const NormStats& stats,
                         std::uint64_t seed, bool denormalize = true);

// Same, with an explicit guidance factor.
ActionChunk sample_chunk_lambda(const PolicyNet& net, const NoiseSchedule& schedule,
                                const DdimPlan& plan, const ObservationWindow& obs_normalized,
                                double lambda, bool conditioned, double s_mean,
                                const NormStats& stats, std::uint64_t seed,
                                bool denormalize = true);

}  // namespace cfgdp
