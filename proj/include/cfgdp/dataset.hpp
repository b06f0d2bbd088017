// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cfgdp/env.hpp"
#include "cfgdp/linalg.hpp"
#include "cfgdp/rng.hpp"

namespace cfgdp {

inline constexpr int kObsHorizon = 2;    // T_o
inline constexpr int kActionHorizon = 8; // T_a
inline constexpr int kActionDim = 7;
inline constexpr int kEnvFeatDim = 2;
inline constexpr int kJointFeatDim = 7;  // 6 joints + hand
inline constexpr int kFrameDim = kEnvFeatDim + kJointFeatDim;
inline constexpr int kWindowDim = kObsHorizon * kFrameDim;
inline constexpr int kChunkDim = kActionHorizon * kActionDim;
inline constexpr double kStdFloor = 1e-6;

struct Frame {
    std::array<double, kEnvFeatDim> env{};
    std::array<double, kJointFeatDim> joints{};
    int timestep = 0;
};

struct Demonstration {
    std::vector<Frame> frames;
    std::vector<std::array<double, kActionDim>> actions;  // aligned with frames

    int length() const { return static_cast<int>(frames.size()); }
};

struct NormStats {
    std::array<double, kFrameDim> obs_mean{};
    std::array<double, kFrameDim> obs_std{};
    // Actions are range-scaled into [-1, 1]: act_mean is the per-dimension
    // range midpoint, act_std the half-range (floored). Keeps sparse
    // high-amplitude action modes inside the sampler's unit-Gaussian prior.
    std::array<double, kActionDim> act_mean{};
    std::array<double, kActionDim> act_std{};
    double s_mean = 1.0;  // mean demonstration length; anchors the guidance midpoint
};

struct ObservationWindow {
    std::array<double, kWindowDim> features{};  // T_o frames, oldest first
    double s_t = 0.0;                           // raw environment-step count
    bool normalized = false;
    bool condition_nulled = false;  // timestep pathway sees the null token instead of s_t
};

// Idempotent; env/joint features are untouched.
inline ObservationWindow null_condition(ObservationWindow w) {
    w.condition_nulled = true;
    return w;
}

struct ActionChunk {
    std::array<double, kChunkDim> values{};  // row-major [T_a x 7]
    bool normalized = false;
};

struct TrainItem {
    ObservationWindow obs;
    ActionChunk chunk;
    int k = 1;
    std::array<double, kChunkDim> noise{};
};

Frame frame_from_state(const EnvState& state);
Demonstration demo_from_trajectory(const Trajectory& traj);

// n expert rollouts with seeds seed_base .. seed_base+n-1; every rollout must
// pass is_success, otherwise aborts with a diagnostic.
std::vector<Demonstration> generate_demos(int n, std::uint64_t seed_base,
                                          const EpisodeConfig& cfg);

std::pair<std::vector<Demonstration>, std::vector<Demonstration>> split_demos(
    const std::vector<Demonstration>& demos, double train_fraction, std::uint64_t seed);

NormStats compute_norm_stats(const std::vector<Demonstration>& train);

// Window over frames [t-1, t] with the first frame duplicated at t = 0.
ObservationWindow make_window(const Demonstration& demo, int t);
// Chunk of actions [t .. t+T_a), tail-padded with the final action.
ActionChunk make_chunk(const Demonstration& demo, int t);

void normalize_window(ObservationWindow& w, const NormStats& stats);
void normalize_chunk(ActionChunk& c, const NormStats& stats);
void denormalize_chunk(ActionChunk& c, const NormStats& stats);

std::vector<TrainItem> sample_batch(const std::vector<Demonstration>& train,
                                    const NormStats& stats, int batch_size, int K, Rng& rng);

void save_dataset(const std::string& path, const std::vector<Demonstration>& demos,
                  const NormStats& stats);
std::pair<std::vector<Demonstration>, NormStats> load_dataset(const std::string& path);

}  // namespace cfgdp
