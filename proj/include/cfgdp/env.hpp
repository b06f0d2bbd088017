// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cfgdp/rng.hpp"

namespace cfgdp {

// Detector thresholds for one ratchet stroke: the wrist must rise from below
// kWristLow past kWristHigh and return below kWristLow while the grip stays
// above kGripHold.
inline constexpr double kWristLow = 0.1;
inline constexpr double kWristHigh = 1.4;
inline constexpr double kGripHold = 0.8;
inline constexpr double kActionClamp = 0.15;
inline constexpr int kWristJoint = 5;

struct CycleTracker {
    bool active = false;  // wrist currently above kWristLow
    bool valid = false;   // grip held above kGripHold for the whole stroke so far
    bool peaked = false;  // wrist exceeded kWristHigh during this stroke
    int count = 0;

    void update(double wrist, double grip);
};

struct EnvState {
    std::array<double, 6> joints{};     // radians; joints[5] is the wrist rotation
    double hand = 0.0;                  // grip closure in [0, 1]
    std::array<double, 2> workpiece{};  // planar offset, fixed per episode
    int cycles_done = 0;
    int step_count = 0;
    CycleTracker tracker;
};

struct Action {
    std::array<double, 7> values{};  // 6 joint deltas + 1 hand-closure delta
};

struct EpisodeConfig {
    int required_cycles = 2;
    int max_steps = 400;
    double end_zone_threshold = 0.25;  // arm-extension norm below which retraction counts
    double control_hz = 10.0;
};

struct Trajectory {
    std::vector<EnvState> states;  // states[0] is the reset state
    std::vector<Action> actions;
};

struct Verdict {
    bool success = false;
    int cycles_done = 0;
    int repetitive = 0;
    int termination_step = 0;
    double completion_time = 0.0;  // seconds
};

EnvState env_reset(std::uint64_t seed);
EnvState env_step(const EnvState& state, const Action& action);

// Norm of the five shoulder/elbow joints; small when the arm is retracted.
double arm_extension(const EnvState& state);
bool in_end_zone(const EnvState& state, const EpisodeConfig& cfg);

// Counts completed ratchet strokes over aligned wrist/grip histories.
int detect_cycle(const std::vector<double>& wrist_history,
                 const std::vector<double>& grip_history);

Verdict is_success(const Trajectory& trajectory, const EpisodeConfig& cfg);

// Scripted demonstrator: approach -> grasp -> strokes -> release -> retract,
// with seeded stroke-duration jitter, termination-pose jitter, and small
// action noise. Phases chain without idle gaps: every demonstrated state is
// either moving or at a phase boundary where the next motion starts in the
// same action chunk. Idle "pause" states would be observationally identical
// at different phase-progress points and blur the cloned action modes. The
// one deliberate ambiguity left is the stroke count: a finished stroke ends
// where the next one begins (wrist at rest, hand closed), so "stroke again
// or release" is undecidable from the observation window alone — that is the
// termination decision the timestep guidance is meant to settle.
class ExpertPolicy {
public:
    enum class Phase {
        kApproach,
        kGrasp,
        kStroke,
        kRelease,
        kRetract,
        kDone
    };

    ExpertPolicy(std::uint64_t seed, const EpisodeConfig& cfg);

    Action act(const EnvState& state);
    bool done() const { return phase_ == Phase::kDone; }
    Phase phase() const { return phase_; }

private:
    void advance(const EnvState& state);

    EpisodeConfig cfg_;
    Rng noise_rng_;
    std::array<double, 6> approach_target_{};
    std::array<double, 6> retract_target_{};
    std::vector<int> stroke_durations_;
    Phase phase_ = Phase::kApproach;
    bool targets_set_ = false;
    int stroke_idx_ = 0;
    int stroke_tau_ = 0;
};

// Runs the expert from a seeded reset until done (or cfg.max_steps).
Trajectory expert_rollout(std::uint64_t seed, const EpisodeConfig& cfg);

}  // namespace cfgdp
