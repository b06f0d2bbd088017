// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#include "cfgdp/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cfgdp/errors.hpp"

namespace cfgdp {

namespace {

constexpr std::array<double, 6> kHomeJoints = {0.4, 0.5, 0.3, 0.4, 0.2, 0.0};
constexpr std::array<double, 6> kApproachBase = {0.9, 0.7, 0.5, 0.3, 0.2, 0.0};
constexpr std::array<double, 6> kRetractBase = {0.06, 0.05, 0.04, 0.03, 0.02, 0.0};
constexpr double kStrokePeak = 1.5;
constexpr double kArmGain = 0.25;
constexpr double kArmRate = 0.06;
// The hand opens and closes at the action clamp, so a full grasp or release
// fits inside one action chunk; lingering half-closed states would otherwise
// be ambiguous between grasping and releasing.
constexpr double kHandRate = kActionClamp;
constexpr double kActionNoiseStd = 0.005;

double clamp(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

double track(double target, double current, double gain, double rate) {
    return clamp(gain * (target - current), -rate, rate);
}

}  // namespace

void CycleTracker::update(double wrist, double grip) {
    if (!active) {
        if (wrist >= kWristLow) {
            active = true;
            peaked = false;
            valid = grip > kGripHold;
        }
    } else {
        valid = valid && grip > kGripHold;
        if (wrist > kWristHigh) peaked = true;
        if (wrist < kWristLow) {
            if (peaked && valid) ++count;
            active = false;
        }
    }
}

EnvState env_reset(std::uint64_t seed) {
    Rng rng = Rng::derive(seed, "env_reset");
    EnvState s;
    for (int i = 0; i < 6; ++i) s.joints[static_cast<std::size_t>(i)] =
        kHomeJoints[static_cast<std::size_t>(i)] + rng.uniform(-0.05, 0.05);
    s.hand = 0.0;
    s.workpiece[0] = rng.uniform(-0.05, 0.05);
    s.workpiece[1] = rng.uniform(-0.05, 0.05);
    s.cycles_done = 0;
    s.step_count = 0;
    return s;
}

EnvState env_step(const EnvState& state, const Action& action) {
    for (double v : action.values)
        if (!std::isfinite(v)) throw NumericError("env_step: non-finite action");
    EnvState next = state;
    for (int i = 0; i < 6; ++i)
        next.joints[static_cast<std::size_t>(i)] +=
            clamp(action.values[static_cast<std::size_t>(i)], -kActionClamp, kActionClamp);
    next.hand = clamp(state.hand + clamp(action.values[6], -kActionClamp, kActionClamp), 0.0, 1.0);
    next.tracker.update(next.joints[kWristJoint], next.hand);
    next.cycles_done = next.tracker.count;
    next.step_count = state.step_count + 1;
    return next;
}

double arm_extension(const EnvState& state) {
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) {
        double j = state.joints[static_cast<std::size_t>(i)];
        acc += j * j;
    }
    return std::sqrt(acc);
}

bool in_end_zone(const EnvState& state, const EpisodeConfig& cfg) {
    return arm_extension(state) < cfg.end_zone_threshold && state.hand < 0.2;
}

int detect_cycle(const std::vector<double>& wrist_history,
                 const std::vector<double>& grip_history) {
    if (wrist_history.size() != grip_history.size())
        throw std::invalid_argument("detect_cycle: histories must be aligned");
    CycleTracker tracker;
    for (std::size_t i = 0; i < wrist_history.size(); ++i)
        tracker.update(wrist_history[i], grip_history[i]);
    return tracker.count;
}

Verdict is_success(const Trajectory& trajectory, const EpisodeConfig& cfg) {
    if (trajectory.states.empty()) throw std::invalid_argument("is_success: empty trajectory");
    const EnvState& final_state = trajectory.states.back();
    Verdict v;
    v.cycles_done = final_state.cycles_done;
    v.termination_step = final_state.step_count;
    v.repetitive = std::max(0, v.cycles_done - cfg.required_cycles);
    v.completion_time = static_cast<double>(v.termination_step) / cfg.control_hz;
    v.success = v.cycles_done >= cfg.required_cycles && in_end_zone(final_state, cfg) &&
                v.termination_step <= cfg.max_steps;
    return v;
}

ExpertPolicy::ExpertPolicy(std::uint64_t seed, const EpisodeConfig& cfg)
    : cfg_(cfg), noise_rng_(Rng::derive(seed, "expert_noise")) {
    Rng plan = Rng::derive(seed, "expert_plan");
    for (int i = 0; i < cfg.required_cycles; ++i)
        stroke_durations_.push_back(static_cast<int>(plan.uniform_int(26, 34)));
    retract_target_ = kRetractBase;
    for (int i = 0; i < 5; ++i)
        retract_target_[static_cast<std::size_t>(i)] += plan.uniform(-0.03, 0.03);
}

void ExpertPolicy::advance(const EnvState& state) {
    auto arm_err = [&](const std::array<double, 6>& target) {
        double worst = 0.0;
        for (int i = 0; i < 6; ++i)
            worst = std::max(worst, std::fabs(target[static_cast<std::size_t>(i)] -
                                              state.joints[static_cast<std::size_t>(i)]));
        return worst;
    };
    switch (phase_) {
        case Phase::kApproach:
            if (arm_err(approach_target_) < 0.04 && state.hand < 0.05) phase_ = Phase::kGrasp;
            break;
        case Phase::kGrasp:
            if (state.hand > 0.95) {
                phase_ = Phase::kStroke;
                stroke_tau_ = 0;
            }
            break;
        case Phase::kStroke:
            if (stroke_tau_ >= stroke_durations_[static_cast<std::size_t>(stroke_idx_)] &&
                state.joints[kWristJoint] < 0.05) {
                ++stroke_idx_;
                if (stroke_idx_ < cfg_.required_cycles) {
                    stroke_tau_ = 0;
                } else {
                    phase_ = Phase::kRelease;
                }
            }
            break;
        case Phase::kRelease:
            if (state.hand < 0.05) phase_ = Phase::kRetract;
            break;
        case Phase::kRetract:
            if (arm_err(retract_target_) < 0.025 && state.hand < 0.05) phase_ = Phase::kDone;
            break;
        case Phase::kDone:
            break;
    }
}

Action ExpertPolicy::act(const EnvState& state) {
    if (!targets_set_) {
        approach_target_ = kApproachBase;
        approach_target_[0] += 2.0 * state.workpiece[0];
        approach_target_[1] += 2.0 * state.workpiece[1];
        targets_set_ = true;
    }

    std::array<double, 6> joint_target = approach_target_;
    double hand_target = 0.0;
    switch (phase_) {
        case Phase::kApproach:
            break;
        case Phase::kGrasp:
            hand_target = 1.0;
            break;
        case Phase::kStroke: {
            ++stroke_tau_;
            int d = stroke_durations_[static_cast<std::size_t>(stroke_idx_)];
            int tau = std::min(stroke_tau_, d);
            joint_target[kWristJoint] =
                kStrokePeak * 0.5 *
                (1.0 - std::cos(6.283185307179586 * static_cast<double>(tau) /
                                static_cast<double>(d)));
            hand_target = 1.0;
            break;
        }
        case Phase::kRelease:
            break;
        case Phase::kRetract:
        case Phase::kDone:
            joint_target = retract_target_;
            break;
    }

    Action a;
    for (int i = 0; i < 6; ++i) {
        double gain = kArmGain;
        double rate = kArmRate;
        if (i == kWristJoint && phase_ == Phase::kStroke) {
            // track the profile directly so the sinusoid is followed step for step
            gain = 1.0;
            rate = kActionClamp;
        }
        a.values[static_cast<std::size_t>(i)] =
            track(joint_target[static_cast<std::size_t>(i)],
                  state.joints[static_cast<std::size_t>(i)], gain, rate) +
            kActionNoiseStd * noise_rng_.gaussian();
    }
    a.values[6] = track(hand_target, state.hand, 1.0, kHandRate) +
                  kActionNoiseStd * noise_rng_.gaussian();
    advance(state);
    return a;
}

Trajectory expert_rollout(std::uint64_t seed, const EpisodeConfig& cfg) {
    Trajectory traj;
    EnvState state = env_reset(seed);
    ExpertPolicy expert(seed, cfg);
    traj.states.push_back(state);
    while (!expert.done() && state.step_count < cfg.max_steps) {
        Action a = expert.act(state);
        state = env_step(state, a);
        traj.actions.push_back(a);
        traj.states.push_back(state);
    }
    return traj;
}

}  // namespace cfgdp
