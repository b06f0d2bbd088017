// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#include "cfgdp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "cfgdp/errors.hpp"

namespace cfgdp {

namespace {

constexpr char kMagic[] = "CFGDP-DATA-1";

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Frame frame_from_state(const EnvState& state) {
    Frame f;
    f.env = state.workpiece;
    for (int i = 0; i < 6; ++i) f.joints[static_cast<std::size_t>(i)] =
        state.joints[static_cast<std::size_t>(i)];
    f.joints[6] = state.hand;
    f.timestep = state.step_count;
    return f;
}

Demonstration demo_from_trajectory(const Trajectory& traj) {
    Demonstration d;
    d.frames.reserve(traj.actions.size());
    d.actions.reserve(traj.actions.size());
    // one (frame, action) pair per executed step; the final settled state is
    // not a training frame since no action follows it
    for (std::size_t t = 0; t < traj.actions.size(); ++t) {
        d.frames.push_back(frame_from_state(traj.states[t]));
        d.actions.push_back(traj.actions[t].values);
    }
    return d;
}

std::vector<Demonstration> generate_demos(int n, std::uint64_t seed_base,
                                          const EpisodeConfig& cfg) {
    if (n < 1) throw ConfigError("generate_demos: n must be >= 1");
    std::vector<Demonstration> demos;
    demos.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::uint64_t seed = seed_base + static_cast<std::uint64_t>(i);
        Trajectory traj = expert_rollout(seed, cfg);
        Verdict v = is_success(traj, cfg);
        if (!v.success || v.repetitive != 0)
            throw std::runtime_error("generate_demos: expert rollout failed for seed " +
                                     std::to_string(seed) + " (cycles=" +
                                     std::to_string(v.cycles_done) + ", steps=" +
                                     std::to_string(v.termination_step) + ")");
        demos.push_back(demo_from_trajectory(traj));
    }
    return demos;
}

std::pair<std::vector<Demonstration>, std::vector<Demonstration>> split_demos(
    const std::vector<Demonstration>& demos, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw ConfigError("split_demos: train_fraction must be in (0, 1)");
    std::vector<std::size_t> order(demos.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::derive(seed, "split");
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(
                                    0, static_cast<long>(i) - 1))]);
    std::size_t n_train =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(demos.size())));
    if (n_train == 0 || n_train == demos.size())
        throw ConfigError("split_demos: split would leave an empty partition");
    std::pair<std::vector<Demonstration>, std::vector<Demonstration>> out;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_train ? out.first : out.second).push_back(demos[order[i]]);
    return out;
}

NormStats compute_norm_stats(const std::vector<Demonstration>& train) {
    if (train.empty()) throw ConfigError("compute_norm_stats: empty training set");
    NormStats st;
    st.obs_mean.fill(0.0);
    st.obs_std.fill(0.0);
    st.act_mean.fill(0.0);
    st.act_std.fill(0.0);
    // Actions use range scaling into [-1, 1]: act_mean holds the per-dimension
    // range midpoint and act_std the half-range. Moment scaling would place
    // rare large actions (e.g. a grasp, active on a small fraction of steps)
    // several sigmas out, far into the tail of the sampler's unit-Gaussian
    // prior, and the denoiser then collapses that mode toward zero.
    std::array<double, kActionDim> act_lo{}, act_hi{};
    act_lo.fill(std::numeric_limits<double>::infinity());
    act_hi.fill(-std::numeric_limits<double>::infinity());
    double n_frames = 0.0;
    double len_sum = 0.0;
    for (const auto& d : train) {
        len_sum += d.length();
        for (const auto& f : d.frames) {
            for (int i = 0; i < kEnvFeatDim; ++i)
                st.obs_mean[static_cast<std::size_t>(i)] += f.env[static_cast<std::size_t>(i)];
            for (int i = 0; i < kJointFeatDim; ++i)
                st.obs_mean[static_cast<std::size_t>(kEnvFeatDim + i)] +=
                    f.joints[static_cast<std::size_t>(i)];
            n_frames += 1.0;
        }
        for (const auto& a : d.actions)
            for (int i = 0; i < kActionDim; ++i) {
                act_lo[static_cast<std::size_t>(i)] =
                    std::min(act_lo[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i)]);
                act_hi[static_cast<std::size_t>(i)] =
                    std::max(act_hi[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i)]);
            }
    }
    for (auto& m : st.obs_mean) m /= n_frames;
    for (int i = 0; i < kActionDim; ++i) {
        st.act_mean[static_cast<std::size_t>(i)] =
            0.5 * (act_hi[static_cast<std::size_t>(i)] + act_lo[static_cast<std::size_t>(i)]);
        st.act_std[static_cast<std::size_t>(i)] = std::max(
            0.5 * (act_hi[static_cast<std::size_t>(i)] - act_lo[static_cast<std::size_t>(i)]),
            kStdFloor);
    }
    for (const auto& d : train) {
        for (const auto& f : d.frames) {
            for (int i = 0; i < kEnvFeatDim; ++i) {
                double dv = f.env[static_cast<std::size_t>(i)] -
                            st.obs_mean[static_cast<std::size_t>(i)];
                st.obs_std[static_cast<std::size_t>(i)] += dv * dv;
            }
            for (int i = 0; i < kJointFeatDim; ++i) {
                double dv = f.joints[static_cast<std::size_t>(i)] -
                            st.obs_mean[static_cast<std::size_t>(kEnvFeatDim + i)];
                st.obs_std[static_cast<std::size_t>(kEnvFeatDim + i)] += dv * dv;
            }
        }
    }
    for (auto& s : st.obs_std) s = std::max(std::sqrt(s / n_frames), kStdFloor);
    st.s_mean = len_sum / static_cast<double>(train.size());
    return st;
}

ObservationWindow make_window(const Demonstration& demo, int t) {
    if (t < 0 || t >= demo.length()) throw std::invalid_argument("make_window: t out of range");
    ObservationWindow w;
    for (int h = 0; h < kObsHorizon; ++h) {
        int src = std::max(0, t - (kObsHorizon - 1 - h));  // duplicate first frame at t = 0
        const Frame& f = demo.frames[static_cast<std::size_t>(src)];
        int base = h * kFrameDim;
        for (int i = 0; i < kEnvFeatDim; ++i)
            w.features[static_cast<std::size_t>(base + i)] = f.env[static_cast<std::size_t>(i)];
        for (int i = 0; i < kJointFeatDim; ++i)
            w.features[static_cast<std::size_t>(base + kEnvFeatDim + i)] =
                f.joints[static_cast<std::size_t>(i)];
    }
    w.s_t = static_cast<double>(demo.frames[static_cast<std::size_t>(t)].timestep);
    w.normalized = false;
    return w;
}

ActionChunk make_chunk(const Demonstration& demo, int t) {
    if (t < 0 || t >= demo.length()) throw std::invalid_argument("make_chunk: t out of range");
    ActionChunk c;
    for (int h = 0; h < kActionHorizon; ++h) {
        int src = std::min(t + h, demo.length() - 1);  // repeat final action past the end
        const auto& a = demo.actions[static_cast<std::size_t>(src)];
        for (int i = 0; i < kActionDim; ++i)
            c.values[static_cast<std::size_t>(h * kActionDim + i)] =
                a[static_cast<std::size_t>(i)];
    }
    c.normalized = false;
    return c;
}

void normalize_window(ObservationWindow& w, const NormStats& stats) {
    if (w.normalized) return;
    for (int h = 0; h < kObsHorizon; ++h)
        for (int i = 0; i < kFrameDim; ++i) {
            std::size_t idx = static_cast<std::size_t>(h * kFrameDim + i);
            w.features[idx] = (w.features[idx] - stats.obs_mean[static_cast<std::size_t>(i)]) /
                              stats.obs_std[static_cast<std::size_t>(i)];
        }
    w.normalized = true;
}

void normalize_chunk(ActionChunk& c, const NormStats& stats) {
    if (c.normalized) return;
    for (int h = 0; h < kActionHorizon; ++h)
        for (int i = 0; i < kActionDim; ++i) {
            std::size_t idx = static_cast<std::size_t>(h * kActionDim + i);
            c.values[idx] = (c.values[idx] - stats.act_mean[static_cast<std::size_t>(i)]) /
                            stats.act_std[static_cast<std::size_t>(i)];
        }
    c.normalized = true;
}

void denormalize_chunk(ActionChunk& c, const NormStats& stats) {
    if (!c.normalized) return;
    for (int h = 0; h < kActionHorizon; ++h)
        for (int i = 0; i < kActionDim; ++i) {
            std::size_t idx = static_cast<std::size_t>(h * kActionDim + i);
            c.values[idx] = c.values[idx] * stats.act_std[static_cast<std::size_t>(i)] +
                            stats.act_mean[static_cast<std::size_t>(i)];
        }
    c.normalized = false;
}

std::vector<TrainItem> sample_batch(const std::vector<Demonstration>& train,
                                    const NormStats& stats, int batch_size, int K, Rng& rng) {
    if (train.empty()) throw ConfigError("sample_batch: empty training set");
    std::vector<TrainItem> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (int b = 0; b < batch_size; ++b) {
        TrainItem item;
        const Demonstration& demo =
            train[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(train.size()) - 1))];
        int t = static_cast<int>(rng.uniform_int(0, demo.length() - 1));
        item.obs = make_window(demo, t);
        normalize_window(item.obs, stats);
        item.chunk = make_chunk(demo, t);
        normalize_chunk(item.chunk, stats);
        item.k = static_cast<int>(rng.uniform_int(1, K));
        for (auto& n : item.noise) n = rng.gaussian();
        batch.push_back(item);
    }
    return batch;
}

void save_dataset(const std::string& path, const std::vector<Demonstration>& demos,
                  const NormStats& stats) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
    out << kMagic << "\n";
    out << "demos " << demos.size() << "\n";
    out << "lengths";
    for (const auto& d : demos) out << " " << d.length();
    out << "\n";
    auto emit = [&](const char* name, const double* v, std::size_t n) {
        out << "stats " << name;
        for (std::size_t i = 0; i < n; ++i) out << " " << fmt_double(v[i]);
        out << "\n";
    };
    emit("obs_mean", stats.obs_mean.data(), stats.obs_mean.size());
    emit("obs_std", stats.obs_std.data(), stats.obs_std.size());
    emit("act_mean", stats.act_mean.data(), stats.act_mean.size());
    emit("act_std", stats.act_std.data(), stats.act_std.size());
    emit("s_mean", &stats.s_mean, 1);
    out << "END_HEADER\n";
    std::vector<float> buf;
    for (const auto& d : demos) {
        buf.clear();
        for (const auto& f : d.frames) {
            for (double v : f.env) buf.push_back(static_cast<float>(v));
            for (double v : f.joints) buf.push_back(static_cast<float>(v));
        }
        for (const auto& a : d.actions)
            for (double v : a) buf.push_back(static_cast<float>(v));
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

std::pair<std::vector<Demonstration>, NormStats> load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

    auto offset = [&]() { return static_cast<long long>(in.tellg()); };
    auto read_line = [&](const char* what) {
        long long pos = offset();
        std::string line;
        if (!std::getline(in, line))
            throw ParseError(std::string("load_dataset: missing ") + what, pos);
        return std::make_pair(line, pos);
    };

    auto [magic, magic_pos] = read_line("magic");
    if (magic != kMagic) throw ParseError("load_dataset: bad magic", magic_pos);

    auto [demo_line, demo_pos] = read_line("demo count");
    std::istringstream ds(demo_line);
    std::string tag;
    std::size_t n_demos = 0;
    if (!(ds >> tag >> n_demos) || tag != "demos")
        throw ParseError("load_dataset: bad demo-count line", demo_pos);

    auto [len_line, len_pos] = read_line("lengths");
    std::istringstream ls(len_line);
    if (!(ls >> tag) || tag != "lengths")
        throw ParseError("load_dataset: bad lengths line", len_pos);
    std::vector<int> lengths;
    int l;
    while (ls >> l) lengths.push_back(l);
    if (lengths.size() != n_demos)
        throw ParseError("load_dataset: length count does not match demo count", len_pos);

    NormStats stats;
    auto read_stats = [&](const char* name, double* v, std::size_t n) {
        auto [line, pos] = read_line(name);
        std::istringstream ss(line);
        std::string stats_tag, name_tag;
        if (!(ss >> stats_tag >> name_tag) || stats_tag != "stats" || name_tag != name)
            throw ParseError(std::string("load_dataset: expected stats ") + name, pos);
        for (std::size_t i = 0; i < n; ++i)
            if (!(ss >> v[i]))
                throw ParseError(std::string("load_dataset: truncated stats ") + name, pos);
    };
    read_stats("obs_mean", stats.obs_mean.data(), stats.obs_mean.size());
    read_stats("obs_std", stats.obs_std.data(), stats.obs_std.size());
    read_stats("act_mean", stats.act_mean.data(), stats.act_mean.size());
    read_stats("act_std", stats.act_std.data(), stats.act_std.size());
    read_stats("s_mean", &stats.s_mean, 1);

    auto [end_line, end_pos] = read_line("END_HEADER");
    if (end_line != "END_HEADER") throw ParseError("load_dataset: missing END_HEADER", end_pos);

    std::vector<Demonstration> demos;
    demos.reserve(n_demos);
    for (std::size_t di = 0; di < n_demos; ++di) {
        int len = lengths[di];
        if (len < 1) throw ParseError("load_dataset: non-positive demo length", len_pos);
        std::size_t n_floats =
            static_cast<std::size_t>(len) * (kFrameDim + kActionDim);
        std::vector<float> buf(n_floats);
        long long pos = offset();
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(n_floats * sizeof(float)));
        if (!in) throw ParseError("load_dataset: truncated demo payload", pos);
        Demonstration d;
        std::size_t off = 0;
        for (int t = 0; t < len; ++t) {
            Frame f;
            for (int i = 0; i < kEnvFeatDim; ++i)
                f.env[static_cast<std::size_t>(i)] = buf[off++];
            for (int i = 0; i < kJointFeatDim; ++i)
                f.joints[static_cast<std::size_t>(i)] = buf[off++];
            f.timestep = t;
            d.frames.push_back(f);
        }
        for (int t = 0; t < len; ++t) {
            std::array<double, kActionDim> a{};
            for (int i = 0; i < kActionDim; ++i) a[static_cast<std::size_t>(i)] = buf[off++];
            d.actions.push_back(a);
        }
        demos.push_back(std::move(d));
    }
    return {std::move(demos), stats};
}

}  // namespace cfgdp
