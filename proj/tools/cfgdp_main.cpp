// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
//
// cfgdp: train and evaluate a guidance-scheduled diffusion policy on the
// cyclic latch task. Subcommands cover the whole pipeline:
//
//   cfgdp gen-data --out runs/a          scripted demonstrations -> dataset
//   cfgdp train    --out runs/a          denoiser training -> checkpoint
//   cfgdp eval     --out runs/a -n 100   closed-loop rollouts -> metrics CSVs
//   cfgdp entropy  --out runs/a          next-action entropy curve -> CSV
//   cfgdp sweep    --out runs/a          guidance-ceiling sweep -> CSV
//
// Every run echoes its fully resolved settings to effective_config.json in
// the output directory; re-running from that file reproduces the outputs
// byte for byte.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfgdp/errors.hpp"
#include "cfgdp/evalsuite.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cfgdp;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct RunConfig {
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out = "out";
    std::string dataset;     // defaults to <out>/dataset.bin
    std::string checkpoint;  // defaults to <out>/checkpoint.json

    // data generation
    int n_demos = 200;
    double split_frac = 0.8;
    int required_cycles = 2;
    int max_steps = 400;
    double end_zone_threshold = 0.25;

    TrainConfig train;

    // evaluation
    int eval_n = 100;
    std::vector<std::string> variants = {"CFG_DP", "NO_CFG", "NO_STEP", "DP_BASELINE"};

    // entropy probe
    int mc_samples = 100;
    int entropy_bins = 100;
    int entropy_stride = 1;
    // default probe gives an episode longer than the typical mean demo length,
    // so the guidance schedule actually opens near the end of the probe
    std::uint64_t probe_seed = 9008;

    // guidance-ceiling sweep
    int sweep_trials = 10;
    int sweep_pairs = 20;
    std::vector<double> sweep_grid = {0.0, 0.25, 0.5, 1.0, 1.10, 1.5, 2.0, 3.0, 5.0};
};

void apply_profile(RunConfig& c, const std::string& profile) {
    if (profile == "desk" || profile.empty()) return;  // the defaults above
    if (profile == "smoke") {
        c.n_demos = 20;
        c.train.grad_steps = 200;
        c.train.hidden_width = 64;
        c.train.hidden_layers = 2;
        c.train.eval_every = 100;
        c.eval_n = 10;
        c.mc_samples = 25;
        c.entropy_stride = 10;
        c.sweep_trials = 2;
        c.sweep_pairs = 5;
        return;
    }
    if (profile == "paper") {
        c.train.grad_steps = 60000;
        return;
    }
    throw ConfigError("unknown profile: " + profile + " (valid: smoke, desk, paper)");
}

json config_to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["out"] = c.out;
    j["dataset"] = c.dataset;
    j["checkpoint"] = c.checkpoint;
    j["n_demos"] = c.n_demos;
    j["split_frac"] = c.split_frac;
    j["required_cycles"] = c.required_cycles;
    j["max_steps"] = c.max_steps;
    j["end_zone_threshold"] = c.end_zone_threshold;
    j["grad_steps"] = c.train.grad_steps;
    j["batch_size"] = c.train.batch_size;
    j["lr"] = c.train.lr;
    j["cond_dropout_p"] = c.train.cond_dropout_p;
    j["obs_noise"] = c.train.obs_noise;
    j["eval_every"] = c.train.eval_every;
    j["K"] = c.train.K;
    j["beta_start"] = c.train.beta_start;
    j["beta_end"] = c.train.beta_end;
    j["hidden_width"] = c.train.hidden_width;
    j["hidden_layers"] = c.train.hidden_layers;
    j["inference_steps"] = c.train.inference_steps;
    j["lambda_max"] = c.train.lambda_max;
    j["eval_n"] = c.eval_n;
    j["variants"] = c.variants;
    j["mc_samples"] = c.mc_samples;
    j["entropy_bins"] = c.entropy_bins;
    j["entropy_stride"] = c.entropy_stride;
    j["probe_seed"] = c.probe_seed;
    j["sweep_trials"] = c.sweep_trials;
    j["sweep_pairs"] = c.sweep_pairs;
    j["sweep_grid"] = c.sweep_grid;
    return j;
}

void config_from_json(RunConfig& c, const json& j) {
    const json reference = config_to_json(c);
    for (const auto& [key, value] : j.items())
        if (!reference.contains(key)) throw ConfigError("unknown config key: " + key);
    auto get = [&](const char* key, auto& out) {
        if (j.contains(key)) out = j.at(key).get<std::remove_reference_t<decltype(out)>>();
    };
    get("seed", c.seed);
    get("jobs", c.jobs);
    get("out", c.out);
    get("dataset", c.dataset);
    get("checkpoint", c.checkpoint);
    get("n_demos", c.n_demos);
    get("split_frac", c.split_frac);
    get("required_cycles", c.required_cycles);
    get("max_steps", c.max_steps);
    get("end_zone_threshold", c.end_zone_threshold);
    get("grad_steps", c.train.grad_steps);
    get("batch_size", c.train.batch_size);
    get("lr", c.train.lr);
    get("cond_dropout_p", c.train.cond_dropout_p);
    get("obs_noise", c.train.obs_noise);
    get("eval_every", c.train.eval_every);
    get("K", c.train.K);
    get("beta_start", c.train.beta_start);
    get("beta_end", c.train.beta_end);
    get("hidden_width", c.train.hidden_width);
    get("hidden_layers", c.train.hidden_layers);
    get("inference_steps", c.train.inference_steps);
    get("lambda_max", c.train.lambda_max);
    get("eval_n", c.eval_n);
    get("variants", c.variants);
    get("mc_samples", c.mc_samples);
    get("entropy_bins", c.entropy_bins);
    get("entropy_stride", c.entropy_stride);
    get("probe_seed", c.probe_seed);
    get("sweep_trials", c.sweep_trials);
    get("sweep_pairs", c.sweep_pairs);
    get("sweep_grid", c.sweep_grid);
}

EpisodeConfig episode_config(const RunConfig& c) {
    EpisodeConfig e;
    e.required_cycles = c.required_cycles;
    e.max_steps = c.max_steps;
    e.end_zone_threshold = c.end_zone_threshold;
    return e;
}

void finalize_paths(RunConfig& c) {
    if (c.dataset.empty()) c.dataset = (fs::path(c.out) / "dataset.bin").string();
    if (c.checkpoint.empty()) c.checkpoint = (fs::path(c.out) / "checkpoint.json").string();
}

void write_effective_config(const RunConfig& c) {
    fs::path path = fs::path(c.out) / "effective_config.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << config_to_json(c).dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void prepare_out_dir(RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + c.out + ": " + ec.message());
    finalize_paths(c);
    write_effective_config(c);
}

std::vector<Variant> parse_variants(const std::vector<std::string>& names) {
    if (names.empty()) throw ConfigError("no variants requested");
    std::vector<Variant> out;
    for (const auto& n : names) out.push_back(variant_from_name(n));
    return out;
}

int cmd_gen_data(RunConfig c) {
    if (c.n_demos < 2) throw ConfigError("n_demos must be at least 2");
    prepare_out_dir(c);
    EpisodeConfig env_cfg = episode_config(c);
    auto demos = generate_demos(c.n_demos, hash_combine(c.seed, fnv1a("data")), env_cfg);
    auto [train_set, val_set] = split_demos(demos, c.split_frac, c.seed);
    NormStats stats = compute_norm_stats(train_set);
    save_dataset(c.dataset, demos, stats);

    int min_len = demos.front().length(), max_len = min_len;
    for (const auto& d : demos) {
        min_len = std::min(min_len, d.length());
        max_len = std::max(max_len, d.length());
    }
    std::printf("wrote %s: %d demos (split %zu/%zu), lengths %d..%d, s_mean %.2f\n",
                c.dataset.c_str(), c.n_demos, train_set.size(), val_set.size(), min_len, max_len,
                stats.s_mean);
    return 0;
}

int cmd_train(RunConfig c) {
    finalize_paths(c);
    auto [demos, stats] = load_dataset(c.dataset);
    auto [train_set, val_set] = split_demos(demos, c.split_frac, c.seed);
    prepare_out_dir(c);
    TrainConfig tc = c.train;
    tc.seed = c.seed;
    TrainResult result = train(tc, train_set, val_set, stats);

    Checkpoint ckpt;
    ckpt.net = result.net;
    ckpt.stats = stats;
    ckpt.guidance = GuidanceConfig{tc.lambda_max, stats.s_mean};
    ckpt.train_config = tc;
    save_checkpoint(c.checkpoint, ckpt);
    write_train_log((fs::path(c.out) / "train_log.csv").string(), result.log);

    if (result.aborted_numeric) {
        std::fprintf(stderr, "training aborted: %s (partial checkpoint kept at %s)\n",
                     result.abort_message.c_str(), c.checkpoint.c_str());
        return kExitNumeric;
    }
    std::printf("wrote %s after %d steps (final loss %.6g)\n", c.checkpoint.c_str(), tc.grad_steps,
                result.log.empty() ? 0.0 : result.log.back().loss);
    return 0;
}

int cmd_eval(RunConfig c) {
    if (c.eval_n < 1) throw ConfigError("eval_n must be positive");
    std::vector<Variant> variants = parse_variants(c.variants);
    finalize_paths(c);
    Checkpoint ckpt = load_checkpoint(c.checkpoint);
    prepare_out_dir(c);
    EpisodeConfig env_cfg = episode_config(c);

    std::vector<MetricsSummary> summaries;
    std::vector<std::pair<std::string, std::vector<RolloutRecord>>> per_variant;
    std::uint64_t seed_base = hash_combine(c.seed, fnv1a("rollout"));
    for (Variant v : variants) {
        auto records = rollout_batch(ckpt, v, env_cfg, seed_base, c.eval_n, c.jobs);
        summaries.push_back(summarize(variant_name(v), records));
        per_variant.emplace_back(variant_name(v), std::move(records));
    }
    write_metrics_csv((fs::path(c.out) / "metrics.csv").string(), summaries);
    write_termination_csv((fs::path(c.out) / "termination.csv").string(), per_variant);
    for (const auto& s : summaries)
        std::printf("%-12s success %.1f%%  repetitive %.2f  completion %.1fs  (n=%d)\n",
                    s.variant.c_str(), s.success_rate, s.repetitive_mean, s.completion_time_mean,
                    s.n);
    return 0;
}

int cmd_entropy(RunConfig c) {
    std::vector<Variant> variants = parse_variants(c.variants);
    finalize_paths(c);
    Checkpoint ckpt = load_checkpoint(c.checkpoint);
    prepare_out_dir(c);
    EpisodeConfig env_cfg = episode_config(c);
    Trajectory probe_traj = expert_rollout(c.probe_seed, env_cfg);
    Demonstration probe = demo_from_trajectory(probe_traj);

    std::vector<std::pair<std::string, std::vector<EntropyPoint>>> per_variant;
    std::uint64_t seed = hash_combine(c.seed, fnv1a("entropy"));
    for (Variant v : variants)
        per_variant.emplace_back(variant_name(v),
                                 conditional_entropy(ckpt, v, probe, c.mc_samples, c.entropy_bins,
                                                     c.entropy_stride, seed, c.jobs));
    write_entropy_csv((fs::path(c.out) / "entropy.csv").string(), per_variant);
    std::printf("wrote entropy.csv: probe length %d, %zu variants, %d samples/timestep\n",
                probe.length(), per_variant.size(), c.mc_samples);
    return 0;
}

int cmd_sweep(RunConfig c) {
    finalize_paths(c);
    Checkpoint ckpt = load_checkpoint(c.checkpoint);
    auto [demos, stats] = load_dataset(c.dataset);
    auto [train_set, val_set] = split_demos(demos, c.split_frac, c.seed);
    prepare_out_dir(c);
    auto rows = sweep_lambda_max(ckpt, c.sweep_grid, val_set, c.sweep_trials, c.sweep_pairs,
                                 hash_combine(c.seed, fnv1a("sweep")), c.jobs);
    write_sweep_csv((fs::path(c.out) / "sweep.csv").string(), rows);

    // report the per-value mean for a quick look
    for (double v : c.sweep_grid) {
        double total = 0.0;
        int n = 0;
        for (const auto& r : rows)
            if (r.lambda_max == v) {
                total += r.mse;
                ++n;
            }
        std::printf("lambda_max %-5.3g mean MSE %.6g over %d trials\n", v, total / n, n);
    }
    return 0;
}

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diffusion policy with scheduled classifier-free guidance"};
    app.require_subcommand(1);

    std::string config_path, out_flag, variant_flag, profile = "desk";
    std::uint64_t seed_flag = 0;
    int jobs_flag = 0, n_flag = -1;
    bool seed_set = false;

    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed_flag, "global seed")->each([&](const std::string&) { seed_set = true; });
    app.add_option("--out", out_flag, "output directory (fallback: $CFGDP_OUT, then ./out)");
    app.add_option("--jobs", jobs_flag, "worker threads");
    app.add_option("--variant", variant_flag, "variant name or comma-separated list");
    app.add_option("--n", n_flag, "count for the subcommand (demos / rollouts / samples / trials)");
    app.add_option("--profile", profile, "preset scale: smoke, desk, paper");

    auto* gen = app.add_subcommand("gen-data", "generate scripted demonstrations");
    auto* tr = app.add_subcommand("train", "train the denoiser");
    auto* ev = app.add_subcommand("eval", "closed-loop rollout metrics");
    auto* en = app.add_subcommand("entropy", "next-action entropy along a probe");
    auto* sw = app.add_subcommand("sweep", "guidance-ceiling sweep");
    for (auto* sub : {gen, tr, ev, en, sw}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        RunConfig cfg;
        apply_profile(cfg, profile);
        if (!config_path.empty()) {
            std::ifstream f(config_path, std::ios::binary);
            if (!f) throw ConfigError("cannot read config file " + config_path);
            json j;
            try {
                f >> j;
            } catch (const json::exception& e) {
                throw ConfigError(std::string("bad config JSON: ") + e.what());
            }
            config_from_json(cfg, j);
        }
        if (seed_set) cfg.seed = seed_flag;
        if (jobs_flag > 0) cfg.jobs = jobs_flag;
        if (!out_flag.empty()) {
            cfg.out = out_flag;
        } else if (config_path.empty() || cfg.out == "out") {
            if (const char* env_out = std::getenv("CFGDP_OUT"); env_out && *env_out)
                cfg.out = env_out;
        }
        if (!variant_flag.empty()) cfg.variants = split_csv_list(variant_flag);
        if (n_flag >= 0) {
            if (gen->parsed()) cfg.n_demos = n_flag;
            if (ev->parsed()) cfg.eval_n = n_flag;
            if (en->parsed()) cfg.mc_samples = n_flag;
            if (sw->parsed()) cfg.sweep_trials = n_flag;
        }
        if (cfg.jobs < 1) throw ConfigError("jobs must be positive");

        if (gen->parsed()) return cmd_gen_data(cfg);
        if (tr->parsed()) return cmd_train(cfg);
        if (ev->parsed()) return cmd_eval(cfg);
        if (en->parsed()) return cmd_entropy(cfg);
        if (sw->parsed()) return cmd_sweep(cfg);
        return kExitUsage;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
}
