// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#include "cfgdp/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfgdp/adam.hpp"
#include "cfgdp/errors.hpp"

namespace cfgdp {

namespace {

constexpr char kCkptMagic[] = "CFGDP-CKPT-1";

using nlohmann::json;

}  // namespace

double validation_chunk_mse(const PolicyNet& net, const NoiseSchedule& schedule,
                            const DdimPlan& plan, const std::vector<Demonstration>& val_set,
                            const NormStats& stats, double s_mean, std::uint64_t seed,
                            int n_pairs) {
    if (val_set.empty()) return 0.0;
    double total = 0.0;
    for (int i = 0; i < n_pairs; ++i) {
        const Demonstration& demo = val_set[static_cast<std::size_t>(i) % val_set.size()];
        int t = (i * 37) % demo.length();
        ObservationWindow obs = make_window(demo, t);
        normalize_window(obs, stats);
        ActionChunk truth = make_chunk(demo, t);
        normalize_chunk(truth, stats);
        ActionChunk pred = sample_chunk_lambda(net, schedule, plan, obs, 1.0, true, s_mean, stats,
                                               hash_combine(seed, static_cast<std::uint64_t>(i)),
                                               /*denormalize=*/false);
        double mse = 0.0;
        for (int j = 0; j < kChunkDim; ++j) {
            double d = pred.values[static_cast<std::size_t>(j)] -
                       truth.values[static_cast<std::size_t>(j)];
            mse += d * d;
        }
        total += mse / kChunkDim;
    }
    return total / n_pairs;
}

TrainResult train(const TrainConfig& config, const std::vector<Demonstration>& train_set,
                  const std::vector<Demonstration>& val_set, const NormStats& stats,
                  const PolicyNet* initial) {
    if (config.grad_steps < 1 || config.batch_size < 1 || config.lr <= 0.0)
        throw ConfigError("train: grad_steps, batch_size, lr must be positive");
    if (config.cond_dropout_p < 0.0 || config.cond_dropout_p > 1.0)
        throw ConfigError("train: cond_dropout_p must be in [0, 1]");
    if (train_set.empty()) throw ConfigError("train: empty training set");

    NoiseSchedule schedule = make_noise_schedule(config.K, config.beta_start, config.beta_end);
    DdimPlan plan = make_ddim_plan(schedule, config.inference_steps);

    TrainResult result;
    if (initial) {
        result.net = *initial;
    } else {
        Rng init_rng = Rng::derive(config.seed, "init");
        result.net = make_policy_net(init_rng, config.hidden_width, config.hidden_layers);
    }

    Vec params;
    result.net.to_flat(params);
    AdamState adam(params.size(), AdamConfig{config.lr, 0.9, 0.999, 1e-8});
    Vec grads(params.size(), 0.0);
    // exponential moving average of the weights; the averaged copy is what we
    // validate and return, which removes most of the Adam noise floor
    Vec ema = params;
    const double kEmaDecay = 0.999;
    PolicyNet ema_net = result.net;

    // linear warmup then cosine decay to a 5% floor
    const int warmup = std::max(1, config.grad_steps / 40);
    auto lr_at = [&](int step) {
        if (step < warmup)
            return config.lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
        double span = std::max(1, config.grad_steps - warmup);
        double p = static_cast<double>(step - warmup) / span;
        double lr_floor = 0.05 * config.lr;
        constexpr double pi = 3.14159265358979323846;
        return lr_floor + 0.5 * (config.lr - lr_floor) * (1.0 + std::cos(pi * p));
    };

    const double inv_batch = 1.0 / static_cast<double>(config.batch_size);
    for (int step = 0; step < config.grad_steps; ++step) {
        Rng batch_rng = Rng::derive(config.seed, "batch", static_cast<std::uint64_t>(step));
        Rng drop_rng = Rng::derive(config.seed, "dropout", static_cast<std::uint64_t>(step));
        Rng obs_rng = Rng::derive(config.seed, "obs_noise", static_cast<std::uint64_t>(step));
        std::vector<TrainItem> batch =
            sample_batch(train_set, stats, config.batch_size, config.K, batch_rng);
        std::fill(grads.begin(), grads.end(), 0.0);
        double loss = 0.0;
        for (auto& item : batch) {
            if (drop_rng.uniform() < config.cond_dropout_p) item.obs = null_condition(item.obs);
            if (config.obs_noise > 0.0) {
                // Position drift is shared across the window's frames so the
                // frame-to-frame difference (the velocity cue that separates
                // phases) survives; a much smaller independent part covers
                // velocity-level mismatch.
                for (int i = 0; i < kFrameDim; ++i) {
                    double shared = config.obs_noise * obs_rng.gaussian();
                    for (int h = 0; h < kObsHorizon; ++h)
                        item.obs.features[static_cast<std::size_t>(h * kFrameDim + i)] +=
                            shared + 0.15 * config.obs_noise * obs_rng.gaussian();
                }
            }
            loss += ddpm_loss(result.net, schedule, item, true, stats.s_mean, &grads, inv_batch);
        }
        loss *= inv_batch;
        if (!std::isfinite(loss)) {
            result.aborted_numeric = true;
            result.abort_message = "non-finite loss at step " + std::to_string(step);
            break;
        }
        adam.cfg.lr = lr_at(step);
        try {
            adam_step(adam, params, grads);
        } catch (const NumericError& e) {
            result.aborted_numeric = true;
            result.abort_message = std::string(e.what()) + " at step " + std::to_string(step);
            break;
        }
        result.net.from_flat(params);
        // ramp the averaging horizon up so the early average is not dominated
        // by the random initialization
        double decay = std::min(kEmaDecay, (1.0 + step) / (10.0 + step));
        for (std::size_t i = 0; i < params.size(); ++i)
            ema[i] += (1.0 - decay) * (params[i] - ema[i]);

        double val_mse = 0.0;
        if ((step + 1) % config.eval_every == 0 || step + 1 == config.grad_steps) {
            ema_net.from_flat(ema);
            val_mse = validation_chunk_mse(ema_net, schedule, plan, val_set, stats,
                                           stats.s_mean, hash_combine(config.seed, fnv1a("val_eval")));
        }
        result.log.push_back({step + 1, loss, val_mse});
    }
    result.net.from_flat(ema);
    return result;
}

namespace {

json stats_to_json(const NormStats& s) {
    json j;
    j["obs_mean"] = s.obs_mean;
    j["obs_std"] = s.obs_std;
    j["act_mean"] = s.act_mean;
    j["act_std"] = s.act_std;
    j["s_mean"] = s.s_mean;
    return j;
}

NormStats stats_from_json(const json& j) {
    NormStats s;
    auto copy_arr = [](const json& a, double* out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out[i] = a.at(i).get<double>();
    };
    copy_arr(j.at("obs_mean"), s.obs_mean.data(), s.obs_mean.size());
    copy_arr(j.at("obs_std"), s.obs_std.data(), s.obs_std.size());
    copy_arr(j.at("act_mean"), s.act_mean.data(), s.act_mean.size());
    copy_arr(j.at("act_std"), s.act_std.data(), s.act_std.size());
    s.s_mean = j.at("s_mean").get<double>();
    return s;
}

json train_config_to_json(const TrainConfig& c) {
    json j;
    j["grad_steps"] = c.grad_steps;
    j["batch_size"] = c.batch_size;
    j["lr"] = c.lr;
    j["cond_dropout_p"] = c.cond_dropout_p;
    j["obs_noise"] = c.obs_noise;
    j["seed"] = c.seed;
    j["eval_every"] = c.eval_every;
    j["K"] = c.K;
    j["beta_start"] = c.beta_start;
    j["beta_end"] = c.beta_end;
    j["hidden_width"] = c.hidden_width;
    j["hidden_layers"] = c.hidden_layers;
    j["inference_steps"] = c.inference_steps;
    j["lambda_max"] = c.lambda_max;
    return j;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.grad_steps = j.at("grad_steps").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.lr = j.at("lr").get<double>();
    c.cond_dropout_p = j.at("cond_dropout_p").get<double>();
    c.obs_noise = j.at("obs_noise").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.eval_every = j.at("eval_every").get<int>();
    c.K = j.at("K").get<int>();
    c.beta_start = j.at("beta_start").get<double>();
    c.beta_end = j.at("beta_end").get<double>();
    c.hidden_width = j.at("hidden_width").get<int>();
    c.hidden_layers = j.at("hidden_layers").get<int>();
    c.inference_steps = j.at("inference_steps").get<int>();
    c.lambda_max = j.at("lambda_max").get<double>();
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json manifest;
    manifest["step_embed"] = {{"in", ckpt.net.step_embed.in_dim()},
                              {"out", ckpt.net.step_embed.out_dim()},
                              {"activation", activation_name(ckpt.net.step_embed.activation)}};
    json trunk;
    std::vector<int> dims;
    std::vector<std::string> acts;
    dims.push_back(ckpt.net.trunk.input_dim());
    for (const auto& l : ckpt.net.trunk.layers) {
        dims.push_back(l.out_dim());
        acts.push_back(activation_name(l.activation));
    }
    trunk["dims"] = dims;
    trunk["activations"] = acts;
    manifest["trunk"] = trunk;
    manifest["norm_stats"] = stats_to_json(ckpt.stats);
    manifest["guidance"] = {{"lambda_max", ckpt.guidance.lambda_max}, {"s_t0", ckpt.guidance.s_t0}};
    manifest["train_config"] = train_config_to_json(ckpt.train_config);
    manifest["n_weights"] = ckpt.net.param_count();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << kCkptMagic << "\n" << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);

    Vec flat;
    ckpt.net.to_flat(flat);
    std::vector<float> f32(flat.begin(), flat.end());
    std::ofstream wout(path + ".weights", std::ios::binary);
    if (!wout) throw std::runtime_error("save_checkpoint: cannot open " + path + ".weights");
    wout.write(reinterpret_cast<const char*>(f32.data()),
               static_cast<std::streamsize>(f32.size() * sizeof(float)));
    if (!wout) throw std::runtime_error("save_checkpoint: write failed for " + path + ".weights");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string magic;
    if (!std::getline(in, magic) || magic != kCkptMagic)
        throw ParseError("load_checkpoint: bad magic in " + path, 0);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw ParseError(std::string("load_checkpoint: bad manifest: ") + e.what(),
                         static_cast<long long>(in.tellg()));
    }

    Checkpoint ckpt;
    ckpt.stats = stats_from_json(manifest.at("norm_stats"));
    ckpt.guidance.lambda_max = manifest.at("guidance").at("lambda_max").get<double>();
    ckpt.guidance.s_t0 = manifest.at("guidance").at("s_t0").get<double>();
    ckpt.train_config = train_config_from_json(manifest.at("train_config"));

    // rebuild shapes, then overwrite with stored weights
    Rng dummy(0);
    ckpt.net.step_embed =
        make_dense(manifest.at("step_embed").at("in").get<int>(),
                   manifest.at("step_embed").at("out").get<int>(),
                   activation_from_name(manifest.at("step_embed").at("activation").get<std::string>()),
                   dummy);
    std::vector<int> dims = manifest.at("trunk").at("dims").get<std::vector<int>>();
    std::vector<Activation> acts;
    for (const auto& name : manifest.at("trunk").at("activations").get<std::vector<std::string>>())
        acts.push_back(activation_from_name(name));
    ckpt.net.trunk = make_mlp(dims, acts, dummy);

    std::size_t n = manifest.at("n_weights").get<std::size_t>();
    if (n != ckpt.net.param_count())
        throw ParseError("load_checkpoint: weight count does not match architecture", 0);
    std::ifstream win(path + ".weights", std::ios::binary);
    if (!win) throw std::runtime_error("load_checkpoint: cannot open " + path + ".weights");
    std::vector<float> f32(n);
    win.read(reinterpret_cast<char*>(f32.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
    if (!win) throw ParseError("load_checkpoint: truncated weights file", 0);
    Vec flat(f32.begin(), f32.end());
    ckpt.net.from_flat(flat);
    return ckpt;
}

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_train_log: cannot open " + path);
    out << "step,loss,val_mse\n";
    char buf[96];
    for (const auto& row : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", row.step, row.loss, row.val_mse);
        out << buf;
    }
}

}  // namespace cfgdp
