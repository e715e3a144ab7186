#include "bgnn/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <thread>

#include "bgnn/checkpoint.hpp"

namespace bgnn::training {

namespace {

// Disjoint stream namespaces under one master seed.
constexpr std::uint64_t kValStreamBase = 1ULL << 60;
constexpr std::uint64_t kParamStream = 1ULL << 61;

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(index) for index in [0, count) across threads. Work is split by
/// index stripes; outputs must be written to per-index slots so the result
/// does not depend on scheduling.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (int i = t; i < count; i += threads) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

Sample make_sample_from_streams(const TrainConfig& cfg, std::uint64_t inst_stream,
                                std::uint64_t msg_stream, int msg_dim) {
    Rng inst_rng = Rng::stream(cfg.seed, inst_stream);
    channel::ScenarioConfig sc = cfg.scenario;
    if (cfg.snr_policy == SnrPolicy::PerSampleDb) {
        const double db = inst_rng.uniform(cfg.snr_db_min, cfg.snr_db_max);
        sc.power = std::pow(10.0, db / 10.0);
    }
    Sample s;
    s.inst = channel::sample_instance(sc, inst_rng);
    Rng msg_rng = Rng::stream(cfg.seed, msg_stream);
    s.init_messages = model::sample_init_messages(s.inst.N, s.inst.K, msg_dim, msg_rng);
    return s;
}

} // namespace

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batches_per_epoch < 1 || batch_size < 1) throw ConfigError("batch counts must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
    if (iterations < 1) throw ConfigError("iteration count must be >= 1");
    if (msg_dim < 1) throw ConfigError("message dimension must be >= 1");
    if (validation_size < 1) throw ConfigError("validation size must be >= 1");
    if (!step_weights.empty() && static_cast<int>(step_weights.size()) != iterations)
        throw ConfigError("step weight count must equal the iteration count");
    if (snr_policy == SnrPolicy::PerSampleDb && snr_db_min > snr_db_max)
        throw ConfigError("SNR range is inverted");
    scenario.validate();
}

Sample make_train_sample(const TrainConfig& cfg, std::uint64_t sample_id, int msg_dim) {
    return make_sample_from_streams(cfg, 4 * sample_id, 4 * sample_id + 1, msg_dim);
}

Sample make_val_sample(const TrainConfig& cfg, std::uint64_t val_index, int msg_dim) {
    return make_sample_from_streams(cfg, kValStreamBase + 4 * val_index,
                                    kValStreamBase + 4 * val_index + 1, msg_dim);
}

double objective(const model::BgnnParams& params, const std::vector<Sample>& batch,
                 const std::vector<double>& step_weights) {
    if (batch.empty()) throw ContractError("objective: empty batch");
    double total = 0.0;
    for (const Sample& s : batch) {
        model::ForwardOptions opts;
        opts.want_objective = true;
        opts.step_weights = step_weights;
        model::ForwardResult res = model::bmp_forward(s.inst, params, s.init_messages, opts);
        total += res.objective.t().scalar_value();
    }
    return total / static_cast<double>(batch.size());
}

double evaluate_utility(const model::BgnnParams& params, const std::vector<Sample>& samples,
                        int threads) {
    if (samples.empty()) throw ContractError("evaluate_utility: empty sample set");
    std::vector<double> utilities(samples.size(), 0.0);
    parallel_for(static_cast<int>(samples.size()), resolve_threads(threads), [&](int i) {
        const Sample& s = samples[static_cast<std::size_t>(i)];
        utilities[static_cast<std::size_t>(i)] =
            model::infer(s.inst, params, s.init_messages).utility;
    });
    double total = 0.0;
    for (double u : utilities) total += u;
    return total / static_cast<double>(samples.size());
}

namespace {

void dump_batch(const TrainConfig& cfg, const std::vector<Sample>& batch, const char* tag) {
    for (std::size_t j = 0; j < batch.size(); ++j) {
        char name[160];
        std::snprintf(name, sizeof name, "%s/nan_batch_%s_s%zu.txt",
                      cfg.dump_dir.empty() ? "." : cfg.dump_dir.c_str(), tag, j);
        channel::save_instance(name, batch[j].inst);
    }
}

} // namespace

/// Per-sample tapes evaluated in parallel; gradients reduced in ascending
/// sample order so results do not depend on the thread count. Samples are
/// processed in fixed-size chunks to bound gradient buffer memory.
BatchGradient compute_batch_gradient(const model::BgnnParams& params, const TrainConfig& cfg,
                                     const std::vector<Sample>& batch) {
    if (batch.empty()) throw ContractError("compute_batch_gradient: empty batch");
    const int threads = resolve_threads(cfg.threads);
    const std::size_t n_params = params.param_count();
    const int chunk = std::min<int>(static_cast<int>(batch.size()), 64);
    std::vector<double> sample_grads(static_cast<std::size_t>(chunk) * n_params);
    std::vector<double> sample_obj(static_cast<std::size_t>(chunk));

    BatchGradient out;
    out.grad.assign(n_params, 0.0);

    try {
        for (int base = 0; base < static_cast<int>(batch.size()); base += chunk) {
            const int count = std::min<int>(chunk, static_cast<int>(batch.size()) - base);
            parallel_for(count, threads, [&](int j) {
                const Sample& s = batch[static_cast<std::size_t>(base + j)];
                ad::Tape tape;
                model::ForwardOptions opts;
                opts.tape = &tape;
                opts.want_objective = true;
                opts.step_weights = cfg.step_weights;
                model::BoundParams bound = model::bind(params, &tape);
                model::ForwardResult res =
                    model::bmp_forward_bound(s.inst, params, bound, s.init_messages, opts);
                tape.backward(res.objective);
                model::collect_grads(tape, bound,
                                     sample_grads.data() + static_cast<std::size_t>(j) * n_params);
                sample_obj[static_cast<std::size_t>(j)] = res.objective.t().scalar_value();
            });

            for (int j = 0; j < count; ++j) {
                const double* g = sample_grads.data() + static_cast<std::size_t>(j) * n_params;
                for (std::size_t i = 0; i < n_params; ++i) out.grad[i] += g[i];
                out.objective += sample_obj[static_cast<std::size_t>(j)];
            }
        }
    } catch (const NumericError&) {
        dump_batch(cfg, batch, "backward");
        throw;
    }

    for (double g : out.grad)
        if (!std::isfinite(g)) {
            dump_batch(cfg, batch, "grad");
            throw NumericError("non-finite gradient; offending batch dumped");
        }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : out.grad) g *= inv;
    out.objective *= inv;
    return out;
}

TrainResult train(const TrainConfig& cfg) {
    cfg.validate();

    Rng param_rng = Rng::stream(cfg.seed, kParamStream);
    model::BgnnParams params =
        model::init_params(cfg.mode, cfg.msg_dim, cfg.iterations, cfg.hidden, param_rng);

    TrainResult result;
    result.best = params;
    if (cfg.epochs == 0) return result;

    const int threads = resolve_threads(cfg.threads);

    // held-out validation set, generated once, never trained on
    std::vector<Sample> val_set;
    val_set.reserve(static_cast<std::size_t>(cfg.validation_size));
    for (int v = 0; v < cfg.validation_size; ++v)
        val_set.push_back(make_val_sample(cfg, static_cast<std::uint64_t>(v), cfg.msg_dim));

    std::vector<double> flat = model::flatten(params);
    ad::AdamState adam(flat.size(), cfg.learning_rate);
    double best_val = -std::numeric_limits<double>::infinity();

    std::uint64_t sample_id = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double epoch_obj = 0.0;
        for (int b = 0; b < cfg.batches_per_epoch; ++b) {
            std::vector<Sample> batch;
            batch.reserve(static_cast<std::size_t>(cfg.batch_size));
            for (int s = 0; s < cfg.batch_size; ++s)
                batch.push_back(make_train_sample(cfg, sample_id++, cfg.msg_dim));

            const BatchGradient bg = compute_batch_gradient(params, cfg, batch);
            ad::adam_step(flat, bg.grad, adam);
            model::unflatten(params, flat.data());
            epoch_obj += bg.objective;
        }
        epoch_obj /= static_cast<double>(cfg.batches_per_epoch);

        const double val_utility = evaluate_utility(params, val_set, threads);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.objective = epoch_obj;
        rec.val_utility = val_utility;
        rec.is_best = val_utility > best_val;
        if (rec.is_best) {
            best_val = val_utility;
            result.best = params;
            if (!cfg.checkpoint_path.empty())
                model::save_checkpoint(cfg.checkpoint_path, params);
        }
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.report.epochs.push_back(rec);
    }
    return result;
}

std::string format_report(const TrainReport& report, bool include_timing) {
    std::string out = include_timing ? "# epoch objective val_utility best seconds\n"
                                     : "# epoch objective val_utility best\n";
    char line[160];
    for (const EpochRecord& r : report.epochs) {
        if (include_timing)
            std::snprintf(line, sizeof line, "%d %.12g %.12g %d %.3f\n", r.epoch, r.objective,
                          r.val_utility, r.is_best ? 1 : 0, r.seconds);
        else
            std::snprintf(line, sizeof line, "%d %.12g %.12g %d\n", r.epoch, r.objective,
                          r.val_utility, r.is_best ? 1 : 0);
        out += line;
    }
    return out;
}

} // namespace bgnn::training
