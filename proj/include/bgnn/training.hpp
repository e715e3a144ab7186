#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgnn/channel.hpp"
#include "bgnn/model.hpp"

namespace bgnn::training {

enum class SnrPolicy : unsigned char { Fixed = 0, PerSampleDb = 1 };

struct TrainConfig {
    int epochs = 30;
    int batches_per_epoch = 20;
    int batch_size = 64;
    double learning_rate = 5e-4;
    int iterations = 6;                  // T
    beam::Utility mode = beam::Utility::Sum;
    int msg_dim = 5;                     // M
    int hidden = 0;                      // 0 -> width by mode
    SnrPolicy snr_policy = SnrPolicy::Fixed;
    double snr_db_min = 10.0;            // PerSampleDb range
    double snr_db_max = 10.0;
    int validation_size = 256;
    std::uint64_t seed = 1;
    int threads = 0;                     // 0 = hardware concurrency
    channel::ScenarioConfig scenario;    // scenario.power is the fixed-SNR budget
    std::vector<double> step_weights;    // objective weights, empty = all ones
    std::string checkpoint_path;         // persisted on validation improvement when set
    std::string dump_dir = ".";          // offending batch dump on numeric failure

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double objective = 0.0;     // batch-mean multi-step objective
    double val_utility = 0.0;   // final-step utility on the held-out set
    bool is_best = false;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
};

/// One training/validation example: an instance plus its initial messages.
struct Sample {
    channel::BipartiteChannel inst;
    ad::Tensor init_messages;
};

/// Deterministic per-sample streams derived from the run seed.
Sample make_train_sample(const TrainConfig& cfg, std::uint64_t sample_id, int msg_dim);
Sample make_val_sample(const TrainConfig& cfg, std::uint64_t val_index, int msg_dim);

/// Batch-mean estimate of the multi-step objective (sum over iterations of
/// the per-step utility; dual uplink rates in min-rate mode).
double objective(const model::BgnnParams& params, const std::vector<Sample>& batch,
                 const std::vector<double>& step_weights = {});

/// Mean final-step utility via the inference path (eigenvector recovery in
/// min-rate mode).
double evaluate_utility(const model::BgnnParams& params, const std::vector<Sample>& samples,
                        int threads = 0);

struct BatchGradient {
    double objective = 0.0;       // batch mean
    std::vector<double> grad;     // batch mean, flat parameter order
};

/// Forward/backward over one batch with per-sample tapes; gradients are
/// reduced in ascending sample order. On non-finite values the offending
/// batch is dumped to cfg.dump_dir and a NumericError is thrown.
BatchGradient compute_batch_gradient(const model::BgnnParams& params, const TrainConfig& cfg,
                                     const std::vector<Sample>& batch);

struct TrainResult {
    model::BgnnParams best;
    TrainReport report;
};

/// Minibatch gradient-ascent training with Adam, validation-best
/// checkpointing, and seed-reproducible results regardless of thread count
/// (per-sample gradients are reduced in a fixed order).
TrainResult train(const TrainConfig& cfg);

/// Line-oriented report: "epoch objective val_utility best seconds".
/// Timing is excluded when include_timing is false, which is the form
/// covered by the determinism guarantee.
std::string format_report(const TrainReport& report, bool include_timing);

} // namespace bgnn::training
