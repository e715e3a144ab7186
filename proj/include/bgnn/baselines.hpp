#pragma once

#include "bgnn/beamcore.hpp"
#include "bgnn/channel.hpp"
#include "bgnn/nn.hpp"

namespace bgnn::baselines {

struct BaselineResult {
    linalg::CMatrix V;          // N x K
    std::vector<double> rates;
    double utility = 0.0;
    int iterations = 0;
    bool converged = true;
};

/// Weighted-MMSE sum-rate solver: alternating MMSE receive scalars, MSE
/// weights, and regularized transmit beamformers with the sum power
/// constraint enforced by bisection on the multiplier. The sum rate is
/// nondecreasing across iterations; terminates when its change drops
/// below tol. When given, sum_rate_trace receives the per-iteration values.
BaselineResult wmmse(const linalg::CMatrix& H, double power, double noise_var,
                     double tol = 1e-6, int max_iter = 500,
                     std::vector<double>* sum_rate_trace = nullptr);

/// Zero-forcing directions from the row pseudo-inverse with water-filling
/// power over the resulting parallel channels. Requires N >= K and full
/// row rank; throws InfeasibleError otherwise.
BaselineResult zf_waterfill(const linalg::CMatrix& H, double power, double noise_var);

/// Matched-filter directions with power allocation by projected gradient
/// ascent on the selected utility over the simplex (200 steps, best of 5
/// restarts).
BaselineResult mrt_power(const linalg::CMatrix& H, double power, double noise_var,
                         beam::Utility mode, std::uint64_t seed = 7);

/// Minimum-rate optimum: alternating uplink power balancing (dominant
/// eigenvector of the uplink coupling matrix) and MMSE direction updates,
/// then downlink power recovery. All downlink SINRs are equal at the
/// solution.
BaselineResult optimal_minrate(const linalg::CMatrix& H, double power, double noise_var,
                               double tol = 1e-6, int max_iter = 1000);

/// Fully-connected baseline operating on the vectorized channel matrix.
/// Fixed input/output sizes by construction: evaluating at any other
/// (N, K) is a shape error.
struct NaiveDnn {
    int N = 0;
    int K = 0;
    beam::Utility mode = beam::Utility::Sum;
    ad::DenseNet net;       // 2NK -> ... -> feature_dim * K, sigmoid output
    int feature_dim() const { return mode == beam::Utility::Sum ? 2 : 1; }
};

/// Hidden width chosen so the total parameter count approximately matches
/// `target_params` (two hidden ReLU layers).
NaiveDnn make_naive_dnn(int n, int k, beam::Utility mode, std::size_t target_params, Rng& rng);

/// Features from the network output, normalized to the power budget.
beam::BeamFeature naive_features(const NaiveDnn& dnn, const channel::BipartiteChannel& inst);

/// Inference: recover beams from the features (eigenvector recovery in
/// min-rate mode) and evaluate downlink rates.
BaselineResult naive_eval(const NaiveDnn& dnn, const channel::BipartiteChannel& inst);

struct NaiveTrainConfig {
    int epochs = 10;
    int batches_per_epoch = 20;
    int batch_size = 64;
    double learning_rate = 5e-4;
    std::uint64_t seed = 1;
    channel::ScenarioConfig scenario;   // sizes forced to (N, K) of the net
};

/// Unsupervised training with the same objective machinery as the
/// message-passing model (single-shot features; dual uplink utility in
/// min-rate mode).
void naive_train(NaiveDnn& dnn, const NaiveTrainConfig& cfg);

} // namespace bgnn::baselines
