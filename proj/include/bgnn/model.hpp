#pragma once

#include <memory>
#include <vector>

#include "bgnn/beamcore.hpp"
#include "bgnn/channel.hpp"
#include "bgnn/nn.hpp"

namespace bgnn::model {

/// The three shared networks of the message-passing optimizer. The user
/// (message) net consumes (s_k, b_k, Re h, Im h), the antenna net consumes
/// (m_ik, c_i, Re h, Im h), the decision net consumes m_k. All three are
/// reused at every vertex and every iteration, which is what makes the
/// model independent of the numbers of antennas and users.
struct BgnnParams {
    beam::Utility mode = beam::Utility::Sum;
    int msg_dim = 5;        // M
    int iterations = 6;     // T
    ad::DenseNet user_net;      // (M + feature_dim + 2) -> M, tanh output
    ad::DenseNet antenna_net;   // (3M + 2) -> M, tanh output
    ad::DenseNet decision_net;  // 2M -> feature_dim, sigmoid output

    /// 2 in sum-rate mode (p_k, q_k); 1 in min-rate mode (q_k only).
    int feature_dim() const { return mode == beam::Utility::Sum ? 2 : 1; }
    std::size_t param_count() const;
    void validate() const;
};

/// Hidden width 0 selects the experimental defaults (200 for sum rate,
/// 40 for minimum rate). Two ReLU hidden layers per net.
BgnnParams init_params(beam::Utility mode, int msg_dim, int iterations, int hidden, Rng& rng);

struct BoundParams {
    ad::BoundNet user_net;
    ad::BoundNet antenna_net;
    ad::BoundNet decision_net;
};

BoundParams bind(const BgnnParams& params, ad::Tape* tape);

// Flat parameter order: user net, antenna net, decision net; per layer W then b.
std::vector<double> flatten(const BgnnParams& params);
void unflatten(BgnnParams& params, const double* src);
void collect_grads(const ad::Tape& tape, const BoundParams& bound, double* dst);

/// Per-edge and per-vertex message vectors at one iteration. Edges are
/// ordered e = k * N + i (user-major).
struct MessageState {
    int N = 0;
    int K = 0;
    std::shared_ptr<const std::vector<int>> edge_user;     // e -> k
    std::shared_ptr<const std::vector<int>> edge_antenna;  // e -> i

    ad::Value features;        // K x feature_dim   (s_k)
    ad::Value user_agg;        // K x M             (b_k)
    ad::Value edge_composite;  // E x 2M            (m_{i,k})
    ad::Value edge_user_msg;   // E x M             (c_{k,i})
    ad::Value antenna_agg;     // N x M             (c_i)
    ad::Value user_comp_agg;   // K x 2M            (m_k)
};

/// Initial edge messages b^{[0]}_{i,k} ~ N(0, 1), one M-vector per edge.
ad::Tensor sample_init_messages(int n, int k, int msg_dim, Rng& rng);

/// Initial state: uniform feature split s_k = P/K per side, aggregates
/// derived from the given initial edge messages.
MessageState init_state(int n, int k, const BgnnParams& params, double power,
                        const ad::Tensor& init_messages);

/// Per-edge channel inputs (Re h_{k,i}, Im h_{k,i}) in edge order.
ad::Value edge_channel_features(const channel::BipartiteChannel& inst);

// One round of the three vertex operations. Each reads only quantities
// local to its vertex (own feature, own aggregates, incident edge weight).
void user_message_step(MessageState& st, const BoundParams& nets, const ad::Value& edge_channels);
void antenna_message_step(MessageState& st, const BoundParams& nets, const ad::Value& edge_channels);
void decide_features(MessageState& st, const BoundParams& nets, double power);

struct ForwardOptions {
    ad::Tape* tape = nullptr;           // record the pass for training
    bool want_objective = false;        // build per-iteration utility values
    bool want_solutions = false;        // recover beams per iteration (plain path)
    std::vector<double> step_weights;   // objective weights, empty = all ones
};

struct ForwardResult {
    std::vector<ad::Tensor> features;          // per-iteration K x feature_dim
    std::vector<ad::Value> step_utilities;     // when want_objective
    ad::Value objective;                       // weighted sum of step utilities
    std::vector<beam::BeamSolution> solutions; // when want_solutions
};

/// Runs T rounds of message passing. In sum-rate mode the per-step utility
/// is the downlink utility of the recovered beams; in min-rate mode the
/// training utility is evaluated in the dual uplink (no eigen decomposition
/// on the gradient path) while solutions use the eigenvector recovery.
ForwardResult bmp_forward(const channel::BipartiteChannel& inst, const BgnnParams& params,
                          const ad::Tensor& init_messages, const ForwardOptions& opts);

/// Same pass over parameters already bound to a tape, so the caller can
/// collect gradients from the binding afterwards.
ForwardResult bmp_forward_bound(const channel::BipartiteChannel& inst, const BgnnParams& params,
                                const BoundParams& bound, const ad::Tensor& init_messages,
                                const ForwardOptions& opts);

/// Convenience: solution at the final iteration only.
beam::BeamSolution infer(const channel::BipartiteChannel& inst, const BgnnParams& params,
                         const ad::Tensor& init_messages);

} // namespace bgnn::model
