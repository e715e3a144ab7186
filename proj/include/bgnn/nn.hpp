#pragma once

#include <span>
#include <vector>

#include "bgnn/rng.hpp"
#include "bgnn/tape.hpp"

namespace bgnn::ad {

enum class Act : unsigned char { Identity = 0, Relu = 1, Tanh = 2, Sigmoid = 3 };

/// One fully-connected layer: y = act(x W + b), W is (in x out) row-major.
struct DenseLayer {
    Tensor W;
    Tensor b;
    Act act = Act::Identity;
};

struct DenseNet {
    std::vector<DenseLayer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().W.rows(); }
    int output_dim() const { return layers.empty() ? 0 : layers.back().W.cols(); }
    std::size_t param_count() const;

    /// Adjacent layer dimensions must chain; throws ShapeError otherwise.
    void validate() const;
};

/// Layers sized dims[0] -> dims[1] -> ... -> dims.back() with the given
/// activations (one per layer). Weights uniform on
/// [-sqrt(6/(in+out)), +sqrt(6/(in+out))], biases zero.
DenseNet make_dense(const std::vector<int>& dims, const std::vector<Act>& acts, Rng& rng);

/// Network parameters registered on a tape (or wrapped as constants when
/// tape is null) so a forward pass can be differentiated.
struct BoundNet {
    struct BoundLayer {
        Value W;
        Value b;
        Act act;
    };
    std::vector<BoundLayer> layers;
};

BoundNet bind(const DenseNet& net, Tape* tape);

/// Applies the network to a batch of row vectors (B x input_dim).
Value forward_dense(const BoundNet& net, const Value& input);

/// Eager convenience overload.
Tensor forward_dense(const DenseNet& net, const Tensor& input);

Value apply_act(Act act, const Value& x);

// ---- flat parameter views --------------------------------------------------
// Canonical order: layers in sequence, W (row-major) then b for each.

void copy_params_to(const DenseNet& net, double* dst);
void copy_params_from(DenseNet& net, const double* src);
void collect_grads(const Tape& tape, const BoundNet& net, double* dst);

// ---- Adam ------------------------------------------------------------------

/// Moment accumulators for one flat parameter vector.
struct AdamState {
    explicit AdamState(std::size_t n, double learning_rate = 5e-4)
        : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}

    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One bias-corrected Adam step in the gradient ASCENT direction
/// (params += lr * mhat / (sqrt(vhat) + eps)).
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

} // namespace bgnn::ad
