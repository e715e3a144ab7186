#include "bgnn/nn.hpp"

#include <cmath>

namespace bgnn::ad {

std::size_t DenseNet::param_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += l.W.size() + l.b.size();
    return n;
}

void DenseNet::validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const DenseLayer& l = layers[i];
        if (l.b.rows() != 1 || l.b.cols() != l.W.cols())
            throw ShapeError("dense layer bias does not match weight columns");
        if (i > 0 && layers[i - 1].W.cols() != l.W.rows())
            throw ShapeError("dense layer dimensions do not chain");
    }
}

DenseNet make_dense(const std::vector<int>& dims, const std::vector<Act>& acts, Rng& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw ContractError("make_dense: need one activation per layer");
    DenseNet net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int in = dims[l], out = dims[l + 1];
        DenseLayer layer{Tensor(in, out), Tensor(1, out), acts[l]};
        const double bound = std::sqrt(6.0 / (in + out));
        for (std::size_t i = 0; i < layer.W.size(); ++i)
            layer.W[i] = rng.uniform(-bound, bound);
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

BoundNet bind(const DenseNet& net, Tape* tape) {
    BoundNet bound;
    bound.layers.reserve(net.layers.size());
    for (const DenseLayer& l : net.layers) {
        BoundNet::BoundLayer bl;
        bl.W = tape ? tape->leaf(l.W) : constant(l.W);
        bl.b = tape ? tape->leaf(l.b) : constant(l.b);
        bl.act = l.act;
        bound.layers.push_back(std::move(bl));
    }
    return bound;
}

Value apply_act(Act act, const Value& x) {
    switch (act) {
    case Act::Identity: return x;
    case Act::Relu: return relu(x);
    case Act::Tanh: return tanh(x);
    case Act::Sigmoid: return sigmoid(x);
    }
    throw ContractError("unknown activation");
}

Value forward_dense(const BoundNet& net, const Value& input) {
    if (net.layers.empty()) throw ContractError("forward_dense: empty network");
    if (input.cols() != net.layers.front().W.rows())
        throw ShapeError("forward_dense: input length does not match first layer");
    Value x = input;
    for (const BoundNet::BoundLayer& l : net.layers)
        x = apply_act(l.act, add_rowvec(matmul(x, l.W), l.b));
    return x;
}

Tensor forward_dense(const DenseNet& net, const Tensor& input) {
    BoundNet bound = bind(net, nullptr);
    return forward_dense(bound, constant(input)).t();
}

void copy_params_to(const DenseNet& net, double* dst) {
    for (const DenseLayer& l : net.layers) {
        for (std::size_t i = 0; i < l.W.size(); ++i) *dst++ = l.W[i];
        for (std::size_t i = 0; i < l.b.size(); ++i) *dst++ = l.b[i];
    }
}

void copy_params_from(DenseNet& net, const double* src) {
    for (DenseLayer& l : net.layers) {
        for (std::size_t i = 0; i < l.W.size(); ++i) l.W[i] = *src++;
        for (std::size_t i = 0; i < l.b.size(); ++i) l.b[i] = *src++;
    }
}

void collect_grads(const Tape& tape, const BoundNet& net, double* dst) {
    for (const BoundNet::BoundLayer& l : net.layers) {
        Tensor gw = tape.grad(l.W);
        for (std::size_t i = 0; i < gw.size(); ++i) *dst++ = gw[i];
        Tensor gb = tape.grad(l.b);
        for (std::size_t i = 0; i < gb.size(); ++i) *dst++ = gb[i];
    }
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ShapeError("adam_step: parameter/gradient/state sizes differ");
    state.step += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] += state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

} // namespace bgnn::ad
