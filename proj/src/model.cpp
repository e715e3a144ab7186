#include "bgnn/model.hpp"

#include <cmath>

namespace bgnn::model {

using ad::Tensor;
using ad::Value;

std::size_t BgnnParams::param_count() const {
    return user_net.param_count() + antenna_net.param_count() + decision_net.param_count();
}

void BgnnParams::validate() const {
    if (msg_dim < 1) throw ContractError("message dimension must be >= 1");
    if (iterations < 1) throw ContractError("iteration count must be >= 1");
    user_net.validate();
    antenna_net.validate();
    decision_net.validate();
    const int m = msg_dim;
    if (user_net.input_dim() != m + feature_dim() + 2 || user_net.output_dim() != m)
        throw ShapeError("user net dimensions do not match message schema");
    if (antenna_net.input_dim() != 3 * m + 2 || antenna_net.output_dim() != m)
        throw ShapeError("antenna net dimensions do not match message schema");
    if (decision_net.input_dim() != 2 * m || decision_net.output_dim() != feature_dim())
        throw ShapeError("decision net dimensions do not match message schema");
}

BgnnParams init_params(beam::Utility mode, int msg_dim, int iterations, int hidden, Rng& rng) {
    BgnnParams p;
    p.mode = mode;
    p.msg_dim = msg_dim;
    p.iterations = iterations;
    const int width = hidden > 0 ? hidden : (mode == beam::Utility::Sum ? 200 : 40);
    const int m = msg_dim;
    const std::vector<ad::Act> msg_acts{ad::Act::Relu, ad::Act::Relu, ad::Act::Tanh};
    const std::vector<ad::Act> dec_acts{ad::Act::Relu, ad::Act::Relu, ad::Act::Sigmoid};
    p.user_net = ad::make_dense({m + p.feature_dim() + 2, width, width, m}, msg_acts, rng);
    p.antenna_net = ad::make_dense({3 * m + 2, width, width, m}, msg_acts, rng);
    p.decision_net = ad::make_dense({2 * m, width, width, p.feature_dim()}, dec_acts, rng);
    p.validate();
    return p;
}

BoundParams bind(const BgnnParams& params, ad::Tape* tape) {
    return {ad::bind(params.user_net, tape), ad::bind(params.antenna_net, tape),
            ad::bind(params.decision_net, tape)};
}

std::vector<double> flatten(const BgnnParams& params) {
    std::vector<double> flat(params.param_count());
    double* dst = flat.data();
    ad::copy_params_to(params.user_net, dst);
    dst += params.user_net.param_count();
    ad::copy_params_to(params.antenna_net, dst);
    dst += params.antenna_net.param_count();
    ad::copy_params_to(params.decision_net, dst);
    return flat;
}

void unflatten(BgnnParams& params, const double* src) {
    ad::copy_params_from(params.user_net, src);
    src += params.user_net.param_count();
    ad::copy_params_from(params.antenna_net, src);
    src += params.antenna_net.param_count();
    ad::copy_params_from(params.decision_net, src);
}

void collect_grads(const ad::Tape& tape, const BoundParams& bound, double* dst) {
    std::size_t off = 0;
    auto count = [](const ad::BoundNet& net) {
        std::size_t n = 0;
        for (const auto& l : net.layers) n += l.W.t().size() + l.b.t().size();
        return n;
    };
    ad::collect_grads(tape, bound.user_net, dst + off);
    off += count(bound.user_net);
    ad::collect_grads(tape, bound.antenna_net, dst + off);
    off += count(bound.antenna_net);
    ad::collect_grads(tape, bound.decision_net, dst + off);
}

Tensor sample_init_messages(int n, int k, int msg_dim, Rng& rng) {
    Tensor b0(n * k, msg_dim);
    for (std::size_t i = 0; i < b0.size(); ++i) b0[i] = rng.normal();
    return b0;
}

Value edge_channel_features(const channel::BipartiteChannel& inst) {
    Tensor hf(inst.N * inst.K, 2);
    for (int k = 0; k < inst.K; ++k)
        for (int i = 0; i < inst.N; ++i) {
            const int e = k * inst.N + i;
            hf(e, 0) = inst.H(k, i).real();
            hf(e, 1) = inst.H(k, i).imag();
        }
    return ad::constant(std::move(hf));
}

MessageState init_state(int n, int k, const BgnnParams& params, double power,
                        const Tensor& init_messages) {
    if (n < 1 || k < 1) throw ContractError("init_state: N and K must be >= 1");
    const int e = n * k;
    if (init_messages.rows() != e || init_messages.cols() != params.msg_dim)
        throw ShapeError("init_state: initial messages must be (N*K) x M");

    MessageState st;
    st.N = n;
    st.K = k;
    auto eu = std::make_shared<std::vector<int>>(static_cast<std::size_t>(e));
    auto ea = std::make_shared<std::vector<int>>(static_cast<std::size_t>(e));
    for (int u = 0; u < k; ++u)
        for (int a = 0; a < n; ++a) {
            (*eu)[static_cast<std::size_t>(u * n + a)] = u;
            (*ea)[static_cast<std::size_t>(u * n + a)] = a;
        }
    st.edge_user = std::move(eu);
    st.edge_antenna = std::move(ea);

    st.features = ad::constant(Tensor::full(k, params.feature_dim(), power / k));

    const Value b0 = ad::constant(init_messages);
    st.user_agg = ad::segment_sum(b0, st.edge_user, k);
    // composite m^{[0]}_{i,k} = (b0_{i,k}, sum_{l != k} b0_{i,l})
    Value per_antenna = ad::segment_sum(b0, st.edge_antenna, n);
    Value leak = ad::sub(ad::gather_rows(per_antenna, st.edge_antenna), b0);
    st.edge_composite = ad::concat_cols({b0, leak});
    st.user_comp_agg = ad::segment_sum(st.edge_composite, st.edge_user, k);
    return st;
}

void user_message_step(MessageState& st, const BoundParams& nets, const Value& edge_channels) {
    Value input = ad::concat_cols({ad::gather_rows(st.features, st.edge_user),
                                   ad::gather_rows(st.user_agg, st.edge_user), edge_channels});
    st.edge_user_msg = ad::forward_dense(nets.user_net, input);
    st.antenna_agg = ad::segment_sum(st.edge_user_msg, st.edge_antenna, st.N);
}

void antenna_message_step(MessageState& st, const BoundParams& nets, const Value& edge_channels) {
    Value input = ad::concat_cols(
        {st.edge_composite, ad::gather_rows(st.antenna_agg, st.edge_antenna), edge_channels});
    Value b_edge = ad::forward_dense(nets.antenna_net, input);

    Value per_antenna = ad::segment_sum(b_edge, st.edge_antenna, st.N);
    Value leak = ad::sub(ad::gather_rows(per_antenna, st.edge_antenna), b_edge);
    st.edge_composite = ad::concat_cols({b_edge, leak});
    st.user_comp_agg = ad::segment_sum(st.edge_composite, st.edge_user, st.K);
    st.user_agg = ad::segment_sum(b_edge, st.edge_user, st.K);
}

void decide_features(MessageState& st, const BoundParams& nets, double power) {
    Value raw = ad::forward_dense(nets.decision_net, st.user_comp_agg);
    Value sums = ad::col_sum(raw);
    for (int j = 0; j < sums.cols(); ++j) {
        if (sums.t()(0, j) <= 0.0) {
            // unreachable with a sigmoid output; uniform fallback by contract
            st.features = ad::constant(Tensor::full(st.K, raw.cols(), power / st.K));
            return;
        }
    }
    st.features = ad::scale(ad::div_rowvec(raw, sums), power);
}

ForwardResult bmp_forward(const channel::BipartiteChannel& inst, const BgnnParams& params,
                          const Tensor& init_messages, const ForwardOptions& opts) {
    BoundParams bound = bind(params, opts.tape);
    return bmp_forward_bound(inst, params, bound, init_messages, opts);
}

ForwardResult bmp_forward_bound(const channel::BipartiteChannel& inst, const BgnnParams& params,
                                const BoundParams& nets, const Tensor& init_messages,
                                const ForwardOptions& opts) {
    inst.validate();
    params.validate();
    if (!opts.step_weights.empty() &&
        static_cast<int>(opts.step_weights.size()) != params.iterations)
        throw ContractError("bmp_forward: step weight count must equal T");

    const Value edge_ch = edge_channel_features(inst);
    MessageState st = init_state(inst.N, inst.K, params, inst.power, init_messages);

    // recovery constants are only needed when utilities are requested
    beam::ChannelConstants cc;
    if (opts.want_objective) cc = beam::make_channel_constants(inst.H, inst.noise_var);

    ForwardResult out;
    for (int t = 0; t < params.iterations; ++t) {
        user_message_step(st, nets, edge_ch);
        antenna_message_step(st, nets, edge_ch);
        decide_features(st, nets, inst.power);
        out.features.push_back(st.features.t());

        if (opts.want_objective) {
            Value util;
            if (params.mode == beam::Utility::Sum) {
                Value p = ad::slice_cols(st.features, 0, 1);
                Value q = ad::slice_cols(st.features, 1, 2);
                Value beams = beam::scale_columns_sqrt(beam::mmse_directions(cc, q), p);
                util = beam::utility_value(beam::downlink_rates(cc, beams), beam::Utility::Sum);
            } else {
                const Value& q = st.features;
                Value dirs = beam::mmse_directions(cc, q);
                util = beam::utility_value(beam::uplink_rates(cc, q, dirs), beam::Utility::Min);
            }
            const double w = opts.step_weights.empty()
                                 ? 1.0
                                 : opts.step_weights[static_cast<std::size_t>(t)];
            Value weighted = (w == 1.0) ? util : ad::scale(util, w);
            out.step_utilities.push_back(util);
            out.objective = (t == 0) ? weighted : ad::add(out.objective, weighted);
        }
    }

    if (opts.want_solutions) {
        for (const Tensor& feat : out.features) {
            beam::BeamSolution sol;
            if (params.mode == beam::Utility::Sum) {
                beam::BeamFeature f;
                f.mode = beam::Utility::Sum;
                f.p.resize(static_cast<std::size_t>(inst.K));
                f.q.resize(static_cast<std::size_t>(inst.K));
                for (int u = 0; u < inst.K; ++u) {
                    f.p[static_cast<std::size_t>(u)] = feat(u, 0);
                    f.q[static_cast<std::size_t>(u)] = feat(u, 1);
                }
                sol.V = beam::recover_beams(inst.H, f, inst.noise_var);
            } else {
                std::vector<double> q(static_cast<std::size_t>(inst.K));
                for (int u = 0; u < inst.K; ++u) q[static_cast<std::size_t>(u)] = feat(u, 0);
                sol.V = beam::recover_minrate_beams(inst.H, q, inst.power, inst.noise_var);
            }
            sol.rates = beam::rates(inst.H, sol.V, inst.noise_var);
            sol.utility = beam::utility(sol.rates, params.mode);
            out.solutions.push_back(std::move(sol));
        }
    }
    return out;
}

beam::BeamSolution infer(const channel::BipartiteChannel& inst, const BgnnParams& params,
                         const Tensor& init_messages) {
    ForwardOptions opts;
    opts.want_solutions = true;
    ForwardResult res = bmp_forward(inst, params, init_messages, opts);
    return std::move(res.solutions.back());
}

} // namespace bgnn::model
