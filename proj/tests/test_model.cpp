#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "bgnn/checkpoint.hpp"
#include "bgnn/model.hpp"
#include "protocols.hpp"
#include "test_util.hpp"

using namespace bgnn;
using namespace bgnn::model;

namespace {

channel::BipartiteChannel make_instance(int n, int k, double power, std::uint64_t seed) {
    channel::ScenarioConfig cfg;
    cfg.power = power;
    Rng rng(seed);
    return channel::sample_fixed(cfg, n, k, rng);
}

BgnnParams zero_params(beam::Utility mode, int msg_dim, int iterations) {
    Rng rng(1);
    BgnnParams p = init_params(mode, msg_dim, iterations, 8, rng);
    std::vector<double> flat(p.param_count(), 0.0);
    unflatten(p, flat.data());
    return p;
}

} // namespace

TEST_CASE("init_state: (2,2) has four edge vectors of length M = 5 and consistent aggregates") {
    Rng rng(2);
    BgnnParams params = init_params(beam::Utility::Sum, 5, 3, 16, rng);
    Rng msg_rng(3);
    const ad::Tensor b0 = sample_init_messages(2, 2, 5, msg_rng);
    REQUIRE(b0.rows() == 4);
    REQUIRE(b0.cols() == 5);

    MessageState st = init_state(2, 2, params, 10.0, b0);
    // b_k equals the sum of its two edge messages, accumulated in edge order
    for (int k = 0; k < 2; ++k)
        for (int m = 0; m < 5; ++m) {
            const double expect = b0(k * 2 + 0, m) + b0(k * 2 + 1, m);
            CHECK(st.user_agg.t()(k, m) == expect);
        }
    // uniform feature split
    for (int k = 0; k < 2; ++k)
        for (int c = 0; c < 2; ++c) CHECK(st.features.t()(k, c) == 5.0);

    // seeded repetition reproduces the state bit-exactly
    Rng msg_rng2(3);
    const ad::Tensor b0_again = sample_init_messages(2, 2, 5, msg_rng2);
    for (std::size_t i = 0; i < b0.size(); ++i) CHECK(b0[i] == b0_again[i]);
}

TEST_CASE("pooling: segment sums equal canonical-order manual sums exactly") {
    Rng rng(4);
    const int n = 3, k = 4;
    BgnnParams params = init_params(beam::Utility::Sum, 5, 2, 8, rng);
    const ad::Tensor b0 = sample_init_messages(n, k, 5, rng);
    MessageState st = init_state(n, k, params, 8.0, b0);

    for (int u = 0; u < k; ++u)
        for (int m = 0; m < 5; ++m) {
            double manual = 0.0;
            for (int i = 0; i < n; ++i) manual += b0(u * n + i, m);
            CHECK(st.user_agg.t()(u, m) == manual);
        }

    // summing the same multiset in reversed order stays within rounding
    for (int u = 0; u < k; ++u)
        for (int m = 0; m < 5; ++m) {
            double reversed = 0.0;
            for (int i = n - 1; i >= 0; --i) reversed += b0(u * n + i, m);
            CHECK(st.user_agg.t()(u, m) == doctest::Approx(reversed).epsilon(1e-12));
        }
}

TEST_CASE("user_message_step: zero-weight net yields zero messages and aggregates") {
    BgnnParams params = zero_params(beam::Utility::Sum, 5, 2);
    Rng rng(5);
    const auto inst = make_instance(3, 2, 10.0, 6);
    const ad::Tensor b0 = sample_init_messages(3, 2, 5, rng);
    MessageState st = init_state(3, 2, params, inst.power, b0);
    BoundParams nets = bind(params, nullptr);
    user_message_step(st, nets, edge_channel_features(inst));
    for (std::size_t i = 0; i < st.edge_user_msg.t().size(); ++i)
        CHECK(st.edge_user_msg.t()[i] == 0.0);
    for (std::size_t i = 0; i < st.antenna_agg.t().size(); ++i)
        CHECK(st.antenna_agg.t()[i] == 0.0);
}

TEST_CASE("user_message_step: with one user the antenna aggregate is the single message") {
    Rng rng(7);
    BgnnParams params = init_params(beam::Utility::Sum, 5, 2, 16, rng);
    const auto inst = make_instance(4, 1, 4.0, 8);
    const ad::Tensor b0 = sample_init_messages(4, 1, 5, rng);
    MessageState st = init_state(4, 1, params, inst.power, b0);
    BoundParams nets = bind(params, nullptr);
    user_message_step(st, nets, edge_channel_features(inst));
    for (int i = 0; i < 4; ++i)
        for (int m = 0; m < 5; ++m)
            CHECK(st.antenna_agg.t()(i, m) == st.edge_user_msg.t()(i, m));
    // tanh output layer keeps messages inside (-1, 1)
    for (std::size_t i = 0; i < st.edge_user_msg.t().size(); ++i) {
        CHECK(st.edge_user_msg.t()[i] > -1.0);
        CHECK(st.edge_user_msg.t()[i] < 1.0);
    }
}

TEST_CASE("antenna_message_step: single user has a zero leakage half") {
    Rng rng(9);
    BgnnParams params = init_params(beam::Utility::Sum, 5, 2, 16, rng);
    const auto inst = make_instance(3, 1, 4.0, 10);
    const ad::Tensor b0 = sample_init_messages(3, 1, 5, rng);
    MessageState st = init_state(3, 1, params, inst.power, b0);
    BoundParams nets = bind(params, nullptr);
    const ad::Value ch = edge_channel_features(inst);
    user_message_step(st, nets, ch);
    antenna_message_step(st, nets, ch);
    for (int e = 0; e < 3; ++e)
        for (int m = 5; m < 10; ++m) CHECK(st.edge_composite.t()(e, m) == 0.0);
}

TEST_CASE("antenna_message_step: permuting antennas leaves the user aggregate unchanged") {
    Rng rng(11);
    BgnnParams params = init_params(beam::Utility::Sum, 5, 2, 16, rng);
    const auto inst = make_instance(4, 3, 9.0, 12);
    const ad::Tensor b0 = sample_init_messages(4, 3, 5, rng);

    auto run = [&](const std::vector<int>& antenna_perm) {
        channel::BipartiteChannel pinst = inst;
        ad::Tensor pb0 = b0;
        for (int u = 0; u < inst.K; ++u)
            for (int i = 0; i < inst.N; ++i) {
                pinst.H(u, i) = inst.H(u, antenna_perm[static_cast<std::size_t>(i)]);
                for (int m = 0; m < 5; ++m)
                    pb0(u * inst.N + i, m) =
                        b0(u * inst.N + antenna_perm[static_cast<std::size_t>(i)], m);
            }
        MessageState st = init_state(inst.N, inst.K, params, inst.power, pb0);
        BoundParams nets = bind(params, nullptr);
        const ad::Value ch = edge_channel_features(pinst);
        user_message_step(st, nets, ch);
        antenna_message_step(st, nets, ch);
        return st.user_comp_agg.t();
    };

    const ad::Tensor base = run({0, 1, 2, 3});
    const ad::Tensor perm = run({2, 0, 3, 1});
    for (int u = 0; u < 3; ++u)
        for (int m = 0; m < 10; ++m)
            CHECK(perm(u, m) == doctest::Approx(base(u, m)).epsilon(1e-12));
}

TEST_CASE("decide_features: identical inputs split the budget equally; sums hit the budget") {
    Rng rng(13);
    BgnnParams params = init_params(beam::Utility::Sum, 5, 2, 16, rng);
    BoundParams nets = bind(params, nullptr);

    MessageState st;
    st.K = 3;
    ad::Tensor same_rows(3, 10);
    for (int u = 0; u < 3; ++u)
        for (int m = 0; m < 10; ++m) same_rows(u, m) = 0.1 * (m + 1);
    st.user_comp_agg = ad::constant(same_rows);
    decide_features(st, nets, 9.0);
    for (int u = 0; u < 3; ++u) {
        CHECK(st.features.t()(u, 0) == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(st.features.t()(u, 1) == doctest::Approx(3.0).epsilon(1e-12));
    }

    // random inputs: both columns sum to the budget
    MessageState st2;
    st2.K = 4;
    st2.user_comp_agg = ad::constant(testutil::random_tensor(4, 10, rng));
    decide_features(st2, nets, 7.0);
    double sp = 0.0, sq = 0.0;
    for (int u = 0; u < 4; ++u) {
        sp += st2.features.t()(u, 0);
        sq += st2.features.t()(u, 1);
    }
    CHECK(sp == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(sq == doctest::Approx(7.0).epsilon(1e-12));

    // single user takes the full budget
    MessageState st3;
    st3.K = 1;
    st3.user_comp_agg = ad::constant(testutil::random_tensor(1, 10, rng));
    decide_features(st3, nets, 5.0);
    CHECK(st3.features.t()(0, 0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(st3.features.t()(0, 1) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("bmp_forward: one iteration still yields a valid solution") {
    Rng rng(14);
    BgnnParams params = init_params(beam::Utility::Sum, 5, 1, 16, rng);
    const auto inst = make_instance(3, 2, 10.0, 15);
    const ad::Tensor b0 = sample_init_messages(3, 2, 5, rng);
    const beam::BeamSolution sol = infer(inst, params, b0);
    CHECK(sol.rates.size() == 2);
    CHECK(sol.utility > 0.0);
    double total = 0.0;
    for (const auto& x : sol.V.values()) total += std::norm(x);
    CHECK(total == doctest::Approx(inst.power).epsilon(1e-9));
}

TEST_CASE("bmp_forward: zero-parameter model emits uniform features at every step") {
    BgnnParams params = zero_params(beam::Utility::Sum, 5, 4);
    const auto inst = make_instance(3, 2, 8.0, 16);
    Rng rng(17);
    const ad::Tensor b0 = sample_init_messages(3, 2, 5, rng);
    ForwardOptions opts;
    const ForwardResult res = bmp_forward(inst, params, b0, opts);
    REQUIRE(res.features.size() == 4);
    for (const ad::Tensor& f : res.features)
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("bmp_forward: min-rate mode emits scalar features and EVD solutions") {
    Rng rng(18);
    BgnnParams params = init_params(beam::Utility::Min, 5, 3, 16, rng);
    const auto inst = make_instance(4, 3, 10.0, 19);
    const ad::Tensor b0 = sample_init_messages(4, 3, 5, rng);
    ForwardOptions opts;
    opts.want_solutions = true;
    opts.want_objective = true;
    const ForwardResult res = bmp_forward(inst, params, b0, opts);
    REQUIRE(res.features.back().cols() == 1);
    double qsum = 0.0;
    for (int u = 0; u < 3; ++u) qsum += res.features.back()(u, 0);
    CHECK(qsum == doctest::Approx(inst.power).epsilon(1e-12));
    CHECK(res.solutions.back().utility > 0.0);
    // dual uplink objective and downlink solution utility agree by duality
    CHECK(res.step_utilities.back().t().scalar_value() ==
          doctest::Approx(res.solutions.back().utility).epsilon(1e-6));
}

TEST_CASE("permutation equivariance with the deterministic permuted-init protocol") {
    Rng rng(20);
    BgnnParams params = init_params(beam::Utility::Sum, 5, 3, 32, rng);
    for (auto [n, k] : {std::pair{2, 3}, std::pair{4, 4}, std::pair{5, 2}}) {
        const auto inst = make_instance(n, k, 10.0, static_cast<std::uint64_t>(n * 100 + k));
        const ad::Tensor b0 = sample_init_messages(n, k, 5, rng);
        const auto pu = testutil::random_permutation(k, rng);
        const auto pa = testutil::random_permutation(n, rng);
        const auto err = testutil::equivariance_error(params, inst, b0, pu, pa);
        CHECK(err.feature < 1e-9);
        CHECK(err.beam < 1e-9);
    }
}

TEST_CASE("size agnosticism: one parameter set serves every size up to 16x16") {
    Rng rng(21);
    BgnnParams params = init_params(beam::Utility::Sum, 5, 2, 16, rng);
    for (auto [n, k] : {std::pair{1, 1}, std::pair{1, 16}, std::pair{16, 1}, std::pair{16, 16},
                        std::pair{3, 7}}) {
        const auto inst = make_instance(n, k, 10.0, static_cast<std::uint64_t>(n * 31 + k));
        Rng mrng(static_cast<std::uint64_t>(n * 17 + k));
        const ad::Tensor b0 = sample_init_messages(n, k, 5, mrng);
        const beam::BeamSolution sol = infer(inst, params, b0);
        CHECK(static_cast<int>(sol.rates.size()) == k);
        CHECK(sol.V.rows() == n);
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    Rng rng(22);
    BgnnParams params = init_params(beam::Utility::Min, 5, 7, 24, rng);
    const std::string path = "test_checkpoint_roundtrip.bin";
    save_checkpoint(path, params);
    const BgnnParams back = load_checkpoint(path);
    std::remove(path.c_str());

    CHECK(back.mode == params.mode);
    CHECK(back.msg_dim == params.msg_dim);
    CHECK(back.iterations == params.iterations);
    const std::vector<double> a = flatten(params);
    const std::vector<double> b = flatten(back);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("end-to-end gradients of the multi-step objective match finite differences") {
    for (beam::Utility mode : {beam::Utility::Sum, beam::Utility::Min}) {
        Rng rng(23);
        BgnnParams params = init_params(mode, 3, 2, 8, rng);
        const auto inst = make_instance(2, 2, 10.0, 24);
        const ad::Tensor b0 = sample_init_messages(2, 2, 3, rng);

        ad::Tape tape;
        ForwardOptions opts;
        opts.tape = &tape;
        opts.want_objective = true;
        BoundParams bound = bind(params, &tape);
        const ForwardResult res = bmp_forward_bound(inst, params, bound, b0, opts);
        tape.backward(res.objective);
        std::vector<double> analytic(params.param_count());
        collect_grads(tape, bound, analytic.data());

        auto eval = [&](const std::vector<double>& flat) {
            BgnnParams p = params;
            unflatten(p, flat.data());
            ForwardOptions o;
            o.want_objective = true;
            return bmp_forward(inst, p, b0, o).objective.t().scalar_value();
        };

        const std::vector<double> flat = flatten(params);
        Rng pick(25);
        int checked = 0;
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t idx =
                static_cast<std::size_t>(pick.uniform_int(0, static_cast<int>(flat.size()) - 1));
            std::vector<double> plus = flat, minus = flat;
            plus[idx] += ad::kFdStep;
            minus[idx] -= ad::kFdStep;
            const double fd = (eval(plus) - eval(minus)) / (2.0 * ad::kFdStep);
            const double g = analytic[idx];
            CHECK(std::abs(g - fd) <= 1e-4 * std::max(std::abs(g), std::abs(fd)) + 1e-6);
            ++checked;
        }
        CHECK(checked == 50);
    }
}
