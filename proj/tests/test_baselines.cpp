#include <doctest.h>

#include <cmath>

#include "bgnn/baselines.hpp"
#include "oracles.hpp"

using namespace bgnn;
using namespace bgnn::baselines;
using linalg::CMatrix;
using linalg::CVector;
using linalg::cplx;

namespace {

channel::BipartiteChannel random_instance(int n, int k, double power, std::uint64_t seed) {
    channel::ScenarioConfig cfg;
    cfg.power = power;
    Rng rng(seed);
    return channel::sample_fixed(cfg, n, k, rng);
}

double power_of(const CMatrix& v) {
    double s = 0.0;
    for (const cplx& x : v.values()) s += std::norm(x);
    return s;
}

} // namespace

TEST_CASE("wmmse: single user reaches the matched-filter capacity at full power") {
    const auto inst = random_instance(3, 1, 10.0, 1);
    const BaselineResult r = wmmse(inst.H, inst.power, inst.noise_var);
    const CVector h = inst.user_channel(0);
    const double hn = linalg::norm2(h);
    CHECK(r.utility == doctest::Approx(std::log2(1.0 + 10.0 * hn * hn)).epsilon(1e-6));
    CHECK(power_of(r.V) == doctest::Approx(inst.power).epsilon(1e-6));
    CHECK(r.converged);
}

TEST_CASE("wmmse: sum rate is nondecreasing across iterations on random instances") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto inst = random_instance(4, 3, 10.0, seed);
        std::vector<double> trace;
        wmmse(inst.H, inst.power, inst.noise_var, 1e-6, 100, &trace);
        for (std::size_t i = 1; i < trace.size(); ++i)
            CHECK(trace[i] >= trace[i - 1] - 1e-10);
    }
}

TEST_CASE("wmmse: within 3% of the brute-force simplex grid optimum at N = K = 2") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto inst = random_instance(2, 2, 10.0, seed * 13);
        const BaselineResult r = wmmse(inst.H, inst.power, inst.noise_var);
        const double grid = testutil::grid_best_sum_rate_2x2(inst.H, inst.power, inst.noise_var, 50);
        CHECK(std::abs(r.utility - grid) <= 0.03 * grid);
    }
}

TEST_CASE("wmmse: respects the power budget and reports convergence") {
    for (std::uint64_t seed = 200; seed < 210; ++seed) {
        const auto inst = random_instance(4, 4, 31.622776601683793, seed); // 15 dB
        const BaselineResult r = wmmse(inst.H, inst.power, inst.noise_var);
        CHECK(power_of(r.V) == doctest::Approx(inst.power).epsilon(1e-6));
    }
}

TEST_CASE("zf_waterfill: single user reduces to the matched filter") {
    const auto inst = random_instance(3, 1, 5.0, 2);
    const BaselineResult r = zf_waterfill(inst.H, inst.power, inst.noise_var);
    const CVector h = inst.user_channel(0);
    const double scale = std::sqrt(5.0) / linalg::norm2(h);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(r.V(i, 0) - scale * h[static_cast<std::size_t>(i)]) < 1e-9);
}

TEST_CASE("zf_waterfill: orthogonal channel rows give matched-filter directions") {
    CMatrix h(2, 2);
    h(0, 0) = 2.0;
    h(1, 1) = cplx(0.0, 1.5); // orthogonal rows with distinct gains
    const BaselineResult r = zf_waterfill(h, 4.0, 1.0);
    // direction of column k is h_k / ||h_k||
    const double n0 = std::sqrt(std::norm(r.V(0, 0)) + std::norm(r.V(1, 0)));
    const double n1 = std::sqrt(std::norm(r.V(0, 1)) + std::norm(r.V(1, 1)));
    CHECK(std::abs(r.V(0, 0) / n0 - cplx(1.0)) < 1e-12);
    CHECK(std::abs(r.V(1, 1) / n1 - cplx(0.0, -1.0)) < 1e-12);
}

TEST_CASE("zf_waterfill: equal gains get equal powers") {
    CMatrix h(2, 4);
    h(0, 0) = 1.0;
    h(0, 1) = 1.0;
    h(1, 2) = 1.0;
    h(1, 3) = 1.0;
    const BaselineResult r = zf_waterfill(h, 6.0, 1.0);
    double p0 = 0.0, p1 = 0.0;
    for (int i = 0; i < 4; ++i) {
        p0 += std::norm(r.V(i, 0));
        p1 += std::norm(r.V(i, 1));
    }
    CHECK(p0 == doctest::Approx(p1).epsilon(1e-12));
    CHECK(p0 + p1 == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("zf_waterfill: residual interference is negligible") {
    for (std::uint64_t seed = 3; seed < 13; ++seed) {
        const auto inst = random_instance(5, 3, 8.0, seed);
        const BaselineResult r = zf_waterfill(inst.H, inst.power, inst.noise_var);
        for (int k = 0; k < 3; ++k) {
            const CVector h = inst.user_channel(k);
            for (int l = 0; l < 3; ++l) {
                if (l == k) continue;
                const cplx leak = linalg::dot_conj(h, r.V.col(l));
                double vnorm = 0.0;
                for (int i = 0; i < 5; ++i) vnorm += std::norm(r.V(i, l));
                CHECK(std::abs(leak) <= 1e-9 * linalg::norm2(h) * std::sqrt(vnorm) + 1e-12);
            }
        }
    }
}

TEST_CASE("zf_waterfill: infeasible when N < K") {
    const auto inst = random_instance(2, 3, 4.0, 14);
    CHECK_THROWS_AS(zf_waterfill(inst.H, inst.power, inst.noise_var), InfeasibleError);
}

TEST_CASE("mrt_power: single user gets full power") {
    const auto inst = random_instance(3, 1, 6.0, 15);
    const BaselineResult r = mrt_power(inst.H, inst.power, inst.noise_var, beam::Utility::Sum);
    CHECK(power_of(r.V) == doctest::Approx(6.0).epsilon(1e-9));
    const CVector h = inst.user_channel(0);
    const double scale = std::sqrt(6.0) / linalg::norm2(h);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(r.V(i, 0) - scale * h[static_cast<std::size_t>(i)]) < 1e-9);
}

TEST_CASE("mrt_power: symmetric users split power equally under the min-rate utility") {
    Rng rng(16);
    CMatrix h(2, 3);
    for (int i = 0; i < 3; ++i) h(0, i) = {rng.normal(), rng.normal()};
    const cplx rot = std::polar(1.0, 0.77);
    for (int i = 0; i < 3; ++i) h(1, i) = rot * h(0, i);
    const BaselineResult r = mrt_power(h, 4.0, 1.0, beam::Utility::Min);
    double p0 = 0.0, p1 = 0.0;
    for (int i = 0; i < 3; ++i) {
        p0 += std::norm(r.V(i, 0));
        p1 += std::norm(r.V(i, 1));
    }
    CHECK(p0 == doctest::Approx(p1).epsilon(1e-3));
}

TEST_CASE("mrt_power: matches a fine simplex grid within 1% for K = 2") {
    for (beam::Utility mode : {beam::Utility::Sum, beam::Utility::Min}) {
        for (std::uint64_t seed = 20; seed < 30; ++seed) {
            const auto inst = random_instance(3, 2, 10.0, seed);
            const BaselineResult r = mrt_power(inst.H, inst.power, inst.noise_var, mode);

            // grid over the power split with fixed matched-filter directions
            CMatrix dirs(3, 2);
            for (int u = 0; u < 2; ++u) {
                const CVector h = inst.user_channel(u);
                const double inv = 1.0 / linalg::norm2(h);
                for (int i = 0; i < 3; ++i) dirs(i, u) = inv * h[static_cast<std::size_t>(i)];
            }
            double best = -1e300;
            for (int g = 0; g <= 50; ++g) {
                const double p1 = inst.power * g / 50.0;
                CMatrix v = dirs;
                for (int i = 0; i < 3; ++i) {
                    v(i, 0) *= std::sqrt(p1);
                    v(i, 1) *= std::sqrt(inst.power - p1);
                }
                const double u = mode == beam::Utility::Sum
                                     ? testutil::sum_rate_oracle(inst.H, v, inst.noise_var)
                                     : testutil::min_rate_oracle(inst.H, v, inst.noise_var);
                best = std::max(best, u);
            }
            if (best > 1e-9) CHECK(r.utility >= best * 0.99);
        }
    }
}

TEST_CASE("optimal_minrate: single user takes the full-power matched filter") {
    const auto inst = random_instance(3, 1, 9.0, 31);
    const BaselineResult r = optimal_minrate(inst.H, inst.power, inst.noise_var);
    const CVector h = inst.user_channel(0);
    const double hn = linalg::norm2(h);
    CHECK(r.utility == doctest::Approx(std::log2(1.0 + 9.0 * hn * hn)).epsilon(1e-6));
    CHECK(r.converged);
}

TEST_CASE("optimal_minrate: symmetric users get equal rates and powers") {
    Rng rng(32);
    CMatrix h(2, 3);
    for (int i = 0; i < 3; ++i) h(0, i) = {rng.normal(), rng.normal()};
    const cplx rot = std::polar(1.0, 2.1);
    for (int i = 0; i < 3; ++i) h(1, i) = rot * h(0, i);
    const BaselineResult r = optimal_minrate(h, 4.0, 1.0);
    CHECK(r.rates[0] == doctest::Approx(r.rates[1]).epsilon(1e-6));
    double p0 = 0.0, p1 = 0.0;
    for (int i = 0; i < 3; ++i) {
        p0 += std::norm(r.V(i, 0));
        p1 += std::norm(r.V(i, 1));
    }
    CHECK(p0 == doctest::Approx(p1).epsilon(1e-6));
}

TEST_CASE("optimal_minrate: dominates a dense feasible grid over uplink powers") {
    for (std::uint64_t seed = 40; seed < 60; ++seed) {
        const auto inst = random_instance(2, 2, 10.0, seed);
        const BaselineResult r = optimal_minrate(inst.H, inst.power, inst.noise_var);
        for (int g = 1; g < 50; ++g) {
            const double q1 = inst.power * g / 50.0;
            const std::vector<double> q{q1, inst.power - q1};
            const CMatrix v = beam::recover_minrate_beams(inst.H, q, inst.power, inst.noise_var);
            const double feasible = testutil::min_rate_oracle(inst.H, v, inst.noise_var);
            CHECK(r.utility >= feasible - 1e-6);
        }
    }
}

TEST_CASE("optimal_minrate: all downlink SINRs are balanced") {
    for (std::uint64_t seed = 70; seed < 80; ++seed) {
        const auto inst = random_instance(4, 3, 12.0, seed);
        const BaselineResult r = optimal_minrate(inst.H, inst.power, inst.noise_var, 1e-8);
        for (std::size_t u = 1; u < r.rates.size(); ++u)
            CHECK(r.rates[u] == doctest::Approx(r.rates[0]).epsilon(1e-5));
        CHECK(power_of(r.V) == doctest::Approx(inst.power).epsilon(1e-6));
    }
}

TEST_CASE("naive dnn: parameter count roughly matches the target and shapes are enforced") {
    Rng rng(90);
    const std::size_t target = 50000;
    NaiveDnn dnn = make_naive_dnn(4, 4, beam::Utility::Sum, target, rng);
    const double ratio = static_cast<double>(dnn.net.param_count()) / static_cast<double>(target);
    CHECK(ratio > 0.9);
    CHECK(ratio < 1.1);

    const auto ok = random_instance(4, 4, 10.0, 91);
    const BaselineResult r = naive_eval(dnn, ok);
    CHECK(r.rates.size() == 4);
    CHECK(power_of(r.V) == doctest::Approx(10.0).epsilon(1e-6));

    const auto wrong = random_instance(6, 6, 10.0, 92);
    CHECK_THROWS_AS(naive_eval(dnn, wrong), ShapeError);
}

TEST_CASE("naive dnn: a short training run improves the utility at its fixed size") {
    Rng rng(93);
    NaiveDnn dnn = make_naive_dnn(2, 2, beam::Utility::Sum, 3000, rng);
    channel::ScenarioConfig sc;
    sc.power = 10.0;

    auto mean_utility = [&](const NaiveDnn& d) {
        double s = 0.0;
        for (std::uint64_t i = 0; i < 50; ++i) {
            Rng r2 = Rng::stream(555, i);
            s += naive_eval(d, channel::sample_fixed(sc, 2, 2, r2)).utility;
        }
        return s / 50.0;
    };

    const double before = mean_utility(dnn);
    NaiveTrainConfig cfg;
    cfg.epochs = 4;
    cfg.batches_per_epoch = 10;
    cfg.batch_size = 32;
    cfg.scenario = sc;
    naive_train(dnn, cfg);
    const double after = mean_utility(dnn);
    CHECK(after > before);
}
