#include "bgnn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bgnn::baselines {

using linalg::CMatrix;
using linalg::CVector;
using linalg::cplx;

namespace {

CVector user_channel(const CMatrix& H, int k) {
    CVector h(static_cast<std::size_t>(H.cols()));
    for (int i = 0; i < H.cols(); ++i) h[static_cast<std::size_t>(i)] = std::conj(H(k, i));
    return h;
}

double total_power(const CMatrix& v) {
    double s = 0.0;
    for (const cplx& x : v.values()) s += std::norm(x);
    return s;
}

BaselineResult finish(const CMatrix& H, CMatrix v, double noise_var, beam::Utility mode,
                      int iterations, bool converged) {
    BaselineResult r;
    r.V = std::move(v);
    r.rates = beam::rates(H, r.V, noise_var);
    r.utility = beam::utility(r.rates, mode);
    r.iterations = iterations;
    r.converged = converged;
    return r;
}

} // namespace

// ---- WMMSE -------------------------------------------------------------------

namespace {

/// v_k(mu) = (sum_l w_l |u_l|^2 h_l h_l^H + mu I)^{-1} w_k u_k h_k.
/// Returns false when the regularized matrix is not positive definite.
bool wmmse_beams(const CMatrix& H, const std::vector<cplx>& u, const std::vector<double>& w,
                 double mu, CMatrix& out) {
    const int n = H.cols(), k = H.rows();
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = mu;
    for (int l = 0; l < k; ++l) {
        const double cl = w[static_cast<std::size_t>(l)] * std::norm(u[static_cast<std::size_t>(l)]);
        if (cl == 0.0) continue;
        const CVector h = user_channel(H, l);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                a(r, c) += cl * h[static_cast<std::size_t>(r)] * std::conj(h[static_cast<std::size_t>(c)]);
    }
    CMatrix rhs(n, k);
    for (int l = 0; l < k; ++l) {
        const CVector h = user_channel(H, l);
        const cplx scale = w[static_cast<std::size_t>(l)] * u[static_cast<std::size_t>(l)];
        for (int i = 0; i < n; ++i) rhs(i, l) = scale * h[static_cast<std::size_t>(i)];
    }
    try {
        out = linalg::hpd_solve(a, rhs);
    } catch (const SingularError&) {
        return false;
    }
    return true;
}

} // namespace

BaselineResult wmmse(const CMatrix& H, double power, double noise_var, double tol, int max_iter,
                     std::vector<double>* sum_rate_trace) {
    const int n = H.cols(), k = H.rows();
    if (power <= 0.0 || noise_var <= 0.0) throw ContractError("wmmse: power and noise must be positive");

    // matched filters at equal power
    CMatrix v(n, k);
    for (int l = 0; l < k; ++l) {
        CVector h = user_channel(H, l);
        const double scale = std::sqrt(power / k) / linalg::norm2(h);
        for (int i = 0; i < n; ++i) v(i, l) = scale * h[static_cast<std::size_t>(i)];
    }

    double prev_sum_rate = beam::utility(beam::rates(H, v, noise_var), beam::Utility::Sum);
    if (sum_rate_trace) sum_rate_trace->push_back(prev_sum_rate);
    int it = 1;
    bool converged = false;
    std::vector<cplx> u(static_cast<std::size_t>(k));
    std::vector<double> w(static_cast<std::size_t>(k));

    for (; it <= max_iter; ++it) {
        // MMSE receive scalars and weights
        for (int l = 0; l < k; ++l) {
            const CVector h = user_channel(H, l);
            cplx rx = 0.0;
            double tot = noise_var;
            for (int c = 0; c < k; ++c) {
                const cplx g = linalg::dot_conj(h, v.col(c));
                if (c == l) rx = g;
                tot += std::norm(g);
            }
            u[static_cast<std::size_t>(l)] = rx / tot;
            const double mse = 1.0 - std::norm(rx) / tot;
            w[static_cast<std::size_t>(l)] = 1.0 / std::max(mse, 1e-300);
        }

        // transmit update with power constraint via bisection on mu
        CMatrix cand;
        double lo = 0.0;
        bool lo_valid = wmmse_beams(H, u, w, 0.0, cand);
        if (lo_valid && total_power(cand) <= power) {
            v = cand;
        } else {
            double hi = noise_var;
            while (!(wmmse_beams(H, u, w, hi, cand) && total_power(cand) < power)) hi *= 2.0;
            for (int b = 0; b < 200 && (hi - lo) > 1e-14 * hi; ++b) {
                const double mid = 0.5 * (lo + hi);
                if (wmmse_beams(H, u, w, mid, cand) && total_power(cand) <= power) hi = mid;
                else lo = mid;
            }
            wmmse_beams(H, u, w, hi, v);
        }

        const double sum_rate = beam::utility(beam::rates(H, v, noise_var), beam::Utility::Sum);
        if (sum_rate_trace) sum_rate_trace->push_back(sum_rate);
        if (std::abs(sum_rate - prev_sum_rate) < tol) {
            prev_sum_rate = sum_rate;
            converged = true;
            break;
        }
        prev_sum_rate = sum_rate;
    }

    // use the full budget; scaling all beams up never lowers any SINR
    const double used = total_power(v);
    if (used > 0.0) {
        const double s = std::sqrt(power / used);
        for (cplx& x : v.values()) x *= s;
    }
    return finish(H, std::move(v), noise_var, beam::Utility::Sum, std::min(it, max_iter), converged);
}

// ---- ZF + water-filling --------------------------------------------------------

BaselineResult zf_waterfill(const CMatrix& H, double power, double noise_var) {
    const int n = H.cols(), k = H.rows();
    if (n < k) throw InfeasibleError("zero forcing requires N >= K");

    // W = H^H (H H^H)^{-1}; columns then normalized
    CMatrix gram(k, k);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
            cplx s = 0.0;
            for (int i = 0; i < n; ++i) s += H(r, i) * std::conj(H(c, i));
            gram(r, c) = s;
        }
    CMatrix inv_rhs(k, k);
    for (int i = 0; i < k; ++i) inv_rhs(i, i) = 1.0;
    CMatrix gram_inv;
    try {
        gram_inv = linalg::hpd_solve(gram, inv_rhs);
    } catch (const SingularError&) {
        throw InfeasibleError("zero forcing requires a full row-rank channel");
    }
    CMatrix w(n, k);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < k; ++c) {
            cplx s = 0.0;
            for (int r = 0; r < k; ++r) s += std::conj(H(r, i)) * gram_inv(r, c);
            w(i, c) = s;
        }

    // effective parallel-channel gains after normalization: g_c = 1/||w_c||^2
    std::vector<double> inv_gain(static_cast<std::size_t>(k));  // noise / g_c
    std::vector<double> norms(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::norm(w(i, c));
        norms[static_cast<std::size_t>(c)] = std::sqrt(s);
        inv_gain[static_cast<std::size_t>(c)] = noise_var * s;
    }

    // exact water-filling: sort by rising noise-to-gain, find the water level
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return inv_gain[static_cast<std::size_t>(a)] < inv_gain[static_cast<std::size_t>(b)];
    });
    std::vector<double> p(static_cast<std::size_t>(k), 0.0);
    double acc = 0.0;
    double level = 0.0;
    int active = 0;
    for (int m = 1; m <= k; ++m) {
        acc += inv_gain[static_cast<std::size_t>(order[static_cast<std::size_t>(m - 1)])];
        const double candidate = (power + acc) / m;
        const bool last = m == k;
        if (last || candidate <= inv_gain[static_cast<std::size_t>(order[static_cast<std::size_t>(m)])]) {
            level = candidate;
            active = m;
            break;
        }
    }
    for (int m = 0; m < active; ++m) {
        const int c = order[static_cast<std::size_t>(m)];
        p[static_cast<std::size_t>(c)] = std::max(0.0, level - inv_gain[static_cast<std::size_t>(c)]);
    }

    CMatrix v(n, k);
    for (int c = 0; c < k; ++c) {
        const double s = std::sqrt(p[static_cast<std::size_t>(c)]) / norms[static_cast<std::size_t>(c)];
        for (int i = 0; i < n; ++i) v(i, c) = s * w(i, c);
    }
    return finish(H, std::move(v), noise_var, beam::Utility::Sum, 1, true);
}

// ---- MRT + projected gradient ---------------------------------------------------

namespace {

/// Euclidean projection onto {p >= 0, sum p = budget}.
std::vector<double> project_simplex(std::vector<double> p, double budget) {
    const int k = static_cast<int>(p.size());
    std::vector<double> sorted = p;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double acc = 0.0, theta = 0.0;
    int m = 0;
    for (int i = 0; i < k; ++i) {
        acc += sorted[static_cast<std::size_t>(i)];
        const double t = (acc - budget) / (i + 1);
        if (sorted[static_cast<std::size_t>(i)] - t > 0.0) {
            theta = t;
            m = i + 1;
        }
    }
    (void)m;
    for (double& x : p) x = std::max(0.0, x - theta);
    return p;
}

double power_utility(const std::vector<double>& gains, const std::vector<double>& p,
                     double noise_var, beam::Utility mode) {
    const int k = static_cast<int>(p.size());
    double total = 0.0, worst = std::numeric_limits<double>::infinity();
    for (int r = 0; r < k; ++r) {
        double interf = noise_var;
        for (int c = 0; c < k; ++c)
            if (c != r) interf += p[static_cast<std::size_t>(c)] * gains[static_cast<std::size_t>(r) * k + c];
        const double rate =
            std::log1p(p[static_cast<std::size_t>(r)] * gains[static_cast<std::size_t>(r) * k + r] / interf) /
            std::log(2.0);
        total += rate;
        worst = std::min(worst, rate);
    }
    return mode == beam::Utility::Sum ? total : worst;
}

std::vector<double> power_gradient(const std::vector<double>& gains, const std::vector<double>& p,
                                   double noise_var, beam::Utility mode) {
    const int k = static_cast<int>(p.size());
    std::vector<double> interf(static_cast<std::size_t>(k), noise_var);
    std::vector<double> rate(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) {
        for (int c = 0; c < k; ++c)
            if (c != r)
                interf[static_cast<std::size_t>(r)] +=
                    p[static_cast<std::size_t>(c)] * gains[static_cast<std::size_t>(r) * k + c];
        rate[static_cast<std::size_t>(r)] =
            p[static_cast<std::size_t>(r)] * gains[static_cast<std::size_t>(r) * k + r];
    }
    std::vector<double> g(static_cast<std::size_t>(k), 0.0);
    const double inv_ln2 = 1.0 / std::log(2.0);
    auto add_user_grad = [&](int r) {
        const double s = rate[static_cast<std::size_t>(r)];
        const double i = interf[static_cast<std::size_t>(r)];
        g[static_cast<std::size_t>(r)] += inv_ln2 * gains[static_cast<std::size_t>(r) * k + r] / (i + s);
        for (int c = 0; c < k; ++c)
            if (c != r)
                g[static_cast<std::size_t>(c)] -=
                    inv_ln2 * s * gains[static_cast<std::size_t>(r) * k + c] / (i * (i + s));
    };
    if (mode == beam::Utility::Sum) {
        for (int r = 0; r < k; ++r) add_user_grad(r);
    } else {
        int worst = 0;
        double worst_rate = std::numeric_limits<double>::infinity();
        for (int r = 0; r < k; ++r) {
            const double rr = std::log1p(rate[static_cast<std::size_t>(r)] / interf[static_cast<std::size_t>(r)]);
            if (rr < worst_rate) {
                worst_rate = rr;
                worst = r;
            }
        }
        add_user_grad(worst);
    }
    return g;
}

} // namespace

BaselineResult mrt_power(const CMatrix& H, double power, double noise_var, beam::Utility mode,
                         std::uint64_t seed) {
    const int n = H.cols(), k = H.rows();

    CMatrix dirs(n, k);
    for (int c = 0; c < k; ++c) {
        CVector h = user_channel(H, c);
        const double inv = 1.0 / linalg::norm2(h);
        for (int i = 0; i < n; ++i) dirs(i, c) = inv * h[static_cast<std::size_t>(i)];
    }
    std::vector<double> gains(static_cast<std::size_t>(k) * k);
    for (int r = 0; r < k; ++r) {
        const CVector h = user_channel(H, r);
        for (int c = 0; c < k; ++c)
            gains[static_cast<std::size_t>(r) * k + c] = std::norm(linalg::dot_conj(dirs.col(c), h));
    }

    constexpr int kRestarts = 5;
    constexpr int kSteps = 200;
    Rng rng(seed);
    std::vector<double> best_p(static_cast<std::size_t>(k), power / k);
    double best_u = power_utility(gains, best_p, noise_var, mode);

    for (int restart = 0; restart < kRestarts; ++restart) {
        std::vector<double> p(static_cast<std::size_t>(k));
        if (restart == 0) {
            std::fill(p.begin(), p.end(), power / k);
        } else {
            double s = 0.0;
            for (double& x : p) {
                x = -std::log(std::max(rng.uniform(), 1e-15));
                s += x;
            }
            for (double& x : p) x *= power / s;
        }
        double u = power_utility(gains, p, noise_var, mode);
        double step = 0.25 * power;
        for (int t = 0; t < kSteps; ++t) {
            const std::vector<double> g = power_gradient(gains, p, noise_var, mode);
            std::vector<double> cand(static_cast<std::size_t>(k));
            for (int i = 0; i < k; ++i)
                cand[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i)] + step * g[static_cast<std::size_t>(i)];
            cand = project_simplex(std::move(cand), power);
            const double cu = power_utility(gains, cand, noise_var, mode);
            if (cu > u) {
                p = std::move(cand);
                u = cu;
                step *= 1.2;
            } else {
                step *= 0.5;
                if (step < 1e-12 * power) break;
            }
        }
        if (u > best_u) {
            best_u = u;
            best_p = p;
        }
    }

    CMatrix v = dirs;
    for (int c = 0; c < k; ++c) {
        const double s = std::sqrt(best_p[static_cast<std::size_t>(c)]);
        for (int i = 0; i < n; ++i) v(i, c) *= s;
    }
    return finish(H, std::move(v), noise_var, mode, kRestarts * kSteps, true);
}

// ---- optimal minimum rate --------------------------------------------------------

namespace {

/// Uplink coupling matrix for SINR balancing at fixed directions: the
/// dominant eigenvector carries the balanced uplink powers and 1/lambda is
/// the common SINR level.
std::vector<double> uplink_coupling(const CMatrix& H, const CMatrix& dirs, double power,
                                    double noise_var) {
    const int k = H.rows();
    const int m = k + 1;
    std::vector<double> mat(static_cast<std::size_t>(m) * m, 0.0);
    std::vector<double> own(static_cast<std::size_t>(k));
    std::vector<double> cross(static_cast<std::size_t>(k) * k, 0.0);
    for (int r = 0; r < k; ++r) {
        const CVector vr = dirs.col(r);
        for (int c = 0; c < k; ++c) {
            const double gain = std::norm(linalg::dot_conj(vr, user_channel(H, c)));
            if (r == c) own[static_cast<std::size_t>(r)] = gain;
            else cross[static_cast<std::size_t>(r) * k + c] = gain;
        }
    }
    double inv_gain_sum = 0.0;
    for (int r = 0; r < k; ++r) {
        const double d = 1.0 / own[static_cast<std::size_t>(r)];
        for (int c = 0; c < k; ++c)
            mat[static_cast<std::size_t>(r) * m + c] = d * cross[static_cast<std::size_t>(r) * k + c];
        mat[static_cast<std::size_t>(r) * m + k] = noise_var * d;
        inv_gain_sum += d;
    }
    for (int c = 0; c < k; ++c) {
        double s = 0.0;
        for (int r = 0; r < k; ++r)
            s += cross[static_cast<std::size_t>(r) * k + c] / own[static_cast<std::size_t>(r)];
        mat[static_cast<std::size_t>(k) * m + c] = s / power;
    }
    mat[static_cast<std::size_t>(k) * m + k] = noise_var * inv_gain_sum / power;
    return mat;
}

} // namespace

BaselineResult optimal_minrate(const CMatrix& H, double power, double noise_var, double tol,
                               int max_iter) {
    const int k = H.rows();
    std::vector<double> q(static_cast<std::size_t>(k), power / k);
    double level = 0.0;
    bool converged = false;
    int it = 1;
    for (; it <= max_iter; ++it) {
        const CMatrix dirs = beam::beam_directions_ul(H, q, noise_var);
        const std::vector<double> coupling = uplink_coupling(H, dirs, power, noise_var);
        const linalg::EigResult eig = linalg::power_iteration_max_eig(coupling, k + 1);
        for (int i = 0; i < k; ++i) q[static_cast<std::size_t>(i)] = eig.vector[static_cast<std::size_t>(i)];
        const double new_level = 1.0 / eig.value;
        if (it > 1 && std::abs(new_level - level) <= tol * std::max(1.0, new_level)) {
            level = new_level;
            converged = true;
            break;
        }
        level = new_level;
    }
    CMatrix v = beam::recover_minrate_beams(H, q, power, noise_var);
    return finish(H, std::move(v), noise_var, beam::Utility::Min, std::min(it, max_iter), converged);
}

// ---- naive fully-connected baseline ------------------------------------------------

NaiveDnn make_naive_dnn(int n, int k, beam::Utility mode, std::size_t target_params, Rng& rng) {
    if (n < 1 || k < 1) throw ContractError("naive dnn: sizes must be >= 1");
    NaiveDnn dnn;
    dnn.N = n;
    dnn.K = k;
    dnn.mode = mode;
    const int in = 2 * n * k;
    const int out = dnn.feature_dim() * k;
    // two hidden layers of width w: params = w^2 + w(in + out + 2) + out
    const double b = static_cast<double>(in + out + 2);
    const double c = static_cast<double>(out) - static_cast<double>(target_params);
    const double w = (-b + std::sqrt(b * b - 4.0 * c)) / 2.0;
    const int width = std::max(4, static_cast<int>(std::lround(w)));
    dnn.net = ad::make_dense({in, width, width, out},
                             {ad::Act::Relu, ad::Act::Relu, ad::Act::Sigmoid}, rng);
    return dnn;
}

namespace {

ad::Value naive_forward(const NaiveDnn& dnn, const ad::BoundNet& net,
                        const channel::BipartiteChannel& inst) {
    if (inst.N != dnn.N || inst.K != dnn.K)
        throw ShapeError("naive dnn: instance size differs from the training size");
    ad::Tensor in(1, 2 * dnn.N * dnn.K);
    int idx = 0;
    for (int u = 0; u < inst.K; ++u)
        for (int i = 0; i < inst.N; ++i) {
            in(0, idx++) = inst.H(u, i).real();
            in(0, idx++) = inst.H(u, i).imag();
        }
    ad::Value raw = ad::forward_dense(net, ad::constant(std::move(in))); // 1 x (feat*K)
    // reshape to K x feat via transpose of feat x K slices: outputs are
    // laid out feature-major (all p then all q)
    const int k = dnn.K;
    std::vector<ad::Value> cols;
    for (int f = 0; f < dnn.feature_dim(); ++f)
        cols.push_back(ad::transpose(ad::slice_cols(raw, f * k, (f + 1) * k)));
    ad::Value feats = cols.size() == 1 ? cols[0] : ad::concat_cols(cols); // K x feat
    ad::Value sums = ad::col_sum(feats);
    return ad::scale(ad::div_rowvec(feats, sums), inst.power);
}

} // namespace

beam::BeamFeature naive_features(const NaiveDnn& dnn, const channel::BipartiteChannel& inst) {
    ad::BoundNet net = ad::bind(dnn.net, nullptr);
    const ad::Tensor feats = naive_forward(dnn, net, inst).t();
    beam::BeamFeature f;
    f.mode = dnn.mode;
    f.q.resize(static_cast<std::size_t>(dnn.K));
    if (dnn.mode == beam::Utility::Sum) {
        f.p.resize(static_cast<std::size_t>(dnn.K));
        for (int u = 0; u < dnn.K; ++u) {
            f.p[static_cast<std::size_t>(u)] = feats(u, 0);
            f.q[static_cast<std::size_t>(u)] = feats(u, 1);
        }
    } else {
        for (int u = 0; u < dnn.K; ++u) f.q[static_cast<std::size_t>(u)] = feats(u, 0);
    }
    return f;
}

BaselineResult naive_eval(const NaiveDnn& dnn, const channel::BipartiteChannel& inst) {
    const beam::BeamFeature f = naive_features(dnn, inst);
    CMatrix v;
    if (dnn.mode == beam::Utility::Sum) {
        v = beam::recover_beams(inst.H, f, inst.noise_var);
    } else {
        v = beam::recover_minrate_beams(inst.H, f.q, inst.power, inst.noise_var);
    }
    return finish(inst.H, std::move(v), inst.noise_var, dnn.mode, 1, true);
}

void naive_train(NaiveDnn& dnn, const NaiveTrainConfig& cfg) {
    std::vector<double> flat(dnn.net.param_count());
    ad::copy_params_to(dnn.net, flat.data());
    ad::AdamState adam(flat.size(), cfg.learning_rate);
    std::vector<double> grad(flat.size());

    std::uint64_t sample_id = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int b = 0; b < cfg.batches_per_epoch; ++b) {
            std::fill(grad.begin(), grad.end(), 0.0);
            for (int s = 0; s < cfg.batch_size; ++s, ++sample_id) {
                Rng rng = Rng::stream(cfg.seed, sample_id);
                const channel::BipartiteChannel inst =
                    channel::sample_fixed(cfg.scenario, dnn.N, dnn.K, rng);

                ad::Tape tape;
                ad::BoundNet net = ad::bind(dnn.net, &tape);
                ad::Value feats = naive_forward(dnn, net, inst);
                const beam::ChannelConstants cc =
                    beam::make_channel_constants(inst.H, inst.noise_var);
                ad::Value util;
                if (dnn.mode == beam::Utility::Sum) {
                    ad::Value p = ad::slice_cols(feats, 0, 1);
                    ad::Value q = ad::slice_cols(feats, 1, 2);
                    ad::Value beams = beam::scale_columns_sqrt(beam::mmse_directions(cc, q), p);
                    util = beam::utility_value(beam::downlink_rates(cc, beams), beam::Utility::Sum);
                } else {
                    ad::Value dirs = beam::mmse_directions(cc, feats);
                    util = beam::utility_value(beam::uplink_rates(cc, feats, dirs),
                                               beam::Utility::Min);
                }
                tape.backward(util);
                std::vector<double> g(flat.size());
                ad::collect_grads(tape, net, g.data());
                for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
            }
            for (double& g : grad) g /= cfg.batch_size;
            ad::adam_step(flat, grad, adam);
            ad::copy_params_from(dnn.net, flat.data());
        }
    }
}

} // namespace bgnn::baselines
