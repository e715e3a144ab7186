#include "bgnn/beamcore.hpp"

#include <algorithm>
#include <cmath>

namespace bgnn::beam {

using linalg::CMatrix;
using linalg::CVector;
using linalg::cplx;

namespace {

constexpr double kLog2e = 1.4426950408889634073599246810019; // 1/ln(2)

CVector user_channel(const CMatrix& H, int k) {
    CVector h(static_cast<std::size_t>(H.cols()));
    for (int i = 0; i < H.cols(); ++i) h[static_cast<std::size_t>(i)] = std::conj(H(k, i));
    return h;
}

void require_nonzero_rows(const CMatrix& H) {
    for (int k = 0; k < H.rows(); ++k) {
        double s = 0.0;
        for (int i = 0; i < H.cols(); ++i) s += std::norm(H(k, i));
        if (!(s > 0.0)) throw ContractError("invalid instance: zero-norm channel row");
    }
}

/// A = noise * I + sum_l q_l h_l h_l^H
CMatrix uplink_covariance(const CMatrix& H, const std::vector<double>& q, double noise_var) {
    const int n = H.cols(), k = H.rows();
    if (static_cast<int>(q.size()) != k) throw ShapeError("q length must equal user count");
    CMatrix a(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = noise_var;
    for (int l = 0; l < k; ++l) {
        if (q[static_cast<std::size_t>(l)] < 0.0) throw ContractError("q must be nonnegative");
        const CVector h = user_channel(H, l);
        const double ql = q[static_cast<std::size_t>(l)];
        if (ql == 0.0) continue;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                a(r, c) += ql * h[static_cast<std::size_t>(r)] * std::conj(h[static_cast<std::size_t>(c)]);
    }
    return a;
}

} // namespace

std::vector<double> rates(const CMatrix& H, const CMatrix& V, double noise_var) {
    const int k = H.rows();
    if (V.rows() != H.cols() || V.cols() != k) throw ShapeError("rates: V must be N x K");
    if (noise_var <= 0.0) throw ContractError("rates: noise variance must be positive");
    std::vector<double> out(static_cast<std::size_t>(k));
    for (int u = 0; u < k; ++u) {
        double signal = 0.0, interference = 0.0;
        for (int l = 0; l < k; ++l) {
            cplx rx = 0.0;
            for (int i = 0; i < H.cols(); ++i) rx += H(u, i) * V(i, l);
            if (l == u) signal = std::norm(rx);
            else interference += std::norm(rx);
        }
        out[static_cast<std::size_t>(u)] = std::log1p(signal / (interference + noise_var)) * kLog2e;
    }
    return out;
}

double utility(const std::vector<double>& r, Utility mode) {
    if (r.empty()) throw ContractError("utility: empty rate vector");
    if (mode == Utility::Sum) {
        double s = 0.0;
        for (double v : r) s += v;
        return s;
    }
    return *std::min_element(r.begin(), r.end());
}

CMatrix beam_directions_ul(const CMatrix& H, const std::vector<double>& q, double noise_var) {
    require_nonzero_rows(H);
    const int n = H.cols(), k = H.rows();
    const CMatrix a = uplink_covariance(H, q, noise_var);
    CMatrix rhs(n, k);
    for (int u = 0; u < k; ++u) rhs.set_col(u, user_channel(H, u));
    CMatrix w = linalg::hpd_solve(a, rhs);
    for (int u = 0; u < k; ++u) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += std::norm(w(i, u));
        const double inv = 1.0 / std::sqrt(s);
        for (int i = 0; i < n; ++i) w(i, u) *= inv;
    }
    return w;
}

CMatrix recover_beams(const CMatrix& H, const BeamFeature& f, double noise_var) {
    const int k = H.rows();
    if (f.mode != Utility::Sum) throw ContractError("recover_beams: feature must carry p and q");
    if (static_cast<int>(f.p.size()) != k || static_cast<int>(f.q.size()) != k)
        throw ShapeError("recover_beams: feature length mismatch");
    CMatrix v = beam_directions_ul(H, f.q, noise_var);
    for (int u = 0; u < k; ++u) {
        const double pu = f.p[static_cast<std::size_t>(u)];
        if (pu < 0.0) throw ContractError("recover_beams: p must be nonnegative");
        const double s = std::sqrt(pu);
        for (int i = 0; i < v.rows(); ++i) v(i, u) *= s;
    }
    return v;
}

std::vector<double> ul_rates(const CMatrix& H, const std::vector<double>& q,
                             const CMatrix& directions, double noise_var) {
    const int k = H.rows();
    if (static_cast<int>(q.size()) != k) throw ShapeError("ul_rates: q length mismatch");
    if (directions.rows() != H.cols() || directions.cols() != k)
        throw ShapeError("ul_rates: directions must be N x K");
    std::vector<double> out(static_cast<std::size_t>(k));
    for (int u = 0; u < k; ++u) {
        const CVector vu = directions.col(u);
        double signal = 0.0, interference = 0.0;
        for (int l = 0; l < k; ++l) {
            const cplx g = linalg::dot_conj(vu, user_channel(H, l));
            const double pw = q[static_cast<std::size_t>(l)] * std::norm(g);
            if (l == u) signal = pw;
            else interference += pw;
        }
        out[static_cast<std::size_t>(u)] = std::log1p(signal / (interference + noise_var)) * kLog2e;
    }
    return out;
}

std::vector<double> coupling_matrix(const CMatrix& H, const CMatrix& directions,
                                    const std::vector<double>& sinr_targets, double total_power,
                                    double noise_var) {
    const int k = H.rows();
    // cross gains: phi(r, c) = |h_r^H v_c|^2, zero diagonal; omega_k = gamma_k / |h_k^H v_k|^2
    std::vector<double> phi(static_cast<std::size_t>(k) * k, 0.0);
    std::vector<double> omega(static_cast<std::size_t>(k), 0.0);
    for (int r = 0; r < k; ++r) {
        const CVector h = user_channel(H, r);
        for (int c = 0; c < k; ++c) {
            const double gain = std::norm(linalg::dot_conj(directions.col(c), h));
            if (r == c)
                omega[static_cast<std::size_t>(r)] = sinr_targets[static_cast<std::size_t>(r)] / gain;
            else
                phi[static_cast<std::size_t>(r) * k + c] = gain;
        }
    }
    const int m = k + 1;
    std::vector<double> gamma_ext(static_cast<std::size_t>(m) * m, 0.0);
    double tr_omega = 0.0;
    for (int r = 0; r < k; ++r) {
        for (int c = 0; c < k; ++c)
            gamma_ext[static_cast<std::size_t>(r) * m + c] =
                omega[static_cast<std::size_t>(r)] * phi[static_cast<std::size_t>(r) * k + c];
        gamma_ext[static_cast<std::size_t>(r) * m + k] = noise_var * omega[static_cast<std::size_t>(r)];
        tr_omega += omega[static_cast<std::size_t>(r)];
    }
    for (int c = 0; c < k; ++c) {
        double s = 0.0;
        for (int r = 0; r < k; ++r) s += omega[static_cast<std::size_t>(r)] * phi[static_cast<std::size_t>(r) * k + c];
        gamma_ext[static_cast<std::size_t>(k) * m + c] = s / total_power;
    }
    gamma_ext[static_cast<std::size_t>(k) * m + k] = noise_var * tr_omega / total_power;
    return gamma_ext;
}

CMatrix recover_minrate_beams(const CMatrix& H, const std::vector<double>& q, double total_power,
                              double noise_var) {
    const int k = H.rows();
    if (static_cast<int>(q.size()) != k) throw ShapeError("recover_minrate_beams: q length mismatch");
    double qsum = 0.0;
    for (double v : q) qsum += v;
    if (std::abs(qsum - total_power) > 1e-6 * total_power)
        throw ContractError("recover_minrate_beams: q must sum to the power budget");

    const CMatrix dirs = beam_directions_ul(H, q, noise_var);

    // achieved dual uplink SINRs are the targets the downlink can meet exactly
    std::vector<double> gamma(static_cast<std::size_t>(k));
    for (int u = 0; u < k; ++u) {
        const CVector vu = dirs.col(u);
        double signal = 0.0, interference = 0.0;
        for (int l = 0; l < k; ++l) {
            const double pw = q[static_cast<std::size_t>(l)] *
                              std::norm(linalg::dot_conj(vu, user_channel(H, l)));
            if (l == u) signal = pw;
            else interference += pw;
        }
        gamma[static_cast<std::size_t>(u)] = signal / (interference + noise_var);
    }

    const std::vector<double> gamma_ext = coupling_matrix(H, dirs, gamma, total_power, noise_var);
    const linalg::EigResult eig = linalg::power_iteration_max_eig(gamma_ext, k + 1);

    CMatrix v = dirs;
    for (int u = 0; u < k; ++u) {
        const double pu = eig.vector[static_cast<std::size_t>(u)];
        if (pu < 0.0) throw NumericError("recover_minrate_beams: negative downlink power");
        const double s = std::sqrt(pu);
        for (int i = 0; i < v.rows(); ++i) v(i, u) *= s;
    }
    return v;
}

// ---- differentiable path -----------------------------------------------------

ChannelConstants make_channel_constants(const CMatrix& H, double noise_var) {
    require_nonzero_rows(H);
    const int n = H.cols(), k = H.rows();
    ChannelConstants cc;
    cc.N = n;
    cc.K = k;
    cc.noise_var = noise_var;

    ad::Tensor reg(2 * n, 2 * n);
    for (int i = 0; i < 2 * n; ++i) reg(i, i) = noise_var;
    cc.reg = std::make_shared<const ad::Tensor>(std::move(reg));

    auto gram = std::make_shared<std::vector<ad::Tensor>>();
    gram->reserve(static_cast<std::size_t>(k));
    ad::Tensor rhs(2 * n, k);
    ad::Tensor re_proj(k, 2 * n);
    ad::Tensor im_proj(k, 2 * n);
    for (int u = 0; u < k; ++u) {
        const CVector h = user_channel(H, u);
        ad::Tensor g(2 * n, 2 * n);
        for (int r = 0; r < n; ++r) {
            const double hr_r = h[static_cast<std::size_t>(r)].real();
            const double hi_r = h[static_cast<std::size_t>(r)].imag();
            for (int c = 0; c < n; ++c) {
                const double hr_c = h[static_cast<std::size_t>(c)].real();
                const double hi_c = h[static_cast<std::size_t>(c)].imag();
                const double re = hr_r * hr_c + hi_r * hi_c;   // Re(h_r conj(h_c))
                const double im = hi_r * hr_c - hr_r * hi_c;   // Im(h_r conj(h_c))
                g(r, c) = re;
                g(r, n + c) = -im;
                g(n + r, c) = im;
                g(n + r, n + c) = re;
            }
            rhs(r, u) = hr_r;
            rhs(n + r, u) = hi_r;
            re_proj(u, r) = hr_r;
            re_proj(u, n + r) = hi_r;
            im_proj(u, r) = -hi_r;
            im_proj(u, n + r) = hr_r;
        }
        gram->push_back(std::move(g));
    }
    cc.gram = std::move(gram);
    cc.rhs = ad::constant(std::move(rhs));
    cc.re_proj = ad::constant(std::move(re_proj));
    cc.im_proj = ad::constant(std::move(im_proj));
    return cc;
}

ad::Value mmse_directions(const ChannelConstants& cc, const ad::Value& q) {
    ad::Value cov = ad::lincomb(cc.reg, cc.gram, q);
    ad::Value w = ad::spd_solve(cov, cc.rhs);
    ad::Value norms_sq = ad::col_sum(ad::square(w));         // 1 x K, ||w_k||^2
    ad::Value inv_norm = ad::div(ad::constant(ad::Tensor::full(1, cc.K, 1.0)),
                                 ad::sqrt(norms_sq));
    return ad::mul_rowvec(w, inv_norm);
}

ad::Value scale_columns_sqrt(const ad::Value& m, const ad::Value& p) {
    return ad::mul_rowvec(m, ad::sqrt(ad::transpose(p)));
}

ad::Value crosstalk_gains(const ChannelConstants& cc, const ad::Value& v) {
    ad::Value re = ad::matmul(cc.re_proj, v);
    ad::Value im = ad::matmul(cc.im_proj, v);
    return ad::add(ad::square(re), ad::square(im));
}

namespace {

ad::Value rates_from_parts(const ad::Value& signal, const ad::Value& interference,
                           double noise_var) {
    ad::Value sinr = ad::div(signal, ad::add_const(interference, noise_var));
    return ad::scale(ad::log1p(sinr), kLog2e);
}

} // namespace

ad::Value downlink_rates(const ChannelConstants& cc, const ad::Value& scaled_beams) {
    ad::Value gains = crosstalk_gains(cc, scaled_beams);     // K x K, row = user
    ad::Value signal = ad::diag_vec(gains);
    ad::Value interference = ad::sub(ad::row_sum(gains), signal);
    return rates_from_parts(signal, interference, cc.noise_var);
}

ad::Value uplink_rates(const ChannelConstants& cc, const ad::Value& q, const ad::Value& directions) {
    // uplink gain matrix: row k = receive filter of user k applied to each
    // transmitter's channel; that is the transpose of the downlink gains
    ad::Value gains_ul = ad::transpose(crosstalk_gains(cc, directions));
    ad::Value own = ad::diag_vec(gains_ul);
    ad::Value signal = ad::mul(q, own);
    ad::Value interference = ad::sub(ad::matmul(gains_ul, q), ad::mul(own, q));
    return rates_from_parts(signal, interference, cc.noise_var);
}

ad::Value utility_value(const ad::Value& rate_vec, Utility mode) {
    if (mode == Utility::Sum) return ad::sum_all(rate_vec);
    return ad::reduce_min(rate_vec);
}

} // namespace bgnn::beam
