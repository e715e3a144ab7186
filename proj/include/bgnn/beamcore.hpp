#pragma once

#include <memory>
#include <vector>

#include "bgnn/channel.hpp"
#include "bgnn/linalg.hpp"
#include "bgnn/tape.hpp"

namespace bgnn::beam {

enum class Utility : unsigned char { Sum = 0, Min = 1 };

/// Low-dimensional representation of a beamforming solution: downlink
/// powers p and virtual uplink powers q (q only in Min mode). Both sides
/// must sum to the power budget.
struct BeamFeature {
    Utility mode = Utility::Sum;
    std::vector<double> p;     // empty in Min mode
    std::vector<double> q;
};

struct BeamSolution {
    linalg::CMatrix V;          // N x K, column k serves user k
    std::vector<double> rates;  // bits/s/Hz
    double utility = 0.0;
};

// ---- rates and utilities ----------------------------------------------------

/// r_k = log2(1 + |h_k^H v_k|^2 / (sum_{l != k} |h_k^H v_l|^2 + noise)).
std::vector<double> rates(const linalg::CMatrix& H, const linalg::CMatrix& V, double noise_var);

double utility(const std::vector<double>& r, Utility mode);

// ---- duality-based recovery --------------------------------------------------

/// Eq-style MMSE recovery: v_k = sqrt(p_k) * A^{-1} h_k / ||A^{-1} h_k||
/// with A = noise*I + sum_l q_l h_l h_l^H.
linalg::CMatrix recover_beams(const linalg::CMatrix& H, const BeamFeature& f, double noise_var);

/// Unit-norm MMSE receive directions for the virtual uplink with powers q.
linalg::CMatrix beam_directions_ul(const linalg::CMatrix& H, const std::vector<double>& q,
                                   double noise_var);

/// Dual uplink rates: r_k = log2(1 + q_k |v_k^H h_k|^2 /
/// (sum_{l != k} q_l |v_k^H h_l|^2 + noise)), with unit-norm directions.
std::vector<double> ul_rates(const linalg::CMatrix& H, const std::vector<double>& q,
                             const linalg::CMatrix& directions, double noise_var);

/// Minimum-rate recovery: MMSE directions from q, achieved uplink SINRs as
/// the targets, then downlink powers from the dominant eigenvector of the
/// extended coupling matrix. Requires sum(q) = P.
linalg::CMatrix recover_minrate_beams(const linalg::CMatrix& H, const std::vector<double>& q,
                                      double total_power, double noise_var);

/// The (K+1)x(K+1) extended coupling matrix whose dominant eigenvector
/// carries the downlink powers (row-major). Exposed for tests.
std::vector<double> coupling_matrix(const linalg::CMatrix& H, const linalg::CMatrix& directions,
                                    const std::vector<double>& sinr_targets, double total_power,
                                    double noise_var);

// ---- differentiable path -----------------------------------------------------
// Complex quantities are handled as stacked real/imaginary blocks: a complex
// N-vector becomes a real 2N-vector [re; im], so every step is a composition
// of real tape primitives and the solve adjoint.

struct ChannelConstants {
    int N = 0;
    int K = 0;
    double noise_var = 1.0;
    std::shared_ptr<const ad::Tensor> reg;                   // noise * I_{2N}
    std::shared_ptr<const std::vector<ad::Tensor>> gram;     // realified h_l h_l^H per user
    ad::Value rhs;      // 2N x K, column k = [Re h_k; Im h_k]
    ad::Value re_proj;  // K x 2N, row k gives Re(h_k^H w) on [wr; wi]
    ad::Value im_proj;  // K x 2N, row k gives Im(h_k^H w)
};

ChannelConstants make_channel_constants(const linalg::CMatrix& H, double noise_var);

/// Unit-norm MMSE directions as a realified 2N x K value (q is K x 1).
ad::Value mmse_directions(const ChannelConstants& cc, const ad::Value& q);

/// Column k scaled by sqrt(p_k).
ad::Value scale_columns_sqrt(const ad::Value& m, const ad::Value& p);

/// |h_k^H v_l|^2 for all pairs as a K x K value.
ad::Value crosstalk_gains(const ChannelConstants& cc, const ad::Value& v);

/// Downlink rates (K x 1) from beams carrying their power.
ad::Value downlink_rates(const ChannelConstants& cc, const ad::Value& scaled_beams);

/// Dual uplink rates (K x 1) from unit-norm directions and powers q.
ad::Value uplink_rates(const ChannelConstants& cc, const ad::Value& q, const ad::Value& directions);

/// Sum or min of a K x 1 rate vector as a scalar value.
ad::Value utility_value(const ad::Value& rate_vec, Utility mode);

} // namespace bgnn::beam
