#pragma once

#include <iosfwd>
#include <string>

#include "bgnn/linalg.hpp"
#include "bgnn/rng.hpp"

namespace bgnn::channel {

enum class Layout : unsigned char { Colocated = 0, CellFree = 1 };

/// Geometry and fading parameters for instance generation. SNR is linear;
/// with unit noise variance the SNR equals the power budget P.
struct ScenarioConfig {
    int max_antennas = 8;
    int max_users = 8;
    int min_antennas = 1;
    int min_users = 1;
    double power = 10.0;                 // linear
    double noise_var = 1.0;
    Layout layout = Layout::Colocated;
    double cell_radius_m = 100.0;
    double antenna_circle_radius_m = 30.0; // cell-free only
    double ref_distance_m = 30.0;
    double pathloss_exponent = 3.0;

    void validate() const;
};

/// One problem instance: a weighted bipartite graph between active
/// antennas and users with the channel matrix as edge weights.
struct BipartiteChannel {
    int N = 0;                 // active antennas
    int K = 0;                 // active users
    linalg::CMatrix H;         // K x N, entry (k, i) couples user k and antenna i
    double power = 0.0;
    double noise_var = 1.0;

    /// h_k: channel vector of user k (conjugate of row k of H), so that
    /// h_k^H v equals row_k(H) * v.
    linalg::CVector user_channel(int k) const;

    void validate() const;     // dims, nonzero row norms, noise_var > 0
};

/// Large-scale gain 1 / (1 + (d / d_ref)^alpha).
double pathloss_gain(double distance_m, const ScenarioConfig& cfg);

struct Point {
    double x = 0.0, y = 0.0;
};

/// Uniform position on the disk of the given radius (exposed so the drop
/// distribution is testable).
Point sample_disk_point(double radius, Rng& rng);

/// Random sizes N ~ U{min..max}, K ~ U{min..max}, then fading per layout.
/// Co-located: users dropped uniformly on the disk, h_{k,i} ~ CN(0, rho_k)
/// with rho_k = 1 / (1 + (d_k/d_ref)^alpha). Cell-free: antennas on the
/// circle of the configured radius, h_{k,i} = rho_{k,i} * CN(0, 1).
BipartiteChannel sample_instance(const ScenarioConfig& cfg, Rng& rng);

/// Same fading model with forced sizes. Sizes may exceed the configured
/// maxima (used for generalization sweeps).
BipartiteChannel sample_fixed(const ScenarioConfig& cfg, int n, int k, Rng& rng);

// Structured text record for regression fixtures; doubles are written
// with enough digits for exact round-trip.
void write_instance(std::ostream& os, const BipartiteChannel& inst);
BipartiteChannel read_instance(std::istream& is);
void save_instance(const std::string& path, const BipartiteChannel& inst);
BipartiteChannel load_instance(const std::string& path);

} // namespace bgnn::channel
