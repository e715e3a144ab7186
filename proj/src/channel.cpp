#include "bgnn/channel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bgnn::channel {

void ScenarioConfig::validate() const {
    if (max_antennas < 1 || max_users < 1) throw ConfigError("population maxima must be >= 1");
    if (min_antennas < 1 || min_users < 1) throw ConfigError("population minima must be >= 1");
    if (min_antennas > max_antennas || min_users > max_users)
        throw ConfigError("population minimum exceeds maximum");
    if (power <= 0.0) throw ConfigError("power must be positive");
    if (noise_var <= 0.0) throw ConfigError("noise variance must be positive");
    if (cell_radius_m <= 0.0 || antenna_circle_radius_m <= 0.0 || ref_distance_m <= 0.0)
        throw ConfigError("radii must be positive");
}

linalg::CVector BipartiteChannel::user_channel(int k) const {
    linalg::CVector h(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) h[static_cast<std::size_t>(i)] = std::conj(H(k, i));
    return h;
}

void BipartiteChannel::validate() const {
    if (N < 1 || K < 1) throw ContractError("instance must have N >= 1 and K >= 1");
    if (H.rows() != K || H.cols() != N) throw ShapeError("channel matrix is not K x N");
    if (power <= 0.0 || noise_var <= 0.0) throw ContractError("power and noise must be positive");
    for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += std::norm(H(k, i));
        if (!(s > 0.0) || !std::isfinite(s))
            throw ContractError("channel row with zero or non-finite norm");
    }
}

Point sample_disk_point(double radius, Rng& rng) {
    const double r = radius * std::sqrt(rng.uniform());
    const double theta = 6.283185307179586476925286766559 * rng.uniform();
    return {r * std::cos(theta), r * std::sin(theta)};
}

double pathloss_gain(double distance_m, const ScenarioConfig& cfg) {
    return 1.0 / (1.0 + std::pow(distance_m / cfg.ref_distance_m, cfg.pathloss_exponent));
}

namespace {

BipartiteChannel fill_channels(const ScenarioConfig& cfg, int n, int k, Rng& rng) {
    BipartiteChannel inst;
    inst.N = n;
    inst.K = k;
    inst.H = linalg::CMatrix(k, n);
    inst.power = cfg.power;
    inst.noise_var = cfg.noise_var;

    if (cfg.layout == Layout::Colocated) {
        for (int u = 0; u < k; ++u) {
            const Point pos = sample_disk_point(cfg.cell_radius_m, rng);
            const double rho = pathloss_gain(std::hypot(pos.x, pos.y), cfg);
            const double sd = std::sqrt(rho / 2.0);
            for (int a = 0; a < n; ++a)
                inst.H(u, a) = {rng.normal(0.0, sd), rng.normal(0.0, sd)};
        }
    } else {
        // antennas uniformly on the circle, users on the disk; per-edge path loss
        std::vector<Point> ants(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            const double phi = 6.283185307179586476925286766559 * rng.uniform();
            ants[static_cast<std::size_t>(a)] = {cfg.antenna_circle_radius_m * std::cos(phi),
                                                 cfg.antenna_circle_radius_m * std::sin(phi)};
        }
        const double sd = std::sqrt(0.5);
        for (int u = 0; u < k; ++u) {
            const Point pos = sample_disk_point(cfg.cell_radius_m, rng);
            for (int a = 0; a < n; ++a) {
                const Point& ap = ants[static_cast<std::size_t>(a)];
                const double d = std::hypot(pos.x - ap.x, pos.y - ap.y);
                const double rho = pathloss_gain(d, cfg);
                inst.H(u, a) = {rho * rng.normal(0.0, sd), rho * rng.normal(0.0, sd)};
            }
        }
    }
    inst.validate();
    return inst;
}

} // namespace

BipartiteChannel sample_instance(const ScenarioConfig& cfg, Rng& rng) {
    cfg.validate();
    const int n = rng.uniform_int(cfg.min_antennas, cfg.max_antennas);
    const int k = rng.uniform_int(cfg.min_users, cfg.max_users);
    return fill_channels(cfg, n, k, rng);
}

BipartiteChannel sample_fixed(const ScenarioConfig& cfg, int n, int k, Rng& rng) {
    cfg.validate();
    if (n < 1 || k < 1) throw ContractError("sample_fixed: sizes must be >= 1");
    return fill_channels(cfg, n, k, rng);
}

void write_instance(std::ostream& os, const BipartiteChannel& inst) {
    char buf[64];
    os << "bgnn-instance v1\n" << inst.N << " " << inst.K << "\n";
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", inst.power, inst.noise_var);
    os << buf;
    for (int k = 0; k < inst.K; ++k) {
        for (int i = 0; i < inst.N; ++i) {
            const linalg::cplx h = inst.H(k, i);
            std::snprintf(buf, sizeof buf, "%.17g %.17g", h.real(), h.imag());
            os << buf << (i + 1 < inst.N ? " " : "\n");
        }
    }
}

BipartiteChannel read_instance(std::istream& is) {
    std::string tag, version;
    is >> tag >> version;
    if (tag != "bgnn-instance" || version != "v1")
        throw ContractError("unrecognized instance file header");
    BipartiteChannel inst;
    is >> inst.N >> inst.K >> inst.power >> inst.noise_var;
    if (!is) throw ContractError("truncated instance file");
    inst.H = linalg::CMatrix(inst.K, inst.N);
    for (int k = 0; k < inst.K; ++k)
        for (int i = 0; i < inst.N; ++i) {
            double re, im;
            is >> re >> im;
            if (!is) throw ContractError("truncated instance file");
            inst.H(k, i) = {re, im};
        }
    inst.validate();
    return inst;
}

void save_instance(const std::string& path, const BipartiteChannel& inst) {
    std::ofstream f(path);
    if (!f) throw ContractError("cannot open " + path + " for writing");
    write_instance(f, inst);
}

BipartiteChannel load_instance(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ContractError("cannot open " + path);
    return read_instance(f);
}

} // namespace bgnn::channel
