#pragma once

#include <filesystem>
#include <random>

#include "nvpd/dynamics.hpp"
#include "nvpd/io.hpp"
#include "nvpd/model.hpp"

namespace nvpd::testutil {

inline std::filesystem::path source_dir() { return NVPD_SOURCE_DIR; }

inline SimConfig default_cfg() { return load_config(source_dir() / "configs" / "default.json"); }

inline double log_uniform(std::mt19937_64& g, double lo, double hi) {
    return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(g));
}
inline double uniform(std::mt19937_64& g, double lo = 0, double hi = 1) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

// Random preset within roughly a decade of the shipped one, valid by construction.
inline RatePreset random_preset(std::mt19937_64& g, const RatePreset& ref) {
    RatePreset p = ref;
    p.name = "custom";
    auto jitter = [&](double& x, double floor) { x = std::max(x, floor) * log_uniform(g, 0.1, 10.0); };
    RateSet& r = p.base;
    for (double* x : {&r.k2, &r.k3, &r.k4, &r.k5, &r.k6, &r.kMW}) jitter(*x, 1e5);
    for (double* x : {&r.rec1, &r.rec2, &r.rec3, &r.rec4, &r.rec5, &r.rec6}) jitter(*x, 1e5);
    const double a = uniform(g, 0.05, 1), b = uniform(g, 0.05, 1), c = uniform(g, 0.05, 1);
    r.branch_A = a / (a + b + c);
    r.branch_B = b / (a + b + c);
    r.branch_C = 1.0 - r.branch_A - r.branch_B;
    r.branch_D = uniform(g);
    r.branch_E = uniform(g);
    jitter(p.pumping.W_k1, 1e6);
    p.pumping.W_ion1_ratio = uniform(g, 0.05, 0.5);
    for (double* x : {&p.pumping.W_ion2, &p.pumping.W_ion3, &p.pumping.W_ion4}) jitter(*x, 1e5);
    return p;
}

inline BinState random_bin(std::mt19937_64& g, const BinDefects& d) {
    BinState b;
    double s = 0;
    for (int i = 0; i < 6; ++i) s += (b.p[i] = uniform(g, 0.01, 1));
    for (int i = 0; i < 6; ++i) b.p[i] /= s;
    b.p[6] = d.n_X ? uniform(g) : 0.0;
    b.p[7] = d.n_Ns ? uniform(g) : 0.0;
    b.pCB = uniform(g, 0, 0.2);
    b.pVB = uniform(g);
    (void)d;
    return b;
}

// Random mesh, rates, power, field and MW state.
inline SimConfig random_config(std::mt19937_64& g, bool with_field = true) {
    SimConfig c = default_cfg();
    c.preset = random_preset(g, c.preset);
    const int bins = std::array{1, 3, 5, 7, 11}[std::uniform_int_distribution<int>(0, 4)(g)];
    std::vector<Placement> pl;
    std::uniform_int_distribution<int> bin(0, bins - 1), cnt(0, 3);
    pl.push_back({bins / 2, DefectKind::NV, 1});
    const int extra = std::uniform_int_distribution<int>(0, 4)(g);
    for (int i = 0; i < extra; ++i) {
        const auto kind = std::array{DefectKind::NV, DefectKind::Ns, DefectKind::X}[std::uniform_int_distribution<int>(0, 2)(g)];
        pl.push_back({bin(g), kind, std::max(1, cnt(g))});
    }
    TransportParams tp = c.mesh.transport;
    tp.field_E = with_field ? (uniform(g) < 0.2 ? 0.0 : uniform(g, -100, 100)) : 0.0;
    tp.mu_e = log_uniform(g, 100, 3000);
    tp.mu_h = log_uniform(g, 100, 3000);
    c.mesh = build_mesh(uniform(g, 1, 10), bins, pl, tp);
    c.laser_power = log_uniform(g, 0.01, 10);
    c.mw_on = uniform(g) < 0.5;
    c.x_initial_occupancy = uniform(g) < 0.5 ? 0.0 : uniform(g);
    return c;
}

inline double nv_sum(const BinState& b) { return b.p[0] + b.p[1] + b.p[2] + b.p[3] + b.p[4] + b.p[5]; }

} // namespace nvpd::testutil
