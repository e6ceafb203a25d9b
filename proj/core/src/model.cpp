#include "nvpd/model.hpp"

#include <cmath>
#include <sstream>

#include "nvpd/dynamics.hpp"
#include "nvpd/errors.hpp"

namespace nvpd {

RateSet build_rate_set(const RatePreset& preset, double P, bool mw_on) {
    if (!(P >= 0)) throw ValidationError("negative laser power");
    RateSet r = preset.base;
    const auto& w = preset.pumping;
    r.k1 = w.W_k1 * P;
    r.ion1 = w.W_ion1_ratio * r.k1;
    r.ion2 = w.W_ion2 * P;
    r.ion3 = w.W_ion3 * P;
    r.ion4 = w.W_ion4 * P;
    r.kMW = mw_on ? preset.base.kMW : 0.0;
    return r;
}

Mesh build_mesh(double gap_um, int n_bins, const std::vector<Placement>& placements,
                const TransportParams& transport) {
    std::vector<std::string> diags;
    if (n_bins < 1) diags.push_back("mesh needs at least one bin");
    else if (n_bins % 2 == 0) diags.push_back("n_bins must be odd (got " + std::to_string(n_bins) + ")");
    if (!(gap_um > 0)) diags.push_back("gap must be positive");
    if (!diags.empty()) throw ValidationError(diags);

    Mesh m;
    m.n_bins = n_bins;
    m.bin_width = gap_um / n_bins;
    m.bins.assign(n_bins, {});
    m.transport = transport;
    m.transport.gap = gap_um;
    for (const auto& pl : placements) {
        if (pl.bin < 0 || pl.bin >= n_bins) {
            diags.push_back("bin index " + std::to_string(pl.bin) + " out of range [0," +
                            std::to_string(n_bins - 1) + "]");
            continue;
        }
        if (pl.count < 0) {
            diags.push_back("negative defect count");
            continue;
        }
        auto& b = m.bins[pl.bin];
        switch (pl.kind) {
            case DefectKind::NV: b.n_NV += pl.count; break;
            case DefectKind::Ns: b.n_Ns += pl.count; break;
            case DefectKind::X: b.n_X += pl.count; break;
        }
    }
    if (!diags.empty()) throw ValidationError(diags);
    return m;
}

MeshState initial_state(const Mesh& mesh, PvbConvention convention, double x_occupancy) {
    MeshState s;
    s.bins.resize(mesh.n_bins);
    for (int i = 0; i < mesh.n_bins; ++i) {
        auto& b = s.bins[i];
        const auto& d = mesh.bins[i];
        b.p.fill(0.0);
        b.p[5] = 1.0;
        b.p[6] = d.n_X > 0 ? x_occupancy : 0.0;
        b.p[7] = d.n_Ns > 0 ? 0.5 : 0.0;
        b.pCB = 0.0;
        if (d.n_Ns == 0) b.pVB = 1.0;
        else if (convention == PvbConvention::SingleReservoir) b.pVB = 0.5;
        else b.pVB = std::max(0.0, 1.0 - 0.5 * d.n_Ns);
    }
    return s;
}

std::vector<std::string> rate_set_diagnostics(const RateSet& r) {
    std::vector<std::string> d;
    const std::pair<const char*, double> rates[] = {
        {"k1", r.k1},     {"k2", r.k2},     {"k3", r.k3},     {"k4", r.k4},     {"k5", r.k5},
        {"k6", r.k6},     {"kMW", r.kMW},   {"ion1", r.ion1}, {"ion2", r.ion2}, {"ion3", r.ion3},
        {"ion4", r.ion4}, {"rec1", r.rec1}, {"rec2", r.rec2}, {"rec3", r.rec3}, {"rec4", r.rec4},
        {"rec5", r.rec5}, {"rec6", r.rec6}};
    for (auto [name, v] : rates) {
        if (!std::isfinite(v)) d.push_back(std::string("non-finite rate ") + name);
        else if (v < 0) d.push_back(std::string("negative rate ") + name);
    }
    const double s = r.branch_A + r.branch_B + r.branch_C;
    if (r.branch_A < 0 || r.branch_B < 0 || r.branch_C < 0)
        d.push_back("negative branching coefficient");
    if (std::abs(s - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "branching sum != 1 (branch_A+branch_B+branch_C = " << s << ")";
        d.push_back(os.str());
    }
    if (r.branch_D < 0 || r.branch_D > 1) d.push_back("branch_D outside [0,1]");
    if (r.branch_E < 0 || r.branch_E > 1) d.push_back("branch_E outside [0,1]");
    return d;
}

std::vector<std::string> config_diagnostics(const SimConfig& c) {
    auto d = rate_set_diagnostics(c.preset.base);
    const auto& w = c.preset.pumping;
    for (auto [name, v] : {std::pair{"W_k1", w.W_k1}, std::pair{"W_ion2", w.W_ion2},
                           std::pair{"W_ion3", w.W_ion3}, std::pair{"W_ion4", w.W_ion4}}) {
        if (!(v >= 0)) d.push_back(std::string("negative pumping coefficient ") + name);
    }
    if (!(w.W_ion1_ratio >= 0 && w.W_ion1_ratio <= 1)) d.push_back("W_ion1_ratio outside [0,1]");
    if (c.preset.name != "tetienne" && c.preset.name != "wirtitsch" && c.preset.name != "custom")
        d.push_back("unknown preset name '" + c.preset.name + "'");

    const auto& m = c.mesh;
    if (m.n_bins < 1) d.push_back("mesh needs at least one bin");
    else if (m.n_bins % 2 == 0) d.push_back("n_bins must be odd");
    if (static_cast<int>(m.bins.size()) != m.n_bins) d.push_back("defect table size != n_bins");
    for (const auto& b : m.bins)
        if (b.n_NV < 0 || b.n_Ns < 0 || b.n_X < 0) {
            d.push_back("negative defect count");
            break;
        }
    const auto& t = m.transport;
    if (!(t.gap > 0)) d.push_back("gap must be positive");
    if (m.n_bins >= 1 && std::abs(m.bin_width * m.n_bins - t.gap) > 1e-9 * std::max(1.0, t.gap))
        d.push_back("bin widths do not sum to the gap");
    if (!(t.mu_e > 0)) d.push_back("mu_e must be positive");
    if (!(t.mu_h > 0)) d.push_back("mu_h must be positive");
    if (!std::isfinite(t.field_E)) d.push_back("field must be finite");
    if (!(t.electron_charge > 0)) d.push_back("electron charge must be positive");

    if (!(c.laser_power >= 0)) d.push_back("negative laser power");
    if (!(c.rtol > 0)) d.push_back("relative tolerance must be positive");
    if (!(c.atol > 0)) d.push_back("absolute tolerance must be positive");
    if (!(c.steady_threshold > 0)) d.push_back("steady-state threshold must be positive");
    if (!(c.max_time > 0)) d.push_back("max time must be positive");
    if (!(c.x_initial_occupancy >= 0 && c.x_initial_occupancy <= 1))
        d.push_back("X initial occupancy outside [0,1]");
    return d;
}

const SimConfig& validate_config(const SimConfig& config) {
    auto d = config_diagnostics(config);
    if (!d.empty()) throw ValidationError(std::move(d));
    return config;
}

const char* to_string(DefectKind k) {
    switch (k) {
        case DefectKind::NV: return "NV";
        case DefectKind::Ns: return "Ns";
        case DefectKind::X: return "X";
    }
    return "?";
}

const char* to_string(PhotocurrentMode m) {
    return m == PhotocurrentMode::Analytic ? "analytic" : "transport";
}

const char* to_string(PvbConvention c) {
    return c == PvbConvention::SingleReservoir ? "single_reservoir" : "hole_count_per_ns";
}

} // namespace nvpd
