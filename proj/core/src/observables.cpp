#include "nvpd/observables.hpp"

#include <tuple>
#include <cmath>
#include <limits>

#include "nvpd/errors.hpp"

namespace nvpd {

double photoluminescence(const MeshState& s, const RateSet& r, const Mesh& mesh) {
    double acc = 0;
    for (int b = 0; b < mesh.n_bins; ++b) acc += mesh.bins[b].n_NV * (s.bins[b].p[2] + s.bins[b].p[3]);
    return r.k2 * acc;
}

Generation generation_rates(const MeshState& s, const RateSet& r, const Mesh& mesh) {
    Generation g;
    for (int b = 0; b < mesh.n_bins; ++b) {
        const auto& d = mesh.bins[b];
        const auto& x = s.bins[b];
        g.G_e += d.n_NV * r.ion1 * (x.p[2] + x.p[3]) + d.n_Ns * r.ion3 * x.p[7];
        g.G_h += d.n_NV * r.ion2 * x.p[5] * x.pVB + d.n_X * r.ion4 * (1 - x.p[6]) * x.pVB;
    }
    return g;
}

namespace {

double electron_capture(const BinState& x, const BinDefects& d, const RateSet& r) {
    return d.n_NV * r.rec2 * x.p[5] + d.n_Ns * r.rec3 * (1 - x.p[7]) + d.n_X * r.rec5 * (1 - x.p[6]);
}

double hole_capture(const BinState& x, const BinDefects& d, const RateSet& r) {
    return d.n_NV * r.rec1 * (r.branch_D * x.p[0] + r.branch_E * x.p[1]) + d.n_Ns * r.rec4 * x.p[7] +
           d.n_X * r.rec6 * x.p[6];
}

template <class Density, class Capture>
Lifetime weighted_lifetime(const MeshState& s, const Mesh& mesh, Density dens, Capture cap) {
    double w = 0, wc = 0;
    for (int b = 0; b < mesh.n_bins; ++b) {
        const double q = dens(s.bins[b]);
        w += q;
        wc += q * cap(b);
    }
    if (w <= 0) {
        // no free carriers: average over bins that hold defects
        w = wc = 0;
        for (int b = 0; b < mesh.n_bins; ++b) {
            const auto& d = mesh.bins[b];
            if (d.n_NV + d.n_Ns + d.n_X == 0) continue;
            w += 1;
            wc += cap(b);
        }
    }
    Lifetime lt;
    if (w <= 0 || wc <= 0) {
        lt.unbounded = true;
        lt.value = std::numeric_limits<double>::infinity();
    } else {
        lt.value = w / wc;
    }
    return lt;
}

} // namespace

std::pair<Lifetime, Lifetime> carrier_lifetimes(const MeshState& s, const RateSet& r, const Mesh& mesh) {
    auto te = weighted_lifetime(
        s, mesh, [](const BinState& x) { return x.pCB; },
        [&](int b) { return electron_capture(s.bins[b], mesh.bins[b], r); });
    auto th = weighted_lifetime(
        s, mesh, [](const BinState& x) { return 1.0 - x.pVB; },
        [&](int b) { return hole_capture(s.bins[b], mesh.bins[b], r); });
    return {te, th};
}

Currents photocurrent_analytic(double G_e, double G_h, const Lifetime& tau_e, const Lifetime& tau_h,
                               const TransportParams& t) {
    const double L = t.gap * 1e-4;
    auto one = [&](double G, const Lifetime& tau, double mu) {
        if (G == 0 || t.field_E == 0) return 0.0;
        if (tau.unbounded) return std::numeric_limits<double>::infinity();
        return t.electron_charge * G * tau.value * mu * std::abs(t.field_E) / L;
    };
    Currents c;
    c.I_e = one(G_e, tau_e, t.mu_e);
    c.I_h = one(G_h, tau_h, t.mu_h);
    c.I_p = c.I_e + c.I_h;
    return c;
}

double photocurrent_transport(const MeshState& s, const Mesh& mesh) {
    const auto d = drift_divergence(s, mesh);
    return mesh.transport.electron_charge * (d.collect_e + d.collect_h);
}

double photocurrent_transport(const Trajectory& tr, const Mesh& mesh) {
    if (!tr.steady_state_reached) throw NumericalError("trajectory did not reach steady state");
    return photocurrent_transport(tr.states.back(), mesh);
}

double contrast(double I_off, double I_on) {
    if (I_off == 0) throw NumericalError("undefined contrast: off-resonance signal is zero");
    return (I_off - I_on) / I_off;
}

QuantumEfficiency quantum_efficiencies(const MeshState& s, const RateSet& r, const Mesh& mesh) {
    double gs = 0;
    for (int b = 0; b < mesh.n_bins; ++b) gs += mesh.bins[b].n_NV * (s.bins[b].p[0] + s.bins[b].p[1]);
    const auto g = generation_rates(s, r, mesh);
    const double D = r.k1 * gs + g.G_e + g.G_h;
    if (D == 0) throw NumericalError("undefined quantum efficiency: no absorbed photons");
    return {photoluminescence(s, r, mesh) / D, (g.G_e + g.G_h) / D};
}

Observables compute_observables(const MeshState& s, const RateSet& r, const SimConfig& cfg) {
    const Mesh& mesh = cfg.mesh;
    Observables o;
    o.I_f = photoluminescence(s, r, mesh);
    const auto g = generation_rates(s, r, mesh);
    o.G_e = g.G_e;
    o.G_h = g.G_h;
    std::tie(o.tau_e, o.tau_h) = carrier_lifetimes(s, r, mesh);
    if (cfg.photocurrent_mode == PhotocurrentMode::Analytic) {
        const auto c = photocurrent_analytic(o.G_e, o.G_h, o.tau_e, o.tau_h, mesh.transport);
        o.I_e = c.I_e;
        o.I_h = c.I_h;
        o.I_p = c.I_p;
    } else {
        const auto d = drift_divergence(s, mesh);
        o.I_e = mesh.transport.electron_charge * d.collect_e;
        o.I_h = mesh.transport.electron_charge * d.collect_h;
        o.I_p = o.I_e + o.I_h;
    }
    try {
        const auto q = quantum_efficiencies(s, r, mesh);
        o.QE_f = q.QE_f;
        o.QE_p = q.QE_p;
    } catch (const NumericalError&) {
        o.QE_f = o.QE_p = 0;
    }

    double nNV = 0, nNs = 0, nX = 0, ns0 = 0, xf = 0;
    for (int b = 0; b < mesh.n_bins; ++b) {
        const auto& d = mesh.bins[b];
        const auto& x = s.bins[b];
        nNV += d.n_NV;
        o.nv_minus += d.n_NV * x.nv_minus();
        o.nv_zero += d.n_NV * x.p[5];
        o.nv_es += d.n_NV * (x.p[2] + x.p[3]);
        o.nv_ms += d.n_NV * x.p[4];
        nNs += d.n_Ns;
        ns0 += d.n_Ns * x.p[7];
        nX += d.n_X;
        xf += d.n_X * x.p[6];
        o.cb_total += x.pCB;
        o.holes_total += 1.0 - x.pVB;
    }
    if (nNV > 0) {
        o.nv_minus /= nNV;
        o.nv_zero /= nNV;
        o.nv_es /= nNV;
        o.nv_ms /= nNV;
    }
    if (nNs > 0) o.ns_zero = ns0 / nNs;
    if (nX > 0) o.x_filled = xf / nX;
    return o;
}

OccupationChange occupation_change(const SimConfig& cfg) {
    SimConfig off = cfg, on = cfg;
    off.mw_on = false;
    on.mw_on = true;
    const auto s0 = initial_state(cfg.mesh, cfg.pvb_convention, cfg.x_initial_occupancy);
    const auto a = run_to_steady_state(s0, off);
    const auto b = run_to_steady_state(s0, on);
    if (!a.converged || !b.converged) throw NumericalError("occupation change: steady state not reached");
    const auto oa = compute_observables(a.state, build_rate_set(cfg.preset, cfg.laser_power, false), off);
    const auto ob = compute_observables(b.state, build_rate_set(cfg.preset, cfg.laser_power, true), on);
    OccupationChange dp;
    dp.nv_es = oa.nv_es - ob.nv_es;
    dp.nv_zero = oa.nv_zero - ob.nv_zero;
    if (oa.ns_zero && ob.ns_zero) dp.ns_zero = *oa.ns_zero - *ob.ns_zero;
    return dp;
}

} // namespace nvpd
