#pragma once

#include <algorithm>
#include <cmath>

#include "nvpd/dynamics.hpp"

namespace nvpd::testutil {

// Second, deliberately naive transcription of the rate system, written independently
// of the engine (conserving back-transfer and band terms included).
inline MeshState reference_rhs(const MeshState& s, const RateSet& r, const Mesh& m, bool strict) {
    MeshState d;
    d.bins.resize(s.bins.size());
    const int N = m.n_bins;
    const double dx = m.bin_width * 1e-4;
    const double ge = m.transport.mu_e * std::fabs(m.transport.field_E) / dx;
    const double gh = m.transport.mu_h * std::fabs(m.transport.field_E) / dx;
    const bool toward_zero = m.transport.field_E > 0;   // electrons

    for (int b = 0; b < N; ++b) {
        const BinState& x = s.bins[b];
        BinState& o = d.bins[b];
        o.pVB = 0;
        const double p1 = x.p[0], p2 = x.p[1], p3 = x.p[2], p4 = x.p[3], p5 = x.p[4], p6 = x.p[5];
        const double p7 = x.p[6], p8 = x.p[7], cb = x.pCB, vb = x.pVB, h = 1 - vb;
        const double nNV = m.bins[b].n_NV, nNs = m.bins[b].n_Ns, nX = m.bins[b].n_X;

        const double back_nv = strict ? r.rec1 * p1 * h : r.rec1 * (r.branch_D * p1 + r.branch_E * p2) * h;
        if (nNV > 0) {
            o.p[0] = -r.k1 * p1 + r.k2 * p3 + r.k5 * p5 + r.branch_A * r.ion2 * p6 * vb - r.kMW * p1 + r.kMW * p2 +
                     r.branch_A * r.rec2 * p6 * cb - r.branch_D * r.rec1 * p1 * h;
            o.p[1] = -r.k1 * p2 + r.k2 * p4 + r.k6 * p5 + r.kMW * p1 - r.kMW * p2 + r.branch_B * r.rec2 * p6 * cb -
                     r.branch_E * r.rec1 * p2 * h + r.branch_B * r.ion2 * p6 * vb;
            o.p[2] = r.k1 * p1 - (r.k2 + r.ion1 + r.k3) * p3;
            o.p[3] = r.k1 * p2 - (r.k2 + r.ion1 + r.k4) * p4;
            o.p[4] = r.k3 * p3 + r.k4 * p4 - (r.k5 + r.k6) * p5 + r.branch_C * r.ion2 * p6 * vb +
                     r.branch_C * r.rec2 * p6 * cb;
            o.p[5] = -r.ion2 * p6 * vb + r.ion1 * (p4 + p3) - r.rec2 * p6 * cb + back_nv;
        }
        if (nX > 0) o.p[6] = (1 - p7) * r.ion4 * vb + r.rec5 * (1 - p7) * cb - r.rec6 * h * p7;
        if (nNs > 0) o.p[7] = -r.ion3 * p8 + r.rec3 * (1 - p8) * cb - r.rec4 * p8 * h;

        const double gen_e = nNV * r.ion1 * (p3 + p4) + nNs * r.ion3 * p8;
        const double cap_e = nNV * r.rec2 * p6 * cb + nNs * r.rec3 * (1 - p8) * cb + nX * r.rec5 * (1 - p7) * cb;
        const double gen_h = nNV * r.ion2 * p6 * vb + nX * r.ion4 * (1 - p7) * vb;
        const double cap_h = nNV * back_nv + nNs * r.rec4 * p8 * h + nX * r.rec6 * p7 * h;
        o.pCB = gen_e - cap_e;
        o.pVB = -gen_h + cap_h;
        d.ledger.promoted_e += gen_e;
        d.ledger.recombined_e += cap_e;
        d.ledger.promoted_h += gen_h;
        d.ledger.recombined_h += cap_h;
    }

    // upwind drift; holes travel opposite to electrons
    for (int b = 0; b < N; ++b) {
        const int up_e = toward_zero ? b + 1 : b - 1;
        d.bins[b].pCB += -ge * s.bins[b].pCB + (up_e >= 0 && up_e < N ? ge * s.bins[up_e].pCB : 0.0);
        const int up_h = toward_zero ? b - 1 : b + 1;
        const double hin = up_h >= 0 && up_h < N ? gh * (1 - s.bins[up_h].pVB) : 0.0;
        d.bins[b].pVB -= -gh * (1 - s.bins[b].pVB) + hin;
    }
    const int e_exit = toward_zero ? 0 : N - 1, h_exit = toward_zero ? N - 1 : 0;
    d.collected_electrons = ge * s.bins[e_exit].pCB;
    d.collected_holes = gh * (1 - s.bins[h_exit].pVB);
    if (m.transport.field_E == 0) d.collected_electrons = d.collected_holes = 0;
    return d;
}

inline double rel_err(double a, double b, double scale) { return std::fabs(a - b) / std::max(scale, 1e-300); }

} // namespace nvpd::testutil
