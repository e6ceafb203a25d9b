#include "system.hpp"

#include <cmath>

namespace nvpd::detail {

const char* var_name(int v) {
    static const char* names[] = {"p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8", "pCB", "pVB"};
    return (v >= 0 && v < kVars) ? names[v] : "?";
}

double electron_hop(const Mesh& m) {
    const double dx_cm = m.bin_width * 1e-4;
    return m.transport.mu_e * std::abs(m.transport.field_E) / dx_cm;
}

double hole_hop(const Mesh& m) {
    const double dx_cm = m.bin_width * 1e-4;
    return m.transport.mu_h * std::abs(m.transport.field_E) / dx_cm;
}

System::System(const RateSet& rates, const Mesh& m, bool strict_mode)
    : r(rates), mesh(m), strict(strict_mode), n_bins(m.n_bins) {
    gam_e = electron_hop(m);
    gam_h = hole_hop(m);
}

bool System::active(int bin, int var) const {
    const auto& d = mesh.bins[bin];
    if (var <= P6) return d.n_NV > 0;
    if (var == P7) return d.n_X > 0;
    if (var == P8) return d.n_Ns > 0;
    return true;
}

void System::rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy) const {
    dy.setZero(size());
    const double A = r.branch_A, B = r.branch_B, C = r.branch_C, D = r.branch_D, E = r.branch_E;
    double prom_e = 0, rec_e = 0, prom_h = 0, rec_h = 0;

    for (int b = 0; b < n_bins; ++b) {
        const double* x = y.data() + kVars * b;
        double* d = dy.data() + kVars * b;
        const auto& def = mesh.bins[b];
        const double n = def.n_NV, s = def.n_Ns, nx = def.n_X;
        const double p1 = x[P1], p2 = x[P2], p3 = x[P3], p4 = x[P4], p5 = x[P5], p6 = x[P6];
        const double p7 = x[P7], p8 = x[P8], cb = x[CB], vb = x[VB];
        const double h = 1.0 - vb;

        const double bc = r.ion2 * p6 * vb + r.rec2 * p6 * cb;
        const double rho1 = D * r.rec1 * p1 * h;
        const double rho2 = E * r.rec1 * p2 * h;
        const double back = strict ? r.rec1 * p1 * h : rho1 + rho2;
        const double ion_es = r.ion1 * (p3 + p4);

        if (def.n_NV > 0) {
            d[P1] = -r.k1 * p1 + r.k2 * p3 + r.k5 * p5 + A * bc - r.kMW * p1 + r.kMW * p2 - rho1;
            d[P2] = -r.k1 * p2 + r.k2 * p4 + r.k6 * p5 + B * bc + r.kMW * p1 - r.kMW * p2 - rho2;
            d[P3] = r.k1 * p1 - (r.k2 + r.ion1 + r.k3) * p3;
            d[P4] = r.k1 * p2 - (r.k2 + r.ion1 + r.k4) * p4;
            d[P5] = r.k3 * p3 + r.k4 * p4 - (r.k5 + r.k6) * p5 + C * bc;
            d[P6] = -bc + ion_es + back;
        }
        if (def.n_X > 0) d[P7] = (1 - p7) * r.ion4 * vb + r.rec5 * (1 - p7) * cb - r.rec6 * h * p7;
        if (def.n_Ns > 0) d[P8] = -r.ion3 * p8 + r.rec3 * (1 - p8) * cb - r.rec4 * p8 * h;

        const double ge = n * ion_es + s * r.ion3 * p8;
        const double ce = n * r.rec2 * p6 * cb + s * r.rec3 * (1 - p8) * cb + nx * r.rec5 * (1 - p7) * cb;
        const double gh = n * r.ion2 * p6 * vb + nx * r.ion4 * (1 - p7) * vb;
        const double ch = n * back + s * r.rec4 * p8 * h + nx * r.rec6 * p7 * h;
        d[CB] = ge - ce;
        d[VB] = ch - gh;
        prom_e += ge;
        rec_e += ce;
        prom_h += gh;
        rec_h += ch;
    }

    // upwind drift; E > 0 sends electrons toward bin 0 and holes toward the last bin
    double coll_e = 0, coll_h = 0;
    const int N = n_bins;
    if (gam_e > 0 || gam_h > 0) {
        const bool pos = mesh.transport.field_E > 0;
        for (int b = 0; b < N; ++b) {
            const double cb = y[kVars * b + CB];
            const double h = 1.0 - y[kVars * b + VB];
            const int be = pos ? b - 1 : b + 1;   // electron downstream neighbour
            const int bh = pos ? b + 1 : b - 1;   // hole downstream neighbour
            const double fe = gam_e * cb, fh = gam_h * h;
            dy[kVars * b + CB] -= fe;
            if (be >= 0 && be < N) dy[kVars * be + CB] += fe;
            else coll_e += fe;
            dy[kVars * b + VB] += fh;
            if (bh >= 0 && bh < N) dy[kVars * bh + VB] -= fh;
            else coll_h += fh;
        }
    }
    dy[tail(kCollE)] = coll_e;
    dy[tail(kCollH)] = coll_h;
    dy[tail(kPromE)] = prom_e;
    dy[tail(kRecE)] = rec_e;
    dy[tail(kPromH)] = prom_h;
    dy[tail(kRecH)] = rec_h;
}

void System::jacobian(const Eigen::VectorXd& y, Eigen::MatrixXd& J) const {
    const int nn = size();
    J.setZero(nn, nn);
    const double A = r.branch_A, B = r.branch_B, C = r.branch_C, D = r.branch_D, E = r.branch_E;
    const int tPE = tail(kPromE), tRE = tail(kRecE), tPH = tail(kPromH), tRH = tail(kRecH);

    for (int b = 0; b < n_bins; ++b) {
        const int o = kVars * b;
        const double* x = y.data() + o;
        const auto& def = mesh.bins[b];
        const double n = def.n_NV, s = def.n_Ns, nx = def.n_X;
        const double p1 = x[P1], p2 = x[P2], p6 = x[P6];
        const double p7 = x[P7], p8 = x[P8], cb = x[CB], vb = x[VB];
        const double h = 1.0 - vb;

        const double bc_p6 = r.ion2 * vb + r.rec2 * cb;
        const double bc_cb = r.rec2 * p6;
        const double bc_vb = r.ion2 * p6;
        double back_p1, back_p2, back_vb;
        if (strict) {
            back_p1 = r.rec1 * h;
            back_p2 = 0;
            back_vb = -r.rec1 * p1;
        } else {
            back_p1 = D * r.rec1 * h;
            back_p2 = E * r.rec1 * h;
            back_vb = -r.rec1 * (D * p1 + E * p2);
        }
        auto j = [&](int row, int col) -> double& { return J(o + row, o + col); };

        if (def.n_NV > 0) {
            j(P1, P1) = -r.k1 - r.kMW - D * r.rec1 * h;
            j(P1, P2) = r.kMW;
            j(P1, P3) = r.k2;
            j(P1, P5) = r.k5;
            j(P1, P6) = A * bc_p6;
            j(P1, CB) = A * bc_cb;
            j(P1, VB) = A * bc_vb + D * r.rec1 * p1;

            j(P2, P1) = r.kMW;
            j(P2, P2) = -r.k1 - r.kMW - E * r.rec1 * h;
            j(P2, P4) = r.k2;
            j(P2, P5) = r.k6;
            j(P2, P6) = B * bc_p6;
            j(P2, CB) = B * bc_cb;
            j(P2, VB) = B * bc_vb + E * r.rec1 * p2;

            j(P3, P1) = r.k1;
            j(P3, P3) = -(r.k2 + r.ion1 + r.k3);
            j(P4, P2) = r.k1;
            j(P4, P4) = -(r.k2 + r.ion1 + r.k4);

            j(P5, P3) = r.k3;
            j(P5, P4) = r.k4;
            j(P5, P5) = -(r.k5 + r.k6);
            j(P5, P6) = C * bc_p6;
            j(P5, CB) = C * bc_cb;
            j(P5, VB) = C * bc_vb;

            j(P6, P1) = back_p1;
            j(P6, P2) = back_p2;
            j(P6, P3) = r.ion1;
            j(P6, P4) = r.ion1;
            j(P6, P6) = -bc_p6;
            j(P6, CB) = -bc_cb;
            j(P6, VB) = -bc_vb + back_vb;
        }
        if (def.n_X > 0) {
            j(P7, P7) = -r.ion4 * vb - r.rec5 * cb - r.rec6 * h;
            j(P7, CB) = r.rec5 * (1 - p7);
            j(P7, VB) = (1 - p7) * r.ion4 + r.rec6 * p7;
        }
        if (def.n_Ns > 0) {
            j(P8, P8) = -r.ion3 - r.rec3 * cb - r.rec4 * h;
            j(P8, CB) = r.rec3 * (1 - p8);
            j(P8, VB) = r.rec4 * p8;
        }

        // generation / capture pieces shared by band rows and accumulators
        const double ge_p3 = n * r.ion1, ge_p8 = s * r.ion3;
        const double ce_p6 = n * r.rec2 * cb;
        const double ce_cb = n * r.rec2 * p6 + s * r.rec3 * (1 - p8) + nx * r.rec5 * (1 - p7);
        const double ce_p8 = -s * r.rec3 * cb;
        const double ce_p7 = -nx * r.rec5 * cb;
        const double gh_p6 = n * r.ion2 * vb;
        const double gh_vb = n * r.ion2 * p6 + nx * r.ion4 * (1 - p7);
        const double gh_p7 = -nx * r.ion4 * vb;
        const double ch_p1 = n * back_p1, ch_p2 = n * back_p2;
        const double ch_vb = n * back_vb - s * r.rec4 * p8 - nx * r.rec6 * p7;
        const double ch_p8 = s * r.rec4 * h;
        const double ch_p7 = nx * r.rec6 * h;

        j(CB, P3) += ge_p3;
        j(CB, P4) += ge_p3;
        j(CB, P8) += ge_p8 - ce_p8;
        j(CB, P6) += -ce_p6;
        j(CB, CB) += -ce_cb;
        j(CB, P7) += -ce_p7;

        j(VB, P1) += ch_p1;
        j(VB, P2) += ch_p2;
        j(VB, P6) += -gh_p6;
        j(VB, VB) += ch_vb - gh_vb;
        j(VB, P7) += ch_p7 - gh_p7;
        j(VB, P8) += ch_p8;

        J(tPE, o + P3) += ge_p3;
        J(tPE, o + P4) += ge_p3;
        J(tPE, o + P8) += ge_p8;
        J(tRE, o + P6) += ce_p6;
        J(tRE, o + CB) += ce_cb;
        J(tRE, o + P8) += ce_p8;
        J(tRE, o + P7) += ce_p7;
        J(tPH, o + P6) += gh_p6;
        J(tPH, o + VB) += gh_vb;
        J(tPH, o + P7) += gh_p7;
        J(tRH, o + P1) += ch_p1;
        J(tRH, o + P2) += ch_p2;
        J(tRH, o + VB) += ch_vb;
        J(tRH, o + P8) += ch_p8;
        J(tRH, o + P7) += ch_p7;
    }

    if (gam_e > 0 || gam_h > 0) {
        const int N = n_bins;
        const bool pos = mesh.transport.field_E > 0;
        for (int b = 0; b < N; ++b) {
            const int be = pos ? b - 1 : b + 1;
            const int bh = pos ? b + 1 : b - 1;
            const int icb = kVars * b + CB, ivb = kVars * b + VB;
            J(icb, icb) -= gam_e;
            if (be >= 0 && be < N) J(kVars * be + CB, icb) += gam_e;
            else J(tail(kCollE), icb) += gam_e;
            // hole flux gam_h*(1-vb): d/dvb = -gam_h
            J(ivb, ivb) -= gam_h;
            if (bh >= 0 && bh < N) J(kVars * bh + VB, ivb) += gam_h;
            else J(tail(kCollH), ivb) -= gam_h;
        }
    }
}

Eigen::VectorXd pack(const MeshState& s) {
    const int N = static_cast<int>(s.bins.size());
    Eigen::VectorXd y(kVars * N + kTail);
    for (int b = 0; b < N; ++b) {
        const auto& bs = s.bins[b];
        for (int k = 0; k < 8; ++k) y[kVars * b + k] = bs.p[k];
        y[kVars * b + CB] = bs.pCB;
        y[kVars * b + VB] = bs.pVB;
    }
    const int t = kVars * N;
    y[t + kCollE] = s.collected_electrons;
    y[t + kCollH] = s.collected_holes;
    y[t + kPromE] = s.ledger.promoted_e;
    y[t + kRecE] = s.ledger.recombined_e;
    y[t + kPromH] = s.ledger.promoted_h;
    y[t + kRecH] = s.ledger.recombined_h;
    return y;
}

MeshState unpack(const Eigen::VectorXd& y, int N, double time) {
    MeshState s;
    s.bins.resize(N);
    for (int b = 0; b < N; ++b) {
        auto& bs = s.bins[b];
        for (int k = 0; k < 8; ++k) bs.p[k] = y[kVars * b + k];
        bs.pCB = y[kVars * b + CB];
        bs.pVB = y[kVars * b + VB];
    }
    const int t = kVars * N;
    s.collected_electrons = y[t + kCollE];
    s.collected_holes = y[t + kCollH];
    s.ledger.promoted_e = y[t + kPromE];
    s.ledger.recombined_e = y[t + kRecE];
    s.ledger.promoted_h = y[t + kPromH];
    s.ledger.recombined_h = y[t + kRecH];
    s.time = time;
    return s;
}

} // namespace nvpd::detail
