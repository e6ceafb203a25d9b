#include <gtest/gtest.h>

#include <cmath>

#include "reference_rhs.hpp"
#include "support.hpp"

using namespace nvpd;
using namespace nvpd::testutil;


TEST(Transcription, MatchesSecondTranscriptionAtRandomStates) {
    std::mt19937_64 g(20240611);
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
        const auto cfg = random_config(g);
        const auto r = build_rate_set(cfg.preset, cfg.laser_power, cfg.mw_on);
        const bool strict = k % 5 == 0;
        MeshState s = initial_state(cfg.mesh);
        for (int b = 0; b < cfg.mesh.n_bins; ++b) s.bins[b] = random_bin(g, cfg.mesh.bins[b]);
        const auto a = assemble_rhs(s, r, cfg.mesh, {strict});
        const auto e = reference_rhs(s, r, cfg.mesh, strict);
        // scale: largest magnitude term of the system at this state
        double scale = 0;
        for (const auto& bb : e.bins) {
            for (double v : bb.p) scale = std::max(scale, std::fabs(v));
            scale = std::max({scale, std::fabs(bb.pCB), std::fabs(bb.pVB)});
        }
        for (int b = 0; b < cfg.mesh.n_bins; ++b) {
            for (int i = 0; i < 8; ++i) {
                const double err = rel_err(a.bins[b].p[i], e.bins[b].p[i], scale);
                worst = std::max(worst, err);
                ASSERT_LE(err, 1e-12) << "draw " << k << " bin " << b << " p" << i + 1;
            }
            ASSERT_LE(rel_err(a.bins[b].pCB, e.bins[b].pCB, scale), 1e-12) << "draw " << k << " bin " << b << " pCB";
            ASSERT_LE(rel_err(a.bins[b].pVB, e.bins[b].pVB, scale), 1e-12) << "draw " << k << " bin " << b << " pVB";
        }
        ASSERT_LE(rel_err(a.collected_electrons, e.collected_electrons, scale), 1e-12) << k;
        ASSERT_LE(rel_err(a.collected_holes, e.collected_holes, scale), 1e-12) << k;
        ASSERT_LE(rel_err(a.ledger.promoted_e, e.ledger.promoted_e, scale), 1e-12) << k;
        ASSERT_LE(rel_err(a.ledger.recombined_e, e.ledger.recombined_e, scale), 1e-12) << k;
        ASSERT_LE(rel_err(a.ledger.promoted_h, e.ledger.promoted_h, scale), 1e-12) << k;
        ASSERT_LE(rel_err(a.ledger.recombined_h, e.ledger.recombined_h, scale), 1e-12) << k;
    }
    RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Rhs, DarkInitialStateIsStationary) {
    const auto cfg = default_cfg();
    for (auto placements : std::vector<std::vector<Placement>>{
             {{5, DefectKind::NV, 1}}, {{5, DefectKind::NV, 1}, {3, DefectKind::X, 2}}}) {
        auto m = build_mesh(5, 11, placements, cfg.mesh.transport);
        const auto d = assemble_rhs(initial_state(m), build_rate_set(cfg.preset, 0.0, false), m);
        for (const auto& b : d.bins) {
            for (double v : b.p) EXPECT_EQ(v, 0.0);
            EXPECT_EQ(b.pCB, 0.0);
            EXPECT_EQ(b.pVB, 0.0);
        }
        EXPECT_EQ(d.collected_electrons, 0.0);
        EXPECT_EQ(d.collected_holes, 0.0);
    }
}

TEST(Rhs, DarkNsSeedHoleOnlyRecombines) {
    const auto cfg = default_cfg();
    auto m = build_mesh(5, 1, {{0, DefectKind::NV, 1}, {0, DefectKind::Ns, 1}}, {});
    const auto r = build_rate_set(cfg.preset, 0.0, false);
    const auto d = assemble_rhs(initial_state(m), r, m);
    const auto& b = d.bins[0];
    // the seeded hole meets N_s0 (p8 = 0.5, h = 0.5) and p1 = 0
    EXPECT_DOUBLE_EQ(b.p[7], -r.rec4 * 0.25);
    EXPECT_DOUBLE_EQ(b.pVB, r.rec4 * 0.25);
    for (int i = 0; i < 7; ++i) EXPECT_EQ(b.p[i], 0.0);
    EXPECT_EQ(b.pCB, 0.0);
}

TEST(Rhs, SingleNvConservesProbability) {
    std::mt19937_64 g(7);
    const auto cfg = default_cfg();
    auto m = build_mesh(5, 1, {{0, DefectKind::NV, 1}}, {});
    for (int k = 0; k < 200; ++k) {
        const auto preset = random_preset(g, cfg.preset);
        const auto r = build_rate_set(preset, log_uniform(g, 0.01, 10), k % 2);
        MeshState s = initial_state(m);
        s.bins[0] = random_bin(g, m.bins[0]);
        const auto d = assemble_rhs(s, r, m);
        double sum = 0, mag = 0;
        for (int i = 0; i < 6; ++i) {
            sum += d.bins[0].p[i];
            mag = std::max(mag, std::fabs(d.bins[0].p[i]));
        }
        EXPECT_LE(std::fabs(sum), 1e-13 * mag);
    }
}

TEST(Rhs, StrictModeLeaksWhenBranchingIsGeneral) {
    const auto cfg = default_cfg();
    auto m = build_mesh(5, 1, {{0, DefectKind::NV, 1}}, {});
    auto r = build_rate_set(cfg.preset, 1.0, false);
    r.branch_D = 0.7;
    r.branch_E = 0.4;
    MeshState s = initial_state(m);
    s.bins[0].p = {0.3, 0.2, 0.1, 0.1, 0.1, 0.2, 0, 0};
    s.bins[0].pVB = 0.4;
    const auto d = assemble_rhs(s, r, m, {true});
    double sum = 0;
    for (int i = 0; i < 6; ++i) sum += d.bins[0].p[i];
    const double expected = r.rec1 * (0.3 - 0.7 * 0.3 - 0.4 * 0.2) * 0.6;
    EXPECT_NEAR(sum, expected, 1e-9 * std::fabs(expected));
}

TEST(Drift, NoFieldNoDrift) {
    auto m = build_mesh(5, 11, {}, {});
    m.transport.field_E = 0;
    MeshState s = initial_state(m);
    for (auto& b : s.bins) {
        b.pCB = 0.3;
        b.pVB = 0.6;
    }
    const auto d = drift_divergence(s, m);
    for (int b = 0; b < 11; ++b) {
        EXPECT_EQ(d.d_cb[b], 0.0);
        EXPECT_EQ(d.d_vb[b], 0.0);
    }
    EXPECT_EQ(d.collect_e, 0.0);
    EXPECT_EQ(d.collect_h, 0.0);
}

TEST(Drift, UniformDensityOnlyDepletesBoundaries) {
    TransportParams tp;
    tp.field_E = 25;
    auto m = build_mesh(5, 11, {}, tp);
    MeshState s = initial_state(m);
    for (auto& b : s.bins) {
        b.pCB = 0.2;
        b.pVB = 0.7;
    }
    const auto d = drift_divergence(s, m);
    const double ge = electron_hop_rate(m), gh = hole_hop_rate(m);
    for (int b = 1; b < 10; ++b) {
        EXPECT_NEAR(d.d_cb[b], 0.0, 1e-12 * ge);
        EXPECT_NEAR(d.d_vb[b], 0.0, 1e-12 * gh);
    }
    // electrons leave through bin 0, holes through bin 10, for a positive field
    EXPECT_NEAR(d.d_cb[0], 0.0, 1e-12 * ge);
    EXPECT_NEAR(d.d_cb[10], -0.2 * ge, 1e-12 * ge);
    EXPECT_NEAR(d.collect_e, 0.2 * ge, 1e-12 * ge);
    EXPECT_NEAR(d.collect_h, 0.3 * gh, 1e-12 * gh);
    EXPECT_NEAR(d.d_vb[0], 0.3 * gh, 1e-12 * gh);
    double total = 0;
    for (double v : d.d_cb) total += v;
    EXPECT_NEAR(total, -d.collect_e, 1e-12 * ge);
}

TEST(Drift, HopRateFromMobilityAndField) {
    TransportParams tp;
    tp.field_E = -40;
    tp.mu_e = 2000;
    tp.mu_h = 500;
    auto m = build_mesh(5, 11, {}, tp);
    const double dx_cm = 5.0 / 11 * 1e-4;
    EXPECT_DOUBLE_EQ(electron_hop_rate(m), 2000 * 40 / dx_cm);
    EXPECT_DOUBLE_EQ(hole_hop_rate(m), 500 * 40 / dx_cm);
}
