#include <gtest/gtest.h>

#include <cmath>

#include "nvpd/calibration.hpp"
#include "nvpd/observables.hpp"
#include "support.hpp"

using namespace nvpd;
using namespace nvpd::testutil;

TEST(Properties, InvariantsOverRandomRuns) {
    std::mt19937_64 g(21);
    for (int k = 0; k < 30; ++k) {
        auto c = random_config(g);
        c.max_time = 2e-6;
        const auto s0 = initial_state(c.mesh, c.pvb_convention, c.x_initial_occupancy);
        const auto tr = integrate(s0, c);
        const double tol = 10 * c.atol;
        double charge0 = 0;
        for (int b = 0; b < c.mesh.n_bins; ++b) charge0 += bin_charge(s0.bins[b], c.mesh.bins[b]);
        for (const auto& s : tr.states) {
            double charge = -s.collected_electrons + s.collected_holes;
            for (int b = 0; b < c.mesh.n_bins; ++b) {
                const auto& x = s.bins[b];
                const auto& d = c.mesh.bins[b];
                charge += bin_charge(x, d);
                if (d.n_NV) ASSERT_NEAR(nv_sum(x), 1.0, tol) << k;
                for (double v : x.p) {
                    ASSERT_GE(v, -tol);
                    ASSERT_LE(v, 1 + tol);
                }
                ASSERT_GE(x.pCB, -tol);
                ASSERT_GE(x.pVB, -tol);
                ASSERT_LE(x.pVB, 1 + tol);
            }
            // electrons leave to one electrode, holes to the other: total charge is balanced
            ASSERT_NEAR(charge, charge0, 1e3 * tol) << k << " t=" << s.time;
        }
        EXPECT_LE(tr.stats.max_clipped, tol) << k;
    }
}

TEST(Properties, NvMinusRisesWithPowerAtZeroField) {
    auto c = default_cfg();
    c.mesh.transport.field_E = 0;
    const auto P = std::vector<double>{0.01, 0.03, 0.1, 0.3, 1, 3};
    double prev = -1;
    for (double p : P) {
        c.laser_power = p;
        const auto s = run_to_steady_state(initial_state(c.mesh), c);
        ASSERT_TRUE(s.converged);
        const double v = compute_observables(s.state, build_rate_set(c.preset, p, false), c).nv_minus;
        EXPECT_GT(v, prev) << p;
        prev = v;
    }
}

TEST(Properties, NoMixingMeansNoContrast) {
    auto c = default_cfg();
    c.preset.base.kMW = 0;
    const std::vector<double> P = {0.1, 1, 4};
    for (const auto& r : power_sweep(c, P, 1).rows) {
        EXPECT_EQ(r.contrast_odmr, 0.0);
        EXPECT_EQ(r.contrast_pdmr, 0.0);
    }
}

TEST(Properties, FieldReversalMirrorsCurrent) {
    auto c = default_cfg();
    c.mesh.transport.mu_h = c.mesh.transport.mu_e;
    const auto a = run_to_steady_state(initial_state(c.mesh), c).state;
    const double Ia = photocurrent_transport(a, c.mesh);
    c.mesh.transport.field_E = -c.mesh.transport.field_E;
    const auto b = run_to_steady_state(initial_state(c.mesh), c).state;
    EXPECT_NEAR(photocurrent_transport(b, c.mesh) / Ia, 1.0, 1e-6);
    const int n = c.mesh.n_bins;
    for (int i = 0; i < n; ++i) EXPECT_NEAR(a.bins[i].pCB, b.bins[n - 1 - i].pCB, 1e-9 + 1e-6 * a.bins[i].pCB);
}

TEST(Properties, OdmrBarelyMovesWithNs) {
    const auto c = default_cfg();
    const std::vector<double> P = {0.1, 0.5, 2};
    const auto a = power_sweep(c, P, 1), b = power_sweep(with_ns_count(c, 10), P, 1);
    for (size_t i = 0; i < P.size(); ++i)
        EXPECT_NEAR(b.rows[i].contrast_odmr, a.rows[i].contrast_odmr, 0.1 * a.rows[i].contrast_odmr) << P[i];
}

TEST(Properties, StrictModeLeaksNvPopulation) {
    // literal back-transfer term leaks the NV sum once D or E < 1
    auto c = default_cfg();
    c.preset.base.branch_D = 0.3;
    c.preset.base.branch_E = 0.3;
    c.strict_literal_equations = true;
    c.max_time = 1e-6;
    const auto tr = integrate(initial_state(c.mesh), c);
    EXPECT_GT(std::abs(nv_sum(tr.states.back().bins[5]) - 1.0), 1e-6);
    c.strict_literal_equations = false;
    const auto ok = integrate(initial_state(c.mesh), c);
    EXPECT_NEAR(nv_sum(ok.states.back().bins[5]), 1.0, 10 * c.atol);
}
