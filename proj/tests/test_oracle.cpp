#include <gtest/gtest.h>

#include <cmath>

#include "nvpd/errors.hpp"
#include "support.hpp"

using namespace nvpd;
using namespace nvpd::testutil;

namespace {

Mesh closed_mesh(const BinDefects& d) {
    TransportParams tp;
    tp.field_E = 0;
    std::vector<Placement> pl;
    if (d.n_NV) pl.push_back({0, DefectKind::NV, d.n_NV});
    if (d.n_Ns) pl.push_back({0, DefectKind::Ns, d.n_Ns});
    if (d.n_X) pl.push_back({0, DefectKind::X, d.n_X});
    return build_mesh(5, 1, pl, tp);
}

} // namespace

TEST(Oracle, ResidualVanishes) {
    std::mt19937_64 g(11);
    const auto base = default_cfg();
    for (int k = 0; k < 40; ++k) {
        const auto p = random_preset(g, base.preset);
        const auto r = build_rate_set(p, log_uniform(g, 0.01, 10), k % 2);
        const BinDefects d{1, k % 3 == 0 ? 0 : 1 + k % 4, k % 4 == 1 ? 1 : 0};
        const auto b = single_bin_steady_oracle(r, d);
        const double scale = characteristic_rate(r, closed_mesh(d));
        EXPECT_LT(single_bin_residual(b, r, d) / scale, 1e-10) << k;
        EXPECT_NEAR(nv_sum(b), 1.0, 1e-12);
        // charge carried by the initial occupancies is retained
        EXPECT_NEAR(bin_charge(b, d), bin_charge(initial_state(closed_mesh(d)).bins[0], d), 1e-10);
    }
}

TEST(Oracle, DarkReturnsInitialOccupancies) {
    const auto base = default_cfg();
    auto r = build_rate_set(base.preset, 0.0, false);
    const BinDefects d{1, 0, 0};
    const auto b = single_bin_steady_oracle(r, d);
    EXPECT_EQ(b, initial_state(closed_mesh(d)).bins[0]);
}

TEST(Oracle, AgreesWithTimeIntegration) {
    std::mt19937_64 g(3);
    auto base = default_cfg();
    base.steady_threshold = 1e-14;
    base.rtol = 1e-9;
    base.atol = 1e-15;
    base.max_time = 1e-1;
    for (int k = 0; k < 10; ++k) {
        SimConfig c = base;
        c.preset = random_preset(g, base.preset);
        c.laser_power = log_uniform(g, 0.05, 5);
        const BinDefects d{1, k % 2 ? 2 : 0, 0};
        c.mesh = closed_mesh(d);
        const auto r = build_rate_set(c.preset, c.laser_power, c.mw_on);
        const auto o = single_bin_steady_oracle(r, d);
        const auto s = run_to_steady_state(initial_state(c.mesh), c);
        ASSERT_TRUE(s.converged) << k;
        const auto& b = s.state.bins[0];
        auto tol = [&](double v) { return 1e-6 * std::abs(v) + 10 * c.atol; };
        for (int i = 0; i < 8; ++i) EXPECT_NEAR(b.p[i], o.p[i], tol(o.p[i])) << k << " p" << i + 1;
        EXPECT_NEAR(b.pCB, o.pCB, tol(o.pCB)) << k;
        EXPECT_NEAR(b.pVB, o.pVB, tol(o.pVB)) << k;
    }
}

TEST(Oracle, StrictModeHasOwnFixedPoint) {
    const auto base = default_cfg();
    const auto r = build_rate_set(base.preset, 1.0, false);
    const BinDefects d{1, 0, 0};
    const auto b = single_bin_steady_oracle(r, d, RhsOptions{true});
    EXPECT_LT(single_bin_residual(b, r, d, RhsOptions{true}) / characteristic_rate(r, closed_mesh(d)), 1e-10);
}
