#include <gtest/gtest.h>

#include "support.hpp"
#include "system.hpp"

using namespace nvpd;
using namespace nvpd::testutil;

TEST(Jacobian, MatchesCentralDifferences) {
    std::mt19937_64 g(99);
    for (int k = 0; k < 60; ++k) {
        const auto cfg = random_config(g);
        const auto r = build_rate_set(cfg.preset, cfg.laser_power, cfg.mw_on);
        const detail::System sys(r, cfg.mesh, k % 3 == 0);
        MeshState s = initial_state(cfg.mesh);
        for (int b = 0; b < cfg.mesh.n_bins; ++b) s.bins[b] = random_bin(g, cfg.mesh.bins[b]);
        const Eigen::VectorXd y = detail::pack(s);

        Eigen::MatrixXd J;
        sys.jacobian(y, J);
        Eigen::VectorXd fp, fm;
        double scale = J.cwiseAbs().maxCoeff();
        for (int j = 0; j < y.size(); ++j) {
            const double h = 1e-6 * std::max(1e-3, std::abs(y[j]));
            Eigen::VectorXd yp = y, ym = y;
            yp[j] += h;
            ym[j] -= h;
            sys.rhs(yp, fp);
            sys.rhs(ym, fm);
            const Eigen::VectorXd col = (fp - fm) / (2 * h);
            for (int i = 0; i < y.size(); ++i)
                ASSERT_NEAR(J(i, j), col[i], 1e-6 * scale + 1e-6 * std::abs(col[i]))
                    << "draw " << k << " entry (" << i << "," << j << ")";
        }
    }
}

TEST(Jacobian, FrozenLevelsHaveZeroRows) {
    const auto cfg = default_cfg();
    const auto r = build_rate_set(cfg.preset, 1.0, true);
    const detail::System sys(r, cfg.mesh, false);
    Eigen::MatrixXd J;
    sys.jacobian(detail::pack(initial_state(cfg.mesh)), J);
    for (int b = 0; b < cfg.mesh.n_bins; ++b)
        for (int v = 0; v < detail::kVars; ++v)
            if (!sys.active(b, v)) EXPECT_EQ(J.row(detail::kVars * b + v).cwiseAbs().sum(), 0.0) << b << " " << v;
}

TEST(Layout, PackUnpackRoundTrip) {
    std::mt19937_64 g(5);
    const auto cfg = random_config(g);
    MeshState s = initial_state(cfg.mesh);
    for (int b = 0; b < cfg.mesh.n_bins; ++b) s.bins[b] = random_bin(g, cfg.mesh.bins[b]);
    s.collected_electrons = 0.25;
    s.collected_holes = 0.5;
    s.ledger = {1, 2, 3, 4};
    s.time = 3e-7;
    EXPECT_EQ(detail::unpack(detail::pack(s), cfg.mesh.n_bins, 3e-7), s);
}
