#include "rosenbrock.hpp"

namespace nvpd::detail {

namespace {
constexpr double gamma = 0.25;
constexpr double a21 = 1.544, a31 = 0.9466785280815826, a32 = 0.2557011698983284;
constexpr double a41 = 3.314825187068521, a42 = 2.896124015972201, a43 = 0.9986419139977817;
constexpr double a51 = 1.221224509226641, a52 = 6.019134481288629, a53 = 12.53708332932087,
                 a54 = -0.6878860361058950;
constexpr double c21 = -5.6688, c31 = -2.430093356833875, c32 = -0.2063599157091915;
constexpr double c41 = -0.1073529058151375, c42 = -9.594562251023355, c43 = -20.47028614809616;
constexpr double c51 = 7.496443313967647, c52 = -10.24680431464352, c53 = -33.99990352819905,
                 c54 = 11.70890893206160;
constexpr double c61 = 8.083246795921522, c62 = -7.981132988064893, c63 = -31.52159432874371,
                 c64 = 16.31930543123136, c65 = -6.058818238834054;
constexpr double d21 = 10.12623508344586, d22 = -7.487995877610167, d23 = -34.80091861555747,
                 d24 = -7.992771707568823, d25 = 1.025137723295662;
constexpr double d31 = -0.6762803392801253, d32 = 6.087714651680015, d33 = 16.43084320892478,
                 d34 = 24.76722511418386, d35 = -6.594389125716872;
} // namespace

Rosenbrock4::Rosenbrock4(const System& sys) : sys_(sys) {
    const int n = sys.size();
    J_.resize(n, n);
    M_.resize(n, n);
    for (auto* v : {&g1_, &g2_, &g3_, &g4_, &g5_, &tmp_, &fn_, &cont3_, &cont4_}) v->resize(n);
}

void Rosenbrock4::step(const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double dt,
                       Eigen::VectorXd& y_new, Eigen::VectorXd& err) {
    // Jacobian is reused across rejected retries from the same point.
    if (jac_y_.size() != y.size() || jac_y_ != y) {
        sys_.jacobian(y, J_);
        ++jacobians;
        jac_y_ = y;
    }
    M_ = -J_;
    M_.diagonal().array() += 1.0 / (gamma * dt);
    lu_.compute(M_);

    g1_ = lu_.solve(f0);

    tmp_ = y + a21 * g1_;
    sys_.rhs(tmp_, fn_);
    g2_ = lu_.solve(fn_ + (c21 / dt) * g1_);

    tmp_ = y + a31 * g1_ + a32 * g2_;
    sys_.rhs(tmp_, fn_);
    g3_ = lu_.solve(fn_ + (c31 * g1_ + c32 * g2_) / dt);

    tmp_ = y + a41 * g1_ + a42 * g2_ + a43 * g3_;
    sys_.rhs(tmp_, fn_);
    g4_ = lu_.solve(fn_ + (c41 * g1_ + c42 * g2_ + c43 * g3_) / dt);

    tmp_ = y + a51 * g1_ + a52 * g2_ + a53 * g3_ + a54 * g4_;
    sys_.rhs(tmp_, fn_);
    g5_ = lu_.solve(fn_ + (c51 * g1_ + c52 * g2_ + c53 * g3_ + c54 * g4_) / dt);

    tmp_ += g5_;
    sys_.rhs(tmp_, fn_);
    err = lu_.solve(fn_ + (c61 * g1_ + c62 * g2_ + c63 * g3_ + c64 * g4_ + c65 * g5_) / dt);
    rhs_evals += 5;

    y_new = tmp_ + err;
    cont3_ = d21 * g1_ + d22 * g2_ + d23 * g3_ + d24 * g4_ + d25 * g5_;
    cont4_ = d31 * g1_ + d32 * g2_ + d33 * g3_ + d34 * g4_ + d35 * g5_;
}

void Rosenbrock4::interpolate(const Eigen::VectorXd& y_old, const Eigen::VectorXd& y_new, double s,
                              Eigen::VectorXd& out) const {
    const double s1 = 1.0 - s;
    out = y_old * s1 + s * (y_new + s1 * (cont3_ + s * cont4_));
}

} // namespace nvpd::detail
