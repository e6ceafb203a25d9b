#pragma once

#include <Eigen/Dense>

#include "system.hpp"

namespace nvpd::detail {

// Fourth-order L-stable Rosenbrock scheme with embedded third-order error estimate and
// continuous extension (Hairer-Wanner / Shampine coefficient set, as in Boost.Odeint's
// rosenbrock4). Autonomous systems only.
class Rosenbrock4 {
public:
    explicit Rosenbrock4(const System& sys);

    // One trial step from y (with f0 = f(y)). Fills y_new and err; returns nothing about acceptance.
    void step(const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double dt, Eigen::VectorXd& y_new,
              Eigen::VectorXd& err);

    // Dense output on the last step taken, s in [0,1].
    void interpolate(const Eigen::VectorXd& y_old, const Eigen::VectorXd& y_new, double s,
                     Eigen::VectorXd& out) const;

    long rhs_evals = 0, jacobians = 0;

private:
    const System& sys_;
    Eigen::MatrixXd J_, M_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    Eigen::VectorXd g1_, g2_, g3_, g4_, g5_, tmp_, fn_, cont3_, cont4_;
    Eigen::VectorXd jac_y_;
};

} // namespace nvpd::detail
