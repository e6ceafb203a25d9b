#pragma once

#include <Eigen/Dense>

#include "nvpd/dynamics.hpp"

namespace nvpd::detail {

constexpr int kVars = BinState::kLevels;
constexpr int kTail = 6;
enum Tail { kCollE = 0, kCollH, kPromE, kRecE, kPromH, kRecH };

enum Var { P1 = 0, P2, P3, P4, P5, P6, P7, P8, CB, VB };

const char* var_name(int v);
double electron_hop(const Mesh& m);
double hole_hop(const Mesh& m);

// Flat layout: 10 entries per bin followed by the six accumulators.
struct System {
    const RateSet& r;
    const Mesh& mesh;
    bool strict = false;
    double gam_e = 0, gam_h = 0;
    int n_bins = 0;

    System(const RateSet& rates, const Mesh& m, bool strict_mode);

    int size() const { return kVars * n_bins + kTail; }
    int pop_size() const { return kVars * n_bins; }
    int tail(int k) const { return kVars * n_bins + k; }

    void rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dy) const;
    void jacobian(const Eigen::VectorXd& y, Eigen::MatrixXd& J) const;

    // True when this entry of the state evolves (absent defect levels are frozen).
    bool active(int bin, int var) const;
};

Eigen::VectorXd pack(const MeshState& s);
MeshState unpack(const Eigen::VectorXd& y, int n_bins, double time);

} // namespace nvpd::detail
