#pragma once

#include <span>
#include <string>
#include <vector>

#include "nvpd/model.hpp"

namespace nvpd {

// Running totals of carrier creation and capture, integrated alongside the populations.
struct CarrierLedger {
    double promoted_e = 0, recombined_e = 0;
    double promoted_h = 0, recombined_h = 0;
    bool operator==(const CarrierLedger&) const = default;
};

struct MeshState {
    std::vector<BinState> bins;
    double collected_electrons = 0;
    double collected_holes = 0;
    double time = 0;
    CarrierLedger ledger;

    bool operator==(const MeshState&) const = default;
};

struct RhsOptions {
    bool strict_literal_equations = false;
};

// Time derivative in MeshState layout. collected_* and ledger hold rates; time is unused.
MeshState assemble_rhs(const MeshState& state, const RateSet& rates, const Mesh& mesh,
                       RhsOptions opts = {});

struct DriftTerms {
    std::vector<double> d_cb;   // per-bin dpCB/dt from drift
    std::vector<double> d_vb;   // per-bin dpVB/dt from drift
    double collect_e = 0;       // electrons per second leaving into electrodes
    double collect_h = 0;
};

DriftTerms drift_divergence(const MeshState& state, const Mesh& mesh);

// Bin-to-bin hop rates (1/s) from the field and mobilities.
double electron_hop_rate(const Mesh& mesh);
double hole_hop_rate(const Mesh& mesh);

struct IntegratorStats {
    long accepted = 0, rejected = 0, bound_rejections = 0, rhs_evals = 0, jacobians = 0;
    double max_clipped = 0;   // largest excursion outside [0,1] (pCB < 0) removed from an accepted step
};

struct Trajectory {
    std::vector<MeshState> states;   // each carries its own time
    bool steady_state_reached = false;
    double time_to_steady = 0;
    IntegratorStats stats;
};

// Integrates to max_time, or to the last sample time when samples are given.
// Without samples every accepted step is recorded.
Trajectory integrate(const MeshState& state0, const SimConfig& config,
                     std::span<const double> sample_times = {});

struct SteadyResult {
    MeshState state;
    double time_to_steady = 0;
    bool converged = false;
    IntegratorStats stats;
};

SteadyResult run_to_steady_state(const MeshState& state0, const SimConfig& config);

// Largest rate constant acting on anything present in the mesh, plus drift hops.
double characteristic_rate(const RateSet& rates, const Mesh& mesh);

// Algebraic steady state of one closed bin, conserving NV normalisation and the
// total charge carried by the supplied starting occupancies.
BinState single_bin_steady_oracle(const RateSet& rates, const BinDefects& defects,
                                  const BinState& start, RhsOptions opts = {});
BinState single_bin_steady_oracle(const RateSet& rates, const BinDefects& defects,
                                  RhsOptions opts = {});

// Net charge (in units of e) of a bin: NV0, Ns+ and holes positive; CB electrons and filled X negative.
double bin_charge(const BinState& b, const BinDefects& d);

// Per-level derivative residual max-norm for one closed bin.
double single_bin_residual(const BinState& b, const RateSet& rates, const BinDefects& d,
                           RhsOptions opts = {});

} // namespace nvpd
