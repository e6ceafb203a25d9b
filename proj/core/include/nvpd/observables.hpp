#pragma once

#include <optional>

#include "nvpd/dynamics.hpp"
#include "nvpd/model.hpp"

namespace nvpd {

struct Lifetime {
    double value = 0;         // s
    bool unbounded = false;   // no capture channel anywhere
};

struct Currents {
    double I_e = 0, I_h = 0, I_p = 0;
};

struct Observables {
    double I_f = 0;
    double G_e = 0, G_h = 0;
    Lifetime tau_e, tau_h;
    double I_e = 0, I_h = 0, I_p = 0;
    double QE_f = 0, QE_p = 0;
    // count-weighted means over the defects present
    double nv_minus = 0, nv_zero = 0, nv_es = 0, nv_ms = 0;
    std::optional<double> ns_zero;   // mean p8 over N_s
    std::optional<double> x_filled;  // mean p7 over X
    double cb_total = 0, holes_total = 0;
};

double photoluminescence(const MeshState& s, const RateSet& r, const Mesh& mesh);

struct Generation {
    double G_e = 0, G_h = 0;
};
Generation generation_rates(const MeshState& s, const RateSet& r, const Mesh& mesh);

std::pair<Lifetime, Lifetime> carrier_lifetimes(const MeshState& s, const RateSet& r, const Mesh& mesh);

// I = e*G*tau*mu*E / gap, i.e. Hecht collection over the electrode gap. Unbounded lifetimes give zero.
Currents photocurrent_analytic(double G_e, double G_h, const Lifetime& tau_e, const Lifetime& tau_h,
                               const TransportParams& transport);

// e * (electron + hole outflux at the electrodes) for the state.
double photocurrent_transport(const MeshState& s, const Mesh& mesh);
double photocurrent_transport(const Trajectory& tr, const Mesh& mesh);

// Throws NumericalError when I_off == 0.
double contrast(double I_off, double I_on);

struct QuantumEfficiency {
    double QE_f = 0, QE_p = 0;
};
QuantumEfficiency quantum_efficiencies(const MeshState& s, const RateSet& r, const Mesh& mesh);

Observables compute_observables(const MeshState& s, const RateSet& r, const SimConfig& cfg);

struct OccupationChange {
    double nv_es = 0;
    double nv_zero = 0;
    std::optional<double> ns_zero;
};
OccupationChange occupation_change(const SimConfig& cfg);

} // namespace nvpd
