#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nvpd/calibration.hpp"
#include "nvpd/io.hpp"

namespace nvpd::repro {

// 17 log-spaced powers from 0.05 to 5 mW.
std::vector<double> standard_powers();
std::vector<double> log_space(double lo, double hi, int n);

SimConfig with_field(const SimConfig& c, double field_V_per_cm);
SimConfig with_preset(const SimConfig& c, const std::string& name);

// Charge-state dynamics of one NV in a field-free bin.
struct ChargeStatePoint {
    double power_mW = 0;
    double nv_zero = 0, nv_minus = 0;
    double time_to_steady = 0;
    bool converged = false;
};
std::vector<ChargeStatePoint> charge_state_vs_power(const SimConfig& base, const std::vector<double>& powers);
Trajectory charge_state_transient(const SimConfig& base, double power_mW, int samples = 200);

struct NsSeries {
    std::vector<int> counts;
    std::vector<SweepResult> sweeps;
    std::vector<PeakEstimate> pdmr_peaks, odmr_peaks;
};
NsSeries ns_series(const SimConfig& base, const std::vector<int>& counts, const std::vector<double>& powers);

struct PresetComparison {
    std::vector<std::string> names;
    std::vector<SweepResult> sweeps;
    std::vector<PeakEstimate> odmr_peaks;
    std::vector<double> decline;   // (C* - C(P_max)) / C*
};
PresetComparison preset_comparison(const SimConfig& base, const std::vector<std::string>& names,
                                   const std::vector<double>& powers);

struct QeSummary {
    double qef_max_off = 0, qef_max_on = 0;
    double crossover_mW = 0;   // first power where QE_p exceeds QE_f (MW off), NaN if none
    double qep_at_4mW = 0;
};
QeSummary qe_summary(const SweepResult& sweep);

// Figure pipelines: named tables ready for emit_results, plus a human-readable summary.
struct Reproduction {
    std::vector<std::pair<std::string, Table>> tables;
    std::vector<std::string> summary;
};
Reproduction reproduce(const std::string& target, const SimConfig& base);
const std::vector<std::string>& targets();

} // namespace nvpd::repro
