#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nvpd/observables.hpp"

namespace nvpd {

struct SweepRow {
    double power_mW = 0;
    Observables off, on;
    double contrast_odmr = 0;
    double contrast_pdmr = 0;
    double time_to_steady_off = 0, time_to_steady_on = 0;
    bool converged = true;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

// Runs MW-off and MW-on to steady state at each power. threads = 0 picks the hardware count.
SweepResult power_sweep(const SimConfig& config, std::span<const double> powers, unsigned threads = 0);

enum class ContrastKind { ODMR, PDMR };

struct PeakEstimate {
    double P_star = 0;
    double C_star = 0;
    bool bracketed = false;
};

// Vertex of the parabola through the discrete maximum and its two neighbours,
// optionally in log(x) (power sweeps are geometric).
PeakEstimate find_peak(std::span<const double> x, std::span<const double> y, bool log_x = false);
PeakEstimate find_contrast_max(const SweepResult& sweep, ContrastKind kind);

// How much the peak contrasts move when the MW mixing rate is scaled.
struct MwSensitivity {
    double factor = 1;
    PeakEstimate odmr, pdmr;
};
std::vector<MwSensitivity> kmw_sensitivity(const SimConfig& config, std::span<const double> powers,
                                           std::span<const double> factors);

enum class CurveKind { ODMRContrast, PDMRContrast, PL, Photocurrent };

struct ExperimentalPoint {
    double power_mW = 0;
    double value = 0;
    std::optional<double> sigma;
};

struct ExperimentalCurve {
    CurveKind kind = CurveKind::PDMRContrast;
    std::vector<ExperimentalPoint> points;
};

std::vector<std::string> curve_diagnostics(const ExperimentalCurve& c);

struct FreeParam {
    std::string name;   // W_k1, W_ion1_ratio, W_ion2..W_ion4, rec1..rec6, kMW
    double lower = 0;
    double upper = 0;
    std::optional<double> start;   // defaults to the config value
};

struct FitOptions {
    int max_iterations = 60;
    int restarts = 0;          // extra seeded starts beyond the first
    unsigned seed = 1;
    double ftol = 1e-10;       // relative objective reduction to declare convergence
    double xtol = 1e-9;        // step size in transformed coordinates
    unsigned threads = 0;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values, lower, upper;
    std::vector<bool> at_bound;
    double residual_norm = 0;
    bool converged = false;
    int evaluations = 0;
    int iterations = 0;
    std::vector<double> objective_history;   // objective after each accepted iteration
};

FitResult fit_rates(const std::vector<ExperimentalCurve>& curves, const std::vector<FreeParam>& free_params,
                    const SimConfig& config, const FitOptions& opts = {});

// Reads or writes one named fit parameter of a config.
double get_param(const SimConfig& c, const std::string& name);
void set_param(SimConfig& c, const std::string& name, double v);
bool is_fittable(const std::string& name);

// Config copy whose N_s population is n in the central bin and zero elsewhere.
SimConfig with_ns_count(const SimConfig& c, int n);

// Simulated values for a curve's powers.
std::vector<double> simulate_curve(const SimConfig& c, CurveKind kind, std::span<const double> powers,
                                   unsigned threads = 0);

struct NsEstimate {
    int best = 0;
    std::vector<std::pair<int, double>> table;   // (count, weighted residual)
};

NsEstimate estimate_ns_count(const ExperimentalCurve& pdmr, const SimConfig& config,
                             std::span<const int> candidates, unsigned threads = 0);

struct ResonanceFit {
    double center = 0;      // MHz
    double width = 0;       // MHz, Gaussian sigma
    double amplitude = 0;
    double baseline = 0;
    double contrast = 0;    // amplitude / baseline
    double rms = 0;
};

// Throws NumericalError("no dip ...") when the spectrum has no resolvable dip.
ResonanceFit fit_resonance(std::span<const std::pair<double, double>> spectrum);

// Bounded Levenberg-Marquardt with forward-difference Jacobian; exposed for reuse and testing.
struct LmResult {
    std::vector<double> x;
    double cost = 0;   // 0.5 * |r|^2
    bool converged = false;
    int evaluations = 0, iterations = 0;
    std::vector<double> history;
};
using ResidualFn = std::function<std::vector<double>(const std::vector<double>&)>;
LmResult levenberg_marquardt(const ResidualFn& f, std::vector<double> x0, const std::vector<double>& lo,
                             const std::vector<double>& hi, int max_iter, double ftol, double xtol,
                             double fd_step = 1e-6);

} // namespace nvpd
