#include "nvpd/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <thread>

#include "nvpd/errors.hpp"

namespace nvpd {

namespace {

template <class Fn>
void parallel_for(size_t n, unsigned threads, Fn fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<size_t>(threads, n));
    if (threads <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double safe_contrast(double off, double on) { return off != 0 ? (off - on) / off : 0.0; }

} // namespace

SweepResult power_sweep(const SimConfig& config, std::span<const double> powers, unsigned threads) {
    if (powers.empty()) throw ValidationError("power sweep needs at least one power");
    for (size_t i = 0; i < powers.size(); ++i) {
        if (!(powers[i] > 0)) throw ValidationError("sweep powers must be positive");
        if (i > 0 && !(powers[i] > powers[i - 1])) throw ValidationError("sweep powers must be strictly increasing");
    }
    validate_config(config);
    const auto s0 = initial_state(config.mesh, config.pvb_convention, config.x_initial_occupancy);

    // 2 runs per power; index 2i is MW off, 2i+1 MW on
    std::vector<SteadyResult> runs(2 * powers.size());
    parallel_for(runs.size(), threads, [&](size_t k) {
        SimConfig c = config;
        c.laser_power = powers[k / 2];
        c.mw_on = (k % 2) == 1;
        runs[k] = run_to_steady_state(s0, c);
    });

    SweepResult out;
    out.rows.reserve(powers.size());
    for (size_t i = 0; i < powers.size(); ++i) {
        SweepRow row;
        row.power_mW = powers[i];
        SimConfig c = config;
        c.laser_power = powers[i];
        const auto& a = runs[2 * i];
        const auto& b = runs[2 * i + 1];
        c.mw_on = false;
        row.off = compute_observables(a.state, build_rate_set(c.preset, c.laser_power, false), c);
        c.mw_on = true;
        row.on = compute_observables(b.state, build_rate_set(c.preset, c.laser_power, true), c);
        row.contrast_odmr = safe_contrast(row.off.I_f, row.on.I_f);
        row.contrast_pdmr = safe_contrast(row.off.I_p, row.on.I_p);
        row.time_to_steady_off = a.time_to_steady;
        row.time_to_steady_on = b.time_to_steady;
        row.converged = a.converged && b.converged;
        out.rows.push_back(std::move(row));
    }
    return out;
}

PeakEstimate find_peak(std::span<const double> x, std::span<const double> y, bool log_x) {
    if (x.size() != y.size()) throw ValidationError("peak search: size mismatch");
    if (x.size() < 3) throw ValidationError("peak search needs at least 3 points");
    const size_t i = std::max_element(y.begin(), y.end()) - y.begin();
    PeakEstimate pk{x[i], y[i], false};
    if (i == 0 || i + 1 == x.size()) return pk;
    if (log_x && !(x[i - 1] > 0)) throw ValidationError("log-axis peak search needs positive abscissae");
    auto ax = [&](size_t k) { return log_x ? std::log(x[k]) : x[k]; };
    const double x0 = ax(i - 1), x1 = ax(i), x2 = ax(i + 1);
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    // divided differences of the interpolating parabola
    const double d01 = (y1 - y0) / (x1 - x0);
    const double d12 = (y2 - y1) / (x2 - x1);
    const double a = (d12 - d01) / (x2 - x0);
    pk.bracketed = true;
    if (a >= 0) return pk;
    const double b = d01 - a * (x0 + x1);
    const double xv = -b / (2 * a);
    pk.P_star = log_x ? std::exp(xv) : xv;
    pk.C_star = y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1);
    return pk;
}

PeakEstimate find_contrast_max(const SweepResult& sweep, ContrastKind kind) {
    std::vector<double> x, y;
    for (const auto& r : sweep.rows) {
        x.push_back(r.power_mW);
        y.push_back(kind == ContrastKind::ODMR ? r.contrast_odmr : r.contrast_pdmr);
    }
    return find_peak(x, y, true);
}

std::vector<MwSensitivity> kmw_sensitivity(const SimConfig& config, std::span<const double> powers,
                                           std::span<const double> factors) {
    std::vector<MwSensitivity> out;
    for (double f : factors) {
        SimConfig c = config;
        c.preset.base.kMW *= f;
        const auto sw = power_sweep(c, powers);
        out.push_back({f, find_contrast_max(sw, ContrastKind::ODMR), find_contrast_max(sw, ContrastKind::PDMR)});
    }
    return out;
}

std::vector<std::string> curve_diagnostics(const ExperimentalCurve& c) {
    std::vector<std::string> d;
    if (c.points.empty()) d.push_back("curve has no points");
    for (const auto& p : c.points) {
        if (!(p.power_mW > 0)) d.push_back("curve power must be positive");
        if (p.sigma && !(*p.sigma > 0)) d.push_back("curve uncertainty must be positive");
        if (!std::isfinite(p.value)) d.push_back("curve value must be finite");
    }
    return d;
}

// ---------------------------------------------------------------------------------------------

bool is_fittable(const std::string& n) {
    static const char* names[] = {"W_k1", "W_ion1_ratio", "W_ion2", "W_ion3", "W_ion4", "rec1", "rec2",
                                  "rec3", "rec4", "rec5", "rec6", "kMW"};
    return std::find(std::begin(names), std::end(names), n) != std::end(names);
}

namespace {
double* param_ref(SimConfig& c, const std::string& n) {
    auto& w = c.preset.pumping;
    auto& r = c.preset.base;
    if (n == "W_k1") return &w.W_k1;
    if (n == "W_ion1_ratio") return &w.W_ion1_ratio;
    if (n == "W_ion2") return &w.W_ion2;
    if (n == "W_ion3") return &w.W_ion3;
    if (n == "W_ion4") return &w.W_ion4;
    if (n == "rec1") return &r.rec1;
    if (n == "rec2") return &r.rec2;
    if (n == "rec3") return &r.rec3;
    if (n == "rec4") return &r.rec4;
    if (n == "rec5") return &r.rec5;
    if (n == "rec6") return &r.rec6;
    if (n == "kMW") return &r.kMW;
    throw ValidationError("parameter '" + n + "' is not fittable");
}
} // namespace

double get_param(const SimConfig& c, const std::string& n) { return *param_ref(const_cast<SimConfig&>(c), n); }
void set_param(SimConfig& c, const std::string& n, double v) { *param_ref(c, n) = v; }

SimConfig with_ns_count(const SimConfig& c, int n) {
    if (n < 0) throw ValidationError("negative N_s count");
    SimConfig out = c;
    for (auto& b : out.mesh.bins) b.n_Ns = 0;
    out.mesh.bins[out.mesh.n_bins / 2].n_Ns = n;
    return out;
}

std::vector<double> simulate_curve(const SimConfig& c, CurveKind kind, std::span<const double> powers,
                                   unsigned threads) {
    std::vector<double> grid(powers.begin(), powers.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto sw = power_sweep(c, grid, threads);
    std::map<double, const SweepRow*> at;
    for (const auto& r : sw.rows) at[r.power_mW] = &r;
    std::vector<double> out;
    out.reserve(powers.size());
    for (double p : powers) {
        const SweepRow& r = *at.at(p);
        switch (kind) {
            case CurveKind::ODMRContrast: out.push_back(r.contrast_odmr); break;
            case CurveKind::PDMRContrast: out.push_back(r.contrast_pdmr); break;
            case CurveKind::PL: out.push_back(r.off.I_f); break;
            case CurveKind::Photocurrent: out.push_back(r.off.I_p); break;
        }
    }
    return out;
}

LmResult levenberg_marquardt(const ResidualFn& f, std::vector<double> x0, const std::vector<double>& lo,
                             const std::vector<double>& hi, int max_iter, double ftol, double xtol,
                             double fd_step) {
    const int n = static_cast<int>(x0.size());
    LmResult res;
    auto clampv = [&](Eigen::VectorXd& v) {
        for (int j = 0; j < n; ++j) v[j] = std::clamp(v[j], lo[j], hi[j]);
    };
    auto to_vec = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); };
    auto eval = [&](const Eigen::VectorXd& x) {
        ++res.evaluations;
        std::vector<double> xs(x.data(), x.data() + x.size());
        return Eigen::VectorXd(to_vec(f(xs)));
    };

    Eigen::VectorXd x = to_vec(x0);
    clampv(x);
    Eigen::VectorXd r = eval(x);
    double cost = 0.5 * r.squaredNorm();
    res.history.push_back(cost);
    if (n == 0) {
        res.x = {};
        res.cost = cost;
        res.converged = true;
        return res;
    }

    double lambda = 1e-3, nu = 2;
    Eigen::MatrixXd J(r.size(), n);
    bool need_jac = true;
    for (int it = 0; it < max_iter; ++it) {
        if (need_jac) {
            for (int j = 0; j < n; ++j) {
                double h = fd_step * std::max(1.0, std::abs(x[j]));
                Eigen::VectorXd xp = x;
                if (xp[j] + h > hi[j]) h = -h;
                xp[j] += h;
                J.col(j) = (eval(xp) - r) / h;
            }
            need_jac = false;
        }
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;

        // projected gradient test
        double pg = 0;
        for (int j = 0; j < n; ++j) {
            const double step = std::clamp(x[j] - g[j], lo[j], hi[j]) - x[j];
            pg = std::max(pg, std::abs(step));
        }
        if (pg < 1e-14 || cost == 0) {
            res.converged = true;
            break;
        }

        Eigen::MatrixXd Ad = A;
        for (int j = 0; j < n; ++j) Ad(j, j) += lambda * std::max(A(j, j), 1e-12);
        Eigen::VectorXd dx = Ad.ldlt().solve(-g);
        Eigen::VectorXd xn = x + dx;
        clampv(xn);
        dx = xn - x;
        const Eigen::VectorXd rn = eval(xn);
        const double cn = 0.5 * rn.squaredNorm();
        const double pred = -(g.dot(dx) + 0.5 * dx.dot(A * dx));
        ++res.iterations;

        if (std::isfinite(cn) && cn < cost) {
            const double rho = pred > 0 ? (cost - cn) / pred : 1.0;
            const double rel = (cost - cn) / std::max(cost, 1e-300);
            x = xn;
            r = rn;
            cost = cn;
            res.history.push_back(cost);
            lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2 * rho - 1, 3));
            nu = 2;
            need_jac = true;
            if (rel < ftol || dx.cwiseAbs().maxCoeff() < xtol || cost < 1e-30) {
                res.converged = true;
                break;
            }
        } else {
            lambda *= nu;
            nu *= 2;
            if (dx.cwiseAbs().maxCoeff() < xtol || lambda > 1e16) {
                res.converged = dx.cwiseAbs().maxCoeff() < xtol;
                break;
            }
        }
    }
    res.x.assign(x.data(), x.data() + n);
    res.cost = cost;
    return res;
}

FitResult fit_rates(const std::vector<ExperimentalCurve>& curves, const std::vector<FreeParam>& free_params,
                    const SimConfig& config, const FitOptions& opts) {
    if (curves.empty()) throw ValidationError("fit needs at least one curve");
    std::vector<std::string> diags;
    for (const auto& c : curves)
        for (auto& d : curve_diagnostics(c)) diags.push_back(d);
    for (const auto& p : free_params) {
        if (!is_fittable(p.name)) diags.push_back("parameter '" + p.name + "' is not fittable");
        else if (!(p.lower < p.upper) || p.lower < 0) diags.push_back("bad bounds for '" + p.name + "'");
    }
    if (!diags.empty()) throw ValidationError(diags);
    validate_config(config);

    const int n = static_cast<int>(free_params.size());
    std::vector<bool> logt(n);
    std::vector<double> lo(n), hi(n), x0(n);
    auto fwd = [&](int j, double v) { return logt[j] ? std::log(v) : v; };
    auto inv = [&](int j, double u) { return logt[j] ? std::exp(u) : u; };
    for (int j = 0; j < n; ++j) {
        const auto& p = free_params[j];
        logt[j] = p.lower > 0;
        lo[j] = fwd(j, p.lower);
        hi[j] = fwd(j, p.upper);
        const double s = p.start ? *p.start : get_param(config, p.name);
        x0[j] = std::clamp(fwd(j, std::clamp(s, p.lower, p.upper)), lo[j], hi[j]);
    }

    auto residuals = [&](const std::vector<double>& u) {
        SimConfig c = config;
        for (int j = 0; j < n; ++j) set_param(c, free_params[j].name, inv(j, u[j]));
        std::vector<double> out;
        for (const auto& cur : curves) {
            std::vector<double> P;
            for (const auto& pt : cur.points) P.push_back(pt.power_mW);
            const auto sim = simulate_curve(c, cur.kind, P, opts.threads);
            for (size_t i = 0; i < P.size(); ++i) {
                const double w = cur.points[i].sigma ? 1.0 / *cur.points[i].sigma : 1.0;
                out.push_back(w * (sim[i] - cur.points[i].value));
            }
        }
        return out;
    };

    std::mt19937_64 rng(opts.seed);
    LmResult best;
    bool have = false;
    int evals = 0;
    for (int start = 0; start <= opts.restarts; ++start) {
        std::vector<double> xs = x0;
        if (start > 0) {
            std::uniform_real_distribution<double> U(0.0, 1.0);
            for (int j = 0; j < n; ++j) xs[j] = lo[j] + U(rng) * (hi[j] - lo[j]);
        }
        auto r = levenberg_marquardt(residuals, xs, lo, hi, opts.max_iterations, opts.ftol, opts.xtol, 1e-4);
        evals += r.evaluations;
        if (!have || r.cost < best.cost) {
            best = r;
            have = true;
        }
    }

    FitResult fr;
    for (int j = 0; j < n; ++j) {
        fr.names.push_back(free_params[j].name);
        fr.values.push_back(inv(j, best.x[j]));
        fr.lower.push_back(free_params[j].lower);
        fr.upper.push_back(free_params[j].upper);
        const double span = hi[j] - lo[j];
        fr.at_bound.push_back(std::abs(best.x[j] - lo[j]) < 1e-9 * span || std::abs(best.x[j] - hi[j]) < 1e-9 * span);
    }
    fr.residual_norm = std::sqrt(2 * best.cost);
    fr.converged = best.converged;
    fr.evaluations = evals;
    fr.iterations = best.iterations;
    fr.objective_history = best.history;
    return fr;
}

NsEstimate estimate_ns_count(const ExperimentalCurve& pdmr, const SimConfig& config,
                             std::span<const int> candidates, unsigned threads) {
    auto d = curve_diagnostics(pdmr);
    if (candidates.empty()) d.push_back("no candidate counts");
    for (int c : candidates)
        if (c < 0) d.push_back("candidate counts must be non-negative");
    if (!d.empty()) throw ValidationError(d);

    std::vector<double> P, V;
    for (const auto& p : pdmr.points) {
        P.push_back(p.power_mW);
        V.push_back(p.value);
    }
    double p_peak;
    {
        std::vector<size_t> idx(P.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return P[a] < P[b]; });
        std::vector<double> xs, ys;
        for (auto i : idx) {
            xs.push_back(P[i]);
            ys.push_back(V[i]);
        }
        p_peak = xs.size() >= 3 ? find_peak(xs, ys).P_star : xs[std::max_element(ys.begin(), ys.end()) - ys.begin()];
    }
    std::vector<double> w(P.size());
    for (size_t i = 0; i < P.size(); ++i) {
        const double base = pdmr.points[i].sigma ? 1.0 / (*pdmr.points[i].sigma * *pdmr.points[i].sigma) : 1.0;
        w[i] = base * (std::abs(P[i] - p_peak) <= 0.25 * p_peak ? 3.0 : 1.0);
    }

    NsEstimate est;
    double best = std::numeric_limits<double>::infinity();
    for (int c : candidates) {
        const auto sim = simulate_curve(with_ns_count(config, c), pdmr.kind, P, threads);
        double s = 0;
        for (size_t i = 0; i < P.size(); ++i) s += w[i] * (sim[i] - V[i]) * (sim[i] - V[i]);
        est.table.emplace_back(c, s);
        if (s < best) {
            best = s;
            est.best = c;
        }
    }
    return est;
}

ResonanceFit fit_resonance(std::span<const std::pair<double, double>> spectrum) {
    if (spectrum.size() < 5) throw ValidationError("resonance fit needs at least 5 points");
    std::vector<std::pair<double, double>> s(spectrum.begin(), spectrum.end());
    std::sort(s.begin(), s.end());
    const size_t n = s.size();
    const double fmin = s.front().first, fmax = s.back().first;
    if (!(fmax > fmin)) throw ValidationError("resonance fit needs distinct frequencies");

    std::vector<double> ys;
    for (auto& p : s) ys.push_back(p.second);
    std::vector<double> sorted = ys;
    std::sort(sorted.begin(), sorted.end());
    const double base0 = sorted[(3 * n) / 4];
    const size_t imin = std::min_element(ys.begin(), ys.end()) - ys.begin();
    const double amp0 = base0 - ys[imin];
    const double span = fmax - fmin;
    double dfmin = span;
    for (size_t i = 1; i < n; ++i) dfmin = std::min(dfmin, s[i].first - s[i - 1].first);

    auto no_dip = [] { return NumericalError("no dip: spectrum has no resolvable resonance"); };
    if (!(amp0 > 0)) throw no_dip();

    // half-depth width estimate
    size_t l = imin, r = imin;
    while (l > 0 && ys[l] < base0 - amp0 / 2) --l;
    while (r + 1 < n && ys[r] < base0 - amp0 / 2) ++r;
    const double w0 = std::max(dfmin, (s[r].first - s[l].first) / 2.355);

    auto model = [&](const std::vector<double>& q, double f) {
        const double z = (f - q[0]) / q[1];
        return q[3] - q[2] * std::exp(-0.5 * z * z);
    };
    auto resid = [&](const std::vector<double>& q) {
        std::vector<double> out(n);
        for (size_t i = 0; i < n; ++i) out[i] = model(q, s[i].first) - s[i].second;
        return out;
    };
    const double yscale = std::max(std::abs(base0), amp0);
    std::vector<double> lo = {fmin, dfmin / 10, 0.0, -1e3 * yscale};
    std::vector<double> hi = {fmax, span, 1e3 * yscale, 1e3 * yscale};
    auto lm = levenberg_marquardt(resid, {s[imin].first, w0, amp0, base0}, lo, hi, 500, 0.0, 1e-15, 1e-7);

    ResonanceFit fit;
    fit.center = lm.x[0];
    fit.width = lm.x[1];
    fit.amplitude = lm.x[2];
    fit.baseline = lm.x[3];
    fit.rms = std::sqrt(2 * lm.cost / n);
    fit.contrast = fit.baseline != 0 ? fit.amplitude / fit.baseline : 0.0;
    const bool tiny = fit.amplitude <= 1e-12 * std::max(std::abs(fit.baseline), 1e-300);
    if (tiny || fit.amplitude < 5 * fit.rms || fit.width >= span || fit.width <= dfmin / 10 * (1 + 1e-9))
        throw no_dip();
    return fit;
}

} // namespace nvpd
