#include "nvpd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nvpd/errors.hpp"
#include "rosenbrock.hpp"
#include "system.hpp"

namespace nvpd {

using detail::kVars;
using Eigen::VectorXd;

MeshState assemble_rhs(const MeshState& state, const RateSet& rates, const Mesh& mesh, RhsOptions opts) {
    detail::System sys(rates, mesh, opts.strict_literal_equations);
    VectorXd y = detail::pack(state), dy;
    sys.rhs(y, dy);
    return detail::unpack(dy, mesh.n_bins, 0.0);
}

DriftTerms drift_divergence(const MeshState& state, const Mesh& mesh) {
    DriftTerms out;
    const int N = mesh.n_bins;
    out.d_cb.assign(N, 0.0);
    out.d_vb.assign(N, 0.0);
    const double ge = detail::electron_hop(mesh), gh = detail::hole_hop(mesh);
    if (ge == 0 && gh == 0) return out;
    const bool pos = mesh.transport.field_E > 0;
    for (int b = 0; b < N; ++b) {
        const double fe = ge * state.bins[b].pCB;
        const double fh = gh * (1.0 - state.bins[b].pVB);
        const int be = pos ? b - 1 : b + 1;
        const int bh = pos ? b + 1 : b - 1;
        out.d_cb[b] -= fe;
        if (be >= 0 && be < N) out.d_cb[be] += fe;
        else out.collect_e += fe;
        out.d_vb[b] += fh;
        if (bh >= 0 && bh < N) out.d_vb[bh] -= fh;
        else out.collect_h += fh;
    }
    return out;
}

double electron_hop_rate(const Mesh& mesh) { return detail::electron_hop(mesh); }
double hole_hop_rate(const Mesh& mesh) { return detail::hole_hop(mesh); }

double characteristic_rate(const RateSet& r, const Mesh& mesh) {
    bool nv = false, ns = false, x = false;
    for (const auto& b : mesh.bins) {
        nv |= b.n_NV > 0;
        ns |= b.n_Ns > 0;
        x |= b.n_X > 0;
    }
    double m = 0;
    auto take = [&](std::initializer_list<double> l) {
        for (double v : l) m = std::max(m, v);
    };
    if (nv) take({r.k1, r.k2, r.k3, r.k4, r.k5, r.k6, r.kMW, r.ion1, r.ion2, r.rec1, r.rec2});
    if (ns) take({r.ion3, r.rec3, r.rec4});
    if (x) take({r.ion4, r.rec5, r.rec6});
    take({detail::electron_hop(mesh), detail::hole_hop(mesh)});
    return m;
}

namespace {

struct BoundCheck {
    double worst = 0;
    int index = -1;
};

BoundCheck bound_violation(const VectorXd& y, int n_bins) {
    BoundCheck bc;
    for (int b = 0; b < n_bins; ++b) {
        for (int v = 0; v < kVars; ++v) {
            const int i = kVars * b + v;
            const double x = y[i];
            double viol;
            if (!std::isfinite(x)) viol = std::numeric_limits<double>::infinity();
            else if (v == detail::CB) viol = -x;
            else viol = std::max(-x, x - 1.0);
            if (viol > bc.worst) {
                bc.worst = viol;
                bc.index = i;
            }
        }
    }
    return bc;
}

void clip(VectorXd& y, int n_bins) {
    for (int b = 0; b < n_bins; ++b) {
        for (int v = 0; v < kVars; ++v) {
            double& x = y[kVars * b + v];
            if (v == detail::CB) x = std::max(x, 0.0);
            else x = std::clamp(x, 0.0, 1.0);
        }
    }
}

std::string describe_index(int i, int n_bins) {
    std::ostringstream os;
    if (i < 0) return "unknown component";
    if (i < kVars * n_bins) os << "bin " << i / kVars << " level " << detail::var_name(i % kVars);
    else os << "accumulator " << i - kVars * n_bins;
    return os.str();
}

// Drives the stepper from t0 toward t_end. on_step(t_old, y_old, t_new, y_new, f_new) returns
// true to stop early.
template <class OnStep>
IntegratorStats drive(const detail::System& sys, VectorXd& y, double t0, double t_end,
                      const SimConfig& cfg, double rate_scale, OnStep on_step) {
    IntegratorStats st;
    detail::Rosenbrock4 rb(sys);
    const int nb = sys.n_bins;
    const double bound_tol = 10.0 * cfg.atol;
    VectorXd f(sys.size()), y_new(sys.size()), err(sys.size()), y_old;
    sys.rhs(y, f);
    st.rhs_evals = 1;

    double t = t0;
    double dt = rate_scale > 0 ? std::min(t_end - t0, 1e-3 / rate_scale) : t_end - t0;
    double dt_old = 0, err_old = 1;
    bool first = true, last_rejected = false;
    constexpr double safe = 0.9, fac_max = 5.0, fac_min = 1.0 / 6.0;
    constexpr long max_steps = 5'000'000;

    while (t < t_end) {
        if (st.accepted + st.rejected > max_steps)
            throw NumericalError("integrator exceeded step budget at t=" + std::to_string(t));
        const bool final_step = t + dt >= t_end * (1 - 1e-15);
        if (final_step) dt = t_end - t;

        rb.step(y, f, dt, y_new, err);

        double e2 = 0, worst_e = -1;
        int worst_i = -1;
        for (int i = 0; i < y.size(); ++i) {
            const double sk = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            const double q = err[i] / sk;
            e2 += q * q;
            if (std::abs(q) > worst_e) {
                worst_e = std::abs(q);
                worst_i = i;
            }
        }
        double enorm = std::sqrt(e2 / static_cast<double>(y.size()));
        if (!std::isfinite(enorm)) enorm = 1e10;

        const BoundCheck bchk = bound_violation(y_new, nb);
        const bool bound_ok = bchk.worst <= bound_tol;

        if (enorm <= 1.0 && bound_ok) {
            double fac = std::clamp(std::pow(enorm, 0.25) / safe, fac_min, fac_max);
            if (!first) {
                double fp = (dt_old / dt) * std::pow(enorm * enorm / err_old, 0.25) / safe;
                fac = std::max(fac, std::clamp(fp, fac_min, fac_max));
            }
            first = false;
            double dt_new = dt / fac;
            if (last_rejected) dt_new = std::min(dt_new, dt);
            dt_old = dt;
            err_old = std::max(0.01, enorm);
            last_rejected = false;

            st.max_clipped = std::max(st.max_clipped, bchk.worst);
            clip(y_new, nb);
            y_old = y;
            y = y_new;
            const double t_old = t;
            t = final_step ? t_end : t + dt;
            sys.rhs(y, f);
            ++st.rhs_evals;
            ++st.accepted;
            if (on_step(t_old, y_old, t, y, f, rb)) break;
            dt = dt_new;
        } else {
            if (!bound_ok) {
                ++st.bound_rejections;
                dt *= 0.5;
            } else {
                dt /= std::clamp(std::pow(enorm, 0.25) / safe, 1.0, fac_max);
            }
            ++st.rejected;
            last_rejected = true;
            const double dt_min = 1e-14 * std::max(std::abs(t), 1e-12);
            if (dt < dt_min) {
                const int where = bound_ok ? worst_i : bchk.index;
                std::ostringstream os;
                os << "step size underflow at t=" << t << " s (dt=" << dt << "); stiffest component: "
                   << describe_index(where, nb);
                throw NumericalError(os.str());
            }
        }
    }
    st.rhs_evals += rb.rhs_evals;
    st.jacobians = rb.jacobians;
    return st;
}

double pop_norm(const VectorXd& f, int pop) { return f.head(pop).cwiseAbs().maxCoeff(); }

} // namespace

Trajectory integrate(const MeshState& state0, const SimConfig& cfg, std::span<const double> samples) {
    validate_config(cfg);
    if ((int)state0.bins.size() != cfg.mesh.n_bins)
        throw ValidationError("state has " + std::to_string(state0.bins.size()) + " bins, mesh has " +
                              std::to_string(cfg.mesh.n_bins));
    for (size_t i = 1; i < samples.size(); ++i)
        if (!(samples[i] > samples[i - 1])) throw ValidationError("sample times must be strictly increasing");
    if (!samples.empty() && samples.front() < state0.time)
        throw ValidationError("sample times precede the initial state");

    const RateSet rates = build_rate_set(cfg.preset, cfg.laser_power, cfg.mw_on);
    detail::System sys(rates, cfg.mesh, cfg.strict_literal_equations);
    const double scale = characteristic_rate(rates, cfg.mesh);
    const double thr = cfg.steady_threshold * scale;
    const int nb = cfg.mesh.n_bins;

    Trajectory tr;
    VectorXd y = detail::pack(state0);
    const double t0 = state0.time;
    const double t_end = samples.empty() ? t0 + cfg.max_time : samples.back();

    VectorXd f0;
    sys.rhs(y, f0);
    if (pop_norm(f0, sys.pop_size()) <= thr) {
        tr.steady_state_reached = true;
        tr.time_to_steady = t0;
    }

    size_t next = 0;
    if (samples.empty()) tr.states.push_back(detail::unpack(y, nb, t0));
    else
        while (next < samples.size() && samples[next] <= t0) tr.states.push_back(detail::unpack(y, nb, samples[next++]));

    if (t_end > t0) {
        VectorXd yi;
        tr.stats = drive(sys, y, t0, t_end, cfg, scale,
                         [&](double ta, const VectorXd& ya, double tb, const VectorXd& yb, const VectorXd& fb,
                             const detail::Rosenbrock4& rb) {
                             if (!tr.steady_state_reached && pop_norm(fb, sys.pop_size()) <= thr) {
                                 tr.steady_state_reached = true;
                                 tr.time_to_steady = tb;
                             }
                             if (samples.empty()) {
                                 tr.states.push_back(detail::unpack(yb, nb, tb));
                             } else {
                                 while (next < samples.size() && samples[next] <= tb) {
                                     const double s = (samples[next] - ta) / (tb - ta);
                                     rb.interpolate(ya, yb, s, yi);
                                     clip(yi, nb);
                                     tr.states.push_back(detail::unpack(yi, nb, samples[next]));
                                     ++next;
                                 }
                             }
                             return false;
                         });
    }
    // float round-off can leave the final sample unmatched
    while (!samples.empty() && next < samples.size()) tr.states.push_back(detail::unpack(y, nb, samples[next++]));
    return tr;
}

SteadyResult run_to_steady_state(const MeshState& state0, const SimConfig& cfg) {
    validate_config(cfg);
    if ((int)state0.bins.size() != cfg.mesh.n_bins)
        throw ValidationError("state has " + std::to_string(state0.bins.size()) + " bins, mesh has " +
                              std::to_string(cfg.mesh.n_bins));
    const RateSet rates = build_rate_set(cfg.preset, cfg.laser_power, cfg.mw_on);
    detail::System sys(rates, cfg.mesh, cfg.strict_literal_equations);
    const double scale = characteristic_rate(rates, cfg.mesh);
    const double thr = cfg.steady_threshold * scale;
    const int nb = cfg.mesh.n_bins;

    SteadyResult res;
    VectorXd y = detail::pack(state0);
    const double t0 = state0.time;
    VectorXd f0;
    sys.rhs(y, f0);
    double t_hit = t0;
    bool hit = pop_norm(f0, sys.pop_size()) <= thr;
    if (!hit) {
        res.stats = drive(sys, y, t0, t0 + cfg.max_time, cfg, scale,
                          [&](double, const VectorXd&, double tb, const VectorXd&, const VectorXd& fb,
                              const detail::Rosenbrock4&) {
                              if (pop_norm(fb, sys.pop_size()) <= thr) {
                                  hit = true;
                                  t_hit = tb;
                                  return true;
                              }
                              t_hit = tb;
                              return false;
                          });
    }
    res.state = detail::unpack(y, nb, t_hit);
    res.converged = hit;
    res.time_to_steady = hit ? t_hit - t0 : std::numeric_limits<double>::quiet_NaN();
    return res;
}

double bin_charge(const BinState& b, const BinDefects& d) {
    return d.n_NV * b.p[5] + d.n_Ns * (1.0 - b.p[7]) + (1.0 - b.pVB) - b.pCB - d.n_X * b.p[6];
}

double single_bin_residual(const BinState& b, const RateSet& rates, const BinDefects& d, RhsOptions opts) {
    Mesh m;
    m.n_bins = 1;
    m.bin_width = 1;
    m.bins = {d};
    m.transport.field_E = 0;
    detail::System sys(rates, m, opts.strict_literal_equations);
    MeshState s;
    s.bins = {b};
    VectorXd dy;
    sys.rhs(detail::pack(s), dy);
    return dy.head(kVars).cwiseAbs().maxCoeff();
}

BinState single_bin_steady_oracle(const RateSet& rates, const BinDefects& d, RhsOptions opts) {
    Mesh m;
    m.n_bins = 1;
    m.bin_width = 1;
    m.bins = {d};
    return single_bin_steady_oracle(rates, d, initial_state(m).bins[0], opts);
}

BinState single_bin_steady_oracle(const RateSet& rates, const BinDefects& d, const BinState& start,
                                  RhsOptions opts) {
    Mesh m;
    m.n_bins = 1;
    m.bin_width = 1;
    m.bins = {d};
    m.transport.field_E = 0;
    detail::System sys(rates, m, opts.strict_literal_equations);
    const double scale = std::max(characteristic_rate(rates, m), 1e-300);
    const double Q0 = bin_charge(start, d);
    const bool nv = d.n_NV > 0;
    const bool conserve_nv = nv && !opts.strict_literal_equations;

    // Residual vector: dynamic rows scaled by 1/scale, with the p6 row replaced by NV
    // normalisation and the pCB row replaced by charge conservation; frozen entries pinned.
    MeshState ms;
    ms.bins = {start};
    const VectorXd y_start = detail::pack(ms).head(kVars);
    std::vector<bool> constraint(kVars, false);
    for (int v = 0; v < kVars; ++v)
        if (!sys.active(0, v)) constraint[v] = true;
    if (conserve_nv) constraint[detail::P6] = true;
    constraint[detail::CB] = true;

    VectorXd full(sys.size()), dfull;
    Eigen::MatrixXd Jfull;
    auto residual = [&](const VectorXd& y, VectorXd& F, Eigen::MatrixXd* Jp) {
        full.setZero();
        full.head(kVars) = y;
        sys.rhs(full, dfull);
        F = dfull.head(kVars) / scale;
        if (Jp) {
            sys.jacobian(full, Jfull);
            *Jp = Jfull.topLeftCorner(kVars, kVars) / scale;
        }
        for (int v = 0; v < kVars; ++v) {
            if (!sys.active(0, v)) {
                F[v] = y[v] - y_start[v];
                if (Jp) {
                    Jp->row(v).setZero();
                    (*Jp)(v, v) = 1;
                }
            }
        }
        if (conserve_nv) {
            F[detail::P6] = y.head(6).sum() - 1.0;
            if (Jp) {
                Jp->row(detail::P6).setZero();
                Jp->row(detail::P6).head(6).setOnes();
            }
        }
        BinState b;
        for (int k = 0; k < 8; ++k) b.p[k] = y[k];
        b.pCB = y[detail::CB];
        b.pVB = y[detail::VB];
        F[detail::CB] = bin_charge(b, d) - Q0;
        if (Jp) {
            auto row = Jp->row(detail::CB);
            row.setZero();
            row[detail::P6] = d.n_NV;
            row[detail::P8] = -d.n_Ns;
            row[detail::VB] = -1;
            row[detail::CB] = -1;
            row[detail::P7] = -d.n_X;
        }
    };
    auto project = [&](VectorXd& y) {
        for (int v = 0; v < kVars; ++v) {
            if (v == detail::CB) y[v] = std::max(y[v], 0.0);
            else y[v] = std::clamp(y[v], 0.0, 1.0);
        }
    };

    VectorXd y = y_start, F, Fn, yn;
    Eigen::MatrixXd Jm;
    residual(y, F, nullptr);
    const double tol = 1e-13;
    if (F.cwiseAbs().maxCoeff() <= tol) return start;

    double fnorm = F.cwiseAbs().maxCoeff();
    auto polish = [&](VectorXd& yy, double& fn) {
        for (int it = 0; it < 30 && fn > 1e-15; ++it) {
            residual(yy, F, &Jm);
            yn = yy - Jm.fullPivLu().solve(F);
            residual(yn, Fn, nullptr);
            const double nn = Fn.cwiseAbs().maxCoeff();
            if (!(nn < fn)) break;
            yy = yn;
            fn = nn;
        }
    };

    // With pCB and pVB held fixed every defect level obeys an affine system. Bin charge then
    // falls monotonically with pVB, and the electron balance pins pCB.
    auto levels_at = [&](double cb, double vb, VectorXd& yy) {
        yy = y_start;
        yy[detail::CB] = cb;
        yy[detail::VB] = vb;
        full.setZero();
        full.head(kVars) = yy;
        sys.rhs(full, dfull);
        sys.jacobian(full, Jfull);
        Eigen::Matrix<double, 8, 8> A = Jfull.topLeftCorner(8, 8);
        Eigen::Matrix<double, 8, 1> b = A * yy.head(8) - dfull.head(8);
        for (int v = 0; v < 8; ++v)
            if (!sys.active(0, v)) {
                A.row(v).setZero();
                A(v, v) = 1;
                b[v] = y_start[v];
            }
        if (conserve_nv) {
            A.row(detail::P6).setZero();
            A.row(detail::P6).head(6).setOnes();
            b[detail::P6] = 1;
        }
        const Eigen::Matrix<double, 8, 1> p = A.fullPivLu().solve(b);
        for (int v = 0; v < 8; ++v) yy[v] = std::clamp(p[v], 0.0, 1.0);
    };
    auto charge_gap = [&](const VectorXd& yy) {
        BinState b;
        for (int k = 0; k < 8; ++k) b.p[k] = yy[k];
        b.pCB = yy[detail::CB];
        b.pVB = yy[detail::VB];
        return bin_charge(b, d) - Q0;
    };
    auto balanced_at = [&](double cb, VectorXd& yy) {
        double lo = 0, hi = 1;
        levels_at(cb, lo, yy);
        if (charge_gap(yy) <= 0) return;
        levels_at(cb, hi, yy);
        if (charge_gap(yy) >= 0) return;
        for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
            const double mid = 0.5 * (lo + hi);
            levels_at(cb, mid, yy);
            (charge_gap(yy) > 0 ? lo : hi) = mid;
        }
        levels_at(cb, 0.5 * (lo + hi), yy);
    };
    auto electron_rate = [&](const VectorXd& yy) {
        full.setZero();
        full.head(kVars) = yy;
        sys.rhs(full, dfull);
        return dfull[detail::CB];
    };

    bool solved = false;
    if (sys.active(0, detail::CB)) {
        VectorXd yy;
        balanced_at(0.0, yy);
        bool ok = true;
        if (electron_rate(yy) > 0) {
            double lo = 1e-300, hi = 1e-12;
            for (;;) {
                balanced_at(hi, yy);
                if (electron_rate(yy) < 0) break;
                lo = hi;
                hi *= 10;
                if (hi > 1e6) {
                    ok = false;
                    break;
                }
            }
            for (int it = 0; ok && it < 300 && hi / lo - 1 > 1e-15; ++it) {
                const double mid = std::sqrt(lo * hi);
                balanced_at(mid, yy);
                (electron_rate(yy) > 0 ? lo : hi) = mid;
            }
            if (ok) balanced_at(std::sqrt(lo * hi), yy);
        }
        if (ok) {
            residual(yy, F, nullptr);
            double fn = F.cwiseAbs().maxCoeff();
            polish(yy, fn);
            if (fn <= 1e-10) {
                y = yy;
                fnorm = fn;
                solved = true;
            }
        }
    }

    // Fallback: pseudo-transient continuation, (Dm/dtau - J) dy = F with Dm zero on constraint rows.
    double dtau = 1e-2;
    for (int it = 0; !solved && it < 2000; ++it) {
        residual(y, F, &Jm);
        Eigen::MatrixXd M = -Jm;
        for (int v = 0; v < kVars; ++v)
            if (!constraint[v]) M(v, v) += 1.0 / dtau;
        // constraint rows: J already holds the constraint gradient, M = -J -> solve for +F
        VectorXd step = M.fullPivLu().solve(F);
        yn = y + step;
        project(yn);
        residual(yn, Fn, nullptr);
        const double nn = Fn.cwiseAbs().maxCoeff();
        if (std::isfinite(nn) && nn < 2 * fnorm) {
            y = yn;
            dtau = std::min(dtau * std::clamp(fnorm / std::max(nn, 1e-300), 0.5, 10.0), 1e30);
            fnorm = nn;
            if (fnorm <= tol) break;
        } else {
            dtau *= 0.25;
        }
    }
    if (!solved) polish(y, fnorm);
    if (!(fnorm <= 1e-10)) {
        std::ostringstream os;
        os << "steady-state root finder did not converge (scaled residual " << fnorm << ")";
        throw NumericalError(os.str());
    }
    BinState out;
    for (int k = 0; k < 8; ++k) out.p[k] = y[k];
    out.pCB = y[detail::CB];
    out.pVB = y[detail::VB];
    return out;
}

} // namespace nvpd
