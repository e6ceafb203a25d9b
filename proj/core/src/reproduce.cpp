#include "nvpd/reproduce.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "nvpd/errors.hpp"

namespace nvpd::repro {

namespace {

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double loginterp(const std::vector<double>& x, const std::vector<double>& y, double at) {
    if (at <= x.front()) return y.front();
    if (at >= x.back()) return y.back();
    for (size_t i = 1; i < x.size(); ++i)
        if (at <= x[i]) {
            const double t = std::log(at / x[i - 1]) / std::log(x[i] / x[i - 1]);
            return y[i - 1] + t * (y[i] - y[i - 1]);
        }
    return y.back();
}

Table peaks_table(const std::vector<std::string>& labels, const std::string& label_col,
                  const std::vector<PeakEstimate>& pk) {
    Table t;
    t.columns = {label_col, "P_star_mW", "C_star", "bracketed"};
    for (size_t i = 0; i < pk.size(); ++i)
        t.rows.push_back({labels[i], format_double(pk[i].P_star), format_double(pk[i].C_star),
                          pk[i].bracketed ? "1" : "0"});
    return t;
}

std::string peak_line(const std::string& what, const PeakEstimate& p) {
    return what + ": peak " + fmt("%.3f", p.C_star) + " at " + fmt("%.3f", p.P_star) + " mW" +
           (p.bracketed ? "" : " (not bracketed)");
}

} // namespace

std::vector<double> log_space(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo * std::pow(hi / lo, double(i) / (n - 1));
    return v;
}

std::vector<double> standard_powers() { return log_space(0.05, 5.0, 17); }

SimConfig with_field(const SimConfig& c, double field) {
    SimConfig out = c;
    out.mesh.transport.field_E = field;
    return out;
}

SimConfig with_preset(const SimConfig& c, const std::string& name) {
    SimConfig out = c;
    out.preset = preset_by_name(name);
    return out;
}

std::vector<ChargeStatePoint> charge_state_vs_power(const SimConfig& base, const std::vector<double>& powers) {
    const SimConfig closed = with_field(base, 0.0);
    const auto s0 = initial_state(closed.mesh, closed.pvb_convention, closed.x_initial_occupancy);
    std::vector<ChargeStatePoint> out;
    for (double P : powers) {
        SimConfig c = closed;
        c.laser_power = P;
        c.mw_on = false;
        const auto r = run_to_steady_state(s0, c);
        const auto o = compute_observables(r.state, build_rate_set(c.preset, P, false), c);
        out.push_back({P, o.nv_zero, o.nv_minus, r.time_to_steady, r.converged});
    }
    return out;
}

Trajectory charge_state_transient(const SimConfig& base, double P, int samples) {
    SimConfig c = with_field(base, 0.0);
    c.laser_power = P;
    c.mw_on = false;
    const auto s0 = initial_state(c.mesh, c.pvb_convention, c.x_initial_occupancy);
    auto times = log_space(1e-10, 2e-5, samples);
    times.insert(times.begin(), 0.0);
    return integrate(s0, c, times);
}

NsSeries ns_series(const SimConfig& base, const std::vector<int>& counts, const std::vector<double>& powers) {
    NsSeries s;
    s.counts = counts;
    for (int n : counts) {
        s.sweeps.push_back(power_sweep(with_ns_count(base, n), powers));
        s.pdmr_peaks.push_back(find_contrast_max(s.sweeps.back(), ContrastKind::PDMR));
        s.odmr_peaks.push_back(find_contrast_max(s.sweeps.back(), ContrastKind::ODMR));
    }
    return s;
}

PresetComparison preset_comparison(const SimConfig& base, const std::vector<std::string>& names,
                                   const std::vector<double>& powers) {
    PresetComparison pc;
    pc.names = names;
    for (const auto& n : names) {
        pc.sweeps.push_back(power_sweep(with_preset(base, n), powers));
        const auto pk = find_contrast_max(pc.sweeps.back(), ContrastKind::ODMR);
        pc.odmr_peaks.push_back(pk);
        const double last = pc.sweeps.back().rows.back().contrast_odmr;
        pc.decline.push_back(pk.C_star != 0 ? (pk.C_star - last) / pk.C_star : 0.0);
    }
    return pc;
}

QeSummary qe_summary(const SweepResult& sw) {
    QeSummary q;
    std::vector<double> P, qef, qep;
    for (const auto& r : sw.rows) {
        P.push_back(r.power_mW);
        qef.push_back(r.off.QE_f);
        qep.push_back(r.off.QE_p);
        q.qef_max_off = std::max(q.qef_max_off, r.off.QE_f);
        q.qef_max_on = std::max(q.qef_max_on, r.on.QE_f);
    }
    q.crossover_mW = std::numeric_limits<double>::quiet_NaN();
    for (size_t j = 1; j < P.size(); ++j) {
        const double d0 = qep[j - 1] - qef[j - 1], d1 = qep[j] - qef[j];
        if (d0 <= 0 && d1 > 0) {
            const double t = -d0 / (d1 - d0);
            q.crossover_mW = P[j - 1] * std::pow(P[j] / P[j - 1], t);
            break;
        }
    }
    q.qep_at_4mW = loginterp(P, qep, 4.0);
    return q;
}

const std::vector<std::string>& targets() {
    static const std::vector<std::string> t = {"fig5a", "fig5b", "fig6", "fig7", "fig8", "fig9"};
    return t;
}

Reproduction reproduce(const std::string& target, const SimConfig& base) {
    Reproduction rep;
    const auto powers = standard_powers();
    const std::vector<int> ns_counts = {0, 1, 2, 5, 10};

    if (target == "fig5a") {
        Table t;
        t.columns = {"time_s"};
        const std::vector<double> P = {0.1, 1.0, 5.0};
        std::vector<Trajectory> trs;
        for (double p : P) {
            trs.push_back(charge_state_transient(base, p));
            t.columns.push_back("nv_minus_" + fmt("%g", p) + "mW");
            t.columns.push_back("nv_zero_" + fmt("%g", p) + "mW");
        }
        SimConfig c = with_field(base, 0.0);
        const size_t n = trs.front().states.size();
        for (size_t i = 0; i < n; ++i) {
            std::vector<std::string> row = {format_double(trs.front().states[i].time)};
            for (size_t k = 0; k < P.size(); ++k) {
                c.laser_power = P[k];
                const auto o = compute_observables(trs[k].states[i], build_rate_set(c.preset, P[k], false), c);
                row.push_back(format_double(o.nv_minus));
                row.push_back(format_double(o.nv_zero));
            }
            t.rows.push_back(std::move(row));
        }
        rep.tables.emplace_back("transient", std::move(t));
        for (const auto& pt : charge_state_vs_power(base, P))
            rep.summary.push_back(fmt("P=%g mW: ", pt.power_mW) + fmt("NV0 %.1f %%", 100 * pt.nv_zero) +
                                  fmt(", NV- %.1f %%", 100 * pt.nv_minus) +
                                  fmt(", steady after %.3g s", pt.time_to_steady));
    } else if (target == "fig5b") {
        Table t;
        t.columns = {"power_mW", "nv_zero", "nv_minus", "time_to_steady_s", "converged"};
        for (const auto& pt : charge_state_vs_power(base, powers))
            t.rows.push_back({format_double(pt.power_mW), format_double(pt.nv_zero), format_double(pt.nv_minus),
                              format_double(pt.time_to_steady), pt.converged ? "1" : "0"});
        rep.tables.emplace_back("charge_state", std::move(t));
        for (const auto& pt : charge_state_vs_power(base, {0.1, 1.0, 5.0}))
            rep.summary.push_back(fmt("P=%g mW: ", pt.power_mW) + fmt("NV0/NV- %.1f", 100 * pt.nv_zero) +
                                  fmt("/%.1f %%", 100 * pt.nv_minus) + fmt(", t_ss %.3g s", pt.time_to_steady));
    } else if (target == "fig6") {
        const auto s = ns_series(base, ns_counts, powers);
        Table t;
        t.columns = {"power_mW"};
        for (int n : ns_counts) t.columns.push_back("pdmr_ns" + std::to_string(n));
        for (size_t i = 0; i < powers.size(); ++i) {
            std::vector<std::string> row = {format_double(powers[i])};
            for (const auto& sw : s.sweeps) row.push_back(format_double(sw.rows[i].contrast_pdmr));
            t.rows.push_back(std::move(row));
        }
        rep.tables.emplace_back("pdmr", std::move(t));
        std::vector<std::string> labels;
        for (int n : ns_counts) labels.push_back(std::to_string(n));
        rep.tables.emplace_back("peaks", peaks_table(labels, "n_Ns", s.pdmr_peaks));

        // occupation changes with one N_s (MW off minus MW on)
        Table d;
        d.columns = {"power_mW", "dP_nv_es", "dP_nv_zero", "dP_ns_zero"};
        const auto& one = s.sweeps[1];
        for (const auto& r : one.rows)
            d.rows.push_back({format_double(r.power_mW), format_double(r.off.nv_es - r.on.nv_es),
                              format_double(r.off.nv_zero - r.on.nv_zero),
                              format_double(r.off.ns_zero.value_or(0) - r.on.ns_zero.value_or(0))});
        rep.tables.emplace_back("occupation", std::move(d));
        for (size_t i = 0; i < ns_counts.size(); ++i)
            rep.summary.push_back(peak_line("PDMR n_Ns=" + std::to_string(ns_counts[i]), s.pdmr_peaks[i]));
    } else if (target == "fig7") {
        const auto s = ns_series(base, {0, 10}, powers);
        Table t;
        t.columns = {"power_mW", "odmr_contrast", "pdmr_contrast_ns10"};
        for (size_t i = 0; i < powers.size(); ++i)
            t.rows.push_back({format_double(powers[i]), format_double(s.sweeps[0].rows[i].contrast_odmr),
                              format_double(s.sweeps[1].rows[i].contrast_pdmr)});
        rep.tables.emplace_back("contrast", std::move(t));
        rep.tables.emplace_back("peaks", peaks_table({"odmr", "pdmr_ns10"}, "curve",
                                                     {s.odmr_peaks[0], s.pdmr_peaks[1]}));
        rep.summary.push_back(peak_line("ODMR", s.odmr_peaks[0]));
        rep.summary.push_back(peak_line("PDMR n_Ns=10", s.pdmr_peaks[1]));
    } else if (target == "fig8") {
        const auto pc = preset_comparison(base, {"wirtitsch", "tetienne"}, powers);
        Table t;
        t.columns = {"power_mW", "odmr_wirtitsch", "odmr_tetienne"};
        for (size_t i = 0; i < powers.size(); ++i)
            t.rows.push_back({format_double(powers[i]), format_double(pc.sweeps[0].rows[i].contrast_odmr),
                              format_double(pc.sweeps[1].rows[i].contrast_odmr)});
        rep.tables.emplace_back("odmr", std::move(t));
        Table p = peaks_table(pc.names, "preset", pc.odmr_peaks);
        p.columns.push_back("relative_decline_to_5mW");
        for (size_t i = 0; i < pc.names.size(); ++i) p.rows[i].push_back(format_double(pc.decline[i]));
        rep.tables.emplace_back("peaks", std::move(p));
        for (size_t i = 0; i < pc.names.size(); ++i)
            rep.summary.push_back(peak_line("ODMR " + pc.names[i], pc.odmr_peaks[i]) +
                                  fmt(", relative decline to 5 mW %.3f", pc.decline[i]));
    } else if (target == "fig9") {
        const auto s = ns_series(base, {0, 10}, powers);
        Table t;
        t.columns = {"power_mW"};
        for (const char* tag : {"ns0", "ns10"})
            for (const char* col : {"QE_f_off", "QE_f_on", "QE_p_off", "QE_p_on"})
                t.columns.push_back(std::string(col) + "_" + tag);
        for (size_t i = 0; i < powers.size(); ++i) {
            std::vector<std::string> row = {format_double(powers[i])};
            for (const auto& sw : s.sweeps) {
                const auto& r = sw.rows[i];
                for (double v : {r.off.QE_f, r.on.QE_f, r.off.QE_p, r.on.QE_p}) row.push_back(format_double(v));
            }
            t.rows.push_back(std::move(row));
        }
        rep.tables.emplace_back("qe", std::move(t));
        const auto q = qe_summary(s.sweeps[0]);
        rep.summary.push_back(fmt("QE_f max: MW off %.3f", q.qef_max_off) + fmt(", MW on %.3f", q.qef_max_on));
        rep.summary.push_back(fmt("QE_p/QE_f crossover at %.3g mW", q.crossover_mW));
        rep.summary.push_back(fmt("QE_p at 4 mW: %.3f", q.qep_at_4mW));
    } else {
        std::string list;
        for (const auto& t : targets()) list += (list.empty() ? "" : ", ") + t;
        throw ValidationError("unknown reproduce target '" + target + "' (" + list + ")");
    }
    return rep;
}

} // namespace nvpd::repro
