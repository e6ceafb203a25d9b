#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "nvpd/calibration.hpp"
#include "nvpd/dynamics.hpp"
#include "nvpd/errors.hpp"
#include "nvpd/io.hpp"
#include "nvpd/observables.hpp"
#include "nvpd/reproduce.hpp"

using namespace nvpd;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kNumerical = 3 };

struct Common {
    std::string config = "default";
    std::optional<double> power;
    std::string mw;
    std::string out = ".";
    std::string format = "csv";
};

void add_common(CLI::App* sub, Common& c, bool run_flags) {
    sub->add_option("--config", c.config, "config JSON path, or 'default'");
    if (run_flags) {
        sub->add_option("--power", c.power, "laser power in mW (overrides run.laser_power)");
        sub->add_option("--mw", c.mw, "microwave drive")->check(CLI::IsMember({"on", "off"}));
    }
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

SimConfig resolve(const Common& c) {
    SimConfig cfg = load_config(c.config);
    if (c.power) cfg.laser_power = *c.power;
    if (!c.mw.empty()) cfg.mw_on = c.mw == "on";
    validate_config(cfg);
    return cfg;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ",") + format_double(x);
    return s;
}

struct Emitter {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void operator()(const std::string& sub, const SimConfig& cfg, const std::string& args, const Common& c,
                    const std::vector<std::pair<std::string, Table>>& tables,
                    const std::vector<std::pair<std::string, std::string>>& extra_files = {}) const {
        const std::string stem = sub + "_" + hex16(config_hash(cfg, sub + "|" + args));
        const auto fmt = c.format == "json" ? OutputFormat::JSON : OutputFormat::CSV;
        RunManifest m;
        m.config_json = config_to_json(cfg);
        m.preset_provenance = cfg.preset.provenance;
        m.outputs = emit_results(tables, fmt, c.out, stem);
        for (const auto& [name, text] : extra_files) m.outputs.push_back(write_text(c.out, stem + "_" + name, text));
        m.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto man = write_manifest(m, c.out, stem);
        for (const auto& f : m.outputs) std::cout << (std::filesystem::path(c.out) / f).string() << "\n";
        std::cout << (std::filesystem::path(c.out) / man).string() << "\n";
    }
};

std::pair<std::string, std::string> split_once(const std::string& s, char sep) {
    const auto p = s.find(sep);
    if (p == std::string::npos) return {s, ""};
    return {s.substr(0, p), s.substr(p + 1)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"NV-centre charge and spin dynamics: photoluminescence and photocurrent simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));
    Common com;

    auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
    add_common(sim, com, true);
    double t_end = 1e-5;
    int samples = 200;
    sim->add_option("--t-end", t_end, "end time in s")->check(CLI::PositiveNumber);
    sim->add_option("--samples", samples, "log-spaced output times (0 records every step)")->check(CLI::NonNegativeNumber);

    auto* steady = app.add_subcommand("steady", "steady state and observables");
    add_common(steady, com, true);

    auto* sweep = app.add_subcommand("sweep", "laser-power sweep, MW on and off");
    add_common(sweep, com, false);
    std::vector<double> powers;
    std::string powers_text;
    double pmin = 0, pmax = 0;
    int npts = 0;
    std::vector<double> kmw_factors;
    auto* powers_opt = sweep->add_option("--powers", powers_text, "comma-separated powers in mW");
    auto* grid_opt = sweep->add_option("--log-grid", npts, "number of log-spaced powers between --pmin and --pmax");
    sweep->add_option("--pmin", pmin, "lowest power in mW")->needs(grid_opt);
    sweep->add_option("--pmax", pmax, "highest power in mW")->needs(grid_opt);
    powers_opt->excludes(grid_opt);
    sweep->add_option("--kmw-sensitivity", kmw_factors, "kMW scale factors for a peak-sensitivity report")
        ->delimiter(',');

    auto* fit = app.add_subcommand("fit", "fit rates to measured curves");
    add_common(fit, com, false);
    std::vector<std::string> curve_specs, free_specs;
    FitOptions fopt;
    fit->add_option("--curve", curve_specs, "KIND:PATH, KIND in odmr|pdmr|pl|photocurrent")->required();
    fit->add_option("--free", free_specs, "NAME:LOWER:UPPER");
    fit->add_option("--max-iter", fopt.max_iterations);
    fit->add_option("--restarts", fopt.restarts);
    fit->add_option("--seed", fopt.seed);

    auto* est = app.add_subcommand("estimate-ns", "estimate the N_s count from a PDMR curve");
    add_common(est, com, false);
    std::string est_curve;
    std::vector<int> candidates = {0, 1, 2, 5, 10};
    est->add_option("--curve", est_curve, "PDMR contrast CSV")->required();
    est->add_option("--candidates", candidates, "candidate counts")->delimiter(',');

    auto* res = app.add_subcommand("fit-resonance", "Gaussian dip fit of an ODMR spectrum");
    std::string spectrum;
    res->add_option("--spectrum", spectrum, "CSV freq_MHz,signal")->required();
    res->add_option("--out", com.out, "output directory");
    res->add_option("--format", com.format)->check(CLI::IsMember({"csv", "json"}));

    auto* rep = app.add_subcommand("reproduce", "regenerate the data behind a figure");
    add_common(rep, com, false);
    std::string target;
    rep->add_option("target", target, "fig5a|fig5b|fig6|fig7|fig8|fig9")
        ->required()
        ->check(CLI::IsMember(repro::targets()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    Emitter emit;
    try {
        if (*sim) {
            const auto cfg = resolve(com);
            auto s0 = initial_state(cfg.mesh, cfg.pvb_convention, cfg.x_initial_occupancy);
            std::vector<double> times;
            if (samples > 0) {
                times = repro::log_space(std::min(1e-12, t_end / 10), t_end, samples);
                times.insert(times.begin(), 0.0);
            }
            SimConfig c = cfg;
            if (samples == 0) c.max_time = t_end;
            const auto tr = integrate(s0, c, times);
            emit("simulate", cfg, format_double(t_end) + "|" + std::to_string(samples), com,
                 {{"trajectory", trajectory_table(tr)}});
            if (!tr.steady_state_reached) std::cerr << "note: steady state not reached by " << t_end << " s\n";
        } else if (*steady) {
            const auto cfg = resolve(com);
            const auto r = run_to_steady_state(initial_state(cfg.mesh, cfg.pvb_convention, cfg.x_initial_occupancy), cfg);
            if (!r.converged) throw NumericalError("steady state not reached within max_time");
            const auto o = compute_observables(r.state, build_rate_set(cfg.preset, cfg.laser_power, cfg.mw_on), cfg);
            emit("steady", cfg, "", com, {{"observables", observables_table({{cfg.laser_power, cfg.mw_on, o, r.time_to_steady}})}});
        } else if (*sweep) {
            const auto cfg = resolve(com);
            if (*grid_opt) {
                if (npts < 1 || !(pmin > 0) || !(pmax >= pmin))
                    throw CLI::ValidationError("--log-grid", "needs N >= 1 and 0 < --pmin <= --pmax");
                powers = repro::log_space(pmin, pmax, npts);
            }
            if (*powers_opt) {
                std::stringstream ss(powers_text);
                for (std::string tok; std::getline(ss, tok, ',');) {
                    if (tok.find_first_not_of(" ") == std::string::npos) continue;
                    try {
                        powers.push_back(std::stod(tok));
                    } catch (const std::exception&) {
                        throw CLI::ValidationError("--powers", "not a number: '" + tok + "'");
                    }
                }
            }
            if (powers.empty()) throw CLI::ValidationError("sweep", "empty power list (use --powers or --log-grid)");
            const auto sw = power_sweep(cfg, powers);
            std::vector<std::pair<std::string, Table>> tables = {{"sweep", sweep_table(sw)}};
            if (powers.size() >= 3) {
                Table pk;
                pk.columns = {"curve", "P_star_mW", "C_star", "bracketed"};
                for (auto [name, kind] : {std::pair{"odmr", ContrastKind::ODMR}, std::pair{"pdmr", ContrastKind::PDMR}}) {
                    const auto p = find_contrast_max(sw, kind);
                    pk.rows.push_back({name, format_double(p.P_star), format_double(p.C_star), p.bracketed ? "1" : "0"});
                }
                tables.emplace_back("peaks", std::move(pk));
            }
            if (!kmw_factors.empty()) {
                Table t;
                t.columns = {"kmw_factor", "odmr_P_star_mW", "odmr_C_star", "pdmr_P_star_mW", "pdmr_C_star"};
                for (const auto& s : kmw_sensitivity(cfg, powers, kmw_factors))
                    t.rows.push_back({format_double(s.factor), format_double(s.odmr.P_star),
                                      format_double(s.odmr.C_star), format_double(s.pdmr.P_star),
                                      format_double(s.pdmr.C_star)});
                tables.emplace_back("kmw_sensitivity", std::move(t));
            }
            emit("sweep", cfg, join(powers) + "|" + join(kmw_factors), com, tables);
        } else if (*fit) {
            const auto cfg = resolve(com);
            std::vector<ExperimentalCurve> curves;
            std::string args;
            for (const auto& s : curve_specs) {
                const auto [kind, path] = split_once(s, ':');
                if (path.empty()) throw CLI::ValidationError("--curve", "expected KIND:PATH, got '" + s + "'");
                curves.push_back(load_curve(path, parse_curve_kind(kind)));
                args += s + ";";
            }
            std::vector<FreeParam> fp;
            for (const auto& s : free_specs) {
                const auto [name, rest] = split_once(s, ':');
                const auto [lo, hi] = split_once(rest, ':');
                if (lo.empty() || hi.empty()) throw CLI::ValidationError("--free", "expected NAME:LOWER:UPPER, got '" + s + "'");
                fp.push_back({name, std::stod(lo), std::stod(hi), std::nullopt});
                args += s + ";";
            }
            args += std::to_string(fopt.max_iterations) + "|" + std::to_string(fopt.restarts) + "|" + std::to_string(fopt.seed);
            const auto r = fit_rates(curves, fp, cfg, fopt);
            emit("fit", cfg, args, com, {{"parameters", fit_table(r)}}, {{"result.json", fit_result_json(r)}});
            if (!r.converged) std::cerr << "note: fit did not meet its convergence tolerance\n";
        } else if (*est) {
            const auto cfg = resolve(com);
            const auto curve = load_curve(est_curve, CurveKind::PDMRContrast);
            const auto r = estimate_ns_count(curve, cfg, candidates);
            Table t;
            t.columns = {"n_Ns", "weighted_residual", "best"};
            for (const auto& [n, s] : r.table)
                t.rows.push_back({std::to_string(n), format_double(s), n == r.best ? "1" : "0"});
            std::string args = est_curve;
            for (int n : candidates) args += "," + std::to_string(n);
            emit("estimate-ns", cfg, args, com, {{"scores", t}});
            std::cout << "estimated n_Ns = " << r.best << "\n";
        } else if (*res) {
            const auto spec = load_spectrum(spectrum);
            const auto r = fit_resonance(spec);
            Table t;
            t.columns = {"center_MHz", "width_MHz", "amplitude", "baseline", "contrast", "rms"};
            t.rows.push_back({format_double(r.center), format_double(r.width), format_double(r.amplitude),
                              format_double(r.baseline), format_double(r.contrast), format_double(r.rms)});
            SimConfig none;
            std::ostringstream args;
            for (const auto& [f, s] : spec) args << format_double(f) << ':' << format_double(s) << ';';
            const std::string stem = "fit-resonance_" + hex16(config_hash(none, args.str()));
            const auto files = emit_results({{"resonance", t}}, com.format == "json" ? OutputFormat::JSON : OutputFormat::CSV,
                                            com.out, stem);
            for (const auto& f : files) std::cout << (std::filesystem::path(com.out) / f).string() << "\n";
        } else if (*rep) {
            const auto cfg = resolve(com);
            const auto r = repro::reproduce(target, cfg);
            for (const auto& line : r.summary) std::cout << line << "\n";
            emit(target, cfg, target, com, r.tables);
        }
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n" << app.help();
        return kUsage;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
    return kOk;
}
