#include "nvpd/io.hpp"

#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace nvpd {

using detail::json;
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string normalise_unit(std::string u) {
    // accept the micro sign as an alias for "u"
    const std::string mu = "\xC2\xB5", mu2 = "\xCE\xBC";
    for (const auto& m : {mu, mu2}) {
        for (size_t p; (p = u.find(m)) != std::string::npos;) u.replace(p, m.size(), "u");
    }
    std::string out;
    for (char ch : u)
        if (ch != ' ') out += ch;
    return out;
}

} // namespace

double parse_quantity(const std::string& text, const std::string& expected_unit, const std::string& key) {
    const std::string t = trim(text);
    const char* begin = t.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw ValidationError("'" + key + "': cannot read a number from \"" + text + "\"");
    const std::string unit = normalise_unit(trim(std::string(end)));
    if (unit.empty())
        throw ValidationError("unit missing for '" + key + "': expected " + expected_unit);
    if (unit != normalise_unit(expected_unit))
        throw ValidationError("unit mismatch for '" + key + "': expected " + expected_unit + ", got " + unit);
    if (!std::isfinite(v)) throw ValidationError("'" + key + "' is not finite");
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_quantity(double v, const std::string& unit) { return format_double(v) + " " + unit; }

// -----------------------------------------------------------------------------------------------

namespace {

const std::pair<const char*, double RateSet::*> kRateKeys[] = {
    {"k2", &RateSet::k2},     {"k3", &RateSet::k3},     {"k4", &RateSet::k4},     {"k5", &RateSet::k5},
    {"k6", &RateSet::k6},     {"kMW", &RateSet::kMW},   {"rec1", &RateSet::rec1}, {"rec2", &RateSet::rec2},
    {"rec3", &RateSet::rec3}, {"rec4", &RateSet::rec4}, {"rec5", &RateSet::rec5}, {"rec6", &RateSet::rec6}};
const std::pair<const char*, double RateSet::*> kBranchKeys[] = {{"A", &RateSet::branch_A},
                                                                 {"B", &RateSet::branch_B},
                                                                 {"C", &RateSet::branch_C},
                                                                 {"D", &RateSet::branch_D},
                                                                 {"E", &RateSet::branch_E}};
const std::pair<const char*, double OpticalPumping::*> kPumpKeys[] = {{"W_k1", &OpticalPumping::W_k1},
                                                                      {"W_ion2", &OpticalPumping::W_ion2},
                                                                      {"W_ion3", &OpticalPumping::W_ion3},
                                                                      {"W_ion4", &OpticalPumping::W_ion4}};

constexpr const char* kMobility = "cm2/(V*s)";

std::string where_in(const std::string& text, size_t byte) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

DefectKind parse_kind(const std::string& s) {
    if (s == "NV") return DefectKind::NV;
    if (s == "Ns") return DefectKind::Ns;
    if (s == "X") return DefectKind::X;
    throw ValidationError("mesh.defects: unknown defect kind '" + s + "' (NV, Ns, X)");
}

SimConfig parse_config_json(const json& j, const fs::path& base_dir) {
    detail::reject_unknown(j, {"preset", "optical_pumping", "mesh", "transport", "integrator", "run"}, "config");
    SimConfig c;

    // preset --------------------------------------------------------------------------------
    const auto& pj = j.at("preset");
    detail::reject_unknown(pj, {"name", "file", "provenance", "rates", "branching"}, "preset");
    const std::string name = pj.at("name").get<std::string>();
    if (name != "tetienne" && name != "wirtitsch" && name != "custom")
        throw ValidationError("unknown preset name '" + name + "' (tetienne, wirtitsch, custom)");

    std::set<std::string> given;
    const json empty = json::object();
    const json& rj = pj.contains("rates") ? pj.at("rates") : empty;
    const json& bj = pj.contains("branching") ? pj.at("branching") : empty;
    const json& oj = j.contains("optical_pumping") ? j.at("optical_pumping") : empty;
    {
        std::set<std::string> allowed;
        for (auto& [k, m] : kRateKeys) allowed.insert(k);
        detail::reject_unknown(rj, allowed, "preset.rates");
        allowed.clear();
        for (auto& [k, m] : kBranchKeys) allowed.insert(k);
        detail::reject_unknown(bj, allowed, "preset.branching");
        detail::reject_unknown(oj, {"W_k1", "W_ion1_ratio", "W_ion2", "W_ion3", "W_ion4"}, "optical_pumping");
    }
    const size_t total = std::size(kRateKeys) + std::size(kBranchKeys) + std::size(kPumpKeys) + 1;
    const size_t n_given = rj.size() + bj.size() + oj.size();
    if (name == "custom") {
        if (n_given != total) {
            std::string missing;
            for (auto& [k, m] : kRateKeys)
                if (!rj.contains(k)) missing += std::string(missing.empty() ? "" : ", ") + "preset.rates." + k;
            for (auto& [k, m] : kBranchKeys)
                if (!bj.contains(k)) missing += std::string(missing.empty() ? "" : ", ") + "preset.branching." + k;
            for (auto& [k, m] : kPumpKeys)
                if (!oj.contains(k)) missing += std::string(missing.empty() ? "" : ", ") + "optical_pumping." + k;
            if (!oj.contains("W_ion1_ratio"))
                missing += std::string(missing.empty() ? "" : ", ") + "optical_pumping.W_ion1_ratio";
            throw ValidationError("custom preset is incomplete: missing " + missing);
        }
        c.preset.name = "custom";
    } else if (n_given == total) {
        c.preset.name = name;
    } else {
        fs::path file;
        if (pj.contains("file")) {
            file = pj.at("file").get<std::string>();
            if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
        }
        c.preset = preset_by_name(name, file);
    }
    if (pj.contains("provenance")) c.preset.provenance = pj.at("provenance").get<std::string>();
    for (auto& [k, m] : kRateKeys)
        if (rj.contains(k)) c.preset.base.*m = detail::read_quantity(rj, k, "1/s", "preset.rates");
    for (auto& [k, m] : kBranchKeys)
        if (bj.contains(k)) c.preset.base.*m = detail::read_number(bj, k, "preset.branching");
    for (auto& [k, m] : kPumpKeys)
        if (oj.contains(k)) c.preset.pumping.*m = detail::read_quantity(oj, k, "1/(s*mW)", "optical_pumping");
    if (oj.contains("W_ion1_ratio"))
        c.preset.pumping.W_ion1_ratio = detail::read_number(oj, "W_ion1_ratio", "optical_pumping");

    // transport -----------------------------------------------------------------------------
    TransportParams tp;
    if (j.contains("transport")) {
        const auto& tj = j.at("transport");
        detail::reject_unknown(tj, {"mu_e", "mu_h", "field", "electron_charge"}, "transport");
        if (tj.contains("mu_e")) tp.mu_e = detail::read_quantity(tj, "mu_e", kMobility, "transport");
        if (tj.contains("mu_h")) tp.mu_h = detail::read_quantity(tj, "mu_h", kMobility, "transport");
        if (tj.contains("field")) tp.field_E = detail::read_quantity(tj, "field", "V/cm", "transport");
        if (tj.contains("electron_charge"))
            tp.electron_charge = detail::read_quantity(tj, "electron_charge", "C", "transport");
    }

    // mesh ----------------------------------------------------------------------------------
    const auto& mj = j.at("mesh");
    detail::reject_unknown(mj, {"gap", "bins", "defects", "pvb_convention", "x_initial_occupancy"}, "mesh");
    const double gap = detail::read_quantity(mj, "gap", "um", "mesh");
    if (!mj.at("bins").is_number_integer()) throw ValidationError("'mesh.bins' must be an integer");
    const int bins = mj.at("bins").get<int>();
    std::vector<Placement> pl;
    if (mj.contains("defects")) {
        for (const auto& d : mj.at("defects")) {
            detail::reject_unknown(d, {"bin", "kind", "count"}, "mesh.defects[]");
            Placement p;
            p.bin = d.at("bin").get<int>();
            p.kind = parse_kind(d.at("kind").get<std::string>());
            p.count = d.contains("count") ? d.at("count").get<int>() : 1;
            pl.push_back(p);
        }
    }
    c.mesh = build_mesh(gap, bins, pl, tp);
    if (mj.contains("pvb_convention")) {
        const auto s = mj.at("pvb_convention").get<std::string>();
        if (s == "single_reservoir") c.pvb_convention = PvbConvention::SingleReservoir;
        else if (s == "hole_count_per_ns") c.pvb_convention = PvbConvention::HoleCountPerNs;
        else throw ValidationError("mesh.pvb_convention must be single_reservoir or hole_count_per_ns");
    }
    if (mj.contains("x_initial_occupancy"))
        c.x_initial_occupancy = detail::read_number(mj, "x_initial_occupancy", "mesh");

    // integrator ----------------------------------------------------------------------------
    if (j.contains("integrator")) {
        const auto& ij = j.at("integrator");
        detail::reject_unknown(ij, {"rtol", "atol", "steady_threshold", "max_time"}, "integrator");
        if (ij.contains("rtol")) c.rtol = detail::read_number(ij, "rtol", "integrator");
        if (ij.contains("atol")) c.atol = detail::read_number(ij, "atol", "integrator");
        if (ij.contains("steady_threshold"))
            c.steady_threshold = detail::read_number(ij, "steady_threshold", "integrator");
        if (ij.contains("max_time")) c.max_time = detail::read_quantity(ij, "max_time", "s", "integrator");
    }

    // run -----------------------------------------------------------------------------------
    if (j.contains("run")) {
        const auto& uj = j.at("run");
        detail::reject_unknown(uj, {"laser_power", "mw", "photocurrent_mode", "strict_literal_equations"}, "run");
        if (uj.contains("laser_power")) c.laser_power = detail::read_quantity(uj, "laser_power", "mW", "run");
        if (uj.contains("mw")) {
            const auto s = uj.at("mw").get<std::string>();
            if (s != "on" && s != "off") throw ValidationError("run.mw must be \"on\" or \"off\"");
            c.mw_on = s == "on";
        }
        if (uj.contains("photocurrent_mode")) {
            const auto s = uj.at("photocurrent_mode").get<std::string>();
            if (s == "analytic") c.photocurrent_mode = PhotocurrentMode::Analytic;
            else if (s == "transport") c.photocurrent_mode = PhotocurrentMode::Transport;
            else throw ValidationError("run.photocurrent_mode must be analytic or transport");
        }
        if (uj.contains("strict_literal_equations")) {
            if (!uj.at("strict_literal_equations").is_boolean())
                throw ValidationError("run.strict_literal_equations must be a boolean");
            c.strict_literal_equations = uj.at("strict_literal_equations").get<bool>();
        }
    }
    validate_config(c);
    return c;
}

} // namespace

SimConfig parse_config(const std::string& text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("config parse error at " + where_in(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                              e.what());
    }
    try {
        return parse_config_json(j, base_dir);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

SimConfig load_config(const fs::path& path) {
    if (path == "default") return default_config();
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

SimConfig default_config() {
    const fs::path p = default_presets_path().parent_path().parent_path() / "configs" / "default.json";
    if (fs::exists(p)) return load_config(p);
    // installed layout keeps the default next to the presets
    const fs::path q = default_presets_path().parent_path() / "default.json";
    if (fs::exists(q)) return load_config(q);
    throw ValidationError("default config not found (looked at " + p.string() + ")");
}

std::string config_to_json(const SimConfig& c) {
    json j;
    auto& pj = j["preset"];
    pj["name"] = c.preset.name;
    pj["provenance"] = c.preset.provenance;
    for (auto& [k, m] : kRateKeys) pj["rates"][k] = format_quantity(c.preset.base.*m, "1/s");
    for (auto& [k, m] : kBranchKeys) pj["branching"][k] = c.preset.base.*m;
    auto& oj = j["optical_pumping"];
    for (auto& [k, m] : kPumpKeys) oj[k] = format_quantity(c.preset.pumping.*m, "1/(s*mW)");
    oj["W_ion1_ratio"] = c.preset.pumping.W_ion1_ratio;

    auto& mj = j["mesh"];
    mj["gap"] = format_quantity(c.mesh.transport.gap, "um");
    mj["bins"] = c.mesh.n_bins;
    mj["defects"] = json::array();
    for (int b = 0; b < c.mesh.n_bins; ++b) {
        const auto& d = c.mesh.bins[b];
        if (d.n_NV) mj["defects"].push_back({{"bin", b}, {"kind", "NV"}, {"count", d.n_NV}});
        if (d.n_Ns) mj["defects"].push_back({{"bin", b}, {"kind", "Ns"}, {"count", d.n_Ns}});
        if (d.n_X) mj["defects"].push_back({{"bin", b}, {"kind", "X"}, {"count", d.n_X}});
    }
    mj["pvb_convention"] = to_string(c.pvb_convention);
    mj["x_initial_occupancy"] = c.x_initial_occupancy;

    auto& tj = j["transport"];
    tj["mu_e"] = format_quantity(c.mesh.transport.mu_e, kMobility);
    tj["mu_h"] = format_quantity(c.mesh.transport.mu_h, kMobility);
    tj["field"] = format_quantity(c.mesh.transport.field_E, "V/cm");
    tj["electron_charge"] = format_quantity(c.mesh.transport.electron_charge, "C");

    auto& ij = j["integrator"];
    ij["rtol"] = c.rtol;
    ij["atol"] = c.atol;
    ij["steady_threshold"] = c.steady_threshold;
    ij["max_time"] = format_quantity(c.max_time, "s");

    auto& uj = j["run"];
    uj["laser_power"] = format_quantity(c.laser_power, "mW");
    uj["mw"] = c.mw_on ? "on" : "off";
    uj["photocurrent_mode"] = to_string(c.photocurrent_mode);
    uj["strict_literal_equations"] = c.strict_literal_equations;
    return j.dump(2) + "\n";
}

std::uint64_t config_hash(const SimConfig& c, const std::string& extra) {
    const std::string s = config_to_json(c) + "\x1f" + extra;
    std::uint64_t h = 1469598103934665603ull;   // FNV-1a
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex16(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// -----------------------------------------------------------------------------------------------

namespace {

std::vector<std::string> observable_columns(const std::string& prefix) {
    std::vector<std::string> cols = {"I_f",   "G_e",     "G_h",      "tau_e_s",     "tau_h_s", "tau_e_unbounded",
                                     "tau_h_unbounded", "I_e", "I_h", "I_p",     "QE_f",     "QE_p",
                                     "nv_minus", "nv_zero", "nv_es", "nv_ms", "ns_zero", "x_filled",
                                     "cb_total", "holes_total"};
    for (auto& c : cols) c = prefix + c;
    return cols;
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void observable_cells(const Observables& o, std::vector<std::string>& row) {
    auto d = [&](double v) { row.push_back(format_double(v)); };
    d(o.I_f);
    d(o.G_e);
    d(o.G_h);
    row.push_back(o.tau_e.unbounded ? "" : format_double(o.tau_e.value));
    row.push_back(o.tau_h.unbounded ? "" : format_double(o.tau_h.value));
    row.push_back(o.tau_e.unbounded ? "1" : "0");
    row.push_back(o.tau_h.unbounded ? "1" : "0");
    d(o.I_e);
    d(o.I_h);
    d(o.I_p);
    d(o.QE_f);
    d(o.QE_p);
    d(o.nv_minus);
    d(o.nv_zero);
    d(o.nv_es);
    d(o.nv_ms);
    row.push_back(opt(o.ns_zero));
    row.push_back(opt(o.x_filled));
    d(o.cb_total);
    d(o.holes_total);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string o = "\"";
    for (char c : s) {
        if (c == '"') o += '"';
        o += c;
    }
    return o + "\"";
}

} // namespace

Table observables_table(const std::vector<std::tuple<double, bool, Observables, double>>& rows) {
    Table t;
    t.columns = {"power_mW", "mw_on"};
    for (auto& c : observable_columns("")) t.columns.push_back(c);
    t.columns.push_back("time_to_steady_s");
    for (const auto& [p, mw, o, tts] : rows) {
        std::vector<std::string> r = {format_double(p), mw ? "1" : "0"};
        observable_cells(o, r);
        r.push_back(std::isfinite(tts) ? format_double(tts) : "");
        t.rows.push_back(std::move(r));
    }
    return t;
}

Table sweep_table(const SweepResult& sw) {
    Table t;
    t.columns = {"power_mW", "contrast_odmr", "contrast_pdmr", "converged", "time_to_steady_off_s",
                 "time_to_steady_on_s"};
    for (auto& c : observable_columns("off_")) t.columns.push_back(c);
    for (auto& c : observable_columns("on_")) t.columns.push_back(c);
    for (const auto& row : sw.rows) {
        std::vector<std::string> r = {format_double(row.power_mW), format_double(row.contrast_odmr),
                                      format_double(row.contrast_pdmr), row.converged ? "1" : "0",
                                      std::isfinite(row.time_to_steady_off) ? format_double(row.time_to_steady_off) : "",
                                      std::isfinite(row.time_to_steady_on) ? format_double(row.time_to_steady_on) : ""};
        observable_cells(row.off, r);
        observable_cells(row.on, r);
        t.rows.push_back(std::move(r));
    }
    return t;
}

Table trajectory_table(const Trajectory& tr) {
    Table t;
    t.columns = {"time_s"};
    if (tr.states.empty()) return t;
    static const char* lv[] = {"p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8", "pCB", "pVB"};
    const size_t nb = tr.states.front().bins.size();
    for (size_t b = 0; b < nb; ++b)
        for (auto* l : lv) t.columns.push_back("bin" + std::to_string(b) + "_" + l);
    t.columns.push_back("collected_e");
    t.columns.push_back("collected_h");
    for (const auto& s : tr.states) {
        std::vector<std::string> r = {format_double(s.time)};
        for (const auto& b : s.bins) {
            for (double p : b.p) r.push_back(format_double(p));
            r.push_back(format_double(b.pCB));
            r.push_back(format_double(b.pVB));
        }
        r.push_back(format_double(s.collected_electrons));
        r.push_back(format_double(s.collected_holes));
        t.rows.push_back(std::move(r));
    }
    return t;
}

Table fit_table(const FitResult& f) {
    Table t;
    t.columns = {"parameter", "value", "lower", "upper", "at_bound"};
    for (size_t i = 0; i < f.names.size(); ++i)
        t.rows.push_back({f.names[i], format_double(f.values[i]), format_double(f.lower[i]),
                          format_double(f.upper[i]), f.at_bound[i] ? "1" : "0"});
    return t;
}

std::string to_csv(const Table& t) {
    std::string s;
    for (size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + csv_escape(t.columns[i]);
    s += "\n";
    for (const auto& r : t.rows) {
        for (size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + csv_escape(r[i]);
        s += "\n";
    }
    return s;
}

std::string to_json(const Table& t) {
    json arr = json::array();
    for (const auto& r : t.rows) {
        json o = json::object();
        for (size_t i = 0; i < t.columns.size() && i < r.size(); ++i) {
            const auto& cell = r[i];
            if (cell.empty()) {
                o[t.columns[i]] = nullptr;
                continue;
            }
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end && *end == '\0') o[t.columns[i]] = v;
            else o[t.columns[i]] = cell;
        }
        arr.push_back(std::move(o));
    }
    json j;
    j["columns"] = t.columns;
    j["rows"] = std::move(arr);
    return j.dump(2) + "\n";
}

std::string write_text(const fs::path& dir, const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + p.string() + "'");
    out << content;
    if (!out) throw ValidationError("write failed for '" + p.string() + "'");
    return name;
}

std::vector<std::string> emit_results(const std::vector<std::pair<std::string, Table>>& tables, OutputFormat fmt,
                                      const fs::path& dir, const std::string& stem) {
    std::vector<std::string> files;
    for (const auto& [name, t] : tables) {
        const std::string base = name.empty() ? stem : stem + "_" + name;
        if (fmt == OutputFormat::CSV) files.push_back(write_text(dir, base + ".csv", to_csv(t)));
        else files.push_back(write_text(dir, base + ".json", to_json(t)));
    }
    return files;
}

std::string write_manifest(const RunManifest& m, const fs::path& dir, const std::string& stem) {
    json j;
    j["tool_version"] = m.tool_version;
    j["preset_provenance"] = m.preset_provenance;
    j["runtime_s"] = m.runtime_s;
    j["outputs"] = m.outputs;
    j["config"] = json::parse(m.config_json);
    return write_text(dir, stem + ".manifest.json", j.dump(2) + "\n");
}

// -----------------------------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(trim(cell));
        if (first) {
            header = cells;
            first = false;
        } else {
            rows.push_back(cells);
        }
    }
    return rows;
}

double cell_number(const std::string& s, const fs::path& p, size_t row) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0')
        throw ValidationError(p.string() + ": row " + std::to_string(row + 1) + ": bad number '" + s + "'");
    return v;
}

} // namespace

CurveKind parse_curve_kind(const std::string& s) {
    if (s == "odmr") return CurveKind::ODMRContrast;
    if (s == "pdmr") return CurveKind::PDMRContrast;
    if (s == "pl") return CurveKind::PL;
    if (s == "photocurrent") return CurveKind::Photocurrent;
    throw ValidationError("unknown curve kind '" + s + "' (odmr, pdmr, pl, photocurrent)");
}

const char* to_string(CurveKind k) {
    switch (k) {
        case CurveKind::ODMRContrast: return "odmr";
        case CurveKind::PDMRContrast: return "pdmr";
        case CurveKind::PL: return "pl";
        case CurveKind::Photocurrent: return "photocurrent";
    }
    return "?";
}

ExperimentalCurve load_curve(const fs::path& path, CurveKind kind) {
    std::vector<std::string> h;
    const auto rows = read_csv(path, h);
    const bool with_sigma = h.size() == 3 && h[2] == "sigma";
    if (h.size() < 2 || h[0] != "power_mW" || h[1] != "value" || (h.size() == 3 && !with_sigma) || h.size() > 3)
        throw ValidationError(path.string() + ": header must be power_mW,value[,sigma]");
    ExperimentalCurve c;
    c.kind = kind;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != h.size())
            throw ValidationError(path.string() + ": row " + std::to_string(i + 1) + " has wrong column count");
        ExperimentalPoint p;
        p.power_mW = cell_number(rows[i][0], path, i);
        p.value = cell_number(rows[i][1], path, i);
        if (with_sigma) p.sigma = cell_number(rows[i][2], path, i);
        c.points.push_back(p);
    }
    auto d = curve_diagnostics(c);
    if (!d.empty()) throw ValidationError(d);
    return c;
}

std::vector<std::pair<double, double>> load_spectrum(const fs::path& path) {
    std::vector<std::string> h;
    const auto rows = read_csv(path, h);
    if (h.size() != 2 || h[0] != "freq_MHz" || h[1] != "signal")
        throw ValidationError(path.string() + ": header must be freq_MHz,signal");
    std::vector<std::pair<double, double>> s;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != 2)
            throw ValidationError(path.string() + ": row " + std::to_string(i + 1) + " has wrong column count");
        s.emplace_back(cell_number(rows[i][0], path, i), cell_number(rows[i][1], path, i));
    }
    return s;
}

std::string fit_result_json(const FitResult& f) {
    json j;
    j["parameters"] = json::array();
    for (size_t i = 0; i < f.names.size(); ++i)
        j["parameters"].push_back({{"name", f.names[i]},
                                   {"value", f.values[i]},
                                   {"lower", f.lower[i]},
                                   {"upper", f.upper[i]},
                                   {"at_bound", static_cast<bool>(f.at_bound[i])}});
    j["residual_norm"] = f.residual_norm;
    j["converged"] = f.converged;
    j["evaluations"] = f.evaluations;
    j["iterations"] = f.iterations;
    j["objective_history"] = f.objective_history;
    return j.dump(2) + "\n";
}

} // namespace nvpd
