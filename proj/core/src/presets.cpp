#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "nvpd/io.hpp"

#ifndef NVPD_DATA_DIR
#define NVPD_DATA_DIR "data"
#endif

namespace nvpd {

using detail::json;

std::filesystem::path default_presets_path() {
    if (const char* env = std::getenv("NVPD_PRESETS")) return env;
    std::filesystem::path p = std::filesystem::path(NVPD_DATA_DIR) / "presets.json";
    if (std::filesystem::exists(p)) return p;
    return std::filesystem::path("/usr/local/share/nvpd/presets.json");
}

namespace {

RatePreset parse_preset(const std::string& name, const json& j) {
    const std::string where = "presets." + name;
    detail::reject_unknown(j, {"provenance", "rates", "branching", "pumping"}, where);
    RatePreset p;
    p.name = name;
    if (j.contains("provenance")) p.provenance = j.at("provenance").get<std::string>();

    const auto& r = j.at("rates");
    const std::pair<const char*, double RateSet::*> rate_keys[] = {
        {"k2", &RateSet::k2},     {"k3", &RateSet::k3},     {"k4", &RateSet::k4},     {"k5", &RateSet::k5},
        {"k6", &RateSet::k6},     {"kMW", &RateSet::kMW},   {"rec1", &RateSet::rec1}, {"rec2", &RateSet::rec2},
        {"rec3", &RateSet::rec3}, {"rec4", &RateSet::rec4}, {"rec5", &RateSet::rec5}, {"rec6", &RateSet::rec6}};
    std::set<std::string> allowed;
    for (auto& [k, m] : rate_keys) allowed.insert(k);
    detail::reject_unknown(r, allowed, where + ".rates");
    for (auto& [k, m] : rate_keys) p.base.*m = detail::read_quantity(r, k, "1/s", where + ".rates");

    const auto& b = j.at("branching");
    detail::reject_unknown(b, {"A", "B", "C", "D", "E"}, where + ".branching");
    p.base.branch_A = detail::read_number(b, "A", where + ".branching");
    p.base.branch_B = detail::read_number(b, "B", where + ".branching");
    p.base.branch_C = detail::read_number(b, "C", where + ".branching");
    p.base.branch_D = detail::read_number(b, "D", where + ".branching");
    p.base.branch_E = detail::read_number(b, "E", where + ".branching");

    const auto& w = j.at("pumping");
    detail::reject_unknown(w, {"W_k1", "W_ion1_ratio", "W_ion2", "W_ion3", "W_ion4"}, where + ".pumping");
    p.pumping.W_k1 = detail::read_quantity(w, "W_k1", "1/(s*mW)", where + ".pumping");
    p.pumping.W_ion1_ratio = detail::read_number(w, "W_ion1_ratio", where + ".pumping");
    p.pumping.W_ion2 = detail::read_quantity(w, "W_ion2", "1/(s*mW)", where + ".pumping");
    p.pumping.W_ion3 = detail::read_quantity(w, "W_ion3", "1/(s*mW)", where + ".pumping");
    p.pumping.W_ion4 = detail::read_quantity(w, "W_ion4", "1/(s*mW)", where + ".pumping");
    return p;
}

} // namespace

std::map<std::string, RatePreset> load_presets(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot read preset file '" + file.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str(), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ValidationError("preset file '" + file.string() + "': " + e.what());
    }
    std::map<std::string, RatePreset> out;
    try {
        detail::reject_unknown(j, {"description", "presets"}, "presets file");
        for (auto it = j.at("presets").begin(); it != j.at("presets").end(); ++it)
            out[it.key()] = parse_preset(it.key(), it.value());
    } catch (const json::exception& e) {
        throw ValidationError("preset file '" + file.string() + "': " + e.what());
    }
    return out;
}

RatePreset preset_by_name(const std::string& name, const std::filesystem::path& file) {
    const auto all = load_presets(file.empty() ? default_presets_path() : file);
    auto it = all.find(name);
    if (it == all.end()) throw ValidationError("unknown preset '" + name + "'");
    return it->second;
}

} // namespace nvpd
