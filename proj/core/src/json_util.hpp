#pragma once

#include <json.hpp>
#include <set>
#include <string>

#include "nvpd/errors.hpp"
#include "nvpd/io.hpp"

namespace nvpd::detail {

using json = nlohmann::ordered_json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ValidationError("unknown key '" + where + "." + it.key() + "'");
}

inline double read_quantity(const json& obj, const std::string& key, const std::string& unit,
                            const std::string& where) {
    const auto& v = obj.at(key);
    const std::string full = where + "." + key;
    if (!v.is_string())
        throw ValidationError("unit missing for '" + full + "': expected a string like \"1.0 " + unit + "\"");
    return parse_quantity(v.get<std::string>(), unit, full);
}

inline double read_number(const json& obj, const std::string& key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ValidationError("'" + where + "." + key + "' must be a plain number");
    return v.get<double>();
}

} // namespace nvpd::detail
