#pragma once

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gfrag/error.hpp"
#include "gfrag/ext_real.hpp"
#include "gfrag/model.hpp"
#include "gfrag/stats.hpp"

namespace gfrag {

using Json = nlohmann::ordered_json;

/// Finite doubles as numbers; infinities as the strings "+inf" / "-inf".
inline Json json_number(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "+inf" : "-inf";
}

inline Json json_number(const ExtReal& x) { return x.is_finite() ? Json(x.value()) : Json("+inf"); }

inline double number_from_json(const Json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "+inf" || s == "inf") return HUGE_VAL;
        if (s == "-inf") return -HUGE_VAL;
    }
    fail(ErrorCode::ConfigError, where + ": expected a number");
}

namespace detail {

inline void reject_unknown_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) fail(ErrorCode::ConfigError, where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) fail(ErrorCode::ConfigError, where + ": unknown key \"" + key + "\"");
    }
}

inline const Json& required(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) fail(ErrorCode::ConfigError, where + ": missing \"" + key + "\"");
    return j.at(key);
}

}  // namespace detail

inline Json to_json(const ModelParams& p) {
    Json atoms = Json::array();
    for (const auto& a : p.K.atoms) atoms.push_back(Json::array({a.y, a.w}));
    Json K = {{"atoms", atoms}};
    if (p.K.density) K["density"] = {{"C", p.K.density->C}, {"beta", p.K.density->beta}};
    return {{"a", p.a}, {"b", p.b}, {"alpha", p.alpha}, {"K", K}};
}

/// Strict reader: atoms as [y, w] pairs, K.density optional, unknown keys rejected.
inline ModelParams model_from_json(const Json& j, const std::string& where = "model") {
    detail::reject_unknown_keys(j, {"a", "b", "alpha", "K"}, where);
    ModelParams p;
    p.a = number_from_json(detail::required(j, "a", where), where + ".a");
    p.b = number_from_json(detail::required(j, "b", where), where + ".b");
    p.alpha = number_from_json(detail::required(j, "alpha", where), where + ".alpha");
    const auto& K = detail::required(j, "K", where);
    const std::string kw = where + ".K";
    detail::reject_unknown_keys(K, {"atoms", "density"}, kw);
    if (K.contains("atoms")) {
        const auto& atoms = K.at("atoms");
        if (!atoms.is_array()) fail(ErrorCode::ConfigError, kw + ".atoms: expected an array");
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const std::string aw = kw + ".atoms[" + std::to_string(i) + "]";
            if (!atoms[i].is_array() || atoms[i].size() != 2)
                fail(ErrorCode::ConfigError, aw + ": expected a pair [y, w]");
            p.K.atoms.push_back({number_from_json(atoms[i][0], aw + "[0]"), number_from_json(atoms[i][1], aw + "[1]")});
        }
    }
    if (K.contains("density") && !K.at("density").is_null()) {
        const std::string dw = kw + ".density";
        const auto& d = K.at("density");
        detail::reject_unknown_keys(d, {"C", "beta"}, dw);
        p.K.density = PowerDensity{number_from_json(detail::required(d, "C", dw), dw + ".C"),
                                   number_from_json(detail::required(d, "beta", dw), dw + ".beta")};
    }
    return p;
}

inline Json parse_json_text(const std::string& text, const std::string& where) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::ConfigError, where + ": " + e.what());
    }
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ConfigError, "cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline ModelParams load_model_file(const std::string& path) {
    return model_from_json(parse_json_text(read_text_file(path), path), path);
}

inline Json to_json(const MCEstimate& e) {
    Json j = {{"mean", json_number(e.mean)}, {"stderr", json_number(e.std_error)}, {"n", e.n}};
    if (e.bias_note) j["bias_note"] = *e.bias_note;
    return j;
}

}  // namespace gfrag
