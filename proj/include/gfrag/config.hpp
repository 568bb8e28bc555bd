#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gfrag/error.hpp"
#include "gfrag/json_io.hpp"
#include "gfrag/model.hpp"

namespace gfrag {

/// Parameters shared by all subcommands. Command-specific fields are
/// optional; each subcommand fills its own defaults.
struct RunConfig {
    ModelParams model;
    std::optional<std::string> model_path;  ///< set when the model was given as a file
    std::uint64_t seed = 0;
    double grid_step = 1e-3;
    std::uint64_t n = 10'000;
    double min_size = 1e-8;
    std::uint64_t max_events = 10'000'000;
    std::optional<double> horizon;
    std::vector<double> t;
    std::vector<double> q;
    std::vector<int> k;
    std::optional<double> r;
    std::optional<double> omega;
    std::optional<double> x0;
    std::vector<double> x_small;
    std::optional<std::string> f;
    std::optional<std::string> out;
    unsigned threads = 0;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline double config_number(const Json& j, const std::string& key) { return number_from_json(j, "config." + key); }

inline std::uint64_t config_count(const Json& j, const std::string& key) {
    if (!j.is_number_unsigned()) fail(ErrorCode::ConfigError, "config." + key + ": expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

inline std::vector<double> config_numbers(const Json& j, const std::string& key) {
    std::vector<double> out;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            out.push_back(config_number(j[i], key + "[" + std::to_string(i) + "]"));
    } else {
        out.push_back(config_number(j, key));
    }
    return out;
}

inline std::string config_string(const Json& j, const std::string& key) {
    if (!j.is_string()) fail(ErrorCode::ConfigError, "config." + key + ": expected a string");
    return j.get<std::string>();
}

}  // namespace detail

/// Parses a JSON run configuration. A string "model" is a path resolved
/// against `base_dir` and must exist.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
    const Json j = parse_json_text(text, "config");
    if (!j.is_object()) fail(ErrorCode::ConfigError, "config: expected a JSON object");

    static const std::vector<std::string> known = {"model", "seed", "grid_step", "n", "min_size", "max_events",
                                                   "horizon", "t", "q", "k", "r", "omega", "x0", "x_small", "f",
                                                   "out", "threads"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            fail(ErrorCode::ConfigError, "config: unknown key \"" + key + "\"");
    }
    std::string missing;
    for (const char* key : {"model", "seed"})
        if (!j.contains(key)) missing += std::string(missing.empty() ? "" : ", ") + "\"" + key + "\"";
    if (!missing.empty()) fail(ErrorCode::ConfigError, "config: missing required " + missing);

    RunConfig c;
    const auto& m = j.at("model");
    if (m.is_string()) {
        std::filesystem::path path = m.get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        if (!std::filesystem::exists(path)) fail(ErrorCode::ConfigError, "config.model: file not found: " + path.string());
        c.model_path = m.get<std::string>();
        c.model = load_model_file(path.string());
    } else {
        c.model = model_from_json(m, "config.model");
    }
    c.seed = detail::config_count(j.at("seed"), "seed");

    using namespace detail;
    if (j.contains("grid_step")) c.grid_step = config_number(j.at("grid_step"), "grid_step");
    if (j.contains("n")) c.n = config_count(j.at("n"), "n");
    if (j.contains("min_size")) c.min_size = config_number(j.at("min_size"), "min_size");
    if (j.contains("max_events")) c.max_events = config_count(j.at("max_events"), "max_events");
    if (j.contains("horizon")) c.horizon = config_number(j.at("horizon"), "horizon");
    if (j.contains("t")) c.t = config_numbers(j.at("t"), "t");
    if (j.contains("q")) c.q = config_numbers(j.at("q"), "q");
    if (j.contains("k")) {
        for (const double v : config_numbers(j.at("k"), "k")) {
            if (v != std::floor(v) || v < 0.0) fail(ErrorCode::ConfigError, "config.k: expected nonnegative integers");
            c.k.push_back(static_cast<int>(v));
        }
    }
    if (j.contains("r")) c.r = config_number(j.at("r"), "r");
    if (j.contains("omega")) c.omega = config_number(j.at("omega"), "omega");
    if (j.contains("x0")) c.x0 = config_number(j.at("x0"), "x0");
    if (j.contains("x_small")) c.x_small = config_numbers(j.at("x_small"), "x_small");
    if (j.contains("f")) c.f = config_string(j.at("f"), "f");
    if (j.contains("out")) c.out = config_string(j.at("out"), "out");
    if (j.contains("threads")) c.threads = static_cast<unsigned>(config_count(j.at("threads"), "threads"));

    if (!(c.grid_step > 0.0)) fail(ErrorCode::ConfigError, "config.grid_step: must be positive");
    if (!(c.min_size > 0.0)) fail(ErrorCode::ConfigError, "config.min_size: must be positive");
    if (c.max_events == 0) fail(ErrorCode::ConfigError, "config.max_events: must be positive");
    return c;
}

/// Inverse of parse_config with every default written out.
inline Json config_to_json(const RunConfig& c) {
    Json j;
    j["model"] = c.model_path ? Json(*c.model_path) : to_json(c.model);
    j["seed"] = c.seed;
    j["grid_step"] = c.grid_step;
    j["n"] = c.n;
    j["min_size"] = c.min_size;
    j["max_events"] = c.max_events;
    if (c.horizon) j["horizon"] = *c.horizon;
    if (!c.t.empty()) j["t"] = c.t;
    if (!c.q.empty()) j["q"] = c.q;
    if (!c.k.empty()) j["k"] = c.k;
    if (c.r) j["r"] = *c.r;
    if (c.omega) j["omega"] = *c.omega;
    if (c.x0) j["x0"] = *c.x0;
    if (!c.x_small.empty()) j["x_small"] = c.x_small;
    if (c.f) j["f"] = *c.f;
    if (c.out) j["out"] = *c.out;
    j["threads"] = c.threads;
    return j;
}

inline std::string serialize_config(const RunConfig& c) { return config_to_json(c).dump(2) + "\n"; }

}  // namespace gfrag
