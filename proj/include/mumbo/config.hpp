#ifndef MUMBO_CONFIG_HPP
#define MUMBO_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "mumbo/acquisition.hpp"
#include "mumbo/direct.hpp"
#include "mumbo/error.hpp"
#include "mumbo/kernel.hpp"
#include "mumbo/maxval.hpp"

namespace mumbo {

enum class AcquisitionKind { Mumbo, Mes, Ei };

inline std::string to_string(AcquisitionKind a)
{
    switch (a) {
    case AcquisitionKind::Mumbo: return "mumbo";
    case AcquisitionKind::Mes: return "mes";
    case AcquisitionKind::Ei: return "ei";
    }
    return "?";
}

inline AcquisitionKind acquisition_from_string(const std::string& s)
{
    if (s == "mumbo") return AcquisitionKind::Mumbo;
    if (s == "mes") return AcquisitionKind::Mes;
    if (s == "ei") return AcquisitionKind::Ei;
    throw Error(ErrorCode::ConfigError, "acquisition must be mumbo, mes or ei, got '" + s + "'");
}

struct RunConfig {
    std::string id = "run";
    std::string benchmark;
    AcquisitionKind acquisition = AcquisitionKind::Mumbo;
    std::size_t samples = 10;
    double budget = 0.0;
    std::uint64_t seed = 0;
    int refit_interval = 1;
    /// Empty means the benchmark's default kernel.
    std::optional<KernelVariant> kernel;
    QuadraturePolicy quadrature;
    /// Unset fields fall back to the per-space defaults.
    std::optional<int> direct_max_evaluations;
    int direct_max_iterations = 1000;
    double direct_epsilon = 1e-4;
    int direct_polish_iterations = 20;
    int fit_restarts = 10;
    int fit_max_evaluations = 400;
    std::size_t grid_points_per_dim = kGridPointsPerDim;
    std::string output;

    bool operator==(const RunConfig&) const = default;

    void validate() const
    {
        auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
        if (benchmark.empty()) fail("benchmark is required");
        if (!(budget > 0.0)) fail("budget must be positive");
        if (samples < 1) fail("samples must be at least 1");
        if (refit_interval < 1) fail("refit_interval must be at least 1");
        if (quadrature.points < 3 || quadrature.points % 2 == 0) fail("quadrature.points must be odd and at least 3");
        if (!(quadrature.half_width_sd > 0.0)) fail("quadrature.half_width_sd must be positive");
        if (direct_max_evaluations && *direct_max_evaluations < 3) fail("direct.max_evaluations too small");
        if (direct_max_iterations < 1) fail("direct.max_iterations must be at least 1");
        if (!(direct_epsilon > 0.0)) fail("direct.epsilon must be positive");
        if (direct_polish_iterations < 0) fail("direct.polish_iterations must be >= 0");
        if (fit_restarts < 1) fail("fit.restarts must be at least 1");
        if (fit_max_evaluations < 1) fail("fit.max_evaluations must be at least 1");
        if (grid_points_per_dim < 1) fail("grid_points_per_dim must be at least 1");
    }

    DirectConfig direct_config(std::size_t dims, bool joint) const
    {
        DirectConfig c = joint ? DirectConfig::continuous_default(dims) : DirectConfig::discrete_default(dims);
        if (direct_max_evaluations) c.max_evaluations = *direct_max_evaluations;
        c.max_iterations = direct_max_iterations;
        c.epsilon = direct_epsilon;
        c.polish_iterations = direct_polish_iterations;
        return c;
    }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, where + " must be an object");
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) throw Error(ErrorCode::ConfigError, "unknown key '" + k + "' in " + where);
    }
}

template <typename T>
T get_as(const json& j, const std::string& key, const std::string& where)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::ConfigError, where + "." + key + " has the wrong type");
    }
}

} // namespace detail

inline nlohmann::json config_to_json(const RunConfig& c)
{
    nlohmann::json j;
    j["id"] = c.id;
    j["benchmark"] = c.benchmark;
    j["acquisition"] = to_string(c.acquisition);
    j["samples"] = c.samples;
    j["budget"] = c.budget;
    j["seed"] = c.seed;
    j["refit_interval"] = c.refit_interval;
    if (c.kernel) j["kernel"] = to_string(*c.kernel);
    j["quadrature"] = {{"points", c.quadrature.points}, {"half_width_sd", c.quadrature.half_width_sd}};
    nlohmann::json d = {{"max_iterations", c.direct_max_iterations},
                        {"epsilon", c.direct_epsilon},
                        {"polish_iterations", c.direct_polish_iterations}};
    if (c.direct_max_evaluations) d["max_evaluations"] = *c.direct_max_evaluations;
    j["direct"] = d;
    j["fit"] = {{"restarts", c.fit_restarts}, {"max_evaluations", c.fit_max_evaluations}};
    j["grid_points_per_dim"] = c.grid_points_per_dim;
    if (!c.output.empty()) j["output"] = c.output;
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j)
{
    using detail::get_as;
    detail::reject_unknown(j,
                           {"id", "benchmark", "acquisition", "samples", "budget", "seed", "refit_interval", "kernel",
                            "quadrature", "direct", "fit", "grid_points_per_dim", "output"},
                           "config");
    RunConfig c;
    const std::string w = "config";
    if (j.contains("id")) c.id = get_as<std::string>(j, "id", w);
    if (!j.contains("benchmark")) throw Error(ErrorCode::ConfigError, "config.benchmark is required");
    c.benchmark = get_as<std::string>(j, "benchmark", w);
    if (j.contains("acquisition")) c.acquisition = acquisition_from_string(get_as<std::string>(j, "acquisition", w));
    if (j.contains("samples")) c.samples = get_as<std::size_t>(j, "samples", w);
    if (!j.contains("budget")) throw Error(ErrorCode::ConfigError, "config.budget is required");
    c.budget = get_as<double>(j, "budget", w);
    if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed", w);
    if (j.contains("refit_interval")) c.refit_interval = get_as<int>(j, "refit_interval", w);
    if (j.contains("kernel")) {
        try {
            c.kernel = kernel_variant_from_string(get_as<std::string>(j, "kernel", w));
        } catch (const Error& e) {
            throw Error(ErrorCode::ConfigError, e.what());
        }
    }
    if (j.contains("quadrature")) {
        const auto& q = j.at("quadrature");
        detail::reject_unknown(q, {"points", "half_width_sd"}, "quadrature");
        if (q.contains("points")) c.quadrature.points = get_as<int>(q, "points", "quadrature");
        if (q.contains("half_width_sd")) c.quadrature.half_width_sd = get_as<double>(q, "half_width_sd", "quadrature");
    }
    if (j.contains("direct")) {
        const auto& d = j.at("direct");
        detail::reject_unknown(d, {"max_evaluations", "max_iterations", "epsilon", "polish_iterations"}, "direct");
        if (d.contains("max_evaluations")) c.direct_max_evaluations = get_as<int>(d, "max_evaluations", "direct");
        if (d.contains("max_iterations")) c.direct_max_iterations = get_as<int>(d, "max_iterations", "direct");
        if (d.contains("epsilon")) c.direct_epsilon = get_as<double>(d, "epsilon", "direct");
        if (d.contains("polish_iterations")) c.direct_polish_iterations = get_as<int>(d, "polish_iterations", "direct");
    }
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        detail::reject_unknown(f, {"restarts", "max_evaluations"}, "fit");
        if (f.contains("restarts")) c.fit_restarts = get_as<int>(f, "restarts", "fit");
        if (f.contains("max_evaluations")) c.fit_max_evaluations = get_as<int>(f, "max_evaluations", "fit");
    }
    if (j.contains("grid_points_per_dim")) c.grid_points_per_dim = get_as<std::size_t>(j, "grid_points_per_dim", w);
    if (j.contains("output")) c.output = get_as<std::string>(j, "output", w);
    c.validate();
    return c;
}

inline RunConfig parse_config(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace mumbo

#endif
