#ifndef MUMBO_TRACE_HPP
#define MUMBO_TRACE_HPP

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mumbo/config.hpp"
#include "mumbo/error.hpp"
#include "mumbo/space.hpp"

namespace mumbo {

inline bool same_vector(const Vector& a, const Vector& b) { return a.size() == b.size() && (a.size() == 0 || a == b); }

struct DesignRecord {
    Vector x;
    double z = 0.0;
    double y = 0.0;
    double cost = 0.0;
    double spent = 0.0;

    bool operator==(const DesignRecord& o) const
    {
        return same_vector(x, o.x) && z == o.z && y == o.y && cost == o.cost && spent == o.spent;
    }
};

/// Where the run stands after the design (n = 0) or after BO iteration n.
struct IterationRecord {
    int n = 0;
    Vector x; // empty for n = 0
    double z = 0.0;
    double y = 0.0;
    double cost = 0.0;
    double spent = 0.0;
    Vector incumbent_x;
    double incumbent_value = 0.0; // noiseless target-fidelity value, in the benchmark's own sign
    double regret = 0.0;
    double acquisition_value = 0.0;
    /// Whether hyper-parameters were re-estimated this iteration.
    bool refit = false;
    /// Wall time of fit + sample + acquisition maximization. Kept out of the trace file.
    double overhead_s = 0.0;

    bool operator==(const IterationRecord& o) const
    {
        return n == o.n && same_vector(x, o.x) && z == o.z && y == o.y && cost == o.cost && spent == o.spent &&
               same_vector(incumbent_x, o.incumbent_x) && incumbent_value == o.incumbent_value && regret == o.regret &&
               acquisition_value == o.acquisition_value && refit == o.refit && overhead_s == o.overhead_s;
    }
};

struct RunTrace {
    RunConfig config;
    std::vector<DesignRecord> design;
    std::optional<IterationRecord> initial;
    std::vector<IterationRecord> iterations;
    bool ok = true;
    std::string error_code;
    std::string error_message;

    bool operator==(const RunTrace&) const = default;

    double spent() const
    {
        if (!iterations.empty()) return iterations.back().spent;
        return design.empty() ? 0.0 : design.back().spent;
    }

    const IterationRecord* last_state() const
    {
        if (!iterations.empty()) return &iterations.back();
        return initial ? &*initial : nullptr;
    }
};

namespace detail {

inline nlohmann::json vec_json(const Vector& v)
{
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Vector json_vec(const nlohmann::json& a)
{
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

inline nlohmann::json state_json(const char* kind, const IterationRecord& r)
{
    nlohmann::json j;
    j["record"] = kind;
    j["n"] = r.n;
    if (r.n > 0) {
        j["x"] = vec_json(r.x);
        j["z"] = r.z;
        j["y"] = r.y;
        j["cost"] = r.cost;
        j["acquisition"] = r.acquisition_value;
        j["refit"] = r.refit;
    }
    j["spent"] = r.spent;
    j["incumbent_x"] = vec_json(r.incumbent_x);
    j["incumbent_value"] = r.incumbent_value;
    j["regret"] = r.regret;
    return j;
}

inline IterationRecord json_state(const nlohmann::json& j)
{
    IterationRecord r;
    r.n = j.at("n").get<int>();
    if (r.n > 0) {
        r.x = json_vec(j.at("x"));
        r.z = j.at("z").get<double>();
        r.y = j.at("y").get<double>();
        r.cost = j.at("cost").get<double>();
        r.acquisition_value = j.at("acquisition").get<double>();
        r.refit = j.at("refit").get<bool>();
    }
    r.spent = j.at("spent").get<double>();
    r.incumbent_x = json_vec(j.at("incumbent_x"));
    r.incumbent_value = j.at("incumbent_value").get<double>();
    r.regret = j.at("regret").get<double>();
    return r;
}

} // namespace detail

/// One JSON object per line: header, design points, the post-design state, iterations, an
/// optional error, and a summary.
inline std::string write_trace(const RunTrace& t)
{
    std::ostringstream out;
    out << nlohmann::json{{"record", "header"}, {"format", "mumbo-trace"}, {"version", 1}, {"config", config_to_json(t.config)}}.dump()
        << '\n';
    for (const auto& d : t.design) {
        out << nlohmann::json{{"record", "design"}, {"x", detail::vec_json(d.x)}, {"z", d.z}, {"y", d.y}, {"cost", d.cost}, {"spent", d.spent}}
                   .dump()
            << '\n';
    }
    if (t.initial) out << detail::state_json("initial", *t.initial).dump() << '\n';
    for (const auto& r : t.iterations) out << detail::state_json("iteration", r).dump() << '\n';
    if (!t.ok) out << nlohmann::json{{"record", "error"}, {"code", t.error_code}, {"message", t.error_message}}.dump() << '\n';
    nlohmann::json s{{"record", "summary"}, {"status", t.ok ? "ok" : "error"}, {"iterations", t.iterations.size()}, {"spent", t.spent()}};
    if (const auto* last = t.last_state()) {
        s["incumbent_x"] = detail::vec_json(last->incumbent_x);
        s["incumbent_value"] = last->incumbent_value;
        s["regret"] = last->regret;
    }
    out << s.dump() << '\n';
    return out.str();
}

/// Per-iteration overhead timings, one line each, stored beside the trace.
inline std::string write_timing(const RunTrace& t)
{
    std::ostringstream out;
    for (const auto& r : t.iterations) out << nlohmann::json{{"n", r.n}, {"overhead_s", r.overhead_s}}.dump() << '\n';
    return out.str();
}

inline RunTrace read_trace(const std::string& text, const std::string& timing = {})
{
    RunTrace t;
    std::istringstream in(text);
    std::string line;
    bool header = false, summary = false;
    try {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            const auto kind = j.at("record").get<std::string>();
            if (kind == "header") {
                t.config = config_from_json(j.at("config"));
                header = true;
            } else if (kind == "design") {
                t.design.push_back({detail::json_vec(j.at("x")), j.at("z").get<double>(), j.at("y").get<double>(),
                                    j.at("cost").get<double>(), j.at("spent").get<double>()});
            } else if (kind == "initial") {
                t.initial = detail::json_state(j);
            } else if (kind == "iteration") {
                t.iterations.push_back(detail::json_state(j));
            } else if (kind == "error") {
                t.ok = false;
                t.error_code = j.at("code").get<std::string>();
                t.error_message = j.at("message").get<std::string>();
            } else if (kind == "summary") {
                summary = true;
            } else {
                throw Error(ErrorCode::IoError, "unknown trace record '" + kind + "'");
            }
        }
        std::istringstream tin(timing);
        std::size_t i = 0;
        while (std::getline(tin, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            if (i >= t.iterations.size() || j.at("n").get<int>() != t.iterations[i].n) {
                throw Error(ErrorCode::IoError, "timing file does not match the trace");
            }
            t.iterations[i++].overhead_s = j.at("overhead_s").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("malformed trace: ") + e.what());
    }
    if (!header || !summary) throw Error(ErrorCode::IoError, "trace is missing its header or summary");
    return t;
}

inline std::string timing_path(const std::string& trace_path) { return trace_path + ".timing"; }

inline void save_trace(const RunTrace& t, const std::string& path)
{
    auto put = [](const std::string& p, const std::string& body) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write '" + p + "'");
        out << body;
    };
    put(path, write_trace(t));
    put(timing_path(path), write_timing(t));
}

inline RunTrace load_trace(const std::string& path)
{
    auto slurp = [](const std::string& p, bool required) {
        std::ifstream in(p, std::ios::binary);
        if (!in) {
            if (required) throw Error(ErrorCode::IoError, "cannot read '" + p + "'");
            return std::string();
        }
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    return read_trace(slurp(path, true), slurp(timing_path(path), false));
}

} // namespace mumbo

#endif
