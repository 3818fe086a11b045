#ifndef MUMBO_DIRECT_HPP
#define MUMBO_DIRECT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mumbo/error.hpp"
#include "mumbo/local_search.hpp"
#include "mumbo/space.hpp"

namespace mumbo {

struct DirectConfig {
    int max_evaluations = 200;
    int max_iterations = 1000;
    double epsilon = 1e-4;
    /// Golden-section iterations per coordinate after DIRECT stops; 0 disables the polish.
    int polish_iterations = 20;

    void validate(std::size_t dims) const
    {
        if (max_evaluations < static_cast<int>(2 * dims + 1)) {
            throw Error(ErrorCode::InvalidArgument, "DIRECT needs at least 2d+1 evaluations");
        }
        if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "DIRECT needs at least one iteration");
        if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "DIRECT epsilon must be positive");
        if (polish_iterations < 0) throw Error(ErrorCode::InvalidArgument, "polish iterations must be >= 0");
    }

    static DirectConfig discrete_default(std::size_t dims) { return {static_cast<int>(100 * (dims + 1)), 1000, 1e-4, 20}; }
    static DirectConfig continuous_default(std::size_t dims) { return {static_cast<int>(200 * (dims + 1)), 1000, 1e-4, 20}; }
};

struct DirectResult {
    Vector x;
    double value = -std::numeric_limits<double>::infinity();
    int evaluations = 0;
    int iterations = 0;
};

namespace detail {

struct DirectRect {
    Vector center; // unit cube coordinates
    std::vector<int> levels; // side length in dim i is 3^-levels[i]
    double value; // objective, maximized
    double size;
};

inline double rect_size(std::vector<int> levels)
{
    std::sort(levels.begin(), levels.end());
    double s = 0.0;
    for (int l : levels) s += std::pow(3.0, -2.0 * l);
    return 0.5 * std::sqrt(s);
}

} // namespace detail

/// Dividing-rectangles maximization over a box (Jones et al. trisection with the epsilon rule).
/// Bounds may pin a coordinate (lower == upper). The result's value is never below f at the box
/// center, and points are evaluated strictly inside non-degenerate bounds.
inline DirectResult direct_maximize(const std::function<double(const Vector&)>& f, const Vector& lower,
                                    const Vector& upper, const DirectConfig& cfg)
{
    const auto d = lower.size();
    if (d == 0 || upper.size() != d) throw Error(ErrorCode::DimensionMismatch, "DIRECT bounds are inconsistent");
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(lower(i) <= upper(i)) || !std::isfinite(lower(i)) || !std::isfinite(upper(i))) {
            throw Error(ErrorCode::InvalidArgument, "DIRECT bounds need finite lower <= upper");
        }
    }
    cfg.validate(static_cast<std::size_t>(d));
    const Vector width = upper - lower;
    std::vector<Eigen::Index> free_dims;
    for (Eigen::Index i = 0; i < d; ++i) {
        if (width(i) > 0.0) free_dims.push_back(i);
    }

    DirectResult out;
    auto to_box = [&](const Vector& u) { return (lower.array() + width.array() * u.array()).matrix().eval(); };
    auto eval = [&](const Vector& u) {
        const Vector x = to_box(u);
        const double y = f(x);
        if (!std::isfinite(y)) throw Error(ErrorCode::NonFiniteValue, "DIRECT objective returned a non-finite value");
        ++out.evaluations;
        if (y > out.value) {
            out.value = y;
            out.x = x;
        }
        return y;
    };

    std::vector<detail::DirectRect> rects;
    {
        Vector c = Vector::Constant(d, 0.5);
        std::vector<int> lv(static_cast<std::size_t>(d), 0);
        const double v = eval(c);
        rects.push_back({c, lv, v, detail::rect_size(lv)});
    }
    std::size_t best_rect = 0;

    while (out.evaluations < cfg.max_evaluations && out.iterations < cfg.max_iterations && !free_dims.empty()) {
        ++out.iterations;

        // one candidate per size class: the best-valued rectangle, lowest index on ties
        std::map<double, std::size_t> by_size;
        for (std::size_t i = 0; i < rects.size(); ++i) {
            auto [it, inserted] = by_size.emplace(rects[i].size, i);
            if (!inserted && rects[i].value > rects[it->second].value) it->second = i;
        }
        std::vector<std::size_t> cand;
        for (const auto& [s, i] : by_size) cand.push_back(i);

        // DIRECT minimizes; work with g = -value
        const double gmin = -out.value;
        std::vector<std::size_t> chosen;
        for (std::size_t a = 0; a < cand.size(); ++a) {
            const auto& ra = rects[cand[a]];
            double k_low = 0.0;
            double k_high = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < cand.size(); ++b) {
                if (b == a) continue;
                const auto& rb = rects[cand[b]];
                const double slope = (-rb.value + ra.value) / (rb.size - ra.size);
                if (rb.size < ra.size) {
                    k_low = std::max(k_low, slope);
                } else {
                    k_high = std::min(k_high, slope);
                }
            }
            // need some K > 0 with g_a - K s_a <= g_b - K s_b for every other class b
            if (!(k_high > 0.0) || k_low > k_high) continue;
            if (std::isfinite(k_high)) {
                const double ga = -ra.value;
                if (ga - k_high * ra.size > gmin - cfg.epsilon * std::abs(gmin)) continue;
            }
            chosen.push_back(cand[a]);
        }
        if (chosen.empty()) chosen.push_back(cand.back());

        bool exhausted = false;
        for (std::size_t idx : chosen) {
            auto rect = rects[idx];
            int min_level = std::numeric_limits<int>::max();
            for (auto i : free_dims) min_level = std::min(min_level, rect.levels[static_cast<std::size_t>(i)]);
            std::vector<Eigen::Index> longest;
            for (auto i : free_dims) {
                if (rect.levels[static_cast<std::size_t>(i)] == min_level) longest.push_back(i);
            }
            if (out.evaluations + 2 * static_cast<int>(longest.size()) > cfg.max_evaluations) {
                exhausted = true;
                break;
            }
            const double delta = std::pow(3.0, -(min_level + 1));
            struct Probe {
                Eigen::Index dim;
                double w;
                Vector cp, cm;
                double vp, vm;
            };
            std::vector<Probe> probes;
            for (auto i : longest) {
                Probe p{i, 0.0, rect.center, rect.center, 0.0, 0.0};
                p.cp(i) += delta;
                p.cm(i) -= delta;
                p.vp = eval(p.cp);
                p.vm = eval(p.cm);
                p.w = std::max(p.vp, p.vm);
                probes.push_back(std::move(p));
            }
            // best side first: it ends up in the larger child
            std::stable_sort(probes.begin(), probes.end(), [](const Probe& a, const Probe& b) { return a.w > b.w; });
            for (const auto& p : probes) {
                rect.levels[static_cast<std::size_t>(p.dim)] += 1;
                const double s = detail::rect_size(rect.levels);
                rects.push_back({p.cp, rect.levels, p.vp, s});
                rects.push_back({p.cm, rect.levels, p.vm, s});
            }
            rect.size = detail::rect_size(rect.levels);
            rects[idx] = rect;
        }
        if (exhausted) break;
    }

    for (std::size_t i = 0; i < rects.size(); ++i) {
        if (to_box(rects[i].center) == out.x) {
            best_rect = i;
            break;
        }
    }

    if (cfg.polish_iterations > 0) {
        const auto& br = rects[best_rect];
        for (auto i : free_dims) {
            const double half = width(i) * std::pow(3.0, -br.levels[static_cast<std::size_t>(i)]);
            const double a = std::max(lower(i), out.x(i) - half);
            const double b = std::min(upper(i), out.x(i) + half);
            if (!(b > a)) continue;
            Vector x = out.x;
            auto line = [&](double t) {
                x(i) = t;
                const double y = f(x);
                ++out.evaluations;
                if (!std::isfinite(y)) throw Error(ErrorCode::NonFiniteValue, "DIRECT objective returned a non-finite value");
                return y;
            };
            const LocalResult r = golden_section_maximize(line, a, b, cfg.polish_iterations);
            if (r.value > out.value) {
                out.value = r.value;
                out.x(i) = r.x(0);
            }
        }
    }
    return out;
}

struct SpaceMaximum {
    Vector x;
    double z = 0.0;
    double value = -std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

/// Maximize acq(x, z) over the joint space. Discrete fidelities are enumerated with one DIRECT
/// run each over the parameter box; a continuous fidelity is appended as an extra box dimension.
inline SpaceMaximum maximize_over_space(const std::function<double(const Vector&, double)>& acq,
                                        const SearchSpace& space, std::optional<DirectConfig> config = std::nullopt)
{
    const std::size_t d = space.dims();
    SpaceMaximum best;
    if (space.is_discrete()) {
        const DirectConfig cfg = config.value_or(DirectConfig::discrete_default(d));
        for (std::size_t m = 0; m < space.discrete().count; ++m) {
            const double z = static_cast<double>(m);
            const auto r = direct_maximize([&](const Vector& x) { return acq(x, z); }, space.lower(), space.upper(), cfg);
            best.evaluations += r.evaluations;
            if (r.value > best.value) {
                best.value = r.value;
                best.x = r.x;
                best.z = z;
            }
        }
        return best;
    }
    const auto& c = space.continuous();
    const DirectConfig cfg = config.value_or(DirectConfig::continuous_default(d));
    Vector lo(static_cast<Eigen::Index>(d + 1)), hi(static_cast<Eigen::Index>(d + 1));
    lo.head(static_cast<Eigen::Index>(d)) = space.lower();
    hi.head(static_cast<Eigen::Index>(d)) = space.upper();
    lo(static_cast<Eigen::Index>(d)) = c.lower;
    hi(static_cast<Eigen::Index>(d)) = c.upper;
    const auto r = direct_maximize(
        [&](const Vector& xz) { return acq(xz.head(static_cast<Eigen::Index>(d)), xz(static_cast<Eigen::Index>(d))); }, lo, hi,
        cfg);
    best.x = r.x.head(static_cast<Eigen::Index>(d));
    best.z = r.x(static_cast<Eigen::Index>(d));
    best.value = r.value;
    best.evaluations = r.evaluations;
    return best;
}

} // namespace mumbo

#endif
