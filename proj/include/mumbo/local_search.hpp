#ifndef MUMBO_LOCAL_SEARCH_HPP
#define MUMBO_LOCAL_SEARCH_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "mumbo/space.hpp"

namespace mumbo {

struct LocalResult {
    Vector x;
    double value = 0.0;
    int evaluations = 0;
};

struct NelderMeadOptions {
    int max_evaluations = 400;
    double initial_step = 0.5;
    double value_tolerance = 1e-9;
    double point_tolerance = 1e-7;
};

/// Nelder-Mead ascent inside a box (points are projected onto the box). Non-finite objective
/// values are treated as -inf, so the simplex walks away from them. The returned value is never
/// below f(x0).
template <typename F>
LocalResult nelder_mead_maximize(F&& f, const Vector& x0, const Vector& lower, const Vector& upper,
                                 const NelderMeadOptions& opts = {})
{
    const auto n = x0.size();
    auto project = [&](Vector v) { return v.cwiseMax(lower).cwiseMin(upper).eval(); };
    int evals = 0;
    auto eval = [&](const Vector& v) {
        ++evals;
        const double y = f(v);
        return std::isfinite(y) ? y : -std::numeric_limits<double>::infinity();
    };

    std::vector<Vector> simplex;
    std::vector<double> values;
    simplex.push_back(project(x0));
    values.push_back(eval(simplex[0]));
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector v = simplex[0];
        const double step = opts.initial_step;
        v(i) += (v(i) + step <= upper(i)) ? step : -step;
        simplex.push_back(project(v));
        values.push_back(eval(simplex.back()));
    }

    std::vector<std::size_t> order(simplex.size());
    while (evals < opts.max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        // descending by value; stable so ties keep insertion order
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
        std::vector<Vector> s2;
        std::vector<double> v2;
        for (auto i : order) {
            s2.push_back(simplex[i]);
            v2.push_back(values[i]);
        }
        simplex.swap(s2);
        values.swap(v2);

        const double best = values.front(), worst = values.back();
        double spread = 0.0;
        for (std::size_t i = 1; i < simplex.size(); ++i) {
            spread = std::max(spread, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
        }
        if (std::isfinite(worst) && std::abs(best - worst) <= opts.value_tolerance * (1.0 + std::abs(best)) &&
            spread <= opts.point_tolerance) {
            break;
        }
        if (spread <= opts.point_tolerance * 1e-3) {
            break;
        }

        Vector centroid = Vector::Zero(n);
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
        centroid /= static_cast<double>(n);

        const Vector& xw = simplex.back();
        const Vector xr = project(centroid + (centroid - xw));
        const double fr = eval(xr);
        if (fr > values.front()) {
            const Vector xe = project(centroid + 2.0 * (centroid - xw));
            const double fe = eval(xe);
            if (fe > fr) {
                simplex.back() = xe;
                values.back() = fe;
            } else {
                simplex.back() = xr;
                values.back() = fr;
            }
            continue;
        }
        if (fr > values[values.size() - 2]) {
            simplex.back() = xr;
            values.back() = fr;
            continue;
        }
        const bool outside = fr > values.back();
        const Vector xc = outside ? project(centroid + 0.5 * (xr - centroid)) : project(centroid + 0.5 * (xw - centroid));
        const double fc = eval(xc);
        if (fc > std::max(outside ? fr : values.back(), values.back())) {
            simplex.back() = xc;
            values.back() = fc;
            continue;
        }
        for (std::size_t i = 1; i < simplex.size(); ++i) {
            simplex[i] = project(simplex[0] + 0.5 * (simplex[i] - simplex[0]));
            values[i] = eval(simplex[i]);
        }
    }

    const auto best = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    return {simplex[best], values[best], evals};
}

/// Golden-section search for a maximum of a unimodal f on [a, b].
template <typename F>
LocalResult golden_section_maximize(F&& f, double a, double b, int iterations)
{
    constexpr double invphi = 0.6180339887498949;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    int evals = 2;
    for (int i = 0; i < iterations; ++i) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
        ++evals;
    }
    Vector x(1);
    x(0) = fc >= fd ? c : d;
    return {x, std::max(fc, fd), evals};
}

} // namespace mumbo

#endif
