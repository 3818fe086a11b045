#ifndef MUMBO_NUMERICS_HPP
#define MUMBO_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mumbo/error.hpp"

namespace mumbo {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kHalfLog2PiE = 1.41893853320467274178;

/// Below this threshold log Phi switches from erfc to its asymptotic series.
inline constexpr double kLogCdfAsymptoticBelow = -30.0;

/// Phi(gamma) underflows double precision past this point.
inline constexpr double kCdfUnderflowGamma = -37.0;

inline double normal_pdf(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

inline double log_normal_pdf(double t) { return -0.5 * t * t - kLogSqrt2Pi; }

/// Standard normal CDF. std::erfc is accurate to a few ulps over the whole real line,
/// which keeps the relative error in the far lower tail small as well.
inline double normal_cdf(double t) { return 0.5 * std::erfc(-t * kInvSqrt2); }

/// log Phi(t), finite for every finite t.
inline double log_normal_cdf(double t)
{
    if (t > 0.0) {
        return std::log1p(-0.5 * std::erfc(t * kInvSqrt2));
    }
    if (t >= kLogCdfAsymptoticBelow) {
        return std::log(0.5 * std::erfc(-t * kInvSqrt2));
    }
    // Mills-ratio expansion: Phi(t) ~ phi(t)/|t| * (1 - 1/t^2 + 3/t^4 - 15/t^6 + 105/t^8)
    const double inv2 = 1.0 / (t * t);
    const double series = 1.0 + inv2 * (-1.0 + inv2 * (3.0 + inv2 * (-15.0 + inv2 * 105.0)));
    return log_normal_pdf(t) - std::log(-t) + std::log(series);
}

/// phi(t) / Phi(t) evaluated in log space.
inline double inverse_mills_ratio(double t) { return std::exp(log_normal_pdf(t) - log_normal_cdf(t)); }

/// Shape of the extended skew Gaussian: a standard normal observation, standardized,
/// conditioned on a correlated standard normal lying below gamma.
struct EsgParams {
    double rho = 0.0;
    double gamma = 0.0;

    void validate() const
    {
        if (!std::isfinite(rho) || std::abs(rho) > 1.0) {
            throw Error(ErrorCode::InvalidArgument, "esg correlation must lie in [-1, 1]");
        }
        if (!std::isfinite(gamma)) {
            throw Error(ErrorCode::NonFiniteValue, "esg threshold must be finite");
        }
    }
};

struct EsgMoments {
    double mean = 0.0;
    double variance = 1.0;
};

/// Density of Z = theta | g < gamma for (theta, g) standard bivariate normal with correlation rho.
/// Only defined on |rho| < 1; the |rho| = 1 limit is a truncated normal.
inline double esg_density(const EsgParams& params, double theta)
{
    params.validate();
    if (std::abs(params.rho) >= 1.0) {
        throw Error(ErrorCode::DegenerateCorrelation, "esg density requires |rho| < 1");
    }
    const double scale = std::sqrt(1.0 - params.rho * params.rho);
    const double u = (params.gamma - params.rho * theta) / scale;
    return std::exp(log_normal_pdf(theta) + log_normal_cdf(u) - log_normal_cdf(params.gamma));
}

/// Mean and variance of the extended skew Gaussian.
///
/// The mean carries a negative sign: conditioning on g < gamma pulls theta down when rho > 0,
/// which is what quadrature of esg_density reproduces. The variance term is sign-free.
inline EsgMoments esg_moments(const EsgParams& params)
{
    params.validate();
    if (params.gamma < kCdfUnderflowGamma) {
        throw Error(ErrorCode::NumericalUnderflow,
                    "Phi(gamma) underflows for gamma = " + std::to_string(params.gamma));
    }
    const double lambda = inverse_mills_ratio(params.gamma);
    const double rho2 = params.rho * params.rho;
    EsgMoments m;
    m.mean = -params.rho * lambda;
    m.variance = 1.0 - rho2 * lambda * (params.gamma + lambda);
    if (m.variance < 0.0) {
        m.variance = 0.0;
    }
    return m;
}

/// Differential entropy of N(0,1) truncated to (-inf, gamma]. This is the |rho| = 1 branch
/// of the extended skew Gaussian (rho = -1 mirrors it, with the same entropy).
inline double truncated_normal_entropy(double gamma)
{
    const double lambda = inverse_mills_ratio(gamma);
    return kHalfLog2PiE + log_normal_cdf(gamma) - 0.5 * gamma * lambda;
}

inline EsgMoments truncated_normal_moments(double gamma)
{
    const double lambda = inverse_mills_ratio(gamma);
    return {-lambda, std::max(0.0, 1.0 - lambda * (gamma + lambda))};
}

struct QuadratureGrid {
    double lower = 0.0;
    double upper = 1.0;
    int points = 101;

    void validate() const
    {
        if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper)) {
            throw Error(ErrorCode::InvalidArgument, "quadrature grid needs finite lower < upper");
        }
        if (points < 3 || points % 2 == 0) {
            throw Error(ErrorCode::InvalidArgument, "simpson rule needs an odd node count >= 3");
        }
    }

    double step() const { return (upper - lower) / (points - 1); }
    double node(int i) const { return i == points - 1 ? upper : lower + i * step(); }

    // 1, 4, 2, 4, ..., 2, 4, 1 without the h/3 factor
    static double weight(int i, int points)
    {
        if (i == 0 || i == points - 1) {
            return 1.0;
        }
        return (i % 2 == 1) ? 4.0 : 2.0;
    }
};

template <typename F>
double simpson_integrate(F&& f, const QuadratureGrid& grid)
{
    grid.validate();
    double sum = 0.0;
    for (int i = 0; i < grid.points; ++i) {
        const double v = f(grid.node(i));
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::NonFiniteValue,
                        "integrand is not finite at node " + std::to_string(grid.node(i)));
        }
        sum += QuadratureGrid::weight(i, grid.points) * v;
    }
    return sum * grid.step() / 3.0;
}

} // namespace mumbo

#endif
