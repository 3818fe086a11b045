#ifndef MUMBO_MAXVAL_HPP
#define MUMBO_MAXVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mumbo/error.hpp"
#include "mumbo/gp.hpp"
#include "mumbo/numerics.hpp"
#include "mumbo/space.hpp"

namespace mumbo {

/// Approximate draws of the optimum value g* given the data, sorted ascending.
struct MaxValueSamples {
    std::vector<double> values;
    std::size_t grid_size = 0;
    /// Gumbel location and scale the draws came from (scale 0 for a deterministic posterior).
    double location = 0.0;
    double scale = 0.0;
    /// Generation of the GpModel the grid was predicted from (0 when built from raw marginals).
    std::uint64_t model_generation = 0;
};

inline constexpr std::size_t kGridPointsPerDim = 10000;

/// Uniform random points over the box, all meant for the target fidelity, followed by every
/// distinct x already observed.
inline std::vector<Vector> build_grid(const GpModel& model, const SearchSpace& space, std::uint64_t seed,
                                      std::size_t points_per_dim = kGridPointsPerDim)
{
    const std::size_t d = space.dims();
    std::vector<Vector> grid;
    grid.reserve(points_per_dim * d + model.size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Vector lo = space.lower();
    const Vector width = space.ranges();
    for (std::size_t i = 0; i < points_per_dim * d; ++i) {
        Vector x(static_cast<Eigen::Index>(d));
        for (std::size_t k = 0; k < d; ++k) {
            x(static_cast<Eigen::Index>(k)) = lo(static_cast<Eigen::Index>(k)) + width(static_cast<Eigen::Index>(k)) * unit(rng);
        }
        grid.push_back(std::move(x));
    }
    std::vector<Vector> seen;
    for (const auto& r : model.data().records) {
        const bool dup = std::any_of(seen.begin(), seen.end(), [&](const Vector& s) { return s == r.x; });
        if (!dup) {
            seen.push_back(r.x);
            grid.push_back(r.x);
        }
    }
    return grid;
}

/// Posterior marginals of g at the target fidelity over a set of points, in chunks so the
/// triangular solves run as blocked matrix operations.
inline void predict_target_marginals(const GpModel& model, const std::vector<Vector>& points, Vector& means,
                                     Vector& sds, std::size_t chunk = 2048)
{
    const auto m = static_cast<Eigen::Index>(points.size());
    means.resize(m);
    sds.resize(m);
    const double z0 = model.target_fidelity();
    const auto n = static_cast<Eigen::Index>(model.size());
    const double s = model.y_scale();
    for (Eigen::Index start = 0; start < m; start += static_cast<Eigen::Index>(chunk)) {
        const Eigen::Index len = std::min<Eigen::Index>(static_cast<Eigen::Index>(chunk), m - start);
        Matrix kx(n, len);
        Vector prior(len);
        for (Eigen::Index j = 0; j < len; ++j) {
            const Vector& x = points[static_cast<std::size_t>(start + j)];
            prior(j) = model.prior(x, z0, x, z0);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& r = model.data().records[static_cast<std::size_t>(i)];
                kx(i, j) = model.kernel()(r.x, r.z, x, z0);
            }
        }
        Vector mu = Vector::Zero(len);
        Vector var = prior;
        if (n > 0) {
            mu = kx.transpose() * model.alpha();
            model.factor().triangularView<Eigen::Lower>().solveInPlace(kx);
            var -= kx.colwise().squaredNorm().transpose();
        }
        for (Eigen::Index j = 0; j < len; ++j) {
            means(start + j) = model.y_mean() + s * mu(j);
            sds(start + j) = std::sqrt(std::max(0.0, var(j))) * s;
        }
    }
}

namespace detail {

inline constexpr double kDeterministicSd = 1e-12;

// log of the mean-field CDF prod_i Phi((y - mu_i) / sigma_i)
inline double log_product_cdf(double y, const Vector& means, const Vector& sds)
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < means.size(); ++i) {
        if (sds(i) < kDeterministicSd) {
            if (y < means(i)) return -std::numeric_limits<double>::infinity();
            continue;
        }
        acc += log_normal_cdf((y - means(i)) / sds(i));
    }
    return acc;
}

inline double find_quantile(double q, const Vector& means, const Vector& sds)
{
    const double max_sd = sds.maxCoeff();
    double lo = means.minCoeff() - 5.0 * max_sd;
    double hi = means.maxCoeff() + 5.0 * max_sd;
    auto cdf = [&](double y) { return std::exp(log_product_cdf(y, means, sds)); };
    for (int i = 0; cdf(lo) > q; ++i) {
        if (i > 60) throw Error(ErrorCode::BinarySearchFailure, "could not bracket the lower quantile");
        lo -= (hi - lo);
    }
    for (int i = 0; cdf(hi) < q; ++i) {
        if (i > 60) throw Error(ErrorCode::BinarySearchFailure, "could not bracket the upper quantile");
        hi += (hi - lo);
    }
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double p = cdf(mid);
        if (std::abs(p - q) <= 1e-8 || hi - lo <= 1e-13 * (1.0 + std::abs(mid))) break;
        if (p < q) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

} // namespace detail

/// Fit a Gumbel distribution to the mean-field maximum of independent normal marginals and
/// draw n samples from it. The location matches the product CDF median and the scale matches
/// its interquartile range.
inline MaxValueSamples sample_max_values_from_marginals(const Vector& means, const Vector& sds, std::size_t n,
                                                        std::uint64_t seed)
{
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "need at least one max-value sample");
    if (means.size() == 0 || means.size() != sds.size()) {
        throw Error(ErrorCode::InvalidArgument, "max-value grid is empty or inconsistent");
    }
    MaxValueSamples out;
    out.grid_size = static_cast<std::size_t>(means.size());
    if (sds.maxCoeff() < detail::kDeterministicSd) {
        out.location = means.maxCoeff();
        out.values.assign(n, out.location);
        return out;
    }
    const double q25 = detail::find_quantile(0.25, means, sds);
    const double q50 = detail::find_quantile(0.5, means, sds);
    const double q75 = detail::find_quantile(0.75, means, sds);
    const double scale = (q75 - q25) / (std::log(std::log(4.0)) - std::log(std::log(4.0 / 3.0)));
    const double location = q50 + scale * std::log(std::log(2.0));
    out.location = location;
    out.scale = scale;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    out.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::clamp(unit(rng), 1e-10, 1.0 - 1e-10);
        out.values.push_back(location - scale * std::log(-std::log(u)));
    }
    std::sort(out.values.begin(), out.values.end());
    return out;
}

/// Mean-field Gumbel sampling of g* over a 10,000 d point random grid plus the observed x's.
inline MaxValueSamples sample_max_values(const GpModel& model, const SearchSpace& space, std::size_t n,
                                         std::uint64_t seed, std::size_t points_per_dim = kGridPointsPerDim)
{
    const auto grid = build_grid(model, space, seed, points_per_dim);
    Vector means, sds;
    predict_target_marginals(model, grid, means, sds);
    // the grid and the draws use separate streams
    auto samples = sample_max_values_from_marginals(means, sds, n, seed ^ 0x9e3779b97f4a7c15ULL);
    samples.model_generation = model.generation();
    return samples;
}

/// Gumbel CDF for a fitted sample set.
inline double gumbel_cdf(const MaxValueSamples& s, double y)
{
    if (s.scale <= 0.0) return y >= s.location ? 1.0 : 0.0;
    return std::exp(-std::exp(-(y - s.location) / s.scale));
}

} // namespace mumbo

#endif
