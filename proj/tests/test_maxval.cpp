#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mumbo/gp.hpp"
#include "mumbo/maxval.hpp"
#include "oracles.hpp"

using namespace mumbo;
using namespace testing_support;

namespace {

SearchSpace unit_space(std::size_t d, std::size_t m = 1)
{
    return SearchSpace(std::vector<std::pair<double, double>>(d, {0.0, 1.0}), DiscreteFidelity{m, 0, std::vector<double>(m, 1.0)});
}

// closed-form median of the maximum of m iid standard normals, by bisection on Phi(y)^m
double iid_max_quantile(double q, int m)
{
    double lo = -10, hi = 10;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::pow(oracle::cdf(mid), m) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Gumbel quantile for fitted parameters
double gumbel_quantile(const MaxValueSamples& s, double p) { return s.location - s.scale * std::log(-std::log(p)); }

} // namespace

TEST(Grid, SizeIsPointsPerDimTimesDimensionPlusObserved)
{
    const GpModel empty = fit_posterior({KernelSpec::single_task(Vector::Constant(1, 0.3), 1.0), 1e-6}, {}, 0.0);
    EXPECT_EQ(build_grid(empty, unit_space(1), 5).size(), 10000u);

    std::mt19937_64 rng(2);
    Dataset data = random_dataset(rng, KernelVariant::SingleTask, 6, 3, 1);
    data.add(data.records.front(), 1.0); // a repeated x is added once
    const GpModel m = fit_posterior({KernelSpec::single_task(Vector::Constant(3, 0.3), 1.0), 1e-4}, data, 0.0);
    const auto grid = build_grid(m, unit_space(3), 5, 100);
    ASSERT_EQ(grid.size(), 300u + 6u);
    for (const auto& x : grid) {
        EXPECT_TRUE((x.array() >= 0.0).all() && (x.array() <= 1.0).all());
    }
}

TEST(Grid, SameSeedSameGrid)
{
    const GpModel empty = fit_posterior({KernelSpec::single_task(Vector::Constant(2, 0.3), 1.0), 1e-6}, {}, 0.0);
    const auto a = build_grid(empty, unit_space(2), 17, 50);
    const auto b = build_grid(empty, unit_space(2), 17, 50);
    const auto c = build_grid(empty, unit_space(2), 18, 50);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
    EXPECT_NE(a[0], c[0]);
}

TEST(Grid, ChunkingDoesNotChangeMarginals)
{
    std::mt19937_64 rng(4);
    const Dataset data = random_dataset(rng, KernelVariant::SingleTask, 10, 2, 1);
    const GpModel m = fit_posterior({KernelSpec::single_task(Vector::Constant(2, 0.3), 1.0), 1e-4}, data, 0.0);
    const auto grid = build_grid(m, unit_space(2), 3, 200);
    Vector m1, s1, m2, s2;
    predict_target_marginals(m, grid, m1, s1, 7);
    predict_target_marginals(m, grid, m2, s2, 4096);
    EXPECT_LT((m1 - m2).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((s1 - s2).cwiseAbs().maxCoeff(), 1e-12);
    for (std::size_t i = 0; i < grid.size(); i += 37) {
        const auto p = m.predict(grid[i], 0.0);
        EXPECT_NEAR(m1(static_cast<Eigen::Index>(i)), p.mean, 1e-10);
        EXPECT_NEAR(s1(static_cast<Eigen::Index>(i)), std::sqrt(p.variance), 1e-8);
    }
}

TEST(MaxValues, DeterministicPosteriorReturnsMaxMean)
{
    const Vector means = (Vector(4) << 0.3, 2.5, -1.0, 2.0).finished();
    const auto s = sample_max_values_from_marginals(means, Vector::Zero(4), 7, 1);
    ASSERT_EQ(s.values.size(), 7u);
    for (double v : s.values) EXPECT_EQ(v, 2.5);
}

TEST(MaxValues, IidStandardNormalMedian)
{
    const int m = 1000;
    const double oracle_median = iid_max_quantile(0.5, m);
    // Phi(y)^1000 = 0.5 exactly; 3.2905 would be the linearized 1 - 0.5/M quantile
    EXPECT_NEAR(oracle_median, 3.1975894953840083, 1e-9);
    const auto s = sample_max_values_from_marginals(Vector::Zero(m), Vector::Ones(m), 1001, 9);
    EXPECT_NEAR(s.values[500], oracle_median, 0.05);
    // the fit itself puts its median on the product CDF median
    EXPECT_NEAR(gumbel_quantile(s, 0.5), oracle_median, 1e-6);
}

TEST(MaxValues, GumbelMatchesMedianAndInterquartileRange)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> usd(0.05, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        Vector means(300), sds(300);
        for (Eigen::Index i = 0; i < 300; ++i) {
            means(i) = n01(rng);
            sds(i) = usd(rng);
        }
        const auto s = sample_max_values_from_marginals(means, sds, 5, 1);
        auto product_cdf = [&](double y) { return std::exp(detail::log_product_cdf(y, means, sds)); };
        const double q25 = detail::find_quantile(0.25, means, sds);
        const double q50 = detail::find_quantile(0.5, means, sds);
        const double q75 = detail::find_quantile(0.75, means, sds);
        EXPECT_NEAR(product_cdf(q25), 0.25, 1e-6);
        EXPECT_NEAR(product_cdf(q50), 0.5, 1e-6);
        EXPECT_NEAR(product_cdf(q75), 0.75, 1e-6);
        EXPECT_NEAR(gumbel_cdf(s, q50), 0.5, 1e-6);
        EXPECT_NEAR(gumbel_quantile(s, 0.75) - gumbel_quantile(s, 0.25), q75 - q25, 1e-9);
    }
}

TEST(MaxValues, SingleDrawIsReproducible)
{
    const Vector means = Vector::LinSpaced(20, -1.0, 1.0);
    const Vector sds = Vector::Constant(20, 0.4);
    const auto a = sample_max_values_from_marginals(means, sds, 1, 42);
    const auto b = sample_max_values_from_marginals(means, sds, 1, 42);
    ASSERT_EQ(a.values.size(), 1u);
    EXPECT_EQ(a.values[0], b.values[0]);
}

TEST(MaxValues, InvariantToGridPermutation)
{
    std::mt19937_64 rng(6);
    Vector means = Vector::LinSpaced(200, -2.0, 1.0);
    Vector sds = Vector::LinSpaced(200, 0.1, 0.9);
    const auto a = sample_max_values_from_marginals(means, sds, 10, 3);
    std::vector<Eigen::Index> perm(200);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Vector pm(200), ps(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
        pm(i) = means(perm[static_cast<std::size_t>(i)]);
        ps(i) = sds(perm[static_cast<std::size_t>(i)]);
    }
    const auto b = sample_max_values_from_marginals(pm, ps, 10, 3);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-8);
}

TEST(MaxValues, ShiftingMeansShiftsSamples)
{
    Vector means = Vector::LinSpaced(100, -1.0, 1.0);
    Vector sds = Vector::Constant(100, 0.3);
    const auto a = sample_max_values_from_marginals(means, sds, 10, 8);
    for (double c : {-3.0, 0.5, 12.0}) {
        const auto b = sample_max_values_from_marginals((means.array() + c).matrix(), sds, 10, 8);
        for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(b.values[i] - a.values[i], c, 1e-7) << c;
    }
}

TEST(MaxValues, SortedAndStampedWithModelGeneration)
{
    std::mt19937_64 rng(7);
    const Dataset data = random_dataset(rng, KernelVariant::SingleTask, 8, 2, 1);
    const GpModel m = fit_posterior({KernelSpec::single_task(Vector::Constant(2, 0.3), 1.0), 1e-4}, data, 0.0);
    const auto s = sample_max_values(m, unit_space(2), 25, 11, 200);
    EXPECT_EQ(s.values.size(), 25u);
    EXPECT_TRUE(std::is_sorted(s.values.begin(), s.values.end()));
    EXPECT_EQ(s.model_generation, m.generation());
    EXPECT_EQ(s.grid_size, 400u + 8u);
    const auto again = sample_max_values(m, unit_space(2), 25, 11, 200);
    EXPECT_EQ(s.values, again.values);
}

TEST(MaxValues, RejectsEmptyInputs)
{
    EXPECT_THROW(sample_max_values_from_marginals(Vector::Zero(3), Vector::Ones(3), 0, 1), Error);
    EXPECT_THROW(sample_max_values_from_marginals(Vector(), Vector(), 3, 1), Error);
    EXPECT_THROW(sample_max_values_from_marginals(Vector::Zero(3), Vector::Ones(2), 3, 1), Error);
}
