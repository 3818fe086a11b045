#ifndef MUMBO_BENCHMARKS_HPP
#define MUMBO_BENCHMARKS_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mumbo/error.hpp"
#include "mumbo/kernel.hpp"
#include "mumbo/space.hpp"

namespace mumbo {

enum class Sense { Minimize, Maximize };

struct Benchmark {
    std::string name;
    std::string description;
    SearchSpace space;
    Sense sense = Sense::Maximize;
    /// Noiseless f(x, z) exactly as defined, before any sign flip.
    std::function<double(const Vector&, double)> evaluate;
    /// Observation-noise variance per discrete fidelity; empty means noiseless everywhere.
    std::vector<double> noise_variances;
    std::optional<double> optimum_value;
    std::optional<Vector> optimum_location;
    KernelVariant default_kernel = KernelVariant::MaternIcm;

    double sign() const { return sense == Sense::Maximize ? 1.0 : -1.0; }
    bool noiseless() const
    {
        return std::all_of(noise_variances.begin(), noise_variances.end(), [](double v) { return v == 0.0; });
    }
    double noise_variance(double z) const
    {
        if (noise_variances.empty()) return 0.0;
        return noise_variances.at(static_cast<std::size_t>(z));
    }
};

namespace bench {

inline double forrester(const Vector& x, double z)
{
    const double t = x(0);
    const double f0 = (6.0 * t - 2.0) * (6.0 * t - 2.0) * std::sin(12.0 * t - 4.0);
    switch (static_cast<int>(z)) {
    case 0: return f0;
    case 1: return 0.75 * f0 + 3.0 * (t - 0.5) + 2.0;
    default: return 0.5 * f0 + 5.0 * (t - 0.5) + 2.0;
    }
}

inline double currin_rational(double x1)
{
    return (2300.0 * x1 * x1 * x1 + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0) /
           (100.0 * x1 * x1 * x1 + 500.0 * x1 * x1 + 4.0 * x1 + 20.0);
}

// exp(-1/(2 x2)) -> 0 as x2 -> 0+
inline double currin_damping(double x2) { return x2 > 0.0 ? std::exp(-1.0 / (2.0 * x2)) : 0.0; }

inline double currin_high(double x1, double x2) { return (1.0 - currin_damping(x2)) * currin_rational(x1); }

inline double currin(const Vector& x, double z)
{
    const double x1 = x(0), x2 = x(1);
    if (static_cast<int>(z) == 0) return currin_high(x1, x2);
    const double lo2 = std::max(0.0, x2 - 0.05);
    return 0.25 * (currin_high(x1 + 0.05, x2 + 0.05) + currin_high(x1 + 0.05, lo2) + currin_high(x1 - 0.05, x2 + 0.05) +
                   currin_high(x1 - 0.05, lo2));
}

inline double currin_continuous(const Vector& x, double z)
{
    return (1.0 - 0.1 * (1.0 - z) * currin_damping(x(1))) * currin_rational(x(0));
}

template <int D, int M>
double hartmann(const std::array<std::array<double, D>, 4>& a, const std::array<std::array<double, M>, 4>& alpha,
                const std::array<std::array<double, D>, 4>& p, const Vector& x, double z)
{
    const auto m = static_cast<std::size_t>(z);
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < static_cast<std::size_t>(D); ++j) {
            const double dx = x(static_cast<Eigen::Index>(j)) - 1e-4 * p[i][j];
            inner += a[i][j] * dx * dx;
        }
        s += alpha[i][m] * std::exp(-inner);
    }
    return -s;
}

inline double hartmann3(const Vector& x, double z)
{
    static const std::array<std::array<double, 3>, 4> a{{{3, 10, 30}, {0.1, 10, 35}, {3, 10, 30}, {0.1, 10, 35}}};
    static const std::array<std::array<double, 3>, 4> alpha{{{1, 1.01, 1.02}, {1.2, 1.19, 1.18}, {3, 2.9, 2.8}, {3.2, 3.3, 3.4}}};
    static const std::array<std::array<double, 3>, 4> p{
        {{3689, 1170, 2673}, {4699, 4387, 7470}, {1091, 8732, 5547}, {381, 5743, 8828}}};
    return hartmann<3, 3>(a, alpha, p, x, z);
}

inline double hartmann6(const Vector& x, double z)
{
    static const std::array<std::array<double, 6>, 4> a{{{10, 3, 17, 3.5, 1.7, 8},
                                                         {0.05, 10, 17, 0.1, 8, 14},
                                                         {3, 3.5, 1.7, 10, 17, 8},
                                                         {17, 8, 0.05, 10, 0.1, 14}}};
    static const std::array<std::array<double, 4>, 4> alpha{
        {{1, 1.01, 1.02, 1.03}, {1.2, 1.19, 1.18, 1.17}, {3, 2.9, 2.8, 2.7}, {3.2, 3.3, 3.4, 3.5}}};
    static const std::array<std::array<double, 6>, 4> p{{{1312, 1696, 5569, 124, 8283, 5886},
                                                         {2329, 4135, 8307, 3736, 1004, 9991},
                                                         {2348, 1451, 3522, 2883, 3047, 6650},
                                                         {4047, 8828, 8732, 5743, 1091, 381}}};
    return hartmann<6, 4>(a, alpha, p, x, z);
}

inline double borehole(const Vector& x, double z)
{
    const double rw = x(0), r = x(1), tu = x(2), hu = x(3), tl = x(4), hl = x(5), l = x(6), kw = x(7);
    const double logr = std::log(r / rw);
    const double leak = 2.0 * l * tu / (logr * rw * rw * kw);
    if (static_cast<int>(z) == 0) {
        return 2.0 * std::numbers::pi * tu * (hu - hl) / (logr * (1.0 + leak + tu / tl));
    }
    return 5.0 * tu * (hu - hl) / (logr * (1.5 + leak + tu / tl));
}

inline double rosenbrock(const Vector& x, double z)
{
    const double f0 = (1.0 - x(0)) * (1.0 - x(0)) + 100.0 * (x(1) - x(0) * x(0)) * (x(1) - x(0) * x(0));
    if (static_cast<int>(z) == 0) return f0;
    return f0 + 0.1 * std::sin(10.0 * x(0) + 5.0 * x(1));
}

inline Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) out(i++) = e;
    return out;
}

inline std::vector<std::pair<double, double>> unit_box(std::size_t d) { return std::vector<std::pair<double, double>>(d, {0.0, 1.0}); }

inline Benchmark discrete(std::string name, std::string description, std::vector<std::pair<double, double>> box,
                          std::vector<double> costs, Sense sense, std::function<double(const Vector&, double)> f)
{
    Benchmark b;
    b.name = std::move(name);
    b.description = std::move(description);
    const std::size_t m = costs.size();
    b.space = SearchSpace(std::move(box), DiscreteFidelity{m, 0, std::move(costs)});
    b.sense = sense;
    b.evaluate = std::move(f);
    b.default_kernel = m > 1 ? KernelVariant::MaternIcm : KernelVariant::SingleTask;
    return b;
}

} // namespace bench

/// Names accepted by make_benchmark, in listing order.
inline std::vector<std::string> benchmark_names()
{
    return {"forrester", "forrester-single", "currin", "currin-continuous", "hartmann3", "hartmann6", "borehole", "rosenbrock"};
}

inline Benchmark make_benchmark(const std::string& name)
{
    using namespace bench;
    if (name == "forrester" || name == "forrester-single") {
        const bool single = name == "forrester-single";
        Benchmark b = discrete(name, single ? "1-d Forrester, target fidelity only, minimize" : "1-d Forrester, 3 fidelities, minimize",
                               unit_box(1), single ? std::vector<double>{10.0} : std::vector<double>{10.0, 5.0, 2.0}, Sense::Minimize,
                               forrester);
        b.optimum_value = -6.0207400557670825;
        b.optimum_location = vec({0.7572487578418559});
        return b;
    }
    if (name == "currin") {
        Benchmark b = discrete(name, "2-d Currin exponential, 2 fidelities, maximize", unit_box(2), {10.0, 1.0}, Sense::Maximize, currin);
        b.optimum_value = 13.798722044728434;
        b.optimum_location = vec({0.21666666666666667, 0.0});
        return b;
    }
    if (name == "currin-continuous") {
        Benchmark b;
        b.name = name;
        b.description = "2-d Currin exponential, fidelity z in [0,1] with cost 0.1 + z^2, maximize";
        b.space = SearchSpace(unit_box(2), ContinuousFidelity{0.0, 1.0, 1.0, [](double z) { return 0.1 + z * z; }});
        b.sense = Sense::Maximize;
        b.evaluate = currin_continuous;
        b.optimum_value = 13.798722044728434;
        b.optimum_location = vec({0.21666666666666667, 0.0});
        b.default_kernel = KernelVariant::FabolasProduct;
        return b;
    }
    if (name == "hartmann3") {
        Benchmark b = discrete(name, "3-d Hartmann, 3 fidelities, minimize", unit_box(3), {100.0, 10.0, 1.0}, Sense::Minimize, hartmann3);
        b.optimum_value = -3.8627797873326624;
        b.optimum_location = vec({0.11458886716923655, 0.5556488919680042, 0.852546983866099});
        return b;
    }
    if (name == "hartmann6") {
        Benchmark b =
            discrete(name, "6-d Hartmann, 4 fidelities, minimize", unit_box(6), {1000.0, 100.0, 10.0, 1.0}, Sense::Minimize, hartmann6);
        b.optimum_value = -3.3223680114155147;
        b.optimum_location = vec({0.20168951203416527, 0.15001068901832165, 0.47687397475000204, 0.2753324302981452, 0.31165161729822044, 0.657300533115805});
        return b;
    }
    if (name == "borehole") {
        Benchmark b = discrete(name, "8-d borehole flow rate, 2 fidelities, maximize",
                               {{0.05, 0.15}, {100.0, 50000.0}, {63070.0, 115600.0}, {990.0, 1110.0}, {63.1, 116.0},
                                {700.0, 820.0}, {1120.0, 1680.0}, {9855.0, 12055.0}},
                               {10.0, 1.0}, Sense::Maximize, borehole);
        // flow increases in rw, Tu, Hu, Tl, Kw and decreases in r, Hl, L: the maximum sits on a corner
        b.optimum_location = vec({0.15, 100.0, 115600.0, 1110.0, 116.0, 700.0, 1120.0, 12055.0});
        b.optimum_value = borehole(*b.optimum_location, 0.0);
        return b;
    }
    if (name == "rosenbrock") {
        Benchmark b = discrete(name, "2-d Rosenbrock, 2 noisy fidelities, minimize", {{-2.0, 2.0}, {-2.0, 2.0}}, {1000.0, 1.0},
                               Sense::Minimize, rosenbrock);
        b.noise_variances = {0.001, 1e-6};
        b.optimum_value = 0.0;
        b.optimum_location = vec({1.0, 1.0});
        return b;
    }
    throw Error(ErrorCode::ConfigError, "unknown benchmark '" + name + "'");
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t v)
{
    v += 0x9e3779b97f4a7c15ULL;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return v ^ (v >> 31);
}

inline std::uint64_t hash_point(std::uint64_t seed, const Vector& x, double z)
{
    std::uint64_t h = splitmix64(seed);
    for (Eigen::Index i = 0; i < x.size(); ++i) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x(i)));
    return splitmix64(h ^ std::bit_cast<std::uint64_t>(z));
}

} // namespace detail

/// Derive an independent child seed, e.g. one per evaluation or per iteration.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) { return detail::splitmix64(detail::splitmix64(root) ^ stream); }

/// Noiseless value plus Gaussian noise at the fidelity's declared variance. The noise draw is
/// a function of (x, z, seed) only.
inline Observation eval_benchmark(const Benchmark& b, const Vector& x, double z, std::uint64_t seed)
{
    if (!b.space.contains(x, z)) throw Error(ErrorCode::OutOfBounds, b.name + ": query outside the benchmark space");
    double y = b.evaluate(x, z);
    const double var = b.noise_variance(z);
    if (var > 0.0) {
        std::mt19937_64 rng(detail::hash_point(seed, x, z));
        std::normal_distribution<double> noise(0.0, std::sqrt(var));
        y += noise(rng);
    }
    return {x, z, y};
}

/// Fidelities used for each initial point: every discrete level, or {0.25, 0.5, 1} scaled onto
/// a continuous interval.
inline std::vector<double> design_fidelities(const SearchSpace& space)
{
    std::vector<double> zs;
    if (space.is_discrete()) {
        for (std::size_t m = 0; m < space.discrete().count; ++m) zs.push_back(static_cast<double>(m));
    } else {
        const auto& c = space.continuous();
        for (double t : {0.25, 0.5, 1.0}) zs.push_back(c.lower + t * (c.upper - c.lower));
    }
    return zs;
}

/// 2d uniform random x's, each evaluated at every design fidelity. Observations keep the raw
/// benchmark sign; spent is the sum of their costs.
inline Dataset initial_design(const Benchmark& b, std::uint64_t design_seed, std::uint64_t noise_seed)
{
    const std::size_t d = b.space.dims();
    std::mt19937_64 rng(design_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Vector lo = b.space.lower(), width = b.space.ranges();
    Dataset data;
    std::uint64_t k = 0;
    const auto zs = design_fidelities(b.space);
    for (std::size_t i = 0; i < 2 * d; ++i) {
        Vector x(static_cast<Eigen::Index>(d));
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = lo(j) + width(j) * unit(rng);
        for (double z : zs) {
            data.add(eval_benchmark(b, x, z, derive_seed(noise_seed, k++)), b.space.cost(x, z));
        }
    }
    return data;
}

inline Dataset initial_design(const Benchmark& b, std::uint64_t seed)
{
    return initial_design(b, derive_seed(seed, 1), derive_seed(seed, 3));
}

/// Gap between the known optimum and the noiseless target-fidelity value at x, oriented so
/// that zero is optimal.
inline double simple_regret(const Benchmark& b, const Vector& x)
{
    if (!b.optimum_value) throw Error(ErrorCode::UnknownOptimum, b.name + " has no reference optimum");
    if (!b.space.contains_x(x)) throw Error(ErrorCode::OutOfBounds, b.name + ": incumbent outside the box");
    const double f = b.evaluate(x, b.space.target_fidelity());
    const double gap = b.sense == Sense::Maximize ? *b.optimum_value - f : f - *b.optimum_value;
    return std::max(0.0, gap);
}

} // namespace mumbo

#endif
