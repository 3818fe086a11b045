#ifndef MUMBO_TESTS_HELPERS_HPP
#define MUMBO_TESTS_HELPERS_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "mumbo/gp.hpp"
#include "mumbo/kernel.hpp"
#include "mumbo/space.hpp"
#include "oracles.hpp"

namespace testing_support {

using mumbo::Dataset;
using mumbo::KernelSpec;
using mumbo::KernelVariant;
using mumbo::Matrix;
using mumbo::Vector;

inline Vector random_point(std::mt19937_64& rng, std::size_t d)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector x(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
    return x;
}

inline double random_fidelity(std::mt19937_64& rng, KernelVariant v, std::size_t fidelities)
{
    if (v == KernelVariant::FabolasProduct) return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (v == KernelVariant::SingleTask) return 0.0;
    return static_cast<double>(std::uniform_int_distribution<std::size_t>(0, fidelities - 1)(rng));
}

inline KernelSpec random_kernel(std::mt19937_64& rng, KernelVariant v, std::size_t d, std::size_t fidelities)
{
    std::uniform_real_distribution<double> ls(0.15, 1.2), u(-1.0, 1.0), pos(0.05, 0.6);
    Vector l(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < l.size(); ++i) l(i) = ls(rng);
    switch (v) {
    case KernelVariant::SingleTask: return KernelSpec::single_task(l, 0.5 + pos(rng) * 2.0);
    case KernelVariant::MaternIcm: {
        const auto k = static_cast<Eigen::Index>(fidelities);
        Matrix w(k, 2);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
        w.col(0).array() += 1.0;
        Vector kappa(k);
        for (Eigen::Index i = 0; i < k; ++i) kappa(i) = pos(rng);
        return KernelSpec::matern_icm(l, w, kappa);
    }
    case KernelVariant::FabolasProduct: {
        Eigen::Matrix2d lf;
        lf << 0.5 + pos(rng), 0.0, u(rng) * 0.5, 0.3 + pos(rng);
        return KernelSpec::fabolas(l, lf);
    }
    }
    return KernelSpec::single_task(l, 1.0);
}

inline oracle::KernelDef to_oracle(const KernelSpec& s)
{
    oracle::KernelDef k;
    for (Eigen::Index i = 0; i < s.lengthscales.size(); ++i) k.lengthscales.push_back(s.lengthscales(i));
    k.variance = s.variance;
    switch (s.variant) {
    case KernelVariant::SingleTask: k.kind = oracle::KernelDef::Single; break;
    case KernelVariant::MaternIcm: {
        k.kind = oracle::KernelDef::Icm;
        const auto& w = s.coreg_factor;
        const auto n = static_cast<std::size_t>(w.rows());
        k.coreg.assign(n, oracle::Vec(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double v = 0.0;
                for (Eigen::Index c = 0; c < w.cols(); ++c) v += w(static_cast<Eigen::Index>(i), c) * w(static_cast<Eigen::Index>(j), c);
                k.coreg[i][j] = v + (i == j ? s.coreg_diag(static_cast<Eigen::Index>(i)) : 0.0);
            }
        }
        break;
    }
    case KernelVariant::FabolasProduct: {
        k.kind = oracle::KernelDef::Fabolas;
        const auto& l = s.basis_factor;
        k.s00 = l(0, 0) * l(0, 0) + l(0, 1) * l(0, 1);
        k.s01 = l(0, 0) * l(1, 0) + l(0, 1) * l(1, 1);
        k.s11 = l(1, 0) * l(1, 0) + l(1, 1) * l(1, 1);
        break;
    }
    }
    return k;
}

inline oracle::Vec to_vec(const Vector& v) { return oracle::Vec(v.data(), v.data() + v.size()); }

/// Random smooth-ish observations: a few sinusoids of x plus a fidelity offset.
inline Dataset random_dataset(std::mt19937_64& rng, KernelVariant v, std::size_t n, std::size_t d, std::size_t fidelities)
{
    Dataset data;
    std::normal_distribution<double> noise(0.0, 0.05);
    for (std::size_t i = 0; i < n; ++i) {
        Vector x = random_point(rng, d);
        const double z = random_fidelity(rng, v, fidelities);
        double y = 2.0 * z;
        for (Eigen::Index k = 0; k < x.size(); ++k) y += std::sin(3.0 * x(k) + static_cast<double>(k));
        data.add({x, z, 5.0 + 3.0 * y + noise(rng)}, 1.0);
    }
    return data;
}

inline double rel_err(double a, double b, double floor = 1e-12) { return std::abs(a - b) / std::max(std::abs(b), floor); }

} // namespace testing_support

#endif
