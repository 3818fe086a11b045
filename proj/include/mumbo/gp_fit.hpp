#ifndef MUMBO_GP_FIT_HPP
#define MUMBO_GP_FIT_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mumbo/error.hpp"
#include "mumbo/gp.hpp"
#include "mumbo/kernel.hpp"
#include "mumbo/local_search.hpp"

namespace mumbo {

struct FitOptions {
    int restarts = 10;
    NelderMeadOptions local{400, 0.5, 1e-9, 1e-7};
    /// Per-dimension width of the input box; lengthscale ranges scale with it.
    Vector input_ranges;
    bool fixed_noise = false;
    double noise_lower = 1e-8;
    double noise_upper = 10.0;
    std::uint64_t seed = 0;
};

/// Maps kernel hyper-parameters to and from an unconstrained (mostly log) coordinate vector.
///
/// Layout: log lengthscales, then the variant block, then log noise unless noise is fixed.
///   SingleTask:     log variance
///   MaternIcm:      W column-major, log kappa
///   FabolasProduct: log L00, L10, log L11
class HyperparameterCodec {
public:
    HyperparameterCodec(const KernelSpec& like, const FitOptions& opts) : shape_(like), opts_(opts)
    {
        dims_ = like.dims();
        ranges_ = opts.input_ranges.size() == static_cast<Eigen::Index>(dims_) ? opts.input_ranges
                                                                              : Vector::Ones(static_cast<Eigen::Index>(dims_));
    }

    Eigen::Index size() const
    {
        Eigen::Index n = static_cast<Eigen::Index>(dims_);
        switch (shape_.variant) {
        case KernelVariant::SingleTask: n += 1; break;
        case KernelVariant::MaternIcm: n += shape_.coreg_factor.size() + shape_.coreg_diag.size(); break;
        case KernelVariant::FabolasProduct: n += 3; break;
        }
        return opts_.fixed_noise ? n : n + 1;
    }

    Vector encode(const GpHyperparameters& h) const
    {
        Vector t(size());
        Eigen::Index k = 0;
        for (std::size_t i = 0; i < dims_; ++i) t(k++) = std::log(h.kernel.lengthscales(static_cast<Eigen::Index>(i)));
        switch (shape_.variant) {
        case KernelVariant::SingleTask:
            t(k++) = std::log(h.kernel.variance);
            break;
        case KernelVariant::MaternIcm:
            for (Eigen::Index i = 0; i < h.kernel.coreg_factor.size(); ++i) t(k++) = h.kernel.coreg_factor.data()[i];
            for (Eigen::Index i = 0; i < h.kernel.coreg_diag.size(); ++i) t(k++) = std::log(h.kernel.coreg_diag(i));
            break;
        case KernelVariant::FabolasProduct:
            t(k++) = std::log(std::abs(h.kernel.basis_factor(0, 0)));
            t(k++) = h.kernel.basis_factor(1, 0);
            t(k++) = std::log(std::abs(h.kernel.basis_factor(1, 1)));
            break;
        }
        if (!opts_.fixed_noise) t(k++) = std::log(h.noise_variance);
        return t;
    }

    GpHyperparameters decode(const Vector& t, double fixed_noise_value) const
    {
        GpHyperparameters h;
        h.kernel = shape_;
        Eigen::Index k = 0;
        for (std::size_t i = 0; i < dims_; ++i) h.kernel.lengthscales(static_cast<Eigen::Index>(i)) = std::exp(t(k++));
        switch (shape_.variant) {
        case KernelVariant::SingleTask:
            h.kernel.variance = std::exp(t(k++));
            break;
        case KernelVariant::MaternIcm:
            for (Eigen::Index i = 0; i < h.kernel.coreg_factor.size(); ++i) h.kernel.coreg_factor.data()[i] = t(k++);
            for (Eigen::Index i = 0; i < h.kernel.coreg_diag.size(); ++i) h.kernel.coreg_diag(i) = std::exp(t(k++));
            break;
        case KernelVariant::FabolasProduct:
            h.kernel.basis_factor.setZero();
            h.kernel.basis_factor(0, 0) = std::exp(t(k++));
            h.kernel.basis_factor(1, 0) = t(k++);
            h.kernel.basis_factor(1, 1) = std::exp(t(k++));
            break;
        }
        h.noise_variance = opts_.fixed_noise ? fixed_noise_value : std::exp(t(k++));
        return h;
    }

    void bounds(Vector& lower, Vector& upper) const
    {
        lower.resize(size());
        upper.resize(size());
        Eigen::Index k = 0;
        for (std::size_t i = 0; i < dims_; ++i) {
            const double r = ranges_(static_cast<Eigen::Index>(i));
            lower(k) = std::log(1e-3 * r);
            upper(k++) = std::log(1e3 * r);
        }
        switch (shape_.variant) {
        case KernelVariant::SingleTask:
            lower(k) = std::log(1e-4);
            upper(k++) = std::log(1e4);
            break;
        case KernelVariant::MaternIcm:
            for (Eigen::Index i = 0; i < shape_.coreg_factor.size(); ++i) {
                lower(k) = -100.0;
                upper(k++) = 100.0;
            }
            for (Eigen::Index i = 0; i < shape_.coreg_diag.size(); ++i) {
                lower(k) = std::log(1e-8);
                upper(k++) = std::log(1e4);
            }
            break;
        case KernelVariant::FabolasProduct:
            lower(k) = std::log(1e-4);
            upper(k++) = std::log(1e2);
            lower(k) = -100.0;
            upper(k++) = 100.0;
            lower(k) = std::log(1e-4);
            upper(k++) = std::log(1e2);
            break;
        }
        if (!opts_.fixed_noise) {
            lower(k) = std::log(opts_.noise_lower);
            upper(k++) = std::log(opts_.noise_upper);
        }
    }

    /// A random starting point: lengthscales and variances log-uniform over [1e-2, 1e2]
    /// (lengthscales relative to the input range), noise log-uniform over [1e-6, 1e-1].
    template <typename Rng>
    Vector random_start(Rng& rng) const
    {
        std::uniform_real_distribution<double> log_u(std::log(1e-2), std::log(1e2));
        std::normal_distribution<double> normal(0.0, 1.0);
        Vector t(size());
        Eigen::Index k = 0;
        for (std::size_t i = 0; i < dims_; ++i) t(k++) = log_u(rng) + std::log(ranges_(static_cast<Eigen::Index>(i)));
        switch (shape_.variant) {
        case KernelVariant::SingleTask:
            t(k++) = log_u(rng);
            break;
        case KernelVariant::MaternIcm: {
            const Eigen::Index rows = shape_.coreg_factor.rows();
            const Eigen::Index cols = shape_.coreg_factor.cols();
            Matrix w(rows, cols);
            for (Eigen::Index i = 0; i < rows; ++i) {
                const double scale = std::sqrt(std::exp(log_u(rng)));
                w(i, 0) = scale;
                for (Eigen::Index j = 1; j < cols; ++j) w(i, j) = 0.3 * scale * normal(rng);
            }
            for (Eigen::Index i = 0; i < w.size(); ++i) t(k++) = w.data()[i];
            for (Eigen::Index i = 0; i < rows; ++i) t(k++) = log_u(rng) + std::log(1e-2);
            break;
        }
        case KernelVariant::FabolasProduct:
            t(k++) = 0.5 * log_u(rng);
            t(k++) = 0.3 * normal(rng);
            t(k++) = 0.5 * log_u(rng);
            break;
        }
        if (!opts_.fixed_noise) {
            std::uniform_real_distribution<double> log_noise(std::log(1e-6), std::log(1e-1));
            t(k++) = log_noise(rng);
        }
        Vector lo, hi;
        bounds(lo, hi);
        return t.cwiseMax(lo).cwiseMin(hi);
    }

private:
    KernelSpec shape_;
    FitOptions opts_;
    std::size_t dims_ = 0;
    Vector ranges_;
};

/// Log marginal likelihood evaluator for a fixed dataset. Per-dimension squared distances are
/// cached so each evaluation costs one kernel assembly and one Cholesky factorization.
class MarginalLikelihood {
public:
    explicit MarginalLikelihood(const Dataset& data)
    {
        const auto n = static_cast<Eigen::Index>(data.size());
        y_ = normalize_observations(data).values;
        z_.resize(static_cast<std::size_t>(n));
        const Eigen::Index d = n > 0 ? data.records[0].x.size() : 0;
        sqdist_.assign(static_cast<std::size_t>(d), Matrix(n, n));
        for (Eigen::Index i = 0; i < n; ++i) {
            z_[static_cast<std::size_t>(i)] = data.records[static_cast<std::size_t>(i)].z;
            for (Eigen::Index j = 0; j <= i; ++j) {
                for (Eigen::Index k = 0; k < d; ++k) {
                    const double diff = data.records[static_cast<std::size_t>(i)].x(k) - data.records[static_cast<std::size_t>(j)].x(k);
                    sqdist_[static_cast<std::size_t>(k)](i, j) = sqdist_[static_cast<std::size_t>(k)](j, i) = diff * diff;
                }
            }
        }
    }

    double operator()(const GpHyperparameters& h) const
    {
        const auto n = y_.size();
        if (n == 0) return 0.0;
        const Kernel kernel(h.kernel);
        Matrix r2 = Matrix::Zero(n, n);
        for (std::size_t k = 0; k < sqdist_.size(); ++k) {
            const double l = h.kernel.lengthscales(static_cast<Eigen::Index>(k));
            r2 += sqdist_[k] / (l * l);
        }
        Matrix km(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double v = matern52(std::sqrt(r2(i, j)), h.kernel.variance) *
                                 kernel.fidelity(z_[static_cast<std::size_t>(i)], z_[static_cast<std::size_t>(j)]);
                km(i, j) = km(j, i) = v;
            }
        }
        km.diagonal().array() += h.noise_variance;
        Eigen::LLT<Matrix> llt;
        robust_cholesky(km, llt);
        const Vector alpha = llt.solve(y_);
        const Matrix& l = llt.matrixLLT();
        const double logdet = l.diagonal().array().log().sum();
        return -0.5 * y_.dot(alpha) - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    }

private:
    Vector y_;
    std::vector<double> z_;
    std::vector<Matrix> sqdist_;
};

struct FitResult {
    GpModel model;
    double log_likelihood = 0.0;
    std::vector<double> restart_initial;
    std::vector<double> restart_final;
};

/// Type-II maximum likelihood with multi-start Nelder-Mead in the codec's coordinates.
/// The first restart starts from the model's current hyper-parameters, so the result never
/// scores below them.
inline FitResult fit_hyperparameters_detailed(const GpModel& model, const FitOptions& opts)
{
    if (model.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "hyper-parameter fitting needs at least two observations");
    }
    const HyperparameterCodec codec(model.kernel_spec(), opts);
    const MarginalLikelihood lml(model.data());
    const double fixed_noise = model.hyperparameters().noise_variance;
    Vector lower, upper;
    codec.bounds(lower, upper);

    auto objective = [&](const Vector& t) {
        try {
            return lml(codec.decode(t, fixed_noise));
        } catch (const Error&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    std::mt19937_64 rng(opts.seed);
    FitResult result;
    double best_value = -std::numeric_limits<double>::infinity();
    Vector best_t;
    const int restarts = std::max(1, opts.restarts);
    for (int r = 0; r < restarts; ++r) {
        Vector start = r == 0 ? codec.encode(model.hyperparameters()).cwiseMax(lower).cwiseMin(upper).eval()
                              : codec.random_start(rng);
        const double initial = objective(start);
        const LocalResult local = nelder_mead_maximize(objective, start, lower, upper, opts.local);
        result.restart_initial.push_back(initial);
        result.restart_final.push_back(local.value);
        if (local.value > best_value) {
            best_value = local.value;
            best_t = local.x;
        }
    }
    if (!std::isfinite(best_value)) {
        throw Error(ErrorCode::OptimizationFailure, "every restart produced a non-finite likelihood");
    }
    result.model = fit_posterior(codec.decode(best_t, fixed_noise), model.data(), model.target_fidelity());
    result.log_likelihood = result.model.log_marginal_likelihood();
    return result;
}

inline GpModel fit_hyperparameters(const GpModel& model, const FitOptions& opts)
{
    return fit_hyperparameters_detailed(model, opts).model;
}

/// Default starting hyper-parameters for a kernel variant over a search space.
inline GpHyperparameters default_hyperparameters(KernelVariant variant, const SearchSpace& space,
                                                 double noise_variance = 1e-6)
{
    Vector ls = (0.2 * space.ranges()).cwiseMax(1e-3);
    GpHyperparameters h;
    h.noise_variance = noise_variance;
    switch (variant) {
    case KernelVariant::SingleTask:
        h.kernel = KernelSpec::single_task(ls, 1.0);
        break;
    case KernelVariant::MaternIcm: {
        const auto k = static_cast<Eigen::Index>(space.discrete().count);
        const Eigen::Index rank = std::min<Eigen::Index>(k, 2);
        Matrix w = Matrix::Zero(k, rank);
        w.col(0).setOnes();
        h.kernel = KernelSpec::matern_icm(ls, w, Vector::Constant(k, 0.1));
        break;
    }
    case KernelVariant::FabolasProduct:
        h.kernel = KernelSpec::fabolas(ls, Eigen::Matrix2d::Identity());
        break;
    }
    return h;
}

} // namespace mumbo

#endif
