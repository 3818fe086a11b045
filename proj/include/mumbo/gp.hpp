#ifndef MUMBO_GP_HPP
#define MUMBO_GP_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mumbo/error.hpp"
#include "mumbo/kernel.hpp"
#include "mumbo/space.hpp"

namespace mumbo {

struct GpHyperparameters {
    KernelSpec kernel;
    /// Observation noise variance in normalized-y units.
    double noise_variance = 1e-6;
};

/// Marginal posterior at a single joint point, in observation units.
struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

/// Joint belief over the target value g(x) = f(x, z0) and a noisy observation y(x, z).
struct BivariatePrediction {
    double mu_g = 0.0;
    double mu_f = 0.0;
    double var_g = 0.0;
    double var_f = 0.0;
    double cov = 0.0;
    double rho = 0.0;
    double noise_variance = 0.0;

    double sigma_g() const { return std::sqrt(var_g); }
};

/// Correlation between g and y = f + noise. Zero when either side has no variance.
inline double bivariate_correlation(double var_g, double var_f, double noise, double cov)
{
    const double denom = std::sqrt(var_g * (var_f + noise));
    if (!(denom > 0.0)) {
        return 0.0;
    }
    return std::clamp(cov / denom, -1.0, 1.0);
}

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-6;

struct NormalizedObservations {
    double mean = 0.0;
    double scale = 1.0;
    Vector values;
};

/// Center y and scale it to unit sample variance; constant or single observations keep scale 1.
inline NormalizedObservations normalize_observations(const Dataset& data)
{
    NormalizedObservations out;
    const auto n = static_cast<Eigen::Index>(data.size());
    out.values = Vector(n);
    if (n == 0) return out;
    for (Eigen::Index i = 0; i < n; ++i) out.values(i) = data.records[static_cast<std::size_t>(i)].y;
    out.mean = out.values.mean();
    const double var = n > 1 ? (out.values.array() - out.mean).square().sum() / static_cast<double>(n - 1) : 0.0;
    out.scale = var > 1e-24 ? std::sqrt(var) : 1.0;
    out.values = (out.values.array() - out.mean) / out.scale;
    return out;
}

/// Cholesky of k with diagonal jitter escalation. Returns the jitter that was added.
inline double robust_cholesky(const Matrix& k, Eigen::LLT<Matrix>& llt)
{
    llt.compute(k);
    if (llt.info() == Eigen::Success) return 0.0;
    const double mean_diag = std::max(k.diagonal().mean(), 1e-300);
    for (double rel = kJitterStart; rel <= kJitterMax * (1.0 + 1e-9); rel *= 10.0) {
        Matrix kj = k;
        kj.diagonal().array() += rel * mean_diag;
        llt.compute(kj);
        if (llt.info() == Eigen::Success) return rel * mean_diag;
    }
    throw Error(ErrorCode::NotPositiveDefinite, "kernel matrix not positive definite after jitter escalation");
}

/// Exact GP posterior over the joint space. Immutable once built: a new dataset or new
/// hyper-parameters produce a new model through fit_posterior.
///
/// Observations are centered and scaled to unit variance before solving; the zero prior mean
/// lives in that normalized space and every reported prediction is mapped back.
class GpModel {
public:
    GpModel() = default;

    const GpHyperparameters& hyperparameters() const { return hyper_; }
    const KernelSpec& kernel_spec() const { return kernel_.spec(); }
    const Kernel& kernel() const { return kernel_; }
    const Dataset& data() const { return data_; }
    double target_fidelity() const { return target_; }
    double y_mean() const { return y_mean_; }
    double y_scale() const { return y_scale_; }
    double jitter() const { return jitter_; }
    std::size_t size() const { return data_.size(); }
    /// Unique id of this posterior; any refit produces a new one.
    std::uint64_t generation() const { return generation_; }

    /// (K + sigma^2 I) lower factor, normalized units.
    const Matrix& factor() const { return chol_; }
    /// (K + sigma^2 I)^{-1} y in normalized units.
    const Vector& alpha() const { return alpha_; }

    /// Noise variance in observation units.
    double noise_variance() const { return hyper_.noise_variance * y_scale_ * y_scale_; }

    /// Prior covariance in normalized units.
    double prior(const Vector& x, double z, const Vector& xp, double zp) const { return kernel_(x, z, xp, zp); }

    Vector cross_covariance(const Vector& x, double z) const
    {
        Vector k(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) {
            const auto& r = data_.records[i];
            k(static_cast<Eigen::Index>(i)) = kernel_(r.x, r.z, x, z);
        }
        return k;
    }

    Prediction predict(const Vector& x, double z) const
    {
        const double prior_var = kernel_(x, z, x, z);
        if (data_.empty()) {
            return {y_mean_, std::max(0.0, prior_var) * y_scale_ * y_scale_};
        }
        const Vector k = cross_covariance(x, z);
        const Vector v = solve_lower(k);
        const double mean = k.dot(alpha_);
        const double var = std::max(0.0, prior_var - v.squaredNorm());
        return {y_mean_ + y_scale_ * mean, var * y_scale_ * y_scale_};
    }

    /// Posterior covariance among a set of joint points, observation units.
    Matrix posterior_covariance(std::span<const std::pair<Vector, double>> points) const
    {
        const auto m = static_cast<Eigen::Index>(points.size());
        Matrix prior_cov(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                const auto& [xi, zi] = points[static_cast<std::size_t>(i)];
                const auto& [xj, zj] = points[static_cast<std::size_t>(j)];
                prior_cov(i, j) = prior_cov(j, i) = kernel_(xi, zi, xj, zj);
            }
        }
        if (!data_.empty()) {
            Matrix v(static_cast<Eigen::Index>(data_.size()), m);
            for (Eigen::Index j = 0; j < m; ++j) {
                const auto& [x, z] = points[static_cast<std::size_t>(j)];
                v.col(j) = solve_lower(cross_covariance(x, z));
            }
            prior_cov.noalias() -= v.transpose() * v;
        }
        return prior_cov * (y_scale_ * y_scale_);
    }

    /// The bivariate Gaussian over (g(x), y(x, z)) with g taken at the target fidelity.
    BivariatePrediction joint_prediction(const Vector& x, double z) const
    {
        BivariatePrediction p;
        const double noise = hyper_.noise_variance;
        const double kzz = kernel_(x, z, x, z);
        const bool at_target = (z == target_);
        const double k00 = at_target ? kzz : kernel_(x, target_, x, target_);
        const double kz0 = at_target ? kzz : kernel_(x, z, x, target_);

        double mu_f = 0.0, mu_g = 0.0, var_f = kzz, var_g = k00, cov = kz0;
        if (!data_.empty()) {
            const Vector kz = cross_covariance(x, z);
            const Vector vz = solve_lower(kz);
            mu_f = kz.dot(alpha_);
            var_f = kzz - vz.squaredNorm();
            if (at_target) {
                mu_g = mu_f;
                var_g = var_f;
                cov = var_f;
            } else {
                const Vector k0 = cross_covariance(x, target_);
                const Vector v0 = solve_lower(k0);
                mu_g = k0.dot(alpha_);
                var_g = k00 - v0.squaredNorm();
                cov = kz0 - vz.dot(v0);
            }
        }
        var_f = std::max(0.0, var_f);
        var_g = std::max(0.0, var_g);

        const double s2 = y_scale_ * y_scale_;
        p.mu_g = y_mean_ + y_scale_ * mu_g;
        p.mu_f = y_mean_ + y_scale_ * mu_f;
        p.var_g = var_g * s2;
        p.var_f = var_f * s2;
        p.cov = cov * s2;
        p.noise_variance = noise * s2;
        p.rho = bivariate_correlation(var_g, var_f, noise, cov);
        return p;
    }

    /// log p(y | hyper-parameters) of the normalized observations.
    double log_marginal_likelihood() const
    {
        const auto n = static_cast<double>(data_.size());
        if (data_.empty()) return 0.0;
        const double fit = -0.5 * normalized_y_.dot(alpha_);
        const double logdet = chol_.diagonal().array().log().sum();
        return fit - logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
    }

    Vector solve_lower(const Vector& k) const { return chol_.triangularView<Eigen::Lower>().solve(k); }

    const Vector& normalized_y() const { return normalized_y_; }

private:
    friend GpModel fit_posterior(GpHyperparameters hyper, Dataset data, double target_fidelity);

    GpHyperparameters hyper_;
    Kernel kernel_;
    Dataset data_;
    double target_ = 0.0;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    double jitter_ = 0.0;
    std::uint64_t generation_ = 0;
    Vector normalized_y_;
    Matrix chol_;
    Vector alpha_;
};

/// Build the posterior for the given hyper-parameters and data. The Cholesky factor of
/// (K + sigma^2 I) is retried with diagonal jitter from 1e-10 up to 1e-6 times the mean
/// kernel diagonal before giving up.
inline GpModel fit_posterior(GpHyperparameters hyper, Dataset data, double target_fidelity)
{
    if (!(hyper.noise_variance >= 0.0) || !std::isfinite(hyper.noise_variance)) {
        throw Error(ErrorCode::InvalidArgument, "noise variance must be non-negative");
    }
    static std::atomic<std::uint64_t> next_generation{1};
    GpModel m;
    m.generation_ = next_generation.fetch_add(1);
    m.kernel_ = Kernel(hyper.kernel);
    m.hyper_ = std::move(hyper);
    m.target_ = target_fidelity;
    m.data_ = std::move(data);

    const auto n = static_cast<Eigen::Index>(m.data_.size());
    for (const auto& r : m.data_.records) {
        if (static_cast<std::size_t>(r.x.size()) != m.kernel_.dims()) {
            throw Error(ErrorCode::DimensionMismatch, "observation dimension differs from kernel dimension");
        }
    }
    if (n == 0) {
        m.chol_ = Matrix(0, 0);
        m.alpha_ = Vector(0);
        m.normalized_y_ = Vector(0);
        return m;
    }

    const auto norm = normalize_observations(m.data_);
    m.y_mean_ = norm.mean;
    m.y_scale_ = norm.scale;
    m.normalized_y_ = norm.values;

    Matrix k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& ri = m.data_.records[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j <= i; ++j) {
            const auto& rj = m.data_.records[static_cast<std::size_t>(j)];
            k(i, j) = k(j, i) = m.kernel_(ri.x, ri.z, rj.x, rj.z);
        }
    }
    k.diagonal().array() += m.hyper_.noise_variance;

    Eigen::LLT<Matrix> llt;
    m.jitter_ = robust_cholesky(k, llt);
    m.chol_ = llt.matrixL();
    m.alpha_ = llt.solve(m.normalized_y_);
    return m;
}

/// Same hyper-parameters, new data.
inline GpModel refit_posterior(const GpModel& model, Dataset data)
{
    return fit_posterior(model.hyperparameters(), std::move(data), model.target_fidelity());
}

inline BivariatePrediction joint_prediction(const GpModel& model, const Vector& x, double z)
{
    return model.joint_prediction(x, z);
}

/// Fold-averaged target for K-fold cross validation: g(x) is the mean over all K folds and y
/// is a noisy evaluation on fold z. Only meaningful for discrete fidelity spaces.
inline BivariatePrediction fold_average_prediction(const GpModel& model, const SearchSpace& space,
                                                   const Vector& x, double z)
{
    if (!space.is_discrete()) {
        throw Error(ErrorCode::UnsupportedFidelity, "fold averaging needs discrete folds");
    }
    const auto folds = static_cast<Eigen::Index>(space.discrete().count);
    const auto zi = static_cast<Eigen::Index>(z);
    if (zi < 0 || zi >= folds || static_cast<double>(zi) != z) {
        throw Error(ErrorCode::OutOfBounds, "fold index outside the fold set");
    }

    // Posterior mean and covariance among the K fold evaluations at x, normalized units.
    Vector mean(folds);
    Matrix cov(folds, folds);
    std::vector<Vector> solved(static_cast<std::size_t>(folds));
    for (Eigen::Index f = 0; f < folds; ++f) {
        const double zf = static_cast<double>(f);
        if (model.size() > 0) {
            const Vector k = model.cross_covariance(x, zf);
            solved[static_cast<std::size_t>(f)] = model.solve_lower(k);
            mean(f) = k.dot(model.alpha());
        } else {
            mean(f) = 0.0;
        }
    }
    for (Eigen::Index f = 0; f < folds; ++f) {
        for (Eigen::Index g = 0; g <= f; ++g) {
            double c = model.prior(x, static_cast<double>(f), x, static_cast<double>(g));
            if (model.size() > 0) {
                const auto& vf = solved[static_cast<std::size_t>(f)];
                const auto& vg = solved[static_cast<std::size_t>(g)];
                c -= (f == g) ? vf.squaredNorm() : vf.dot(vg);
            }
            cov(f, g) = cov(g, f) = c;
        }
    }

    const double kf = static_cast<double>(folds);
    const double var_f = std::max(0.0, cov(zi, zi));
    const double var_g = std::max(0.0, cov.sum() / (kf * kf));
    const double cross = cov.row(zi).sum() / kf;
    const double noise = model.hyperparameters().noise_variance;
    const double s = model.y_scale();

    BivariatePrediction out;
    out.mu_g = model.y_mean() + s * (mean.sum() / kf);
    out.mu_f = model.y_mean() + s * mean(zi);
    const double s2 = s * s;
    out.var_g = var_g * s2;
    out.var_f = var_f * s2;
    out.cov = cross * s2;
    out.noise_variance = noise * s2;
    out.rho = bivariate_correlation(var_g, var_f, noise, cross);
    return out;
}

} // namespace mumbo

#endif
