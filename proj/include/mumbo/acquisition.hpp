#ifndef MUMBO_ACQUISITION_HPP
#define MUMBO_ACQUISITION_HPP

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mumbo/error.hpp"
#include "mumbo/gp.hpp"
#include "mumbo/maxval.hpp"
#include "mumbo/numerics.hpp"
#include "mumbo/space.hpp"

namespace mumbo {

/// How the expectation over the extended skew Gaussian is discretized: Simpson nodes over the
/// ESG mean plus/minus half_width_sd standard deviations.
struct QuadraturePolicy {
    int points = 101;
    double half_width_sd = 4.0;

    bool operator==(const QuadraturePolicy&) const = default;
};

/// Correlations beyond this magnitude use the closed-form max-value entropy term.
inline constexpr double kRhoClamp = 0.999999;

/// Tolerated negative excursion of the acquisition before it is reported as broken numerics.
inline constexpr double kQuadratureNegativityTolerance = 1e-4;

/// Closed-form max-value entropy term for one g* sample at standardized threshold gamma.
inline double mes_term(double gamma)
{
    const double lambda = inverse_mills_ratio(gamma);
    return 0.5 * gamma * lambda - log_normal_cdf(gamma);
}

/// Information gain about g* from y, for one g* sample, in standardized coordinates:
///
///   rho^2 gamma phi(gamma) / (2 Phi(gamma)) - log Phi(gamma) + E_Z[log Phi((gamma - rho Z) / sqrt(1 - rho^2))]
///
/// with Z the extended skew Gaussian. The expectation is a self-normalized Simpson sum over the
/// ESG density, so a constant integrand (rho = 0) is reproduced exactly.
inline double mumbo_term(double rho, double gamma, const QuadraturePolicy& quad = {})
{
    if (!std::isfinite(rho) || !std::isfinite(gamma)) {
        throw Error(ErrorCode::NonFiniteValue, "mumbo term needs finite rho and gamma");
    }
    if (std::abs(rho) > kRhoClamp) {
        return mes_term(gamma);
    }
    const double rho2 = rho * rho;
    if (gamma < kCdfUnderflowGamma) {
        // g is pinned at g*, leaving y with conditional variance 1 - rho^2
        return -0.5 * std::log1p(-rho2);
    }
    const EsgMoments m = esg_moments({rho, gamma});
    const double sd = std::sqrt(m.variance);
    const double scale = std::sqrt(1.0 - rho2);
    const double log_cdf_gamma = log_normal_cdf(gamma);
    const double lambda = std::exp(log_normal_pdf(gamma) - log_cdf_gamma);

    // E[log Phi(u)] - log Phi(gamma), accumulated as differences so that rho = 0 gives exactly 0
    double excess = 0.0;
    if (sd > 1e-12) {
        QuadratureGrid grid{m.mean - quad.half_width_sd * sd, m.mean + quad.half_width_sd * sd, quad.points};
        grid.validate();
        double mass = 0.0, acc = 0.0;
        for (int i = 0; i < grid.points; ++i) {
            const double theta = grid.node(i);
            const double diff = log_normal_cdf((gamma - rho * theta) / scale) - log_cdf_gamma;
            const double w = QuadratureGrid::weight(i, grid.points) * std::exp(log_normal_pdf(theta) + diff);
            mass += w;
            acc += w * diff;
        }
        excess = mass > 0.0 ? acc / mass : log_normal_cdf((gamma - rho * m.mean) / scale) - log_cdf_gamma;
    } else {
        excess = log_normal_cdf((gamma - rho * m.mean) / scale) - log_cdf_gamma;
    }
    return 0.5 * rho2 * gamma * lambda + excess;
}

/// MUMBO averaged over a g* sample set, given the joint prediction at (x, z).
inline double mumbo_from_prediction(const BivariatePrediction& p, std::span<const double> max_values,
                                    const QuadraturePolicy& quad = {})
{
    if (max_values.empty()) throw Error(ErrorCode::InvalidArgument, "no max-value samples");
    const double sigma_g = std::sqrt(p.var_g);
    if (!(sigma_g > 1e-10)) {
        return 0.0;
    }
    double sum = 0.0;
    for (double g : max_values) {
        sum += mumbo_term(p.rho, (g - p.mu_g) / sigma_g, quad);
    }
    const double value = sum / static_cast<double>(max_values.size());
    if (value < -kQuadratureNegativityTolerance) {
        throw Error(ErrorCode::QuadratureNegativity, "mumbo evaluated to " + std::to_string(value));
    }
    return std::max(value, 0.0);
}

inline double mes_from_prediction(const BivariatePrediction& p, std::span<const double> max_values)
{
    if (max_values.empty()) throw Error(ErrorCode::InvalidArgument, "no max-value samples");
    const double sigma_g = std::sqrt(p.var_g);
    if (!(sigma_g > 1e-10)) return 0.0;
    double sum = 0.0;
    for (double g : max_values) sum += mes_term((g - p.mu_g) / sigma_g);
    return sum / static_cast<double>(max_values.size());
}

/// Query cost c(x, z) > 0.
class CostModel {
public:
    enum class Variant { KnownFunction, PerFidelityConstant, LearnedLogCost };

    static CostModel known(std::function<double(const Vector&, double)> fn)
    {
        CostModel c;
        c.variant_ = Variant::KnownFunction;
        c.fn_ = std::move(fn);
        return c;
    }

    static CostModel per_fidelity(std::vector<double> costs)
    {
        for (double v : costs) {
            if (!(v > 0.0)) throw Error(ErrorCode::ZeroCost, "fidelity costs must be positive");
        }
        CostModel c;
        c.variant_ = Variant::PerFidelityConstant;
        c.costs_ = std::move(costs);
        return c;
    }

    /// Least-squares fit of log c = b0 + b1 z over observed (z, cost) pairs.
    static CostModel learned(std::span<const std::pair<double, double>> observed)
    {
        if (observed.empty()) throw Error(ErrorCode::InvalidArgument, "learned cost model needs observations");
        Matrix a(static_cast<Eigen::Index>(observed.size()), 2);
        Vector b(static_cast<Eigen::Index>(observed.size()));
        for (std::size_t i = 0; i < observed.size(); ++i) {
            const auto [z, cost] = observed[i];
            if (!(cost > 0.0)) throw Error(ErrorCode::ZeroCost, "observed costs must be positive");
            a(static_cast<Eigen::Index>(i), 0) = 1.0;
            a(static_cast<Eigen::Index>(i), 1) = z;
            b(static_cast<Eigen::Index>(i)) = std::log(cost);
        }
        CostModel c;
        c.variant_ = Variant::LearnedLogCost;
        // minimum-norm solution when every observation shares one z
        c.log_coeffs_ = a.completeOrthogonalDecomposition().solve(b);
        return c;
    }

    Variant variant() const { return variant_; }
    const Vector& log_coefficients() const { return log_coeffs_; }

    double operator()(const Vector& x, double z) const
    {
        switch (variant_) {
        case Variant::KnownFunction: return fn_(x, z);
        case Variant::PerFidelityConstant: return costs_.at(static_cast<std::size_t>(z));
        case Variant::LearnedLogCost: return std::exp(log_coeffs_(0) + log_coeffs_(1) * z);
        }
        return 1.0;
    }

private:
    Variant variant_ = Variant::KnownFunction;
    std::function<double(const Vector&, double)> fn_;
    std::vector<double> costs_;
    Vector log_coeffs_ = Vector::Zero(2);
};

/// Everything the acquisition closes over during one BO iteration.
class AcquisitionContext {
public:
    AcquisitionContext(const GpModel& model, MaxValueSamples samples, CostModel cost, QuadraturePolicy quad = {})
        : model_(&model), samples_(std::move(samples)), cost_(std::move(cost)), quad_(quad)
    {
        if (samples_.model_generation != model.generation()) {
            throw Error(ErrorCode::InvalidArgument, "max-value samples were drawn from a different model");
        }
        if (samples_.values.empty()) throw Error(ErrorCode::InvalidArgument, "no max-value samples");
    }

    const GpModel& model() const { return *model_; }
    const MaxValueSamples& samples() const { return samples_; }
    const CostModel& cost() const { return cost_; }
    const QuadraturePolicy& quadrature() const { return quad_; }

    /// Replace the search coupling from y to g, e.g. to score fold averages instead of a target fidelity.
    void set_predictor(std::function<BivariatePrediction(const Vector&, double)> predictor)
    {
        predictor_ = std::move(predictor);
    }

    BivariatePrediction predict(const Vector& x, double z) const
    {
        return predictor_ ? predictor_(x, z) : model_->joint_prediction(x, z);
    }

private:
    const GpModel* model_;
    MaxValueSamples samples_;
    CostModel cost_;
    QuadraturePolicy quad_;
    std::function<BivariatePrediction(const Vector&, double)> predictor_;
};

inline double mumbo(const AcquisitionContext& ctx, const Vector& x, double z)
{
    return mumbo_from_prediction(ctx.predict(x, z), ctx.samples().values, ctx.quadrature());
}

inline double mes(const AcquisitionContext& ctx, const Vector& x)
{
    return mes_from_prediction(ctx.predict(x, ctx.model().target_fidelity()), ctx.samples().values);
}

/// Expected improvement over incumbent_value at the target fidelity.
inline double expected_improvement(const GpModel& model, const Vector& x, double incumbent_value)
{
    const Prediction p = model.predict(x, model.target_fidelity());
    const double s = std::sqrt(p.variance);
    if (!(s > 0.0)) return 0.0;
    const double u = (p.mean - incumbent_value) / s;
    return s * (u * normal_cdf(u) + normal_pdf(u));
}

inline double cost_weighted(const AcquisitionContext& ctx, const Vector& x, double z)
{
    const double c = ctx.cost()(x, z);
    if (!(c > 0.0)) throw Error(ErrorCode::ZeroCost, "query cost must be positive");
    return mumbo(ctx, x, z) / c;
}

} // namespace mumbo

#endif
