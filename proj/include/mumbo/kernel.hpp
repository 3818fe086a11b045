#ifndef MUMBO_KERNEL_HPP
#define MUMBO_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "mumbo/error.hpp"
#include "mumbo/space.hpp"

namespace mumbo {

enum class KernelVariant {
    MaternIcm,      ///< Matern 5/2 times a coregionalization matrix over discrete fidelities
    FabolasProduct, ///< Matern 5/2 times a degenerate kernel over phi(z) = (z, (1 - z)^2)
    SingleTask,     ///< Matern 5/2 that ignores the fidelity
};

inline std::string to_string(KernelVariant v)
{
    switch (v) {
    case KernelVariant::MaternIcm: return "icm";
    case KernelVariant::FabolasProduct: return "fabolas";
    case KernelVariant::SingleTask: return "single";
    }
    return "unknown";
}

inline KernelVariant kernel_variant_from_string(const std::string& s)
{
    if (s == "icm") return KernelVariant::MaternIcm;
    if (s == "fabolas") return KernelVariant::FabolasProduct;
    if (s == "single") return KernelVariant::SingleTask;
    throw Error(ErrorCode::ConfigError, "unknown kernel variant '" + s + "'");
}

/// Kernel hyper-parameters over the joint parameter x fidelity space.
///
/// For MaternIcm the task matrix is B = W W^T + diag(kappa). For FabolasProduct the basis
/// coefficient matrix is Sigma1 = L L^T with L lower triangular; storing the factor keeps
/// Sigma1 positive semi-definite under any parameter update.
struct KernelSpec {
    KernelVariant variant = KernelVariant::SingleTask;
    Vector lengthscales;
    double variance = 1.0;
    Matrix coreg_factor; ///< W, |Z| x r
    Vector coreg_diag;   ///< kappa, |Z|
    Eigen::Matrix2d basis_factor = Eigen::Matrix2d::Identity(); ///< L

    std::size_t dims() const { return static_cast<std::size_t>(lengthscales.size()); }

    Matrix coregionalization() const
    {
        Matrix b = coreg_factor * coreg_factor.transpose();
        b.diagonal() += coreg_diag;
        return 0.5 * (b + b.transpose());
    }

    Eigen::Matrix2d basis_covariance() const { return basis_factor * basis_factor.transpose(); }

    void validate() const
    {
        if (lengthscales.size() == 0) {
            throw Error(ErrorCode::InvalidArgument, "kernel needs at least one lengthscale");
        }
        if ((lengthscales.array() <= 0.0).any() || !(variance > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "lengthscales and variance must be positive");
        }
        if (variant == KernelVariant::MaternIcm) {
            if (coreg_diag.size() == 0 || coreg_factor.rows() != coreg_diag.size()) {
                throw Error(ErrorCode::InvalidArgument, "coregionalization factor shape mismatch");
            }
            if ((coreg_diag.array() <= 0.0).any()) {
                throw Error(ErrorCode::InvalidArgument, "coregionalization diagonal must be positive");
            }
        }
    }

    static KernelSpec single_task(Vector lengthscales, double variance)
    {
        KernelSpec k;
        k.variant = KernelVariant::SingleTask;
        k.lengthscales = std::move(lengthscales);
        k.variance = variance;
        return k;
    }

    static KernelSpec matern_icm(Vector lengthscales, Matrix factor, Vector diag)
    {
        KernelSpec k;
        k.variant = KernelVariant::MaternIcm;
        k.lengthscales = std::move(lengthscales);
        k.variance = 1.0;
        k.coreg_factor = std::move(factor);
        k.coreg_diag = std::move(diag);
        return k;
    }

    static KernelSpec fabolas(Vector lengthscales, Eigen::Matrix2d lower_factor)
    {
        KernelSpec k;
        k.variant = KernelVariant::FabolasProduct;
        k.lengthscales = std::move(lengthscales);
        k.variance = 1.0;
        k.basis_factor = lower_factor;
        return k;
    }
};

/// Matern 5/2 as a function of the lengthscale-weighted distance r.
inline double matern52(double r, double variance)
{
    const double s = std::sqrt(5.0) * r;
    return variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

/// Evaluation-ready kernel: the derived B and Sigma1 matrices are built once.
class Kernel {
public:
    Kernel() = default;

    explicit Kernel(KernelSpec spec) : spec_(std::move(spec))
    {
        spec_.validate();
        inv_lengthscales_ = spec_.lengthscales.cwiseInverse();
        if (spec_.variant == KernelVariant::MaternIcm) {
            coreg_ = spec_.coregionalization();
        }
        basis_ = spec_.basis_covariance();
    }

    const KernelSpec& spec() const { return spec_; }
    std::size_t dims() const { return spec_.dims(); }

    double base(const Vector& a, const Vector& b) const
    {
        if (a.size() != inv_lengthscales_.size() || b.size() != inv_lengthscales_.size()) {
            throw Error(ErrorCode::DimensionMismatch, "point dimension differs from kernel dimension");
        }
        double r2 = 0.0;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            const double d = (a(i) - b(i)) * inv_lengthscales_(i);
            r2 += d * d;
        }
        return matern52(std::sqrt(r2), spec_.variance);
    }

    double fidelity(double z, double zp) const
    {
        switch (spec_.variant) {
        case KernelVariant::SingleTask:
            return 1.0;
        case KernelVariant::MaternIcm: {
            const auto i = static_cast<Eigen::Index>(z);
            const auto j = static_cast<Eigen::Index>(zp);
            if (i < 0 || j < 0 || i >= coreg_.rows() || j >= coreg_.rows() || i != z || j != zp) {
                throw Error(ErrorCode::DimensionMismatch, "fidelity index outside coregionalization matrix");
            }
            return coreg_(i, j);
        }
        case KernelVariant::FabolasProduct: {
            const double a0 = z, a1 = (1.0 - z) * (1.0 - z);
            const double b0 = zp, b1 = (1.0 - zp) * (1.0 - zp);
            return basis_(0, 0) * (a0 * b0) + basis_(1, 1) * (a1 * b1) + basis_(0, 1) * (a0 * b1 + a1 * b0);
        }
        }
        return 1.0;
    }

    double operator()(const Vector& x, double z, const Vector& xp, double zp) const
    {
        return base(x, xp) * fidelity(z, zp);
    }

private:
    KernelSpec spec_;
    Vector inv_lengthscales_;
    Matrix coreg_;
    Eigen::Matrix2d basis_ = Eigen::Matrix2d::Identity();
};

inline double kernel_eval(const KernelSpec& spec, const Vector& x, double z, const Vector& xp, double zp)
{
    return Kernel(spec)(x, z, xp, zp);
}

} // namespace mumbo

#endif
