#ifndef MUMBO_SPACE_HPP
#define MUMBO_SPACE_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mumbo/error.hpp"

namespace mumbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A finite set of fidelities indexed 0..count-1.
struct DiscreteFidelity {
    std::size_t count = 1;
    std::size_t target = 0;
    std::vector<double> costs;
};

/// A fidelity interval with a cost function over it.
struct ContinuousFidelity {
    double lower = 0.0;
    double upper = 1.0;
    double target = 1.0;
    std::function<double(double)> cost;
};

using FidelityDomain = std::variant<DiscreteFidelity, ContinuousFidelity>;

/// Box-constrained parameter domain crossed with a fidelity domain. Discrete fidelities are
/// carried as integer-valued doubles so every point of the joint space is (x, z) with z real.
class SearchSpace {
public:
    SearchSpace() = default;

    SearchSpace(std::vector<std::pair<double, double>> bounds, FidelityDomain fidelity)
        : bounds_(std::move(bounds)), fidelity_(std::move(fidelity))
    {
        validate();
    }

    std::size_t dims() const { return bounds_.size(); }
    const std::vector<std::pair<double, double>>& bounds() const { return bounds_; }
    const FidelityDomain& fidelity() const { return fidelity_; }

    bool is_discrete() const { return std::holds_alternative<DiscreteFidelity>(fidelity_); }

    const DiscreteFidelity& discrete() const
    {
        if (!is_discrete()) {
            throw Error(ErrorCode::UnsupportedFidelity, "space has a continuous fidelity");
        }
        return std::get<DiscreteFidelity>(fidelity_);
    }

    const ContinuousFidelity& continuous() const
    {
        if (is_discrete()) {
            throw Error(ErrorCode::UnsupportedFidelity, "space has a discrete fidelity");
        }
        return std::get<ContinuousFidelity>(fidelity_);
    }

    double target_fidelity() const
    {
        return is_discrete() ? static_cast<double>(discrete().target) : continuous().target;
    }

    std::size_t fidelity_count() const { return is_discrete() ? discrete().count : 0; }

    Vector lower() const
    {
        Vector v(dims());
        for (std::size_t i = 0; i < dims(); ++i) v(i) = bounds_[i].first;
        return v;
    }

    Vector upper() const
    {
        Vector v(dims());
        for (std::size_t i = 0; i < dims(); ++i) v(i) = bounds_[i].second;
        return v;
    }

    Vector ranges() const { return upper() - lower(); }

    bool contains_x(const Vector& x) const
    {
        if (static_cast<std::size_t>(x.size()) != dims()) return false;
        for (std::size_t i = 0; i < dims(); ++i) {
            if (!(x(i) >= bounds_[i].first && x(i) <= bounds_[i].second)) return false;
        }
        return true;
    }

    bool contains_z(double z) const
    {
        if (is_discrete()) {
            const auto& d = discrete();
            return z >= 0.0 && z < static_cast<double>(d.count) && z == std::floor(z);
        }
        const auto& c = continuous();
        return z >= c.lower && z <= c.upper;
    }

    bool contains(const Vector& x, double z) const { return contains_x(x) && contains_z(z); }

    double cost(const Vector& x, double z) const
    {
        (void)x;
        if (is_discrete()) {
            return discrete().costs.at(static_cast<std::size_t>(z));
        }
        return continuous().cost(z);
    }

private:
    void validate() const
    {
        if (bounds_.empty()) {
            throw Error(ErrorCode::InvalidArgument, "search space needs at least one dimension");
        }
        for (const auto& [lo, hi] : bounds_) {
            if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
                throw Error(ErrorCode::InvalidArgument, "each bound needs finite lower <= upper");
            }
        }
        if (is_discrete()) {
            const auto& d = std::get<DiscreteFidelity>(fidelity_);
            if (d.count == 0 || d.target >= d.count) {
                throw Error(ErrorCode::InvalidArgument, "target fidelity outside the fidelity set");
            }
            if (d.costs.size() != d.count) {
                throw Error(ErrorCode::InvalidArgument, "one cost per discrete fidelity required");
            }
            for (double c : d.costs) {
                if (!(c > 0.0)) throw Error(ErrorCode::ZeroCost, "fidelity costs must be positive");
            }
        } else {
            const auto& c = std::get<ContinuousFidelity>(fidelity_);
            if (!(c.lower < c.upper) || c.target < c.lower || c.target > c.upper) {
                throw Error(ErrorCode::InvalidArgument, "target fidelity outside the fidelity interval");
            }
            if (!c.cost) {
                throw Error(ErrorCode::InvalidArgument, "continuous fidelity needs a cost function");
            }
        }
    }

    std::vector<std::pair<double, double>> bounds_;
    FidelityDomain fidelity_ = DiscreteFidelity{1, 0, {1.0}};
};

struct Observation {
    Vector x;
    double z = 0.0;
    double y = 0.0;

    bool operator==(const Observation& o) const { return z == o.z && y == o.y && x == o.x; }
};

/// The observations collected so far, plus the total cost paid for them.
struct Dataset {
    std::vector<Observation> records;
    double spent = 0.0;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }

    void add(Observation obs, double cost)
    {
        records.push_back(std::move(obs));
        spent += cost;
    }
};

} // namespace mumbo

#endif
