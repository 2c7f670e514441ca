#pragma once

#include <vector>

namespace haffsim {

/// Gauss-Legendre rule of a fixed order on [-1, 1].
class GaussLegendre {
public:
    /// Throws QuadratureError if order < 2.
    explicit GaussLegendre(int order);

    int order() const noexcept { return static_cast<int>(nodes_.size()); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) sum += weights_[i] * f(mid + half * nodes_[i]);
        return half * sum;
    }

private:
    std::vector<double> nodes_, weights_;
};

/// Cached rule for a given order (thread-safe).
const GaussLegendre& gauss_legendre(int order);

}  // namespace haffsim
