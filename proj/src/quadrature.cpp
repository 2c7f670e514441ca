#include "haffsim/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "haffsim/errors.hpp"

namespace haffsim {

GaussLegendre::GaussLegendre(int order) {
    if (order < 2) throw QuadratureError("Gauss-Legendre order must be at least 2");
    const int n = order;
    nodes_.resize(n);
    weights_.resize(n);
    // Newton iteration on P_n from the Chebyshev-like initial guess; roots are symmetric.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes_[i] = -x;
        nodes_[n - 1 - i] = x;
        weights_[i] = weights_[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes_[n / 2] = 0.0;
}

const GaussLegendre& gauss_legendre(int order) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussLegendre>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<GaussLegendre>(order);
    return *slot;
}

}  // namespace haffsim
