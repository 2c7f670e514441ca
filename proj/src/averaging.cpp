#include "haffsim/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "haffsim/errors.hpp"
#include "haffsim/quadrature.hpp"

namespace haffsim::averaging {

namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;

double hermite(double x0, double x1, double y0, double y1, double f0, double f1, double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * f0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * f1;
}

std::size_t segment(const std::vector<double>& grid, double x) {
    if (x <= grid.front()) return 0;
    if (x >= grid.back()) return grid.size() - 2;
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    return static_cast<std::size_t>(it - grid.begin()) - 1;
}

}  // namespace

double g_increment(double phi_pre, double c, const RestitutionModel& model) {
    const double cp = std::cos(phi_pre), sp = std::sin(phi_pre);
    const double eta = model.eval(c * cp).eta;
    if (eta == 0.0) return 0.0;
    const double root = std::sqrt((1.0 - eta) * (1.0 - eta) * cp * cp + sp * sp);
    return -c * (2.0 - eta) * eta * cp * cp / (1.0 + root);
}

double gbar(double c, const RestitutionModel& model, int order) {
    const GaussLegendre& gl = gauss_legendre(order);
    return 0.5 * gl.integrate([&](double phi) { return g_increment(phi, c, model) * std::cos(phi); }, -kHalfPi,
                              kHalfPi);
}

double drift_h(double c, const RestitutionModel& model, int order) {
    const GaussLegendre& gl = gauss_legendre(order);
    const double integral = gl.integrate(
        [&](double phi) {
            const double cp = std::cos(phi);
            return model.q(c * cp) * cp * cp * cp;
        },
        0.0, kHalfPi);
    return -c * integral;
}

ConsistencyReport consistency_h_vs_gbar(const RestitutionModel& family, std::span<const double> c_grid,
                                        std::span<const double> eps_list, int order) {
    ConsistencyReport rep;
    for (double eps : eps_list) {
        const RestitutionModel m = family.with_epsilon(eps);
        double worst = 0.0;
        for (double c : c_grid) worst = std::max(worst, std::abs(gbar(c, m, order) / eps - drift_h(c, m, order)));
        rep.epsilons.push_back(eps);
        rep.max_error.push_back(worst);
    }
    // Least-squares slope of log(error) vs log(eps) over the nonzero errors.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < rep.epsilons.size(); ++i) {
        if (!(rep.max_error[i] > 0.0)) continue;
        const double x = std::log(rep.epsilons[i]), y = std::log(rep.max_error[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n >= 2) rep.fitted_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return rep;
}

double AveragedSolution::c_at(double tb) const {
    const std::size_t i = segment(tbar, tb);
    return hermite(tbar[i], tbar[i + 1], cbar[i], cbar[i + 1], dcbar[i], dcbar[i + 1], tb);
}

double AveragedSolution::t_at(double tb) const {
    const std::size_t i = segment(tbar, tb);
    return hermite(tbar[i], tbar[i + 1], t[i], t[i + 1], dt[i], dt[i + 1], tb);
}

AveragedSolution solve_averaged(double c0, const RestitutionModel& model, double mean_free_path, double tbar_end,
                                double step, const SolveOptions& options) {
    if (!(c0 > 0.0)) throw ConfigError("initial speed must be positive");
    if (!(tbar_end > 0.0)) throw ConfigError("tbar_end must be positive");
    if (!(step > 0.0) || !(step <= tbar_end) || !std::isfinite(step)) {
        std::ostringstream os;
        os << "step " << step << " must lie in (0, " << tbar_end << "]";
        throw StepSizeError(os.str());
    }
    const DriftFunction h(model, options.quadrature_order);
    auto rhs = [&](double c) {
        return std::pair{h(c), mean_free_path / c};
    };

    AveragedSolution sol;
    sol.step = step;
    sol.mean_free_path = mean_free_path;
    sol.quadrature_order = options.quadrature_order;

    const auto n_steps = static_cast<long>(std::ceil(tbar_end / step - 1e-9));
    const double floor = options.speed_floor * c0;
    double c = c0, t = 0.0;
    auto [fc, ft] = rhs(c);
    sol.tbar.push_back(0.0);
    sol.cbar.push_back(c);
    sol.t.push_back(t);
    sol.dcbar.push_back(fc);
    sol.dt.push_back(ft);
    for (long k = 0; k < n_steps; ++k) {
        const double t0 = k * step;
        const double hstep = std::min(step, tbar_end - t0);
        const auto [k1c, k1t] = rhs(c);
        const auto [k2c, k2t] = rhs(c + 0.5 * hstep * k1c);
        const auto [k3c, k3t] = rhs(c + 0.5 * hstep * k2c);
        const auto [k4c, k4t] = rhs(c + hstep * k3c);
        const double c_next = c + hstep / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c);
        const double t_next = t + hstep / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t);
        if (!(c_next >= floor)) {
            if (options.halt_at_floor) {
                sol.status = SolveStatus::speed_floor;
                return sol;
            }
            std::ostringstream os;
            os << "averaged speed fell below the floor " << floor << " at tbar = " << t0 + hstep;
            throw SpeedFloorError(os.str());
        }
        c = c_next;
        t = t_next;
        const auto [gc, gt] = rhs(c);
        sol.tbar.push_back(k + 1 == n_steps ? tbar_end : t0 + hstep);
        sol.cbar.push_back(c);
        sol.t.push_back(t);
        sol.dcbar.push_back(gc);
        sol.dt.push_back(gt);
    }
    return sol;
}

HaffLine haff_line(double c0, const RestitutionModel& model, const geometry::TableGeometry& table) {
    if (model.kind() != dissipation::ModelKind::constant)
        throw ModelKindError("the Haff line needs a constant restitution model, got " +
                             dissipation::to_string(model.kind()));
    if (!(c0 > 0.0)) throw ConfigError("initial speed must be positive");
    return {2.0 / 3.0 / table.mean_free_path(), 1.0 / c0};
}

}  // namespace haffsim::averaging
