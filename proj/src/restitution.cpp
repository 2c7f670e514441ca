#include "haffsim/restitution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "haffsim/errors.hpp"

namespace haffsim::dissipation {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (q0, q0', q0'') at u >= 0.
EtaValues profile_raw(Profile profile, double u) {
    switch (profile) {
        case Profile::zero: return {0.0, 0.0, 0.0};
        case Profile::linear: return {u, 1.0, 0.0};
        case Profile::saturating: {
            const double a = 1.0 / (1.0 + u);
            return {u * a, a * a, -2.0 * a * a * a};
        }
        case Profile::exponential: {
            const double e = std::exp(-u);
            return {-std::expm1(-u), e, -e};
        }
    }
    return {};
}

// (q, w q', w^2 q'') for q(w) = q0(w^p).
EtaValues power_law_derivatives(Profile profile, double p, double w) {
    if (w == 0.0) {
        const EtaValues r = profile_raw(profile, 0.0);
        return {r.eta, 0.0, 0.0};
    }
    const double u = std::pow(w, p);
    const EtaValues r = profile_raw(profile, u);
    const double d1 = p * u * r.eta1;
    const double d2 = p * p * u * u * r.eta2 + p * (p - 1.0) * u * r.eta1;
    return {r.eta, d1, d2};
}

// sup over u >= 0 of |f(u)|, found on a log grid and refined by golden section.
template <class F>
double sup_abs_log_scan(F f) {
    const double lo = std::log(1e-8), hi = std::log(1e8);
    const int n = kSupScanPoints;
    double best = std::abs(f(0.0));
    int best_k = -1;
    for (int k = 0; k <= n; ++k) {
        const double v = std::abs(f(std::exp(lo + (hi - lo) * k / n)));
        if (v > best) {
            best = v;
            best_k = k;
        }
    }
    if (best_k < 0) return best;
    double a = lo + (hi - lo) * std::max(best_k - 1, 0) / n;
    double b = lo + (hi - lo) * std::min(best_k + 1, n) / n;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        const double x1 = b - g * (b - a), x2 = a + g * (b - a);
        if (std::abs(f(std::exp(x1))) > std::abs(f(std::exp(x2))))
            b = x2;
        else
            a = x1;
    }
    return std::max(best, std::abs(f(std::exp(0.5 * (a + b)))));
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::constant: return "constant";
        case ModelKind::power_law: return "power_law";
        case ModelKind::tabulated: return "tabulated";
    }
    return "unknown";
}

std::string to_string(Profile profile) {
    switch (profile) {
        case Profile::zero: return "zero";
        case Profile::linear: return "linear";
        case Profile::saturating: return "saturating";
        case Profile::exponential: return "exponential";
    }
    return "unknown";
}

Profile profile_from_string(const std::string& name) {
    if (name == "zero") return Profile::zero;
    if (name == "linear") return Profile::linear;
    if (name == "saturating") return Profile::saturating;
    if (name == "exponential") return Profile::exponential;
    throw ParseError("unknown q_profile '" + name +
                     "' (expected zero, linear, saturating, exponential or a knot table)");
}

MonotoneCubic::MonotoneCubic(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw ParseError("tabulated profile needs at least two knots");
    std::sort(knots.begin(), knots.end());
    for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!std::isfinite(knots[i].first) || !std::isfinite(knots[i].second))
            throw ParseError("tabulated profile has a non-finite knot");
        if (knots[i].first < 0.0) throw ParseError("tabulated profile knot at negative speed");
        if (knots[i].second < 0.0) throw ModelRangeError("tabulated profile has negative q");
        if (i > 0 && knots[i].first == knots[i - 1].first)
            throw ParseError("tabulated profile has duplicate knot abscissae");
        x_.push_back(knots[i].first);
        y_.push_back(knots[i].second);
    }
    const std::size_t n = x_.size();
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_.assign(n, 0.0);
    m_[0] = delta[0];
    m_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i)
        m_[i] = delta[i - 1] * delta[i] <= 0.0 ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (delta[i] == 0.0) {
            m_[i] = m_[i + 1] = 0.0;
            continue;
        }
        const double a = m_[i] / delta[i], b = m_[i + 1] / delta[i];
        const double s = a * a + b * b;
        if (s > 9.0) {
            const double t = 3.0 / std::sqrt(s);
            m_[i] = t * a * delta[i];
            m_[i + 1] = t * b * delta[i];
        }
    }
}

EtaValues MonotoneCubic::eval(double x) const {
    if (x <= x_.front()) return {y_.front(), 0.0, 0.0};
    if (x >= x_.back()) return {y_.back(), 0.0, 0.0};
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1, d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
    const double s00 = 12 * t - 6, s10 = 6 * t - 4, s01 = -12 * t + 6, s11 = 6 * t - 2;
    const double f = h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
    const double f1 = (d00 * y_[i] + d10 * h * m_[i] + d01 * y_[i + 1] + d11 * h * m_[i + 1]) / h;
    const double f2 = (s00 * y_[i] + s10 * h * m_[i] + s01 * y_[i + 1] + s11 * h * m_[i + 1]) / (h * h);
    return {f, f1, f2};
}

RestitutionModel RestitutionModel::constant(double epsilon) {
    RestitutionModel m;
    m.kind_ = ModelKind::constant;
    m.epsilon_ = epsilon;
    m.finalize();
    return m;
}

RestitutionModel RestitutionModel::power_law(double epsilon, double exponent, Profile profile) {
    if (!(exponent > 0.0)) throw ModelRangeError("power-law exponent must be positive");
    RestitutionModel m;
    m.kind_ = ModelKind::power_law;
    m.epsilon_ = epsilon;
    m.exponent_ = exponent;
    m.profile_ = profile;
    m.finalize();
    return m;
}

RestitutionModel RestitutionModel::tabulated(double epsilon, std::vector<std::pair<double, double>> knots) {
    RestitutionModel m;
    m.kind_ = ModelKind::tabulated;
    m.epsilon_ = epsilon;
    m.table_ = MonotoneCubic(std::move(knots));
    m.finalize();
    return m;
}

RestitutionModel RestitutionModel::with_epsilon(double epsilon) const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ModelRangeError("epsilon must be finite and >= 0");
    RestitutionModel m = *this;
    m.epsilon_ = epsilon;
    m.scale_bounds();
    return m;
}

void RestitutionModel::finalize() {
    if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_)) throw ModelRangeError("epsilon must be finite and >= 0");
    switch (kind_) {
        case ModelKind::constant: profile_bounds_ = {1.0, 0.0, 0.0}; break;
        case ModelKind::power_law: {
            const double p = exponent_;
            switch (profile_) {
                case Profile::zero: profile_bounds_ = {0.0, 0.0, 0.0}; break;
                case Profile::linear:
                    profile_bounds_ = {kInf, kInf, p == 1.0 ? 0.0 : kInf};
                    break;
                case Profile::saturating:
                    // sup u/(1+u) = 1; sup p u/(1+u)^2 = p/4 at u = 1.
                    profile_bounds_ = {1.0, p / 4.0, 0.0};
                    break;
                case Profile::exponential:
                    // sup 1-exp(-u) = 1; sup p u exp(-u) = p/e at u = 1.
                    profile_bounds_ = {1.0, p / std::exp(1.0), 0.0};
                    break;
            }
            if (profile_ == Profile::saturating || profile_ == Profile::exponential) {
                const Profile prof = profile_;
                profile_bounds_.eta2_max = sup_abs_log_scan([&](double u) {
                    const EtaValues r = profile_raw(prof, u);
                    return p * p * u * u * r.eta2 + p * (p - 1.0) * u * r.eta1;
                });
            }
            break;
        }
        case ModelKind::tabulated: {
            const double top = table_.xs().back();
            EtaBounds b;
            for (int k = 0; k <= kSupScanPoints; ++k) {
                const double w = top * k / kSupScanPoints;
                const EtaValues d = q_derivatives(w);
                b.eta_max = std::max(b.eta_max, std::abs(d.eta));
                b.eta1_max = std::max(b.eta1_max, std::abs(d.eta1));
                b.eta2_max = std::max(b.eta2_max, std::abs(d.eta2));
            }
            profile_bounds_ = {b.eta_max * kSupScanInflation, b.eta1_max * kSupScanInflation,
                               b.eta2_max * kSupScanInflation};
            break;
        }
    }
    scale_bounds();
}

void RestitutionModel::scale_bounds() {
    // 0 * inf stays 0: an elastic member of an unbounded family has zero bounds.
    auto scale = [this](double b) { return epsilon_ == 0.0 || b == 0.0 ? 0.0 : epsilon_ * b; };
    bounds_ = {scale(profile_bounds_.eta_max), scale(profile_bounds_.eta1_max),
               scale(profile_bounds_.eta2_max)};
}

double RestitutionModel::q(double c) const { return q_derivatives(c).eta; }

EtaValues RestitutionModel::q_derivatives(double w) const {
    switch (kind_) {
        case ModelKind::constant: return {1.0, 0.0, 0.0};
        case ModelKind::power_law: return power_law_derivatives(profile_, exponent_, w);
        case ModelKind::tabulated: {
            const EtaValues f = table_.eval(w);
            return {f.eta, w * f.eta1, w * w * f.eta2};
        }
    }
    return {};
}

EtaValues RestitutionModel::eval(double w) const {
    if (!(w >= 0.0)) {
        std::ostringstream os;
        os << "normal speed " << w << " is negative";
        throw ModelRangeError(os.str());
    }
    if (epsilon_ == 0.0) return {};
    const EtaValues d = q_derivatives(w);
    const EtaValues r{epsilon_ * d.eta, epsilon_ * d.eta1, epsilon_ * d.eta2};
    if (!(r.eta >= 0.0 && r.eta < 1.0)) {
        std::ostringstream os;
        os << "restitution eta = " << r.eta << " at normal speed " << w << " outside [0, 1)";
        throw ModelRangeError(os.str());
    }
    return r;
}

bool RestitutionModel::is_elastic() const noexcept {
    return epsilon_ == 0.0 || (kind_ == ModelKind::power_law && profile_ == Profile::zero);
}

}  // namespace haffsim::dissipation
