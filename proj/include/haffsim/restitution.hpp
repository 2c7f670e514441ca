#pragma once

#include <string>
#include <utility>
#include <vector>

namespace haffsim::dissipation {

enum class ModelKind { constant, power_law, tabulated };

/// Named epsilon-independent profiles q0(u) for the power-law family.
enum class Profile {
    zero,         ///< q0 = 0
    linear,       ///< q0 = u (unbounded; drift studies only)
    saturating,   ///< q0 = u / (1 + u)
    exponential,  ///< q0 = 1 - exp(-u)
};

std::string to_string(ModelKind kind);
std::string to_string(Profile profile);
Profile profile_from_string(const std::string& name);

/// eta at normal speed w together with eta1 = w eta'(w) and eta2 = w^2 eta''(w).
struct EtaValues {
    double eta = 0.0;
    double eta1 = 0.0;
    double eta2 = 0.0;
};

/// Sup bounds over w >= 0 of eta, |eta1|, |eta2|; may be infinite.
struct EtaBounds {
    double eta_max = 0.0;
    double eta1_max = 0.0;
    double eta2_max = 0.0;
};

/// Monotone cubic (Fritsch-Carlson) interpolant with constant extrapolation.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    explicit MonotoneCubic(std::vector<std::pair<double, double>> knots);

    /// Value, first and second derivative at x.
    EtaValues eval(double x) const;  // reused triple: (f, f', f'')
    const std::vector<double>& xs() const noexcept { return x_; }
    const std::vector<double>& ys() const noexcept { return y_; }

private:
    std::vector<double> x_, y_, m_;
};

/// The family epsilon -> eta^(epsilon)(w) = epsilon * q(w). Immutable.
class RestitutionModel {
public:
    static RestitutionModel constant(double epsilon);
    static RestitutionModel power_law(double epsilon, double exponent, Profile profile);
    static RestitutionModel tabulated(double epsilon, std::vector<std::pair<double, double>> knots);

    ModelKind kind() const noexcept { return kind_; }
    double epsilon() const noexcept { return epsilon_; }
    double exponent() const noexcept { return exponent_; }
    Profile profile() const noexcept { return profile_; }
    const MonotoneCubic& table() const noexcept { return table_; }

    /// Same profile at a different epsilon.
    RestitutionModel with_epsilon(double epsilon) const;

    /// The epsilon-independent profile q(c).
    double q(double c) const;
    /// (q, w q', w^2 q'') at w.
    EtaValues q_derivatives(double w) const;

    /// Throws ModelRangeError if w < 0 or the resulting eta leaves [0, 1).
    EtaValues eval(double w) const;

    /// Cached sup bounds at this epsilon.
    const EtaBounds& bounds() const noexcept { return bounds_; }
    /// Sup bounds of the profile alone (bounds at epsilon = 1).
    const EtaBounds& profile_bounds() const noexcept { return profile_bounds_; }

    /// True when eta vanishes identically (epsilon = 0 or the zero profile).
    bool is_elastic() const noexcept;

private:
    RestitutionModel() = default;
    void finalize();
    void scale_bounds();

    ModelKind kind_ = ModelKind::constant;
    double epsilon_ = 0.0;
    double exponent_ = 1.0;
    Profile profile_ = Profile::zero;
    MonotoneCubic table_;
    EtaBounds profile_bounds_;
    EtaBounds bounds_;
};

/// Grid density and inflation for numerically scanned sup bounds.
inline constexpr int kSupScanPoints = 1 << 14;
inline constexpr double kSupScanInflation = 1.05;

}  // namespace haffsim::dissipation
