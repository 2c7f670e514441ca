#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "haffsim/linalg.hpp"

// Dispersing billiard tables on the unit torus: circular scatterers, their
// boundary parametrization, derived constants and the finite-horizon check.
namespace haffsim::geometry {

struct Scatterer {
    Vec2 center;   ///< torus coordinates in [0,1)^2
    double radius;
};

/// Result of the corridor scan. Present on a table only if no open corridor exists.
struct HorizonCertificate {
    int requested_bound_sq = 0;  ///< scan bound on p^2 + q^2 as requested
    int scanned_bound_sq = 0;    ///< bound actually used (raised when radii are small)
    int directions_scanned = 0;
    double min_coverage_slack = 0.0;  ///< smallest band overlap over scanned directions
    int tau_max_directions = 0;       ///< angular resolution of the free-path maximization
    double tau_max_raw = 0.0;         ///< longest free segment found
    double tau_max = 0.0;             ///< tau_max_raw times the safety factor
};

inline constexpr double kTauMaxSafetyFactor = 1.01;
inline constexpr int kDefaultHorizonScanBound = 100;

struct BoundaryPoint {
    std::size_t scatterer_index = 0;
    double s_local = 0.0;
    double s_global = 0.0;
    Vec2 position;  ///< wrapped into [0,1)^2
    Vec2 normal;    ///< unit normal pointing into the billiard domain
};

/// A lattice translate of one scatterer, identified in unwrapped coordinates.
struct DiskId {
    std::size_t scatterer = 0;
    int cell_x = 0;
    int cell_y = 0;
    bool operator==(const DiskId&) const = default;
};

struct RayHit {
    DiskId disk;
    double t = 0.0;   ///< distance along the (unit) direction
    Vec2 point;       ///< unwrapped hit position
    Vec2 normal;      ///< outward normal of the hit disk at the hit point
};

struct BuildOptions {
    bool certify_horizon = true;
    int horizon_scan_bound = kDefaultHorizonScanBound;
};

class TableGeometry {
public:
    const std::vector<Scatterer>& scatterers() const noexcept { return scatterers_; }
    std::size_t size() const noexcept { return scatterers_.size(); }

    /// |dQ|: sum of circumferences.
    double perimeter() const noexcept { return perimeter_; }
    /// |Q| = 1 - sum pi r^2.
    double area() const noexcept { return area_; }
    double curvature_min() const noexcept { return curvature_min_; }
    double curvature_max() const noexcept { return curvature_max_; }
    double radius_max() const noexcept { return 1.0 / curvature_min_; }
    double tau_min() const noexcept { return tau_min_; }

    /// Certified free-path upper bound, or nullopt for an uncertified table.
    std::optional<double> tau_max() const;
    const std::optional<HorizonCertificate>& horizon_certificate() const noexcept {
        return certificate_;
    }

    /// pi |Q| / |dQ|, the invariant-measure average of the free path.
    double mean_free_path() const noexcept;

    /// Cumulative arc length of all scatterers before `index`.
    double arc_offset(std::size_t index) const { return offsets_.at(index); }
    double circumference(std::size_t index) const;
    double curvature(std::size_t index) const { return 1.0 / scatterers_.at(index).radius; }

    /// Throws RangeError unless 0 <= s_global < perimeter.
    BoundaryPoint boundary_point(double s_global) const;
    /// Index of the scatterer owning s_global (no range check beyond clamping).
    std::size_t scatterer_at(double s_global) const;
    /// Global arc length of the point at polar angle `angle` on scatterer `index`.
    double s_global_from_angle(std::size_t index, double angle) const;

    /// Unwrapped center of a disk translate.
    Vec2 disk_center(const DiskId& id) const;

    /// First disk hit by the ray origin + t*dir, 0 < t <= max_length, skipping `exclude`.
    /// `dir` must be a unit vector.
    std::optional<RayHit> cast_ray(Vec2 origin, Vec2 dir, double max_length,
                                   std::optional<DiskId> exclude) const;

    friend TableGeometry build_table(std::vector<Scatterer> scatterers, const BuildOptions& options);

private:
    std::vector<Scatterer> scatterers_;
    std::vector<double> offsets_;
    double perimeter_ = 0.0;
    double area_ = 0.0;
    double curvature_min_ = 0.0;
    double curvature_max_ = 0.0;
    double tau_min_ = 0.0;
    std::optional<HorizonCertificate> certificate_;
};

/// Validates the scatterers and computes all derived constants.
/// Throws EmptyTableError, OverlapError, RangeError, or InfiniteHorizonError
/// (the latter only when options.certify_horizon is set).
TableGeometry build_table(std::vector<Scatterer> scatterers, const BuildOptions& options = {});

/// Corridor scan over primitive lattice directions (p,q) with p^2 + q^2 <= bound_sq,
/// followed by a maximization of the free path. Throws InfiniteHorizonError on the
/// first open corridor.
HorizonCertificate certify_finite_horizon(const TableGeometry& table,
                                          int bound_sq = kDefaultHorizonScanBound);

/// Minimum gap between distinct disk translates; a lower bound on every free path.
double estimate_tau_min(const std::vector<Scatterer>& scatterers);

/// Smallest p^2+q^2 bound that makes the corridor scan complete for this largest radius.
int required_scan_bound(double radius_max);

}  // namespace haffsim::geometry
