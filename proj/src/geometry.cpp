#include "haffsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <tuple>

#include "haffsim/errors.hpp"

namespace haffsim {

std::string InfiniteHorizonError::make_message(int p, int q, double offset, double width) {
    std::ostringstream os;
    os << "infinite horizon: open corridor in direction (" << p << "," << q
       << ") at normal offset " << offset << " with width " << width;
    return os.str();
}

}  // namespace haffsim

namespace haffsim::geometry {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_unit(double x) {
    double w = x - std::floor(x);
    return w >= 1.0 ? 0.0 : w;
}

double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    return w >= kTwoPi ? 0.0 : w;
}

// Entry distance of the ray into the disk (center, r), or +inf. Roots of
// t^2 + 2 b t + c = 0; the near root is taken in the cancellation-free form c / (-b + sqrt(D)).
double ray_disk_entry(Vec2 origin, Vec2 dir, Vec2 center, double r) {
    const Vec2 d = origin - center;
    const double b = dir.dot(d);
    const double c = d.dot(d) - r * r;
    if (b >= 0.0 || c <= 0.0) return std::numeric_limits<double>::infinity();
    const double disc = b * b - c;
    if (disc < 0.0) return std::numeric_limits<double>::infinity();
    return c / (-b + std::sqrt(disc));
}

struct Interval {
    double lo, hi;
};

// Largest gap in the union of bands on a circle of length `period`; returns
// (gap length, gap midpoint). A non-positive length means the bands cover.
std::pair<double, double> largest_gap(std::vector<Interval> bands, double period) {
    for (auto& b : bands) {
        if (b.hi - b.lo >= period) return {-(b.hi - b.lo - period), 0.0};
        const double shift = std::floor(b.lo / period) * period;
        b.lo -= shift;
        b.hi -= shift;
    }
    std::sort(bands.begin(), bands.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    double best_gap = -std::numeric_limits<double>::infinity();
    double best_mid = 0.0;
    double reach = bands.front().hi;
    for (std::size_t k = 1; k < bands.size(); ++k) {
        const double gap = bands[k].lo - reach;
        if (gap > best_gap) {
            best_gap = gap;
            best_mid = reach + 0.5 * gap;
        }
        reach = std::max(reach, bands[k].hi);
    }
    // Wrap-around gap between the furthest reach and the first band one period later.
    const double closing = bands.front().lo + period - reach;
    if (closing > best_gap) {
        best_gap = closing;
        best_mid = reach + 0.5 * closing;
    }
    return {best_gap, std::fmod(best_mid, period)};
}

struct Direction {
    int p, q;
};

std::vector<Direction> primitive_directions(int bound_sq) {
    std::vector<Direction> dirs;
    const int m = static_cast<int>(std::floor(std::sqrt(static_cast<double>(bound_sq))));
    for (int p = 0; p <= m; ++p)
        for (int q = -m; q <= m; ++q) {
            if (p * p + q * q > bound_sq || p * p + q * q == 0) continue;
            if (p == 0 && q != 1) continue;
            if (std::gcd(p, q) != 1) continue;
            dirs.push_back({p, q});
        }
    std::sort(dirs.begin(), dirs.end(), [](Direction a, Direction b) {
        auto key = [](Direction d) {
            return std::make_tuple(d.p * d.p + d.q * d.q, std::abs(d.q), d.q < 0 ? 1 : 0);
        };
        return key(a) < key(b);
    });
    return dirs;
}

// Longest free segment with direction angle theta. A maximal segment starts on the
// outgoing half of some disk; its length is piecewise convex in the transverse offset
// u, with breaks where the ray grazes another disk, so evaluating next to every
// break (and the two extreme offsets) finds the maximum.
double max_free_path_in_direction(const TableGeometry& table, double theta, double reach) {
    const Vec2 d{std::cos(theta), std::sin(theta)};
    const Vec2 n = d.perp();
    const auto& sc = table.scatterers();
    const double search = reach * 4.0 + 4.0;
    const int cells = static_cast<int>(std::ceil(reach + 2.0 * table.radius_max())) + 1;
    double best = 0.0;
    std::vector<double> offsets;
    for (std::size_t j = 0; j < sc.size(); ++j) {
        const double rj = sc[j].radius;
        const Vec2 cj = sc[j].center;
        offsets.clear();
        const double inset = 1e-12 * rj;
        offsets.push_back(-rj + inset);
        offsets.push_back(rj - inset);
        for (std::size_t b = 0; b < sc.size(); ++b)
            for (int kx = -cells; kx <= cells; ++kx)
                for (int ky = -cells; ky <= cells; ++ky) {
                    if (b == j && kx == 0 && ky == 0) continue;
                    const Vec2 cb = sc[b].center + Vec2{double(kx), double(ky)};
                    const Vec2 rel = cb - cj;
                    if (rel.dot(d) < -sc[b].radius) continue;
                    if (rel.norm() > reach + rj + sc[b].radius) continue;
                    const double off = rel.dot(n);
                    for (double edge : {off - sc[b].radius, off + sc[b].radius})
                        for (double eps : {-1e-10, 1e-10}) {
                            const double u = edge + eps;
                            if (u > -rj && u < rj) offsets.push_back(u);
                        }
                }
        for (double u : offsets) {
            const double along = std::sqrt(std::max(0.0, rj * rj - u * u));
            const Vec2 origin = cj + n * u + d * along;
            auto hit = table.cast_ray(origin, d, search, DiskId{j, 0, 0});
            if (!hit) return std::numeric_limits<double>::infinity();
            best = std::max(best, hit->t);
        }
    }
    return best;
}

}  // namespace

std::optional<double> TableGeometry::tau_max() const {
    if (!certificate_) return std::nullopt;
    return certificate_->tau_max;
}

double TableGeometry::mean_free_path() const noexcept {
    return std::numbers::pi * area_ / perimeter_;
}

double TableGeometry::circumference(std::size_t index) const {
    return kTwoPi * scatterers_.at(index).radius;
}

std::size_t TableGeometry::scatterer_at(double s_global) const {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), s_global);
    std::size_t idx = it == offsets_.begin() ? 0 : static_cast<std::size_t>(it - offsets_.begin()) - 1;
    return std::min(idx, scatterers_.size() - 1);
}

BoundaryPoint TableGeometry::boundary_point(double s_global) const {
    if (!(s_global >= 0.0 && s_global < perimeter_)) {
        std::ostringstream os;
        os << "arc length " << s_global << " outside [0, " << perimeter_ << ")";
        throw RangeError(os.str());
    }
    BoundaryPoint bp;
    bp.scatterer_index = scatterer_at(s_global);
    const Scatterer& sc = scatterers_[bp.scatterer_index];
    bp.s_global = s_global;
    bp.s_local = s_global - offsets_[bp.scatterer_index];
    const double angle = bp.s_local / sc.radius;
    bp.normal = {std::cos(angle), std::sin(angle)};
    const Vec2 p = sc.center + bp.normal * sc.radius;
    bp.position = {wrap_unit(p.x), wrap_unit(p.y)};
    return bp;
}

double TableGeometry::s_global_from_angle(std::size_t index, double angle) const {
    const double r = scatterers_.at(index).radius;
    double s_local = r * wrap_angle(angle);
    if (s_local >= kTwoPi * r) s_local = 0.0;
    double s = offsets_[index] + s_local;
    if (s >= perimeter_) s = 0.0;
    return s;
}

Vec2 TableGeometry::disk_center(const DiskId& id) const {
    return scatterers_.at(id.scatterer).center + Vec2{double(id.cell_x), double(id.cell_y)};
}

std::optional<RayHit> TableGeometry::cast_ray(Vec2 origin, Vec2 dir, double max_length,
                                              std::optional<DiskId> exclude) const {
    const Vec2 end = origin + dir * max_length;
    const double lo_x = std::min(origin.x, end.x), hi_x = std::max(origin.x, end.x);
    const double lo_y = std::min(origin.y, end.y), hi_y = std::max(origin.y, end.y);
    double best = std::numeric_limits<double>::infinity();
    DiskId best_id;
    for (std::size_t j = 0; j < scatterers_.size(); ++j) {
        const Scatterer& sc = scatterers_[j];
        const int kx0 = static_cast<int>(std::floor(lo_x - sc.radius - sc.center.x));
        const int kx1 = static_cast<int>(std::ceil(hi_x + sc.radius - sc.center.x));
        const int ky0 = static_cast<int>(std::floor(lo_y - sc.radius - sc.center.y));
        const int ky1 = static_cast<int>(std::ceil(hi_y + sc.radius - sc.center.y));
        for (int kx = kx0; kx <= kx1; ++kx)
            for (int ky = ky0; ky <= ky1; ++ky) {
                const DiskId id{j, kx, ky};
                if (exclude && *exclude == id) continue;
                const Vec2 c = sc.center + Vec2{double(kx), double(ky)};
                const double t = ray_disk_entry(origin, dir, c, sc.radius);
                if (t < best) {
                    best = t;
                    best_id = id;
                }
            }
    }
    if (!(best <= max_length)) return std::nullopt;
    RayHit hit;
    hit.disk = best_id;
    hit.t = best;
    hit.point = origin + dir * best;
    const Vec2 c = disk_center(best_id);
    hit.normal = (hit.point - c) * (1.0 / scatterers_[best_id.scatterer].radius);
    return hit;
}

double estimate_tau_min(const std::vector<Scatterer>& scatterers) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scatterers.size(); ++i)
        for (std::size_t j = i; j < scatterers.size(); ++j)
            for (int vx = -2; vx <= 2; ++vx)
                for (int vy = -2; vy <= 2; ++vy) {
                    if (i == j && vx == 0 && vy == 0) continue;
                    const Vec2 delta = scatterers[i].center - scatterers[j].center - Vec2{double(vx), double(vy)};
                    gap = std::min(gap, delta.norm() - scatterers[i].radius - scatterers[j].radius);
                }
    return gap;
}

int required_scan_bound(double radius_max) {
    const double l = 1.0 / (2.0 * radius_max);
    return static_cast<int>(std::floor(l * l));
}

HorizonCertificate certify_finite_horizon(const TableGeometry& table, int bound_sq) {
    HorizonCertificate cert;
    cert.requested_bound_sq = bound_sq;
    cert.scanned_bound_sq = std::max(bound_sq, required_scan_bound(table.radius_max()));
    cert.min_coverage_slack = std::numeric_limits<double>::infinity();

    const auto& sc = table.scatterers();
    for (const Direction dir : primitive_directions(cert.scanned_bound_sq)) {
        const double len = std::hypot(double(dir.p), double(dir.q));
        const Vec2 normal{-dir.q / len, dir.p / len};
        const double period = 1.0 / len;
        std::vector<Interval> bands;
        bands.reserve(sc.size());
        for (const auto& s : sc) {
            const double o = normal.dot(s.center);
            bands.push_back({o - s.radius, o + s.radius});
        }
        auto [gap, mid] = largest_gap(bands, period);
        ++cert.directions_scanned;
        if (gap > 0.0) throw InfiniteHorizonError(dir.p, dir.q, mid, gap);
        cert.min_coverage_slack = std::min(cert.min_coverage_slack, -gap);
    }

    // Free-path maximization over a fine angular grid; the grid misses at most a
    // sliver of the supremum, absorbed by the safety factor.
    constexpr int kCoarse = 256;
    constexpr int kFine = 4096;
    double reach = 0.0;
    for (int k = 0; k < kCoarse; ++k) {
        const double theta = std::numbers::pi * (k + 0.5) / kCoarse;
        reach = std::max(reach, max_free_path_in_direction(table, theta, 8.0));
    }
    double longest = reach;
    for (int k = 0; k < kFine; ++k) {
        const double theta = std::numbers::pi * k / kFine;
        longest = std::max(longest, max_free_path_in_direction(table, theta, 1.25 * reach));
    }
    cert.tau_max_directions = kFine;
    cert.tau_max_raw = longest;
    cert.tau_max = longest * kTauMaxSafetyFactor;
    return cert;
}

TableGeometry build_table(std::vector<Scatterer> scatterers, const BuildOptions& options) {
    if (scatterers.empty()) throw EmptyTableError("table has no scatterers");
    for (auto& s : scatterers) {
        if (!(s.radius > 0.0 && s.radius < 0.5)) {
            std::ostringstream os;
            os << "scatterer radius " << s.radius << " outside (0, 1/2)";
            throw RangeError(os.str());
        }
        if (!std::isfinite(s.center.x) || !std::isfinite(s.center.y))
            throw RangeError("scatterer center is not finite");
        s.center = {wrap_unit(s.center.x), wrap_unit(s.center.y)};
    }

    TableGeometry t;
    t.scatterers_ = std::move(scatterers);

    const double gap = estimate_tau_min(t.scatterers_);
    if (!(gap > 0.0)) {
        std::ostringstream os;
        os << "scatterers overlap or touch (minimum gap " << gap << ")";
        throw OverlapError(os.str());
    }
    t.tau_min_ = gap;

    double radius_sum = 0.0, area_sum = 0.0;
    t.curvature_min_ = std::numeric_limits<double>::infinity();
    t.curvature_max_ = 0.0;
    t.offsets_.reserve(t.scatterers_.size());
    double offset = 0.0;
    for (const auto& s : t.scatterers_) {
        t.offsets_.push_back(offset);
        offset += kTwoPi * s.radius;
        radius_sum += s.radius;
        area_sum += s.radius * s.radius;
        t.curvature_min_ = std::min(t.curvature_min_, 1.0 / s.radius);
        t.curvature_max_ = std::max(t.curvature_max_, 1.0 / s.radius);
    }
    t.perimeter_ = kTwoPi * radius_sum;
    t.area_ = 1.0 - std::numbers::pi * area_sum;
    if (!(t.area_ > 0.0 && t.area_ < 1.0)) throw OverlapError("scatterers cover the whole torus");

    if (options.certify_horizon) t.certificate_ = certify_finite_horizon(t, options.horizon_scan_bound);
    return t;
}

}  // namespace haffsim::geometry
