#include "haffsim/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "haffsim/errors.hpp"

namespace haffsim::ensemble {

namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;

double lerp_nodes(const std::vector<double>& v, double spacing, double tb) {
    if (v.size() == 1 || spacing <= 0.0) return v.front();
    const double x = tb / spacing;
    if (x <= 0.0) return v.front();
    const double last = static_cast<double>(v.size() - 1);
    if (x >= last) return v.back();
    const auto i = static_cast<std::size_t>(x);
    const double w = x - static_cast<double>(i);
    return v[i] + w * (v[i + 1] - v[i]);
}

DeviationStats stats(std::vector<double> values) {
    DeviationStats s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.max = *std::max_element(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    s.median = values[mid];
    if (values.size() % 2 == 0) {
        const double lower = *std::max_element(values.begin(), values.begin() + mid);
        s.median = 0.5 * (s.median + lower);
    }
    return s;
}

}  // namespace

std::string to_string(InitialKind kind) {
    return kind == InitialKind::invariant_measure ? "invariant_measure" : "boundary_curve";
}

void validate(const TableGeometry& table, const InitialDistribution& dist) {
    if (!(dist.c0 > 0.0) || !std::isfinite(dist.c0)) throw ConfigError("initial speed c0 must be positive");
    if (dist.kind != InitialKind::boundary_curve) return;
    const BoundaryCurve& cv = dist.curve;
    if (cv.scatterer >= table.size()) throw CurveSpecError("curve scatterer index out of range");
    const double len = table.circumference(cv.scatterer);
    if (!(cv.s_start >= 0.0 && cv.s_end <= len && cv.s_start < cv.s_end))
        throw CurveSpecError("curve arc-length range must satisfy 0 <= s_start < s_end <= circumference");
    if (!(std::abs(cv.phi_start) < kHalfPi && std::abs(cv.phi_end) < kHalfPi))
        throw CurveSpecError("curve angles must lie in (-pi/2, pi/2)");
    const double lo = table.curvature_min();
    const double hi = table.curvature_max() + 1.0 / table.tau_min();
    const double slope = cv.slope();
    if (!(slope >= lo && slope <= hi)) {
        std::ostringstream os;
        os << "curve slope dphi/ds = " << slope << " is not unstable: it must lie in [" << lo << ", " << hi << "]";
        throw CurveSpecError(os.str());
    }
}

double phi_from_uniform(double u) { return std::asin(2.0 * u - 1.0); }

ExtPhasePoint sample_initial(const TableGeometry& table, const InitialDistribution& dist, Rng& rng) {
    ExtPhasePoint x;
    x.c = dist.c0;
    if (dist.kind == InitialKind::invariant_measure) {
        // Invariant density is cos(phi) ds dphi / (2|dQ|): s uniform, phi by inverse CDF.
        x.base.s = rng.uniform() * table.perimeter();
        double phi = phi_from_uniform(rng.uniform());
        // u = 0 maps exactly onto -pi/2; nudge into the open interval.
        if (!(std::abs(phi) < kHalfPi)) phi = std::copysign(std::nextafter(kHalfPi, 0.0), phi);
        x.base.phi = phi;
        return x;
    }
    const BoundaryCurve& cv = dist.curve;
    const double u = rng.uniform();
    const double s_local = cv.s_start + u * (cv.s_end - cv.s_start);
    x.base.s = table.arc_offset(cv.scatterer) + s_local;
    if (x.base.s >= table.perimeter()) x.base.s = std::nextafter(table.perimeter(), 0.0);
    x.base.phi = cv.phi_start + u * (cv.phi_end - cv.phi_start);
    return x;
}

ExtPhasePoint sample_initial(const TableGeometry& table, const InitialDistribution& dist, std::uint64_t seed) {
    Rng rng(seed);
    return sample_initial(table, dist, rng);
}

std::size_t collision_count(double tbar_end, double epsilon) {
    if (!(epsilon > 0.0)) throw ConfigError("collision count needs epsilon > 0");
    const double ratio = tbar_end / epsilon;
    const double nearest = std::round(ratio);
    // 1.0 / 1e-3 is 999.9999999999999 in binary; treat near-integers as integers.
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::floor(ratio));
}

double SlowPath::c_at(double tb) const { return lerp_nodes(c, spacing, tb); }
double SlowPath::t_at(double tb) const { return lerp_nodes(t, spacing, tb); }

SlowPath run_slow_path(const TableGeometry& table, const RestitutionModel& model, const ExtPhasePoint& x0,
                       double tbar_end, const RunOptions& options) {
    if (!(tbar_end > 0.0)) throw ConfigError("tbar_end must be positive");
    dynamics::validate(table, x0.base);
    if (!(x0.c > 0.0)) throw ConfigError("initial speed must be positive");

    SlowPath path;
    path.epsilon = model.epsilon();
    path.tbar_end = tbar_end;
    std::size_t n_steps;
    if (path.epsilon > 0.0) {
        n_steps = collision_count(tbar_end, path.epsilon);
        path.spacing = path.epsilon;
    } else {
        n_steps = options.elastic_collisions;
        path.spacing = tbar_end / static_cast<double>(std::max<std::size_t>(n_steps, 1));
    }
    path.c.reserve(n_steps + 1);
    path.t.reserve(n_steps + 1);
    path.c.push_back(x0.c);
    path.t.push_back(0.0);
    path.tau_min_seen = std::numeric_limits<double>::infinity();

    ExtPhasePoint x = x0;
    dynamics::TimeAccumulator clock;
    for (std::size_t n = 0; n < n_steps; ++n) {
        dynamics::CollisionStep step;
        try {
            step = dynamics::step_map(table, x, model);
        } catch (const GrazingError& e) {
            path.status = PathStatus::grazing_discard;
            path.reason = e.what();
            break;
        }
        clock.add(path.epsilon * step.tau / x.c);
        path.tau_sum += step.tau;
        path.tau_sq_sum += step.tau * step.tau;
        path.tau_max_seen = std::max(path.tau_max_seen, step.tau);
        path.tau_min_seen = std::min(path.tau_min_seen, step.tau);
        x = step.next;
        path.c.push_back(x.c);
        path.t.push_back(clock.value());
    }
    if (path.collisions() == 0) path.tau_min_seen = 0.0;
    return path;
}

LevelReport compare_to_averaged(std::span<const SlowPath> paths, const averaging::AveragedSolution& averaged) {
    LevelReport rep;
    rep.trajectories = static_cast<int>(paths.size());
    rep.t_phys_total = averaged.t.back();
    std::vector<double> c_devs, t_devs;
    double tau_sum = 0.0, tau_sq = 0.0, tau_count = 0.0;
    for (const SlowPath& p : paths) {
        if (std::abs(p.tbar_end - averaged.tbar_end()) > 1e-12 * std::max(1.0, p.tbar_end))
            throw GridMismatchError("slow path and averaged solution cover different tbar horizons");
        rep.epsilon = p.epsilon;
        tau_sum += p.tau_sum;
        tau_sq += p.tau_sq_sum;
        tau_count += static_cast<double>(p.collisions());
        if (p.status != PathStatus::completed) {
            ++rep.discarded_grazing;
            continue;
        }
        // Sup over path nodes and solution nodes; both interpolants are evaluated
        // only inside the span the path actually covers.
        const double covered = p.tbar_at(p.collisions());
        double cmax = 0.0, tmax = 0.0;
        for (std::size_t n = 0; n < p.c.size(); ++n) {
            const double tb = p.tbar_at(n);
            cmax = std::max(cmax, std::abs(p.c[n] - averaged.c_at(tb)));
            tmax = std::max(tmax, std::abs(p.t[n] - averaged.t_at(tb)));
        }
        for (std::size_t k = 0; k < averaged.tbar.size() && averaged.tbar[k] <= covered; ++k) {
            const double tb = averaged.tbar[k];
            cmax = std::max(cmax, std::abs(p.c_at(tb) - averaged.cbar[k]));
            tmax = std::max(tmax, std::abs(p.t_at(tb) - averaged.t[k]));
        }
        c_devs.push_back(cmax);
        t_devs.push_back(tmax);
    }
    rep.c_dev = stats(std::move(c_devs));
    rep.t_dev = stats(std::move(t_devs));
    if (tau_count > 0.0) {
        rep.mean_tau = tau_sum / tau_count;
        const double var = std::max(0.0, tau_sq / tau_count - rep.mean_tau * rep.mean_tau);
        rep.mean_tau_stderr = std::sqrt(var / tau_count);
    }
    return rep;
}

void summarize(ConvergenceReport& report) {
    auto& lv = report.levels;
    // Levels may be listed in any order; compare by decreasing epsilon.
    std::vector<const LevelReport*> sorted;
    for (const auto& l : lv) sorted.push_back(&l);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->epsilon > b->epsilon; });
    report.c_dev_strictly_decreasing = sorted.size() >= 2;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (!(sorted[i]->c_dev.mean < sorted[i - 1]->c_dev.mean)) report.c_dev_strictly_decreasing = false;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto* l : sorted) {
        if (!(l->epsilon > 0.0 && l->c_dev.mean > 0.0)) continue;
        const double x = std::log(l->epsilon), y = std::log(l->c_dev.mean);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    report.measured_exponent = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;
}

HaffFit haff_fit(std::span<const SlowPath> paths, double window_lo, double window_hi) {
    std::vector<const SlowPath*> usable;
    for (const SlowPath& p : paths)
        if (p.status == PathStatus::completed) usable.push_back(&p);
    if (usable.empty()) throw InsufficientDataError("no completed trajectories to fit");
    if (!(window_hi > window_lo)) throw InsufficientDataError("empty Haff fit window");

    std::size_t nodes = usable.front()->c.size();
    for (const auto* p : usable) nodes = std::min(nodes, p->c.size());
    const double spacing = usable.front()->spacing;

    std::vector<double> xs, ys;
    for (std::size_t n = 0; n < nodes; ++n) {
        const double tb = static_cast<double>(n) * spacing;
        if (tb < window_lo || tb > window_hi) continue;
        double tsum = 0.0, isum = 0.0;
        for (const auto* p : usable) {
            tsum += p->t[n];
            isum += 1.0 / p->c[n];
        }
        xs.push_back(tsum / static_cast<double>(usable.size()));
        ys.push_back(isum / static_cast<double>(usable.size()));
    }
    if (xs.size() < 3) {
        std::ostringstream os;
        os << "Haff fit needs at least 3 collision nodes in the window, found " << xs.size();
        throw InsufficientDataError(os.str());
    }
    const double m = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    HaffFit fit;
    fit.points = xs.size();
    if (!(sxx > 0.0)) throw InsufficientDataError("Haff fit window has no spread in physical time");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
            ss_res += r * r;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    } else {
        fit.degenerate = true;
        fit.r_squared = std::numeric_limits<double>::quiet_NaN();
    }
    return fit;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t n_threads =
        std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = count;
    std::exception_ptr failure;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<SlowPath> run_level(const TableGeometry& table, const RestitutionModel& model,
                                const InitialDistribution& dist, double tbar_end, int trajectories,
                                std::uint64_t master_seed, int workers, const RunOptions& options) {
    if (trajectories <= 0) throw ConfigError("trajectories must be positive");
    validate(table, dist);
    std::vector<SlowPath> paths(static_cast<std::size_t>(trajectories));
    parallel_for(paths.size(), workers, [&](std::size_t i) {
        const ExtPhasePoint x0 = sample_initial(table, dist, split_seed(master_seed, i));
        paths[i] = run_slow_path(table, model, x0, tbar_end, options);
    });
    return paths;
}

}  // namespace haffsim::ensemble
