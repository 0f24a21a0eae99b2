#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fracdyn/geometry.hpp"
#include "fracdyn/mapexpr.hpp"
#include "fracdyn/parallel.hpp"

namespace fracdyn {

// ---------------------------------------------------------------------------
// Continuous dynamics: two-dimensional ODE systems integrated with fixed-step
// RK4, applied pointwise to fractal point sets. Fixed stepping keeps every
// trajectory bit-reproducible for any thread count.
// ---------------------------------------------------------------------------

/// x' = y, y' = mu (1 - x^2) y - x.
struct VanDerPol {
    double mu = 0.5;
};

/// x' = y, y' = -delta y - beta x - alpha x^3 + gamma cos(omega t).
struct Duffing {
    double delta = 0.0;
    double beta = 0.0;
    double alpha = 0.0;
    double gamma = 0.0;
    double omega = 1.0;
};

/// User-defined right-hand side in variables t, x, y.
struct ExprSystem {
    mapexpr::Expr dx;
    mapexpr::Expr dy;
};

using OdeSystem = std::variant<VanDerPol, Duffing, ExprSystem>;

inline Point2 vector_field(const OdeSystem& system, double t, const Point2& s) {
    if (const auto* v = std::get_if<VanDerPol>(&system)) {
        return {s.y, v->mu * (1.0 - s.x * s.x) * s.y - s.x};
    }
    if (const auto* d = std::get_if<Duffing>(&system)) {
        return {s.y, -d->delta * s.y - d->beta * s.x - d->alpha * s.x * s.x * s.x +
                         d->gamma * std::cos(d->omega * t)};
    }
    const auto& e = std::get<ExprSystem>(system);
    const auto env = mapexpr::env_txy(t, s.x, s.y);
    return {mapexpr::eval_expr(e.dx, env), mapexpr::eval_expr(e.dy, env)};
}

struct IntegratorConfig {
    double step = 1e-3;  // fixed RK4 step h

    void validate() const {
        if (!(step > 0.0)) throw std::invalid_argument("IntegratorConfig: step must be > 0");
    }
};

struct BlowupError : std::runtime_error {
    double time;
    explicit BlowupError(double t)
        : std::runtime_error("trajectory blew up at t = " + std::to_string(t)), time(t) {}
};

inline constexpr double kBlowupNorm = 1e12;

namespace detail {
template <typename Field>
Point2 rk4_step_field(Field&& f, double t, const Point2& s, double h) {
    const Point2 k1 = f(t, s);
    const Point2 k2 = f(t + h / 2, Point2{s.x + h / 2 * k1.x, s.y + h / 2 * k1.y});
    const Point2 k3 = f(t + h / 2, Point2{s.x + h / 2 * k2.x, s.y + h / 2 * k2.y});
    const Point2 k4 = f(t + h, Point2{s.x + h * k3.x, s.y + h * k3.y});
    return {s.x + h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
            s.y + h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y)};
}
}  // namespace detail

/// Classical fourth-order step with stage evaluations at t, t+h/2, t+h/2, t+h.
inline Point2 rk4_step(const OdeSystem& system, double t, const Point2& s, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("rk4_step: h must be > 0");
    return detail::rk4_step_field(
        [&system](double tt, const Point2& ss) { return vector_field(system, tt, ss); }, t, s,
        h);
}

namespace detail {

/// Marches from t_from to t_to (t_to >= t_from) in full h steps plus one
/// shortened final step that lands exactly on t_to. Throws BlowupError when
/// the state norm passes the guard; the reported time is sign * internal time.
template <typename Field>
Point2 integrate_span(Field&& f, Point2 state, double t_from, double t_to, double h,
                      double sign) {
    const double span = t_to - t_from;
    if (span <= 0.0) return state;
    const long full = static_cast<long>(std::floor(span / h));
    double t = t_from;
    for (long i = 0; i < full; ++i) {
        state = rk4_step_field(f, t, state, h);
        t = t_from + static_cast<double>(i + 1) * h;
        if (norm(state) > kBlowupNorm) throw BlowupError(sign * t);
    }
    const double rest = t_to - t;
    if (rest > h * 1e-12) {
        state = rk4_step_field(f, t, state, rest);
        if (norm(state) > kBlowupNorm) throw BlowupError(sign * t_to);
    }
    return state;
}

/// Backward motions (sign = -1) run an internal forward clock s over the
/// time-reversed field -g(-s, x), so x(internal s) = x(physical -s).
inline Point2 advance(const OdeSystem& system, Point2 state, double t_from, double t_to,
                      double h, double sign = 1.0) {
    auto field = [&system, sign](double internal_t, const Point2& s) {
        const Point2 g = vector_field(system, sign * internal_t, s);
        return Point2{sign * g.x, sign * g.y};
    };
    return integrate_span(field, state, sign * t_from, sign * t_to, h, sign);
}

}  // namespace detail

/// Motion A_t: integrates from t = 0 to t_target (negative t_target runs the
/// time-reversed field). The final partial step lands exactly on the target.
inline Point2 flow_to(const OdeSystem& system, const Point2& s0, double t_target,
                      const IntegratorConfig& cfg) {
    cfg.validate();
    if (t_target == 0.0) return s0;
    const double sign = t_target < 0.0 ? -1.0 : 1.0;
    return detail::advance(system, s0, 0.0, t_target, cfg.step, sign);
}

struct EvolveResult {
    std::vector<std::vector<Point2>> sections;  // one per requested time, input point order
    struct Failure {
        std::size_t point_index;
        double time;  // blow-up time
    };
    std::vector<Failure> failures;
};

/// Integrates each point once through all section times (no restart) and
/// records its state at each requested time. Points that blow up are dropped
/// from later sections and reported.
inline EvolveResult evolve_points(const OdeSystem& system, const std::vector<Point2>& points,
                                  const std::vector<double>& times, const IntegratorConfig& cfg,
                                  int threads = 0) {
    cfg.validate();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0 || (i > 0 && !(times[i] > times[i - 1])))
            throw std::invalid_argument("evolve_points: times must be ascending and >= 0");
    }

    const std::size_t np = points.size();
    const std::size_t nt = times.size();
    std::vector<Point2> states(np * nt);
    std::vector<std::size_t> reached(np, 0);  // sections successfully reached
    std::vector<double> fail_time(np, 0.0);

    parallel_chunks(static_cast<long>(np), threads, [&](long lo, long hi) {
        for (long pi = lo; pi < hi; ++pi) {
            Point2 s = points[static_cast<std::size_t>(pi)];
            double t = 0.0;
            for (std::size_t ti = 0; ti < nt; ++ti) {
                try {
                    s = detail::advance(system, s, t, times[ti], cfg.step);
                } catch (const BlowupError& e) {
                    fail_time[static_cast<std::size_t>(pi)] = e.time;
                    break;
                }
                t = times[ti];
                states[static_cast<std::size_t>(pi) * nt + ti] = s;
                reached[static_cast<std::size_t>(pi)] = ti + 1;
            }
        }
    });

    EvolveResult result;
    result.sections.resize(nt);
    for (std::size_t ti = 0; ti < nt; ++ti) {
        for (std::size_t pi = 0; pi < np; ++pi) {
            if (reached[pi] > ti) result.sections[ti].push_back(states[pi * nt + ti]);
        }
    }
    for (std::size_t pi = 0; pi < np; ++pi) {
        if (reached[pi] < nt) result.failures.push_back({pi, fail_time[pi]});
    }
    return result;
}

struct TrajectorySample {
    double t = 0.0;
    Point2 p;
};

struct TrajectoryResult {
    std::vector<std::vector<TrajectorySample>> tracks;  // one per input point
    std::vector<EvolveResult::Failure> failures;
};

/// Samples (t, x, y) at t = 0, dt, 2 dt, ..., t_end (the last sample lands on
/// t_end even when dt does not divide it).
inline TrajectoryResult trajectory_samples(const OdeSystem& system,
                                           const std::vector<Point2>& points, double t_end,
                                           double dt_sample, const IntegratorConfig& cfg,
                                           int threads = 0) {
    cfg.validate();
    if (!(dt_sample > 0.0) || !(dt_sample <= t_end))
        throw std::invalid_argument("trajectory_samples: require 0 < dt_sample <= t_end");

    std::vector<double> sample_times{0.0};
    for (long j = 1;; ++j) {
        const double tj = static_cast<double>(j) * dt_sample;
        if (tj >= t_end - dt_sample * 1e-9) break;
        sample_times.push_back(tj);
    }
    sample_times.push_back(t_end);

    const std::size_t np = points.size();
    TrajectoryResult result;
    result.tracks.resize(np);
    std::vector<double> fail_time(np);
    std::vector<char> failed(np, 0);

    parallel_chunks(static_cast<long>(np), threads, [&](long lo, long hi) {
        for (long pi = lo; pi < hi; ++pi) {
            auto& track = result.tracks[static_cast<std::size_t>(pi)];
            track.reserve(sample_times.size());
            Point2 s = points[static_cast<std::size_t>(pi)];
            track.push_back({0.0, s});
            double t = 0.0;
            for (std::size_t ti = 1; ti < sample_times.size(); ++ti) {
                try {
                    s = detail::advance(system, s, t, sample_times[ti], cfg.step);
                } catch (const BlowupError& e) {
                    failed[static_cast<std::size_t>(pi)] = 1;
                    fail_time[static_cast<std::size_t>(pi)] = e.time;
                    break;
                }
                t = sample_times[ti];
                track.push_back({t, s});
            }
        }
    });

    for (std::size_t pi = 0; pi < np; ++pi)
        if (failed[pi]) result.failures.push_back({pi, fail_time[pi]});
    return result;
}

}  // namespace fracdyn
