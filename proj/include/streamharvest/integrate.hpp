#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "model.hpp"

namespace streamharvest {

/// Sampled solution of the patch ODE. Times strictly increase; states are
/// componentwise nonnegative.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;

    const Vector& final_state() const { return states.back(); }
    double final_time() const { return times.back(); }
};

struct IntegrateOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    /// Stop early once max |rhs| drops below this.
    double steady_tol = 1e-10;
    /// Keep every accepted step; otherwise only the first and last states.
    bool record = true;
    long max_steps = 10'000'000;
};

/**
 * Adaptive Dormand-Prince 5(4) integration of rhs from u0 over [0, t_end].
 * Negative components produced by truncation error are clipped to zero.
 * Throws NumericalError (carrying the time) if the step size collapses.
 */
inline Trajectory integrate(const Model& m, const Vector& h, const Vector& u0, double t_end,
                            double dt_hint, const IntegrateOptions& opt = {}) {
    detail::check_dims(m, h, u0);
    if ((u0.array() < 0.0).any())
        throw ArgumentError("initial densities must be nonnegative");
    if (!(t_end > 0.0) || !std::isfinite(t_end))
        throw ArgumentError("integration horizon must be positive and finite");
    if (!(dt_hint > 0.0))
        dt_hint = t_end * 1e-3;

    // Dormand-Prince tableau
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    Trajectory traj;
    double t = 0.0;
    Vector y = u0;
    traj.times.push_back(t);
    traj.states.push_back(y);

    Vector k1 = rhs(m, h, y);
    if (k1.lpNorm<Eigen::Infinity>() < opt.steady_tol)
        return traj;

    double dt = std::min(dt_hint, t_end);
    for (long step = 0; step < opt.max_steps; ++step) {
        if (t + dt > t_end)
            dt = t_end - t;
        const Vector k2 = rhs(m, h, y + dt * (a21 * k1));
        const Vector k3 = rhs(m, h, y + dt * (a31 * k1 + a32 * k2));
        const Vector k4 = rhs(m, h, y + dt * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vector k5 = rhs(m, h, y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vector k6 =
            rhs(m, h, y + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Vector y_new = y + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Vector k7 = rhs(m, h, y_new);
        const Vector err = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err_norm = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double scale = opt.atol + opt.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
            err_norm = std::max(err_norm, std::abs(err(i)) / scale);
        }
        if (!std::isfinite(err_norm))
            err_norm = 1e10;

        if (err_norm <= 1.0) {
            t = (t_end - (t + dt) <= 1e-12 * std::max(1.0, t_end)) ? t_end : t + dt;
            bool clipped = false;
            for (Eigen::Index i = 0; i < y_new.size(); ++i)
                if (y_new(i) < 0.0) {
                    y_new(i) = 0.0;
                    clipped = true;
                }
            y = std::move(y_new);
            k1 = clipped ? rhs(m, h, y) : k7;
            const bool steady = k1.lpNorm<Eigen::Infinity>() < opt.steady_tol;
            if (opt.record || steady || t >= t_end) {
                traj.times.push_back(t);
                traj.states.push_back(y);
            }
            if (steady || t >= t_end)
                return traj;
        }
        const double factor =
            err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        dt *= err_norm <= 1.0 ? factor : std::min(factor, 1.0);
        if (dt < 1e-14 * std::max(1.0, std::abs(t)))
            throw NumericalError("step size collapsed at t = " + std::to_string(t), y, t);
    }
    throw NumericalError("integration exceeded the step limit at t = " + std::to_string(t), y, t);
}

} // namespace streamharvest
