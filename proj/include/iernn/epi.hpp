/*
* Copyright (C) 2026 The IeRNN Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#ifndef IERNN_EPI_HPP
#define IERNN_EPI_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iernn
{

/// Compartment fractions of one region.
struct SeirState {
    double S = 1.0;
    double E = 0.0;
    double I = 0.0;
    double R = 0.0;

    double total() const
    {
        return S + E + I + R;
    }
};

/**
 * Scalars of the I-model recursion.
 *
 * `sigma2` is the inflow progression rate with the exposed-inflow proportionality
 * constant folded in, and `alpha` carries the 1 - R(t0) constant of the closed
 * I-equation. alpha..sigma2 live in [0,1]; S0 is fixed from data, not trained.
 */
struct EpiParams {
    double alpha = 0.5;
    double beta1 = 0.5;
    double beta2 = 0.5;
    double gamma = 0.5;
    double sigma1 = 0.5;
    double sigma2 = 0.5;
    double S0 = 1.0;
    int P = 14;
    long t0 = 0;
};

/// Time-varying contact rate: arctan transition around `a` plus a Gaussian bump at `tc`.
struct PolicyCurve {
    double a = 0.0;
    double b = 1.0;
    double c = 0.1;
    double tc = 0.0;
    double s = 100.0;
};

inline constexpr double kBeta1Max = 2.0;

/// Derivatives (dS, dE, dI, dR) of the SEIR system with neighbor inflow terms.
inline std::array<double, 4> seir_rhs(const SeirState& x, const EpiParams& p, double inflow_I = 0.0,
                                      double inflow_E = 0.0)
{
    const double infection = p.beta1 * x.S * x.I + p.beta2 * x.S * inflow_I;
    const double onset = p.sigma1 * x.E + p.sigma2 * inflow_E;
    const double removal = p.gamma * x.I;
    return {-infection, infection - onset, onset - removal, removal};
}

/**
 * Classical RK4 for the augmented SEIR system. `inflow_I`/`inflow_E` are daily
 * values, held constant within each day (an empty span means zero inflow; days
 * past the end reuse the last value). Returns steps + 1 states.
 */
inline std::vector<SeirState> integrate_rk4(const SeirState& initial, const EpiParams& p, double dt, std::size_t steps,
                                            std::span<const double> inflow_I = {},
                                            std::span<const double> inflow_E = {})
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("integrate_rk4: dt must be positive");
    }
    auto daily = [](std::span<const double> v, double t) {
        if (v.empty()) {
            return 0.0;
        }
        auto k = static_cast<std::size_t>(std::max(0.0, std::floor(t)));
        return v[std::min(k, v.size() - 1)];
    };
    auto rhs = [&](const SeirState& x, double t) {
        return seir_rhs(x, p, daily(inflow_I, t), daily(inflow_E, t));
    };
    auto shifted = [](const SeirState& x, const std::array<double, 4>& d, double h) {
        return SeirState{x.S + h * d[0], x.E + h * d[1], x.I + h * d[2], x.R + h * d[3]};
    };

    std::vector<SeirState> traj;
    traj.reserve(steps + 1);
    traj.push_back(initial);
    SeirState x = initial;
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        auto k1 = rhs(x, t);
        auto k2 = rhs(shifted(x, k1, dt / 2), t + dt / 2);
        auto k3 = rhs(shifted(x, k2, dt / 2), t + dt / 2);
        auto k4 = rhs(shifted(x, k3, dt), t + dt);
        x.S += dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        x.E += dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
        x.I += dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
        x.R += dt / 6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]);
        if (!std::isfinite(x.S) || !std::isfinite(x.E) || !std::isfinite(x.I) || !std::isfinite(x.R)) {
            throw std::runtime_error("integrate_rk4: non-finite state at step " + std::to_string(n + 1));
        }
        traj.push_back(x);
    }
    return traj;
}

inline double beta1_of_t(const PolicyCurve& curve, double t)
{
    if (!(curve.s > 0.0)) {
        throw std::invalid_argument("policy curve width s must be positive");
    }
    const double bump = std::exp(-(t - curve.tc) * (t - curve.tc) / curve.s);
    return 2.0 / std::numbers::pi * std::atan(-curve.b * (t - curve.a) / 20.0) + 1.0 + curve.c * bump;
}

/// d beta1 / d(a, b, c, tc, s) at t.
inline std::array<double, 5> beta1_gradient(const PolicyCurve& curve, double t)
{
    const double z = -curve.b * (t - curve.a) / 20.0;
    const double datan = 2.0 / std::numbers::pi / (1.0 + z * z);
    const double d = t - curve.tc;
    const double bump = std::exp(-d * d / curve.s);
    return {datan * curve.b / 20.0, datan * -(t - curve.a) / 20.0, bump, curve.c * bump * 2.0 * d / curve.s,
            curve.c * bump * d * d / (curve.s * curve.s)};
}

inline double clamp_beta1(double value)
{
    return std::clamp(value, 0.0, kBeta1Max);
}

/// Daily beta1 values [0, n): the clamped curve scaled by `decay`.
inline std::vector<double> beta1_series(const PolicyCurve& curve, std::size_t n, double decay = 1.0)
{
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = decay * clamp_beta1(beta1_of_t(curve, static_cast<double>(k)));
    }
    return out;
}

/// Partial derivatives of one I-model prediction. `d_beta1[j]` and `d_inflow[j]`
/// refer to day t - h - j.
struct IModelGradient {
    double value = 0.0;
    double d_alpha = 0.0;
    double d_sigma1 = 0.0;
    double d_gamma = 0.0;
    double d_sigma2 = 0.0;
    double d_beta2 = 0.0;
    std::vector<double> d_beta1;
    std::vector<double> d_inflow;
};

namespace detail
{

inline void check_window(std::size_t size, long t, int h, int P, const char* what)
{
    if (P < 0 || h < 1) {
        throw std::invalid_argument(std::string(what) + ": need P >= 0 and h >= 1");
    }
    const long last = t - h;
    const long first = last - P;
    if (first < 0 || last >= static_cast<long>(size)) {
        throw std::out_of_range(std::string(what) + ": history must cover days " + std::to_string(first) + ".." +
                                std::to_string(last) + " (have 0.." + std::to_string(long(size) - 1) + ")");
    }
}

template <class InflowAt>
double i_model_eval(std::span<const double> I, InflowAt inflow, const EpiParams& p, std::span<const double> beta1,
                    long t, int h)
{
    const long last = t - h;
    const double c = static_cast<double>(t - p.t0) / static_cast<double>(p.P + 1);
    double quad_i = 0.0;
    double expo = 0.0;
    for (int j = 0; j <= p.P; ++j) {
        const auto k = static_cast<std::size_t>(last - j);
        quad_i += I[k];
        expo += beta1[k] * I[k] + p.beta2 * inflow(k);
    }
    const auto kl = static_cast<std::size_t>(last);
    return p.sigma1 * p.alpha + (1.0 - p.sigma1 - p.gamma) * I[kl] + p.sigma2 * inflow(kl) - p.gamma * c * quad_i -
           p.S0 * std::exp(-c * expo);
}

} // namespace detail

/**
 * h-step-ahead I-model prediction of I_t from days t-h-P .. t-h.
 *
 * All arrays are indexed by absolute day (day 0 = series start); `beta1` holds
 * the per-day contact rate already clamped/scaled. The exponent sums both
 * products over the window.
 */
inline double i_model_step(std::span<const double> I, std::span<const double> inflow, const EpiParams& p,
                           std::span<const double> beta1, long t, int h)
{
    detail::check_window(std::min({I.size(), inflow.size(), beta1.size()}), t, h, p.P, "i_model_step");
    return detail::i_model_eval(I, [&](std::size_t k) { return inflow[k]; }, p, beta1, t, h);
}

/// The I-model with zero neighbor inflow.
inline double i_equation_step(std::span<const double> I, const EpiParams& p, std::span<const double> beta1, long t,
                              int h)
{
    detail::check_window(std::min(I.size(), beta1.size()), t, h, p.P, "i_equation_step");
    return detail::i_model_eval(I, [](std::size_t) { return 0.0; }, p, beta1, t, h);
}

/// Prediction plus partials with respect to the scalars, beta1 window and inflow window.
inline IModelGradient i_model_step_grad(std::span<const double> I, std::span<const double> inflow, const EpiParams& p,
                                        std::span<const double> beta1, long t, int h)
{
    detail::check_window(std::min({I.size(), inflow.size(), beta1.size()}), t, h, p.P, "i_model_step_grad");
    const long last = t - h;
    const auto kl = static_cast<std::size_t>(last);
    const double c = static_cast<double>(t - p.t0) / static_cast<double>(p.P + 1);
    double quad_i = 0.0, quad_e = 0.0, expo = 0.0;
    for (int j = 0; j <= p.P; ++j) {
        const auto k = static_cast<std::size_t>(last - j);
        quad_i += I[k];
        quad_e += inflow[k];
        expo += beta1[k] * I[k] + p.beta2 * inflow[k];
    }
    const double e = std::exp(-c * expo);
    IModelGradient g;
    g.value = p.sigma1 * p.alpha + (1.0 - p.sigma1 - p.gamma) * I[kl] + p.sigma2 * inflow[kl] - p.gamma * c * quad_i -
              p.S0 * e;
    // d value / d expo
    const double d_expo = p.S0 * e * c;
    g.d_alpha = p.sigma1;
    g.d_sigma1 = p.alpha - I[kl];
    g.d_gamma = -I[kl] - c * quad_i;
    g.d_sigma2 = inflow[kl];
    g.d_beta2 = d_expo * quad_e;
    g.d_beta1.resize(static_cast<std::size_t>(p.P) + 1);
    g.d_inflow.resize(static_cast<std::size_t>(p.P) + 1);
    for (int j = 0; j <= p.P; ++j) {
        const auto k = static_cast<std::size_t>(last - j);
        g.d_beta1[static_cast<std::size_t>(j)] = d_expo * I[k];
        g.d_inflow[static_cast<std::size_t>(j)] = d_expo * p.beta2;
    }
    g.d_inflow[0] += p.sigma2;
    return g;
}

/// Single-region setting for checking the recursion against the ODE.
struct ConsistencyConfig {
    SeirState initial{0.98, 0.01, 0.01, 0.0};
    double beta1 = 0.5;
    double sigma1 = 0.2;
    double gamma = 0.1;
    double days = 60.0;
    double reference_dt = 1e-3;
};

struct ConsistencyRow {
    double dt = 0.0;
    double max_error = 0.0;
};

/**
 * Step-size-parameterized I-equation: explicit Euler on the closed I-equation
 * with the elapsed-time Riemann sum taken over the full history (P = n), so
 * the scheme is first order in dt. Returns I at every step.
 */
inline std::vector<double> i_equation_recursion(const ConsistencyConfig& cfg, double dt, std::size_t steps)
{
    const double alpha = 1.0 - cfg.initial.R;
    const double S0 = cfg.initial.S;
    std::vector<double> I{cfg.initial.I};
    I.reserve(steps + 1);
    double history_sum = cfg.initial.I;
    for (std::size_t n = 0; n < steps; ++n) {
        const double tn = static_cast<double>(n) * dt;
        const double integral = tn / static_cast<double>(n + 1) * history_sum;
        const double In = I.back();
        const double next =
            In + dt * (cfg.sigma1 * (alpha - In - cfg.gamma * integral - S0 * std::exp(-cfg.beta1 * integral)) -
                       cfg.gamma * In);
        I.push_back(next);
        history_sum += next;
    }
    return I;
}

/// Max error over whole days of the recursion against a fine RK4 reference, per dt.
/// Every dt must divide one day.
inline std::vector<ConsistencyRow> discretization_consistency(const ConsistencyConfig& cfg,
                                                              std::span<const double> dt_list)
{
    auto per_day = [](double dt) {
        const double n = 1.0 / dt;
        if (std::abs(n - std::round(n)) > 1e-9) {
            throw std::invalid_argument("dt must divide one day");
        }
        return static_cast<std::size_t>(std::llround(n));
    };
    const auto days = static_cast<std::size_t>(std::llround(cfg.days));
    EpiParams p;
    p.beta1 = cfg.beta1;
    p.sigma1 = cfg.sigma1;
    p.gamma = cfg.gamma;
    p.beta2 = 0.0;
    p.sigma2 = 0.0;
    const auto ref_per_day = per_day(cfg.reference_dt);
    auto reference = integrate_rk4(cfg.initial, p, cfg.reference_dt, days * ref_per_day);

    std::vector<ConsistencyRow> rows;
    for (double dt : dt_list) {
        const auto n = per_day(dt);
        auto rec = i_equation_recursion(cfg, dt, days * n);
        double err = 0.0;
        for (std::size_t d = 0; d <= days; ++d) {
            err = std::max(err, std::abs(rec[d * n] - reference[d * ref_per_day].I));
        }
        rows.push_back({dt, err});
    }
    return rows;
}

} // namespace iernn

#endif // IERNN_EPI_HPP
