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
#ifndef IERNN_ARIMA_HPP
#define IERNN_ARIMA_HPP

// ARIMA(p, d, q) with d in {0, 1}, fitted by conditional sum of squares:
//
//   w_t = x_t - d x_{t-1}
//   w_t = mu + sum_i phi_i (w_{t-i} - mu) + sum_j theta_j e_{t-j} + e_t
//
// Innovations before the first scored day are zero.

#include "iernn/checkpoint.hpp"
#include "iernn/config.hpp"
#include "iernn/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iernn
{

struct ArimaOrder {
    int p = 0;
    int d = 0;
    int q = 0;

    bool operator==(const ArimaOrder&) const = default;
};

struct ArimaModel {
    ArimaOrder order;
    double mu = 0.0; ///< mean of the (differenced) series
    std::vector<double> phi;
    std::vector<double> theta;
    double sigma2 = 0.0; ///< innovation variance, CSS / n_eff
    double css = 0.0;
    std::size_t n_eff = 0;
    double aic = 0.0;

    std::size_t parameter_count() const
    {
        return phi.size() + theta.size() + 1;
    }
};

/// Thrown for fits whose AR part is explosive or whose MA part is not invertible.
class ArimaRejected : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/**
 * True iff 1 - a_1 z - ... - a_k z^k has every root strictly outside the unit
 * circle, by Levinson step-down: each reflection coefficient must satisfy
 * |r| < 1 - margin.
 */
inline bool roots_outside_unit_circle(std::span<const double> a, double margin = 0.0)
{
    std::vector<double> c(a.begin(), a.end());
    for (std::size_t k = c.size(); k-- > 0;) {
        const double r = c[k];
        if (!(std::abs(r) < 1.0 - margin)) {
            return false;
        }
        std::vector<double> next(k);
        for (std::size_t j = 0; j < k; ++j) {
            next[j] = (c[j] + r * c[k - 1 - j]) / (1.0 - r * r);
        }
        c = std::move(next);
    }
    return true;
}

inline bool is_stationary(const ArimaModel& m, double margin = 0.0)
{
    return roots_outside_unit_circle(m.phi, margin);
}

/// theta(z) = 1 + theta_1 z + ... has roots outside the unit circle.
inline bool is_invertible(const ArimaModel& m, double margin = 0.0)
{
    std::vector<double> neg(m.theta.size());
    for (std::size_t j = 0; j < neg.size(); ++j) {
        neg[j] = -m.theta[j];
    }
    return roots_outside_unit_circle(neg, margin);
}

inline std::vector<double> difference(std::span<const double> x, int d)
{
    if (d == 0) {
        return {x.begin(), x.end()};
    }
    if (d != 1) {
        throw std::invalid_argument("only d in {0, 1} is supported");
    }
    std::vector<double> w;
    for (std::size_t t = 1; t < x.size(); ++t) {
        w.push_back(x[t] - x[t - 1]);
    }
    return w;
}

namespace detail
{

/// One-step prediction of w_t from w[0..t) and past innovations.
inline double arma_predict(const ArimaModel& m, std::span<const double> w, std::span<const double> e, std::size_t t)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < m.phi.size(); ++i) {
        if (t >= i + 1) {
            acc += m.phi[i] * (w[t - 1 - i] - m.mu);
        }
    }
    for (std::size_t j = 0; j < m.theta.size(); ++j) {
        if (t >= j + 1) {
            acc += m.theta[j] * e[t - 1 - j];
        }
    }
    return m.mu + acc;
}

/// Innovations e_t for t >= `from` (earlier ones are zero); returns their sum of squares.
inline double arma_css(const ArimaModel& m, std::span<const double> w, std::size_t from, std::vector<double>* innov = nullptr)
{
    std::vector<double> e(w.size(), 0.0);
    double css = 0.0;
    for (std::size_t t = from; t < w.size(); ++t) {
        e[t] = w[t] - arma_predict(m, w, e, t);
        css += e[t] * e[t];
    }
    if (innov) {
        *innov = std::move(e);
    }
    return css;
}

} // namespace detail

/**
 * CSS fit of one order. The first `condition` differenced values only seed the
 * recursion (default: p). The search runs on the standardized series.
 * Throws ArimaRejected for non-stationary or non-invertible results.
 */
inline ArimaModel arima_fit(std::span<const double> series, ArimaOrder order, std::size_t condition = 0)
{
    if (series.size() < 30) {
        throw std::invalid_argument("ARIMA needs at least 30 observations, got " + std::to_string(series.size()));
    }
    if (order.p < 0 || order.q < 0 || order.d < 0 || order.d > 1) {
        throw std::invalid_argument("ARIMA orders need p, q >= 0 and d in {0, 1}");
    }
    const auto w = difference(series, order.d);
    const std::size_t from = std::max(condition, static_cast<std::size_t>(order.p));
    if (from + 2 > w.size()) {
        throw std::invalid_argument("ARIMA conditioning leaves too few observations");
    }
    double mean = 0.0;
    for (double v : w) {
        mean += v;
    }
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (double v : w) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(w.size());
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    std::vector<double> z(w.size());
    for (std::size_t t = 0; t < w.size(); ++t) {
        z[t] = (w[t] - mean) / sd;
    }

    const auto P = static_cast<std::size_t>(order.p), Q = static_cast<std::size_t>(order.q);
    auto unpack = [&](const std::vector<double>& v) {
        ArimaModel m;
        m.order = order;
        m.mu = v[0];
        m.phi.assign(v.begin() + 1, v.begin() + 1 + static_cast<long>(P));
        m.theta.assign(v.begin() + 1 + static_cast<long>(P), v.end());
        return m;
    };
    auto objective = [&](const std::vector<double>& v) {
        auto m = unpack(v);
        if (!is_stationary(m) || !is_invertible(m)) {
            return std::numeric_limits<double>::infinity();
        }
        return detail::arma_css(m, z, from);
    };
    NelderMeadOptions nm;
    nm.max_evaluations = 4000 * (P + Q + 1);
    auto res = nelder_mead(objective, std::vector<double>(1 + P + Q, 0.0), nm);

    auto m = unpack(res.x);
    m.mu = mean + sd * m.mu;
    m.n_eff = w.size() - from;
    m.css = detail::arma_css(m, w, from);
    m.sigma2 = m.css / static_cast<double>(m.n_eff);
    m.aic = static_cast<double>(m.n_eff) * std::log(m.sigma2) + 2.0 * static_cast<double>(m.parameter_count());
    constexpr double margin = 1e-6;
    if (!is_stationary(m, margin)) {
        throw ArimaRejected("ARIMA(" + std::to_string(order.p) + "," + std::to_string(order.d) + "," +
                            std::to_string(order.q) + ") fit is explosive");
    }
    if (!is_invertible(m, margin)) {
        throw ArimaRejected("ARIMA(" + std::to_string(order.p) + "," + std::to_string(order.d) + "," +
                            std::to_string(order.q) + ") fit is not invertible");
    }
    return m;
}

/**
 * AIC selection over p, q in [0, max] and d in [0, max_d]. Every candidate is
 * scored on the same days of the original series (the first max_p + max_d are
 * conditioning only), so CSS values are comparable across orders.
 */
inline ArimaModel arima_select(std::span<const double> series, const ArimaGrid& grid = {})
{
    if (grid.max_p < 0 || grid.max_q < 0 || grid.max_d < 0 || grid.max_d > 1) {
        throw std::invalid_argument("ARIMA grid needs non-negative p, q and d in {0, 1}");
    }
    std::optional<ArimaModel> best;
    for (int d = 0; d <= grid.max_d; ++d) {
        const auto condition = static_cast<std::size_t>(grid.max_p + grid.max_d - d);
        for (int p = 0; p <= grid.max_p; ++p) {
            for (int q = 0; q <= grid.max_q; ++q) {
                try {
                    auto m = arima_fit(series, {p, d, q}, condition);
                    if (std::isfinite(m.aic) && (!best || m.aic < best->aic)) {
                        best = std::move(m);
                    }
                } catch (const ArimaRejected&) {
                }
            }
        }
    }
    if (!best) {
        throw std::runtime_error("no feasible ARIMA order in the grid");
    }
    return *best;
}

/**
 * h-step forecast after the last value of `context` (original scale), with
 * future innovations set to zero. Past innovations are rebuilt from the context.
 */
inline double arima_forecast(const ArimaModel& m, std::span<const double> context, int h)
{
    if (h < 1) {
        throw std::invalid_argument("forecast horizon must be >= 1");
    }
    const auto need = static_cast<std::size_t>(m.order.d) + std::max<std::size_t>(1, m.phi.size());
    if (context.size() < need) {
        throw std::invalid_argument("ARIMA forecast needs at least " + std::to_string(need) + " context values");
    }
    auto w = difference(context, m.order.d);
    std::vector<double> e;
    detail::arma_css(m, w, m.phi.size(), &e);
    double level = context.back();
    double out = 0.0;
    for (int k = 0; k < h; ++k) {
        const auto t = w.size();
        const double next = detail::arma_predict(m, w, e, t);
        w.push_back(next);
        e.push_back(0.0);
        if (m.order.d == 1) {
            level += next;
            out = level;
        } else {
            out = next;
        }
    }
    return out;
}

inline void save_arima(const ArimaModel& m, Checkpoint& ck)
{
    ck.set_attr("model.kind", "arima");
    ck.set_attr("arima.p", std::to_string(m.order.p));
    ck.set_attr("arima.d", std::to_string(m.order.d));
    ck.set_attr("arima.q", std::to_string(m.order.q));
    ck.set_scalar("arima.mu", m.mu);
    ck.set_tensor("arima.phi", 1, m.phi.size(), m.phi);
    ck.set_tensor("arima.theta", 1, m.theta.size(), m.theta);
    ck.set_scalar("arima.sigma2", m.sigma2);
    ck.set_scalar("arima.css", m.css);
    ck.set_scalar("arima.aic", m.aic);
    ck.set_attr("arima.n_eff", std::to_string(m.n_eff));
}

inline ArimaModel load_arima(const Checkpoint& ck)
{
    if (ck.attr("model.kind") != "arima") {
        throw std::runtime_error("checkpoint holds a " + ck.attr("model.kind") + " model, not ARIMA");
    }
    ArimaModel m;
    m.order = {std::stoi(ck.attr("arima.p")), std::stoi(ck.attr("arima.d")), std::stoi(ck.attr("arima.q"))};
    m.mu = ck.scalar("arima.mu");
    m.phi = ck.tensor("arima.phi").values;
    m.theta = ck.tensor("arima.theta").values;
    m.sigma2 = ck.scalar("arima.sigma2");
    m.css = ck.scalar("arima.css");
    m.aic = ck.scalar("arima.aic");
    m.n_eff = std::stoul(ck.attr("arima.n_eff"));
    if (m.phi.size() != static_cast<std::size_t>(m.order.p) || m.theta.size() != static_cast<std::size_t>(m.order.q)) {
        throw std::runtime_error("ARIMA checkpoint coefficients do not match the orders");
    }
    return m;
}

} // namespace iernn

#endif // IERNN_ARIMA_HPP
