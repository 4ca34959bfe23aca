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
#ifndef IERNN_NELDER_MEAD_HPP
#define IERNN_NELDER_MEAD_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace iernn
{

struct NelderMeadOptions {
    double initial_step = 0.1;
    double f_tol = 1e-12;      ///< stop when max f - min f over the simplex falls below this
    double x_tol = 1e-10;      ///< ... and the simplex diameter falls below this
    std::size_t max_evaluations = 20000;
    int restarts = 2;          ///< fresh simplices built around the incumbent
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/**
 * Derivative-free simplex minimization with the standard coefficients
 * (reflection 1, expansion 2, contraction 1/2, shrink 1/2). `f` may return
 * +inf to mark infeasible points; the starting point must be feasible.
 */
template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, const NelderMeadOptions& opts = {})
{
    const std::size_t n = x0.size();
    NelderMeadResult res;
    res.x = x0;
    res.value = f(x0);
    res.evaluations = 1;
    if (!std::isfinite(res.value)) {
        throw std::invalid_argument("nelder_mead: objective is not finite at the starting point");
    }
    if (n == 0) {
        res.converged = true;
        return res;
    }

    for (int round = 0; round <= opts.restarts; ++round) {
        std::vector<std::vector<double>> pts(n + 1, res.x);
        std::vector<double> val(n + 1, res.value);
        for (std::size_t k = 0; k < n; ++k) {
            pts[k + 1][k] += opts.initial_step;
            val[k + 1] = f(pts[k + 1]);
            if (!std::isfinite(val[k + 1])) {
                pts[k + 1][k] = res.x[k] - opts.initial_step;
                val[k + 1] = f(pts[k + 1]);
                ++res.evaluations;
            }
            ++res.evaluations;
        }
        std::vector<std::size_t> order(n + 1);
        bool converged = false;
        while (res.evaluations < opts.max_evaluations) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return val[a] < val[b]; });
            const auto best = order.front(), worst = order.back(), second = order[n - 1];

            double diameter = 0.0;
            for (std::size_t k = 1; k <= n; ++k) {
                for (std::size_t d = 0; d < n; ++d) {
                    diameter = std::max(diameter, std::abs(pts[order[k]][d] - pts[best][d]));
                }
            }
            if (std::isfinite(val[worst]) && val[worst] - val[best] <= opts.f_tol && diameter <= opts.x_tol) {
                converged = true;
                break;
            }

            std::vector<double> centroid(n, 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                for (std::size_t d = 0; d < n; ++d) {
                    centroid[d] += pts[order[k]][d] / static_cast<double>(n);
                }
            }
            auto along = [&](double t) {
                std::vector<double> p(n);
                for (std::size_t d = 0; d < n; ++d) {
                    p[d] = centroid[d] + t * (pts[worst][d] - centroid[d]);
                }
                return p;
            };

            auto xr = along(-1.0);
            const double fr = f(xr);
            ++res.evaluations;
            if (fr < val[best]) {
                auto xe = along(-2.0);
                const double fe = f(xe);
                ++res.evaluations;
                if (fe < fr) {
                    pts[worst] = std::move(xe);
                    val[worst] = fe;
                } else {
                    pts[worst] = std::move(xr);
                    val[worst] = fr;
                }
                continue;
            }
            if (fr < val[second]) {
                pts[worst] = std::move(xr);
                val[worst] = fr;
                continue;
            }
            const bool outside = fr < val[worst];
            auto xc = along(outside ? -0.5 : 0.5);
            const double fc = f(xc);
            ++res.evaluations;
            if (fc < (outside ? fr : val[worst])) {
                pts[worst] = std::move(xc);
                val[worst] = fc;
                continue;
            }
            for (std::size_t k = 1; k <= n; ++k) {
                auto& p = pts[order[k]];
                for (std::size_t d = 0; d < n; ++d) {
                    p[d] = pts[best][d] + 0.5 * (p[d] - pts[best][d]);
                }
                val[order[k]] = f(p);
                ++res.evaluations;
            }
        }
        const auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
        const bool improved = val[best] < res.value;
        if (val[best] <= res.value) {
            res.x = pts[best];
            res.value = val[best];
        }
        res.converged = converged;
        if (!converged || !improved) {
            break;
        }
    }
    return res;
}

} // namespace iernn

#endif // IERNN_NELDER_MEAD_HPP
