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
#ifndef IERNN_TESTS_SUPPORT_HPP
#define IERNN_TESTS_SUPPORT_HPP

#include "iernn/iernn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace iernn::testing
{

/// Four-node toy graph: A-B, B-C, C-D, A-C.
inline RegionGraph toy_graph()
{
    return graph_from_edges({{"A", "B"}, {"B", "C"}, {"C", "D"}, {"A", "C"}});
}

/// Owns the graph a RegionContext points into.
struct ToyProblem {
    std::unique_ptr<RegionGraph> graph;
    RegionContext ctx;
    ModelShape shape;
};

/// Random smooth-ish positive series of length `n` on every toy node, target node 0.
inline ToyProblem toy_problem(std::uint64_t seed, std::size_t n = 60, double level = 0.05)
{
    ToyProblem tp;
    tp.graph = std::make_unique<RegionGraph>(toy_graph());
    tp.ctx.graph = tp.graph.get();
    tp.ctx.node = 0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < tp.graph->size(); ++i) {
        std::vector<double> v(n);
        const double phase = 6.0 * u(rng), amp = 0.5 * u(rng);
        for (std::size_t k = 0; k < n; ++k) {
            v[k] = level * (1.0 + amp * std::sin(0.15 * static_cast<double>(k) + phase) + 0.2 * u(rng));
        }
        tp.ctx.values.push_back(std::move(v));
    }
    tp.ctx.S0 = 0.7 + 0.25 * u(rng);
    tp.shape.P = 5;
    tp.shape.p = 3;
    tp.shape.W = 4;
    tp.shape.horizon = 1;
    return tp;
}

struct FullGradCheck {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::string worst;
};

/**
 * Fourth-order central differences of iernn_loss against iernn_loss_grad for
 * one random draw of epi parameters (and curve when `policy`), RNN weights and
 * data. Checks every epi/curve scalar, every dense weight and `rnn_samples`
 * other weights. Relative error uses max(|analytic|, |numeric|, 1e-7 * largest
 * analytic component) as denominator.
 */
inline FullGradCheck full_loss_grad_check(std::uint64_t seed, bool policy, double eps = 1e-3,
                                          std::size_t rnn_samples = 60)
{
    auto tp = toy_problem(derive_seed(seed, 7));
    tp.shape.horizon = seed % 2 ? 1 : 2;
    std::mt19937_64 rng(derive_seed(seed, 8));
    std::uniform_real_distribution<double> u(0.05, 0.95);

    auto m = init_iernn(policy ? ModelKind::iernn_policy : ModelKind::iernn, tp.shape, seed, 40);
    for (double* v : epi_fields(m.epi)) {
        *v = u(rng);
    }
    if (policy) {
        // keep beta1(t) strictly inside the clamp so the loss is smooth
        m.policy = PolicyCurve{20.0 + 20.0 * u(rng), 0.05 + 0.3 * u(rng), 0.4 * u(rng), 20.0 + 20.0 * u(rng),
                               50.0 + 100.0 * u(rng)};
    }
    m.feature_scale = 5.0;
    m.epi.S0 = tp.ctx.S0;

    const long t_begin = first_target(tp.shape);
    const long t_end = static_cast<long>(tp.ctx.length()) - 1;
    const auto inputs = make_inflow_inputs(m, tp.ctx, t_begin - tp.shape.horizon - tp.shape.P, t_end - tp.shape.horizon);
    const auto g = iernn_loss_grad(m, tp.ctx, inputs, t_begin, t_end);

    struct Probe {
        std::string name;
        double analytic;
        double numeric;
    };
    std::vector<Probe> probes;
    auto check = [&](double analytic, const std::string& name, auto&& perturb) {
        perturb(2.0 * eps);
        const double f2 = iernn_loss(m, tp.ctx, t_begin, t_end);
        perturb(-eps);
        const double f1 = iernn_loss(m, tp.ctx, t_begin, t_end);
        perturb(-2.0 * eps);
        const double fm1 = iernn_loss(m, tp.ctx, t_begin, t_end);
        perturb(-eps);
        const double fm2 = iernn_loss(m, tp.ctx, t_begin, t_end);
        perturb(2.0 * eps);
        probes.push_back({name, analytic, (-f2 + 8.0 * f1 - 8.0 * fm1 + fm2) / (12.0 * eps)});
    };

    auto ef = epi_fields(m.epi);
    for (std::size_t q = 0; q < 6; ++q) {
        if (policy && q == 1) {
            continue; // beta1 is replaced by the curve
        }
        check(g.epi[q], kEpiNames[q], [&](double d) { *ef[q] += d; });
    }
    if (policy) {
        auto cf = curve_fields(*m.policy);
        for (std::size_t q = 0; q < 5; ++q) {
            // curve parameters live on day scales; a relative step keeps the difference well conditioned
            const double step = std::max(1.0, std::abs(*cf[q]));
            check(g.curve[q] * step, kCurveNames[q], [&](double d) { *cf[q] += d * step; });
        }
    }
    std::vector<std::size_t> coords;
    for (std::size_t k = m.rnn.offset_dense_w(); k < m.rnn.size(); ++k) {
        coords.push_back(k);
    }
    std::uniform_int_distribution<std::size_t> pick(0, m.rnn.offset_dense_w() - 1);
    for (std::size_t k = 0; k < rnn_samples; ++k) {
        coords.push_back(pick(rng));
    }
    for (auto k : coords) {
        check(g.rnn[k], "rnn[" + std::to_string(k) + "]", [&](double d) { m.rnn.theta()[k] += d; });
    }

    // components far below the largest one sit under the difference quotient's round-off
    double scale = 0.0;
    for (const auto& p : probes) {
        scale = std::max(scale, std::abs(p.analytic));
    }
    FullGradCheck res;
    for (const auto& p : probes) {
        const double denom = std::max({std::abs(p.analytic), std::abs(p.numeric), 1e-7 * scale, 1e-300});
        const double rel = std::abs(p.analytic - p.numeric) / denom;
        if (rel > res.max_rel_error) {
            res.max_rel_error = rel;
            res.worst = p.name;
        }
        ++res.checked;
    }
    return res;
}

} // namespace iernn::testing

#endif // IERNN_TESTS_SUPPORT_HPP
