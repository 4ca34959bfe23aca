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
#ifndef IERNN_ADAM_HPP
#define IERNN_ADAM_HPP

#include "iernn/epi.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iernn
{

struct AdamState {
    double lr = 1e-3;
    double b1 = 0.9;
    double b2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<double> m;
    std::vector<double> v;

    AdamState() = default;
    AdamState(std::size_t n, double learning_rate)
        : lr(learning_rate)
        , m(n, 0.0)
        , v(n, 0.0)
    {
    }
};

/// One bias-corrected Adam update. Throws on a non-finite gradient, naming `group[index]`.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& st,
                      const std::string& group = "param")
{
    if (params.size() != grads.size() || st.m.size() != params.size() || st.v.size() != params.size()) {
        throw std::invalid_argument("adam_step: size mismatch in group '" + group + "'");
    }
    for (std::size_t k = 0; k < grads.size(); ++k) {
        if (!std::isfinite(grads[k])) {
            throw std::runtime_error("adam_step: non-finite gradient for " + group + "[" + std::to_string(k) + "]");
        }
    }
    ++st.t;
    const double c1 = 1.0 - std::pow(st.b1, static_cast<double>(st.t));
    const double c2 = 1.0 - std::pow(st.b2, static_cast<double>(st.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grads[k];
        st.m[k] = st.b1 * st.m[k] + (1.0 - st.b1) * g;
        st.v[k] = st.b2 * st.v[k] + (1.0 - st.b2) * g * g;
        const double mhat = st.m[k] / c1;
        const double vhat = st.v[k] / c2;
        params[k] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

/// g += 2 lambda theta
inline void apply_l2(std::span<double> grads, std::span<const double> params, double lambda)
{
    if (lambda < 0.0) {
        throw std::invalid_argument("apply_l2: lambda must be >= 0");
    }
    if (lambda == 0.0) {
        return;
    }
    for (std::size_t k = 0; k < grads.size(); ++k) {
        grads[k] += 2.0 * lambda * params[k];
    }
}

inline void project_unit_interval(std::span<double> values)
{
    for (auto& v : values) {
        v = std::clamp(v, 0.0, 1.0);
    }
}

/// Clamps alpha, beta1, beta2, gamma, sigma1, sigma2 to [0,1]; S0, P, t0 untouched.
inline void project_unit_interval(EpiParams& p)
{
    for (double* v : {&p.alpha, &p.beta1, &p.beta2, &p.gamma, &p.sigma1, &p.sigma2}) {
        *v = std::clamp(*v, 0.0, 1.0);
    }
}

/// Keeps the policy curve well-defined: b, c >= 0 and width s >= 1 day^2.
inline void project_policy(PolicyCurve& c)
{
    c.b = std::max(c.b, 0.0);
    c.c = std::max(c.c, 0.0);
    c.s = std::max(c.s, 1.0);
}

/// A named set of scalars sharing learning rate, L2 coefficient and projection rule.
struct ParamGroup {
    std::string name;
    double l2 = 0.0;
    AdamState adam;

    ParamGroup(std::string group_name, std::size_t n, double lr, double lambda)
        : name(std::move(group_name))
        , l2(lambda)
        , adam(n, lr)
    {
    }

    void step(std::span<double> params, std::vector<double> grads)
    {
        apply_l2(grads, params, l2);
        adam_step(params, grads, adam, name);
    }
};

} // namespace iernn

#endif // IERNN_ADAM_HPP
