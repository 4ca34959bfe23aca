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
#ifndef IERNN_IERNN_MODEL_HPP
#define IERNN_IERNN_MODEL_HPP

#include "iernn/adam.hpp"
#include "iernn/checkpoint.hpp"
#include "iernn/config.hpp"
#include "iernn/epi.hpp"
#include "iernn/lstm.hpp"
#include "iernn/region_graph.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iernn
{

enum class ModelKind { iernn, iernn_policy, iequation, lstm, arima };

inline std::string to_string(ModelKind k)
{
    switch (k) {
    case ModelKind::iernn:
        return "iernn";
    case ModelKind::iernn_policy:
        return "iernn-policy";
    case ModelKind::iequation:
        return "ieq";
    case ModelKind::lstm:
        return "lstm";
    case ModelKind::arima:
        return "arima";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& s)
{
    for (auto k : {ModelKind::iernn, ModelKind::iernn_policy, ModelKind::iequation, ModelKind::lstm, ModelKind::arima}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw std::invalid_argument("unknown model '" + s + "' (expected iernn, iernn-policy, ieq, lstm or arima)");
}

/// Thrown when the training loss stops being finite.
class TrainingDiverged : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/**
 * Data one region's model sees: every graph node's series on a shared daily
 * axis (day 0 = recursion start), the target node, and the fixed initial
 * susceptible fraction. `graph` may be null for models without inflow, in
 * which case `values` holds only the target series.
 */
struct RegionContext {
    const RegionGraph* graph = nullptr;
    std::vector<std::vector<double>> values;
    std::size_t node = 0;
    double S0 = 1.0;

    const std::vector<double>& own() const
    {
        return values.at(node);
    }
    std::size_t length() const
    {
        return own().size();
    }
};

/// First day with a complete input window for every model in a comparison.
inline long first_target(const ModelShape& s)
{
    return s.horizon + s.P + static_cast<long>(s.W + s.p) - 1;
}

struct FitReport {
    std::string region;
    std::string model;
    int horizon = 1;
    std::uint64_t seed = 0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    int epochs = 0;
};

inline std::string fit_report_header()
{
    return "state,model,horizon,seed,train_mse,test_mse,epochs";
}

inline std::string fit_report_row(const FitReport& r)
{
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%llu,%.6e,%.6e,%d", r.region.c_str(), r.model.c_str(), r.horizon,
                  static_cast<unsigned long long>(r.seed), r.train_mse, r.test_mse, r.epochs);
    return buf;
}

/// Decorrelated sub-seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// I-model driven by an edge-RNN inflow; with `uses_inflow == false` it is the plain I-equation.
struct IernnModel {
    EpiParams epi;
    EdgeRnnWeights rnn;
    std::optional<PolicyCurve> policy;
    ModelShape shape;
    bool uses_inflow = true;
    double feature_scale = 1.0; ///< multiplies edge features before the RNN

    ModelKind kind() const
    {
        if (!uses_inflow) {
            return ModelKind::iequation;
        }
        return policy ? ModelKind::iernn_policy : ModelKind::iernn;
    }

    /// RNN weights + six epi scalars (the curve replaces constant beta1 in policy mode);
    /// the I-equation counts alpha, beta1, gamma, sigma1 and the fixed S0.
    std::size_t trainable_parameters() const
    {
        if (!uses_inflow) {
            return 5;
        }
        return rnn.size() + (policy ? 5 + 5 : 6);
    }

    /// Per-day beta1 over [0, n).
    std::vector<double> beta1_values(std::size_t n, double decay = 1.0) const
    {
        if (policy) {
            return beta1_series(*policy, n, decay);
        }
        return std::vector<double>(n, decay * epi.beta1);
    }
};

/// Edge-feature sequences feeding the RNN, one per day in [k_begin, k_end].
struct InflowInputs {
    long k_begin = 0;
    std::vector<std::vector<double>> seqs;
};

inline InflowInputs make_inflow_inputs(const IernnModel& m, const RegionContext& ctx, long k_begin, long k_end)
{
    InflowInputs in;
    in.k_begin = k_begin;
    if (!m.uses_inflow) {
        return in;
    }
    if (!ctx.graph) {
        throw std::invalid_argument("IeRNN needs a region graph");
    }
    EdgeFeatureConfig fc{m.shape.p};
    for (long k = k_begin; k <= k_end; ++k) {
        auto seq = edge_feature_sequence(*ctx.graph, ctx.values, ctx.node, k, m.shape.W, fc);
        for (auto& v : seq) {
            v *= m.feature_scale;
        }
        in.seqs.push_back(std::move(seq));
    }
    return in;
}

/// 1 / max edge feature over [k_begin, k_end]; 1 if the features are all zero.
inline double edge_feature_scale(const RegionContext& ctx, const ModelShape& shape, long k_begin, long k_end)
{
    EdgeFeatureConfig fc{shape.p};
    double mx = 0.0;
    for (long k = std::max<long>(k_begin, static_cast<long>(shape.p)); k <= k_end; ++k) {
        mx = std::max(mx, edge_feature(*ctx.graph, ctx.values, ctx.node, k, fc));
    }
    return mx > 0.0 ? 1.0 / mx : 1.0;
}

/// Inflow I_e per absolute day (zero outside the computed range).
inline std::vector<double> compute_inflow(const IernnModel& m, const InflowInputs& in, std::size_t n,
                                          std::vector<EdgeRnnCache>* caches = nullptr)
{
    std::vector<double> ie(n, 0.0);
    if (!m.uses_inflow) {
        return ie;
    }
    if (caches) {
        caches->assign(in.seqs.size(), {});
    }
    for (std::size_t q = 0; q < in.seqs.size(); ++q) {
        ie[static_cast<std::size_t>(in.k_begin) + q] =
            edge_rnn_forward(in.seqs[q], m.rnn, caches ? &(*caches)[q] : nullptr);
    }
    return ie;
}

/// Loss and gradient of the teacher-forced MSE over targets [t_begin, t_end].
struct IernnGradient {
    double loss = 0.0;
    std::array<double, 6> epi{}; ///< alpha, beta1, beta2, gamma, sigma1, sigma2
    std::array<double, 5> curve{};
    std::vector<double> rnn;
};

inline constexpr std::array<const char*, 6> kEpiNames{"alpha", "beta1", "beta2", "gamma", "sigma1", "sigma2"};
inline constexpr std::array<const char*, 5> kCurveNames{"a", "b", "c", "tc", "s"};

inline std::array<double*, 6> epi_fields(EpiParams& p)
{
    return {&p.alpha, &p.beta1, &p.beta2, &p.gamma, &p.sigma1, &p.sigma2};
}

inline std::array<double*, 5> curve_fields(PolicyCurve& c)
{
    return {&c.a, &c.b, &c.c, &c.tc, &c.s};
}

inline void check_targets(const IernnModel& m, const RegionContext& ctx, long t_begin, long t_end)
{
    const long need = m.shape.horizon + m.shape.P +
                      (m.uses_inflow ? static_cast<long>(m.shape.W + m.shape.p) - 1 : 0);
    if (t_begin < need) {
        throw std::out_of_range("first target day " + std::to_string(t_begin) + " lacks history; need >= " +
                                std::to_string(need));
    }
    if (t_end < t_begin || t_end >= static_cast<long>(ctx.length())) {
        throw std::out_of_range("target range exceeds the series");
    }
}

/// Value-only loss (used by finite-difference checks).
inline double iernn_loss(const IernnModel& m, const RegionContext& ctx, long t_begin, long t_end)
{
    check_targets(m, ctx, t_begin, t_end);
    const int h = m.shape.horizon;
    auto inputs = make_inflow_inputs(m, ctx, t_begin - h - m.shape.P, t_end - h);
    auto ie = compute_inflow(m, inputs, ctx.length());
    auto b1 = m.beta1_values(ctx.length());
    EpiParams p = m.epi;
    p.S0 = ctx.S0;
    p.P = m.shape.P;
    p.t0 = 0;
    double sum = 0.0;
    for (long t = t_begin; t <= t_end; ++t) {
        const double r = i_model_step(ctx.own(), ie, p, b1, t, h) - ctx.own()[static_cast<std::size_t>(t)];
        sum += r * r;
    }
    return sum / static_cast<double>(t_end - t_begin + 1);
}

/**
 * Reverse-mode gradient of the loss through the I-model recursion, the beta1
 * curve and (by BPTT) every edge-RNN weight. `inputs` must come from
 * make_inflow_inputs over [t_begin - h - P, t_end - h].
 */
inline IernnGradient iernn_loss_grad(const IernnModel& m, const RegionContext& ctx, const InflowInputs& inputs,
                                     long t_begin, long t_end)
{
    check_targets(m, ctx, t_begin, t_end);
    const int h = m.shape.horizon;
    const std::size_t n = ctx.length();
    std::vector<EdgeRnnCache> caches;
    auto ie = compute_inflow(m, inputs, n, &caches);
    auto b1 = m.beta1_values(n);
    EpiParams p = m.epi;
    p.S0 = ctx.S0;
    p.P = m.shape.P;
    p.t0 = 0;

    IernnGradient g;
    std::vector<double> d_ie(n, 0.0), d_b1(n, 0.0);
    const double inv_n = 1.0 / static_cast<double>(t_end - t_begin + 1);
    const auto& I = ctx.own();
    for (long t = t_begin; t <= t_end; ++t) {
        auto step = i_model_step_grad(I, ie, p, b1, t, h);
        const double r = step.value - I[static_cast<std::size_t>(t)];
        g.loss += r * r;
        const double u = 2.0 * r * inv_n;
        g.epi[0] += u * step.d_alpha;
        g.epi[2] += u * step.d_beta2;
        g.epi[3] += u * step.d_gamma;
        g.epi[4] += u * step.d_sigma1;
        g.epi[5] += u * step.d_sigma2;
        for (std::size_t j = 0; j < step.d_beta1.size(); ++j) {
            const auto k = static_cast<std::size_t>(t - h) - j;
            d_b1[k] += u * step.d_beta1[j];
            d_ie[k] += u * step.d_inflow[j];
        }
    }
    g.loss *= inv_n;

    if (m.policy) {
        for (std::size_t k = 0; k < n; ++k) {
            if (d_b1[k] == 0.0) {
                continue;
            }
            const double raw = beta1_of_t(*m.policy, static_cast<double>(k));
            if (raw <= 0.0 || raw >= kBeta1Max) {
                continue; // clamped
            }
            auto db = beta1_gradient(*m.policy, static_cast<double>(k));
            for (std::size_t q = 0; q < 5; ++q) {
                g.curve[q] += d_b1[k] * db[q];
            }
        }
    } else {
        for (double v : d_b1) {
            g.epi[1] += v;
        }
    }

    g.rnn.assign(m.rnn.size(), 0.0);
    if (m.uses_inflow) {
        for (std::size_t q = 0; q < caches.size(); ++q) {
            const double up = d_ie[static_cast<std::size_t>(inputs.k_begin) + q];
            if (up != 0.0) {
                edge_rnn_backward(caches[q], up, m.rnn, g.rnn);
            }
        }
    }
    return g;
}

/// Policy curve initialization around the middle of the training window.
inline PolicyCurve initial_policy(std::size_t n_train)
{
    PolicyCurve c;
    c.a = static_cast<double>(n_train) / 2.0;
    c.b = 1.0;
    c.c = 0.1;
    c.tc = c.a;
    c.s = 100.0;
    return c;
}

/// Fresh model: the six epi scalars uniform in [0,1] and seeded RNN weights.
inline IernnModel init_iernn(ModelKind kind, const ModelShape& shape, std::uint64_t seed, std::size_t n_train)
{
    if (kind != ModelKind::iernn && kind != ModelKind::iernn_policy && kind != ModelKind::iequation) {
        throw std::invalid_argument("init_iernn: not an I-model kind");
    }
    IernnModel m;
    m.shape = shape;
    m.uses_inflow = kind != ModelKind::iequation;
    std::mt19937_64 rng(derive_seed(seed, 0));
    for (double* v : epi_fields(m.epi)) {
        *v = uniform01(rng);
    }
    m.epi.P = shape.P;
    if (m.uses_inflow) {
        m.rnn = EdgeRnnWeights::random(shape.arch, derive_seed(seed, 1));
    }
    if (kind == ModelKind::iernn_policy) {
        m.policy = initial_policy(n_train);
    }
    return m;
}

struct TrainResult {
    IernnModel model;
    double train_mse = 0.0;
    int epochs = 0;
};

/**
 * Grouped-Adam training on targets [t_begin, t_end]. The optimized objective is
 * the MSE divided by the mean squared target (Adam's eps would otherwise swamp
 * gradients of fraction-scale data); the reported MSE is unnormalized. Returns
 * the parameters with the lowest training loss seen.
 */
inline TrainResult train_iernn(IernnModel m, const RegionContext& ctx, long t_begin, long t_end,
                               const TrainOptions& opts)
{
    check_targets(m, ctx, t_begin, t_end);
    m.epi.S0 = ctx.S0;
    m.epi.P = m.shape.P;
    const int h = m.shape.horizon;
    const long k_begin = t_begin - h - m.shape.P;
    const long k_end = t_end - h;
    if (m.uses_inflow) {
        m.feature_scale = edge_feature_scale(ctx, m.shape, k_begin, k_end);
    }
    const auto inputs = make_inflow_inputs(m, ctx, k_begin, k_end);

    double norm = 0.0;
    for (long t = t_begin; t <= t_end; ++t) {
        norm += ctx.own()[static_cast<std::size_t>(t)] * ctx.own()[static_cast<std::size_t>(t)];
    }
    norm /= static_cast<double>(t_end - t_begin + 1);
    if (!(norm > 0.0)) {
        norm = 1.0;
    }

    const std::size_t n_epi = m.policy ? 11 : 6;
    ParamGroup epi_group("epi", n_epi, opts.lr_epi, opts.l2_epi);
    ParamGroup net_group("network", m.rnn.size(), opts.lr_net, opts.l2_net);
    epi_group.adam.b2 = opts.b2_epi;
    net_group.adam.b2 = opts.b2_net;

    TrainResult best{m, std::numeric_limits<double>::infinity(), 0};
    std::vector<double> best_history;
    int epoch = 0;
    for (; epoch < opts.epochs; ++epoch) {
        auto g = iernn_loss_grad(m, ctx, inputs, t_begin, t_end);
        if (!std::isfinite(g.loss)) {
            throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch) + " (alpha=" +
                                   std::to_string(m.epi.alpha) + ", sigma1=" + std::to_string(m.epi.sigma1) + ")");
        }
        if (g.loss < best.train_mse) {
            best.model = m;
            best.train_mse = g.loss;
        }
        best_history.push_back(best.train_mse);
        if (opts.early_stop_window > 0 && epoch >= opts.early_stop_window &&
            best_history[static_cast<std::size_t>(epoch - opts.early_stop_window)] - best.train_mse <
                opts.early_stop_tol) {
            break;
        }

        std::vector<double> params, grads;
        auto ef = epi_fields(m.epi);
        for (std::size_t q = 0; q < 6; ++q) {
            params.push_back(*ef[q]);
            grads.push_back(g.epi[q] / norm);
        }
        if (m.policy) {
            auto cf = curve_fields(*m.policy);
            for (std::size_t q = 0; q < 5; ++q) {
                params.push_back(*cf[q]);
                grads.push_back(g.curve[q] / norm);
            }
        }
        epi_group.step(params, std::move(grads));
        for (std::size_t q = 0; q < 6; ++q) {
            *ef[q] = params[q];
        }
        if (m.policy) {
            auto cf = curve_fields(*m.policy);
            for (std::size_t q = 0; q < 5; ++q) {
                *cf[q] = params[6 + q];
            }
            project_policy(*m.policy);
        }
        project_unit_interval(m.epi);

        if (m.uses_inflow) {
            for (auto& v : g.rnn) {
                v /= norm;
            }
            net_group.step(m.rnn.theta(), std::move(g.rnn));
        }
    }
    best.epochs = std::min(epoch + 1, opts.epochs);
    return best;
}

enum class Rollout { teacher_forced, free_running };

/**
 * Predictions for days [t_begin, t_end]. Teacher-forced mode reads the true
 * series up to t - h; free-running mode overwrites the region's own history
 * from t_begin on with its predictions. Neighbor series are always observed
 * values. `decay` multiplies beta1 (constant or curve).
 */
inline std::vector<double> iernn_predict(const IernnModel& m, const RegionContext& ctx, long t_begin, long t_end,
                                         double decay = 1.0, Rollout mode = Rollout::teacher_forced)
{
    if (!(decay >= 0.0)) {
        throw std::invalid_argument("test decay must be non-negative");
    }
    check_targets(m, ctx, t_begin, t_end);
    const int h = m.shape.horizon;
    const auto inputs = make_inflow_inputs(m, ctx, t_begin - h - m.shape.P, t_end - h);
    const auto ie = compute_inflow(m, inputs, ctx.length());
    const auto b1 = m.beta1_values(ctx.length(), decay);
    EpiParams p = m.epi;
    p.S0 = ctx.S0;
    p.P = m.shape.P;
    p.t0 = 0;
    std::vector<double> own = ctx.own();
    std::vector<double> out;
    for (long t = t_begin; t <= t_end; ++t) {
        const double y = i_model_step(own, ie, p, b1, t, h);
        out.push_back(y);
        if (mode == Rollout::free_running) {
            own[static_cast<std::size_t>(t)] = y;
        }
    }
    return out;
}

inline void save_iernn(const IernnModel& m, Checkpoint& ck)
{
    ck.set_attr("model.kind", to_string(m.kind()));
    ck.set_attr("model.horizon", std::to_string(m.shape.horizon));
    ck.set_attr("model.P", std::to_string(m.shape.P));
    ck.set_attr("model.p", std::to_string(m.shape.p));
    ck.set_attr("model.W", std::to_string(m.shape.W));
    auto epi = m.epi;
    auto ef = epi_fields(epi);
    for (std::size_t q = 0; q < 6; ++q) {
        ck.set_scalar(std::string("epi.") + kEpiNames[q], *ef[q]);
    }
    ck.set_scalar("epi.S0", m.epi.S0);
    ck.set_scalar("feature_scale", m.feature_scale);
    if (m.policy) {
        auto c = *m.policy;
        auto cf = curve_fields(c);
        for (std::size_t q = 0; q < 5; ++q) {
            ck.set_scalar(std::string("policy.") + kCurveNames[q], *cf[q]);
        }
    }
    if (m.uses_inflow) {
        m.rnn.save(ck);
    }
}

inline IernnModel load_iernn(const Checkpoint& ck)
{
    IernnModel m;
    auto kind = parse_model_kind(ck.attr("model.kind"));
    if (kind != ModelKind::iernn && kind != ModelKind::iernn_policy && kind != ModelKind::iequation) {
        throw std::runtime_error("checkpoint holds a " + to_string(kind) + " model, not an I-model");
    }
    m.uses_inflow = kind != ModelKind::iequation;
    m.shape.horizon = std::stoi(ck.attr("model.horizon"));
    m.shape.P = std::stoi(ck.attr("model.P"));
    m.shape.p = std::stoul(ck.attr("model.p"));
    m.shape.W = std::stoul(ck.attr("model.W"));
    auto ef = epi_fields(m.epi);
    for (std::size_t q = 0; q < 6; ++q) {
        *ef[q] = ck.scalar(std::string("epi.") + kEpiNames[q]);
    }
    m.epi.S0 = ck.scalar("epi.S0");
    m.epi.P = m.shape.P;
    m.feature_scale = ck.scalar("feature_scale");
    if (kind == ModelKind::iernn_policy) {
        PolicyCurve c;
        auto cf = curve_fields(c);
        for (std::size_t q = 0; q < 5; ++q) {
            *cf[q] = ck.scalar(std::string("policy.") + kCurveNames[q]);
        }
        m.policy = c;
    }
    if (m.uses_inflow) {
        m.rnn = EdgeRnnWeights::load(ck);
        m.shape.arch = m.rnn.architecture();
    }
    return m;
}

} // namespace iernn

#endif // IERNN_IERNN_MODEL_HPP
