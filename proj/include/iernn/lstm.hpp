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
#ifndef IERNN_LSTM_HPP
#define IERNN_LSTM_HPP

#include "iernn/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iernn
{

enum class OutputActivation { logistic, linear };

inline double logistic(double x)
{
    return 1.0 / (1.0 + std::exp(-x));
}

/// Uniform double in [0, 1) from the top 53 bits; stable across standard libraries.
inline double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

/// Stack shape: scalar input, one LSTM layer per entry of `hidden`, dense to one output.
struct RnnArchitecture {
    std::size_t input = 1;
    std::vector<std::size_t> hidden{16, 16};
    OutputActivation output = OutputActivation::logistic;

    std::size_t layer_input(std::size_t layer) const
    {
        return layer == 0 ? input : hidden[layer - 1];
    }
    std::size_t top() const
    {
        return hidden.back();
    }

    /// 4 (hidden (in + hidden) + hidden) per layer, plus hidden + 1 for the dense output.
    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for (std::size_t l = 0; l < hidden.size(); ++l) {
            n += 4 * (hidden[l] * (layer_input(l) + hidden[l]) + hidden[l]);
        }
        return n + top() + 1;
    }

    static RnnArchitecture stacked_default()
    {
        return {};
    }
    static RnnArchitecture single_wide()
    {
        return {1, {30}, OutputActivation::logistic};
    }
};

/// View of one layer inside the flat parameter vector. Gate row blocks are ordered i, f, o, g.
struct LstmLayerWeights {
    std::size_t in = 0;
    std::size_t hidden = 0;
    std::span<const double> W; ///< (4 hidden) x in
    std::span<const double> U; ///< (4 hidden) x hidden
    std::span<const double> b; ///< 4 hidden

    std::span<const double> gate_W(std::size_t gate) const
    {
        return W.subspan(gate * hidden * in, hidden * in);
    }
    std::span<const double> gate_U(std::size_t gate) const
    {
        return U.subspan(gate * hidden * hidden, hidden * hidden);
    }
    std::span<const double> gate_b(std::size_t gate) const
    {
        return b.subspan(gate * hidden, hidden);
    }
};

/// Trainable parameters of the stacked LSTM plus dense head, stored as one flat vector.
class EdgeRnnWeights
{
public:
    EdgeRnnWeights() = default;

    explicit EdgeRnnWeights(RnnArchitecture arch)
        : m_arch(std::move(arch))
    {
        if (m_arch.hidden.empty() || m_arch.input == 0 ||
            std::any_of(m_arch.hidden.begin(), m_arch.hidden.end(), [](auto h) { return h == 0; })) {
            throw std::invalid_argument("RNN needs input > 0 and at least one non-empty layer");
        }
        std::size_t off = 0;
        for (std::size_t l = 0; l < m_arch.hidden.size(); ++l) {
            const auto h = m_arch.hidden[l], in = m_arch.layer_input(l);
            Offsets o;
            o.W = off;
            off += 4 * h * in;
            o.U = off;
            off += 4 * h * h;
            o.b = off;
            off += 4 * h;
            m_offsets.push_back(o);
        }
        m_dense_w = off;
        off += m_arch.top();
        m_dense_b = off;
        off += 1;
        m_theta.assign(off, 0.0);
    }

    /// Uniform in +-1/sqrt(fan_in) per matrix, forget-gate bias 1, other biases 0.
    static EdgeRnnWeights random(const RnnArchitecture& arch, std::uint64_t seed)
    {
        EdgeRnnWeights w(arch);
        std::mt19937_64 rng(seed);
        for (std::size_t l = 0; l < arch.hidden.size(); ++l) {
            const auto h = arch.hidden[l], in = arch.layer_input(l);
            const double rw = 1.0 / std::sqrt(static_cast<double>(in));
            const double ru = 1.0 / std::sqrt(static_cast<double>(h));
            auto& o = w.m_offsets[l];
            for (std::size_t k = 0; k < 4 * h * in; ++k) {
                w.m_theta[o.W + k] = uniform(rng, -rw, rw);
            }
            for (std::size_t k = 0; k < 4 * h * h; ++k) {
                w.m_theta[o.U + k] = uniform(rng, -ru, ru);
            }
            for (std::size_t k = 0; k < h; ++k) {
                w.m_theta[o.b + h + k] = 1.0;
            }
        }
        const double rd = 1.0 / std::sqrt(static_cast<double>(arch.top()));
        for (std::size_t k = 0; k < arch.top(); ++k) {
            w.m_theta[w.m_dense_w + k] = uniform(rng, -rd, rd);
        }
        return w;
    }

    const RnnArchitecture& architecture() const
    {
        return m_arch;
    }
    std::size_t size() const
    {
        return m_theta.size();
    }
    std::span<double> theta()
    {
        return m_theta;
    }
    std::span<const double> theta() const
    {
        return m_theta;
    }
    std::size_t layers() const
    {
        return m_offsets.size();
    }

    LstmLayerWeights layer(std::size_t l) const
    {
        const auto h = m_arch.hidden.at(l), in = m_arch.layer_input(l);
        const auto& o = m_offsets[l];
        std::span<const double> t(m_theta);
        return {in, h, t.subspan(o.W, 4 * h * in), t.subspan(o.U, 4 * h * h), t.subspan(o.b, 4 * h)};
    }
    std::span<const double> dense_w() const
    {
        return std::span<const double>(m_theta).subspan(m_dense_w, m_arch.top());
    }
    double dense_b() const
    {
        return m_theta[m_dense_b];
    }

    // Offsets into the flat vector, shared with gradient vectors of the same layout.
    std::size_t offset_W(std::size_t l) const
    {
        return m_offsets.at(l).W;
    }
    std::size_t offset_U(std::size_t l) const
    {
        return m_offsets.at(l).U;
    }
    std::size_t offset_b(std::size_t l) const
    {
        return m_offsets.at(l).b;
    }
    std::size_t offset_dense_w() const
    {
        return m_dense_w;
    }
    std::size_t offset_dense_b() const
    {
        return m_dense_b;
    }

    void save(Checkpoint& ck, const std::string& prefix = "rnn.") const
    {
        std::string hidden;
        for (auto h : m_arch.hidden) {
            hidden += (hidden.empty() ? "" : ",") + std::to_string(h);
        }
        ck.set_attr(prefix + "input", std::to_string(m_arch.input));
        ck.set_attr(prefix + "hidden", hidden);
        ck.set_attr(prefix + "output", m_arch.output == OutputActivation::logistic ? "logistic" : "linear");
        for (std::size_t l = 0; l < layers(); ++l) {
            auto lw = layer(l);
            auto name = prefix + "layer" + std::to_string(l) + ".";
            ck.set_tensor(name + "W", 4 * lw.hidden, lw.in, {lw.W.begin(), lw.W.end()});
            ck.set_tensor(name + "U", 4 * lw.hidden, lw.hidden, {lw.U.begin(), lw.U.end()});
            ck.set_tensor(name + "b", 4 * lw.hidden, 1, {lw.b.begin(), lw.b.end()});
        }
        auto dw = dense_w();
        ck.set_tensor(prefix + "dense.w", 1, dw.size(), {dw.begin(), dw.end()});
        ck.set_scalar(prefix + "dense.b", dense_b());
    }

    static EdgeRnnWeights load(const Checkpoint& ck, const std::string& prefix = "rnn.")
    {
        RnnArchitecture arch;
        arch.input = std::stoul(ck.attr(prefix + "input"));
        arch.hidden.clear();
        std::string hidden = ck.attr(prefix + "hidden");
        std::size_t pos = 0;
        while (pos <= hidden.size()) {
            auto comma = hidden.find(',', pos);
            arch.hidden.push_back(std::stoul(hidden.substr(pos, comma - pos)));
            if (comma == std::string::npos) {
                break;
            }
            pos = comma + 1;
        }
        const auto& out = ck.attr(prefix + "output");
        if (out != "logistic" && out != "linear") {
            throw std::runtime_error("unknown output activation '" + out + "'");
        }
        arch.output = out == "logistic" ? OutputActivation::logistic : OutputActivation::linear;
        EdgeRnnWeights w(arch);
        auto copy = [&](const std::string& name, std::size_t off, std::size_t n) {
            const auto& t = ck.tensor(name);
            if (t.values.size() != n) {
                throw std::runtime_error("tensor '" + name + "' has wrong size for the architecture");
            }
            std::copy(t.values.begin(), t.values.end(), w.m_theta.begin() + static_cast<long>(off));
        };
        for (std::size_t l = 0; l < w.layers(); ++l) {
            const auto h = arch.hidden[l], in = arch.layer_input(l);
            auto name = prefix + "layer" + std::to_string(l) + ".";
            copy(name + "W", w.offset_W(l), 4 * h * in);
            copy(name + "U", w.offset_U(l), 4 * h * h);
            copy(name + "b", w.offset_b(l), 4 * h);
        }
        copy(prefix + "dense.w", w.m_dense_w, arch.top());
        w.m_theta[w.m_dense_b] = ck.scalar(prefix + "dense.b");
        return w;
    }

private:
    struct Offsets {
        std::size_t W = 0, U = 0, b = 0;
    };
    RnnArchitecture m_arch;
    std::vector<Offsets> m_offsets;
    std::size_t m_dense_w = 0;
    std::size_t m_dense_b = 0;
    std::vector<double> m_theta;
};

/// Intermediates of one cell step, enough for the backward pass.
struct LstmCellCache {
    std::vector<double> x, h_prev, c_prev;
    std::vector<double> i, f, o, g; ///< post-activation gates
    std::vector<double> c, tanh_c;
};

struct LstmCellOutput {
    std::vector<double> h;
    std::vector<double> c;
    LstmCellCache cache;
};

inline LstmCellOutput lstm_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                                        std::span<const double> c_prev, const LstmLayerWeights& w)
{
    const auto H = w.hidden, N = w.in;
    if (x.size() != N || h_prev.size() != H || c_prev.size() != H) {
        throw std::invalid_argument("lstm_cell_forward: dimension mismatch");
    }
    LstmCellOutput out;
    auto& k = out.cache;
    k.x.assign(x.begin(), x.end());
    k.h_prev.assign(h_prev.begin(), h_prev.end());
    k.c_prev.assign(c_prev.begin(), c_prev.end());
    std::vector<double> pre(4 * H);
    for (std::size_t r = 0; r < 4 * H; ++r) {
        double a = w.b[r];
        const double* wr = w.W.data() + r * N;
        for (std::size_t q = 0; q < N; ++q) {
            a += wr[q] * x[q];
        }
        const double* ur = w.U.data() + r * H;
        for (std::size_t q = 0; q < H; ++q) {
            a += ur[q] * h_prev[q];
        }
        pre[r] = a;
    }
    k.i.resize(H);
    k.f.resize(H);
    k.o.resize(H);
    k.g.resize(H);
    k.c.resize(H);
    k.tanh_c.resize(H);
    out.h.resize(H);
    for (std::size_t u = 0; u < H; ++u) {
        k.i[u] = logistic(pre[u]);
        k.f[u] = logistic(pre[H + u]);
        k.o[u] = logistic(pre[2 * H + u]);
        k.g[u] = std::tanh(pre[3 * H + u]);
        k.c[u] = k.f[u] * c_prev[u] + k.i[u] * k.g[u];
        k.tanh_c[u] = std::tanh(k.c[u]);
        out.h[u] = k.o[u] * k.tanh_c[u];
    }
    out.c = k.c;
    return out;
}

/**
 * Backward through one cell. Accumulates dW, dU, db into `grad` at the layer's
 * offsets and returns (dx, dh_prev, dc_prev).
 */
struct LstmCellBackward {
    std::vector<double> dx, dh_prev, dc_prev;
};

inline LstmCellBackward lstm_cell_backward(const LstmCellCache& k, std::span<const double> dh,
                                           std::span<const double> dc_next, const LstmLayerWeights& w,
                                           std::span<double> dW, std::span<double> dU, std::span<double> db)
{
    const auto H = w.hidden, N = w.in;
    std::vector<double> da(4 * H);
    LstmCellBackward out;
    out.dc_prev.resize(H);
    for (std::size_t u = 0; u < H; ++u) {
        const double dc = dc_next[u] + dh[u] * k.o[u] * (1.0 - k.tanh_c[u] * k.tanh_c[u]);
        const double d_o = dh[u] * k.tanh_c[u];
        const double d_i = dc * k.g[u];
        const double d_g = dc * k.i[u];
        const double d_f = dc * k.c_prev[u];
        out.dc_prev[u] = dc * k.f[u];
        da[u] = d_i * k.i[u] * (1.0 - k.i[u]);
        da[H + u] = d_f * k.f[u] * (1.0 - k.f[u]);
        da[2 * H + u] = d_o * k.o[u] * (1.0 - k.o[u]);
        da[3 * H + u] = d_g * (1.0 - k.g[u] * k.g[u]);
    }
    out.dx.assign(N, 0.0);
    out.dh_prev.assign(H, 0.0);
    for (std::size_t r = 0; r < 4 * H; ++r) {
        const double a = da[r];
        if (a == 0.0) {
            continue;
        }
        db[r] += a;
        double* dwr = dW.data() + r * N;
        const double* wr = w.W.data() + r * N;
        for (std::size_t q = 0; q < N; ++q) {
            dwr[q] += a * k.x[q];
            out.dx[q] += a * wr[q];
        }
        double* dur = dU.data() + r * H;
        const double* ur = w.U.data() + r * H;
        for (std::size_t q = 0; q < H; ++q) {
            dur[q] += a * k.h_prev[q];
            out.dh_prev[q] += a * ur[q];
        }
    }
    return out;
}

/// Per-step, per-layer caches of a forward pass over a sequence.
struct EdgeRnnCache {
    std::vector<std::vector<LstmCellCache>> steps; ///< [t][layer]
    std::vector<double> top_h;                     ///< top-layer hidden state after the last step
    double pre_output = 0.0;
    double output = 0.0;
    std::size_t parameter_count = 0;
};

/// Runs the stack over `seq` (each element a scalar input) and applies the dense head.
inline double edge_rnn_forward(std::span<const double> seq, const EdgeRnnWeights& w, EdgeRnnCache* cache = nullptr)
{
    if (seq.empty()) {
        throw std::invalid_argument("edge_rnn_forward: empty input sequence");
    }
    const auto& arch = w.architecture();
    if (arch.input != 1) {
        throw std::invalid_argument("edge_rnn_forward: scalar sequences need input size 1");
    }
    const auto L = w.layers();
    std::vector<std::vector<double>> h(L), c(L);
    std::vector<LstmLayerWeights> lw;
    for (std::size_t l = 0; l < L; ++l) {
        h[l].assign(arch.hidden[l], 0.0);
        c[l].assign(arch.hidden[l], 0.0);
        lw.push_back(w.layer(l));
    }
    if (cache) {
        cache->steps.assign(seq.size(), {});
        cache->parameter_count = w.size();
    }
    for (std::size_t t = 0; t < seq.size(); ++t) {
        std::vector<double> x{seq[t]};
        for (std::size_t l = 0; l < L; ++l) {
            auto step = lstm_cell_forward(l == 0 ? std::span<const double>(x) : std::span<const double>(h[l - 1]),
                                          h[l], c[l], lw[l]);
            h[l] = std::move(step.h);
            c[l] = std::move(step.c);
            if (cache) {
                cache->steps[t].push_back(std::move(step.cache));
            }
        }
    }
    const auto dw = w.dense_w();
    double z = w.dense_b();
    for (std::size_t u = 0; u < dw.size(); ++u) {
        z += dw[u] * h[L - 1][u];
    }
    const double y = arch.output == OutputActivation::logistic ? logistic(z) : z;
    if (cache) {
        cache->top_h = h[L - 1];
        cache->pre_output = z;
        cache->output = y;
    }
    return y;
}

/// Accumulates dLoss/dtheta into `grad` (same layout as the weights) given dLoss/doutput.
inline void edge_rnn_backward(const EdgeRnnCache& cache, double upstream, const EdgeRnnWeights& w,
                              std::span<double> grad)
{
    if (cache.parameter_count != w.size() || grad.size() != w.size() || cache.steps.empty() ||
        cache.steps.front().size() != w.layers()) {
        throw std::invalid_argument("edge_rnn_backward: cache does not match the weights");
    }
    if (upstream == 0.0) {
        return;
    }
    const auto& arch = w.architecture();
    const double dz = arch.output == OutputActivation::logistic ? upstream * cache.output * (1.0 - cache.output)
                                                                : upstream;
    const auto L = w.layers();
    const auto dw = w.dense_w();
    for (std::size_t u = 0; u < dw.size(); ++u) {
        grad[w.offset_dense_w() + u] += dz * cache.top_h[u];
    }
    grad[w.offset_dense_b()] += dz;

    std::vector<LstmLayerWeights> lw;
    std::vector<std::vector<double>> dh_next(L), dc_next(L);
    for (std::size_t l = 0; l < L; ++l) {
        lw.push_back(w.layer(l));
        dh_next[l].assign(arch.hidden[l], 0.0);
        dc_next[l].assign(arch.hidden[l], 0.0);
    }
    for (std::size_t u = 0; u < dw.size(); ++u) {
        dh_next[L - 1][u] = dz * dw[u];
    }
    for (std::size_t t = cache.steps.size(); t-- > 0;) {
        std::vector<double> from_above;
        for (std::size_t l = L; l-- > 0;) {
            const auto H = arch.hidden[l], N = arch.layer_input(l);
            std::vector<double> dh = dh_next[l];
            if (!from_above.empty()) {
                for (std::size_t u = 0; u < H; ++u) {
                    dh[u] += from_above[u];
                }
            }
            auto back = lstm_cell_backward(cache.steps[t][l], dh, dc_next[l], lw[l],
                                           grad.subspan(w.offset_W(l), 4 * H * N),
                                           grad.subspan(w.offset_U(l), 4 * H * H), grad.subspan(w.offset_b(l), 4 * H));
            dh_next[l] = std::move(back.dh_prev);
            dc_next[l] = std::move(back.dc_prev);
            from_above = std::move(back.dx);
        }
    }
}

/// A scalar loss of the network output and its derivative.
struct OutputLoss {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t worst_index = 0;
};

/**
 * Fourth-order central-difference check of edge_rnn_backward. Checks every dense
 * weight plus `samples` other coordinates chosen by `seed` (all of them when the
 * network is smaller). Relative error uses max(|analytic|, |numeric|,
 * 1e-7 * largest analytic component) as denominator.
 */
inline GradCheckResult grad_check(const EdgeRnnWeights& w, std::span<const double> seq, const OutputLoss& loss,
                                  double eps = 1e-3, std::size_t samples = 200, std::uint64_t seed = 0)
{
    EdgeRnnCache cache;
    const double y = edge_rnn_forward(seq, w, &cache);
    std::vector<double> analytic(w.size(), 0.0);
    edge_rnn_backward(cache, loss.derivative(y), w, analytic);

    std::vector<std::size_t> coords;
    const auto dense_begin = w.offset_dense_w();
    for (std::size_t k = dense_begin; k < w.size(); ++k) {
        coords.push_back(k);
    }
    if (dense_begin <= samples) {
        for (std::size_t k = 0; k < dense_begin; ++k) {
            coords.push_back(k);
        }
    } else {
        std::vector<std::size_t> pool(dense_begin);
        std::iota(pool.begin(), pool.end(), 0);
        std::mt19937_64 rng(seed);
        for (std::size_t k = 0; k < samples; ++k) {
            auto pick = k + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(pool.size() - k));
            std::swap(pool[k], pool[pick]);
            coords.push_back(pool[k]);
        }
    }

    double scale = 0.0;
    for (double g : analytic) {
        scale = std::max(scale, std::abs(g));
    }
    GradCheckResult res;
    EdgeRnnWeights probe = w;
    auto at = [&](std::size_t k, double x) {
        probe.theta()[k] = x;
        return loss.value(edge_rnn_forward(seq, probe));
    };
    for (auto k : coords) {
        const double orig = probe.theta()[k];
        const double numeric =
            (-at(k, orig + 2 * eps) + 8 * at(k, orig + eps) - 8 * at(k, orig - eps) + at(k, orig - 2 * eps)) /
            (12.0 * eps);
        probe.theta()[k] = orig;
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-7 * scale, 1e-300});
        const double rel = std::abs(analytic[k] - numeric) / denom;
        if (rel > res.max_rel_error) {
            res.max_rel_error = rel;
            res.worst_index = k;
        }
        ++res.checked;
    }
    return res;
}

} // namespace iernn

#endif // IERNN_LSTM_HPP
