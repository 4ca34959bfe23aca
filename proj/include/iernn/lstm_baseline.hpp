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
#ifndef IERNN_LSTM_BASELINE_HPP
#define IERNN_LSTM_BASELINE_HPP

// Temporal LSTM baseline: I_t regressed on the region's own window
// I_{t-h-W+1} .. I_{t-h} through the same stacked LSTM + logistic dense head as
// the edge-RNN. Inputs are divided by the training maximum and the logistic
// output is stretched to [0, 2 * training maximum].

#include "iernn/adam.hpp"
#include "iernn/checkpoint.hpp"
#include "iernn/config.hpp"
#include "iernn/iernn_model.hpp"
#include "iernn/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iernn
{

struct LstmBaseline {
    EdgeRnnWeights rnn;
    ModelShape shape;
    double input_scale = 1.0;
    double output_scale = 1.0;

    std::size_t trainable_parameters() const
    {
        return rnn.size();
    }
};

inline LstmBaseline init_lstm(const ModelShape& shape, std::uint64_t seed)
{
    LstmBaseline m;
    m.shape = shape;
    m.rnn = EdgeRnnWeights::random(shape.arch, derive_seed(seed, 1));
    return m;
}

inline std::vector<double> lstm_window(const LstmBaseline& m, std::span<const double> series, long t)
{
    const long last = t - m.shape.horizon;
    const long first = last - static_cast<long>(m.shape.W) + 1;
    if (first < 0 || last >= static_cast<long>(series.size())) {
        throw std::out_of_range("LSTM window for day " + std::to_string(t) + " falls outside the series");
    }
    std::vector<double> x;
    x.reserve(m.shape.W);
    for (long k = first; k <= last; ++k) {
        x.push_back(series[static_cast<std::size_t>(k)] * m.input_scale);
    }
    return x;
}

/// Value-only training loss (unnormalized MSE) over targets [t_begin, t_end].
inline double lstm_loss(const LstmBaseline& m, std::span<const double> series, long t_begin, long t_end)
{
    double sum = 0.0;
    for (long t = t_begin; t <= t_end; ++t) {
        const double y = m.output_scale * edge_rnn_forward(lstm_window(m, series, t), m.rnn);
        const double r = y - series[static_cast<std::size_t>(t)];
        sum += r * r;
    }
    return sum / static_cast<double>(t_end - t_begin + 1);
}

struct LstmTrainResult {
    LstmBaseline model;
    double train_mse = 0.0;
    int epochs = 0;
};

/**
 * Adam on the network group only, same schedule and early-stop rule as the
 * I-models; the objective is normalized by the mean squared target. Returns the
 * parameters with the lowest training loss seen.
 */
inline LstmTrainResult train_lstm(LstmBaseline m, std::span<const double> series, long t_begin, long t_end,
                                  const TrainOptions& opts)
{
    if (t_begin - m.shape.horizon - static_cast<long>(m.shape.W) + 1 < 0 || t_end < t_begin ||
        t_end >= static_cast<long>(series.size())) {
        throw std::out_of_range("LSTM target range lacks history or exceeds the series");
    }
    double mx = 0.0, norm = 0.0;
    for (long t = 0; t <= t_end; ++t) {
        mx = std::max(mx, series[static_cast<std::size_t>(t)]);
    }
    for (long t = t_begin; t <= t_end; ++t) {
        norm += series[static_cast<std::size_t>(t)] * series[static_cast<std::size_t>(t)];
    }
    norm /= static_cast<double>(t_end - t_begin + 1);
    if (!(norm > 0.0)) {
        norm = 1.0;
    }
    m.input_scale = mx > 0.0 ? 1.0 / mx : 1.0;
    m.output_scale = mx > 0.0 ? 2.0 * mx : 1.0;

    std::vector<std::vector<double>> windows;
    for (long t = t_begin; t <= t_end; ++t) {
        windows.push_back(lstm_window(m, series, t));
    }
    const double inv_n = 1.0 / static_cast<double>(t_end - t_begin + 1);

    ParamGroup net("network", m.rnn.size(), opts.lr_net, opts.l2_net);
    net.adam.b2 = opts.b2_net;
    LstmTrainResult best{m, std::numeric_limits<double>::infinity(), 0};
    std::vector<double> best_history;
    EdgeRnnCache cache;
    int epoch = 0;
    for (; epoch < opts.epochs; ++epoch) {
        std::vector<double> grad(m.rnn.size(), 0.0);
        double loss = 0.0;
        for (std::size_t q = 0; q < windows.size(); ++q) {
            const double y = m.output_scale * edge_rnn_forward(windows[q], m.rnn, &cache);
            const double r = y - series[static_cast<std::size_t>(t_begin) + q];
            loss += r * r;
            edge_rnn_backward(cache, 2.0 * r * inv_n * m.output_scale / norm, m.rnn, grad);
        }
        loss *= inv_n;
        if (!std::isfinite(loss)) {
            throw TrainingDiverged("non-finite LSTM training loss at epoch " + std::to_string(epoch));
        }
        if (loss < best.train_mse) {
            best.model = m;
            best.train_mse = loss;
        }
        best_history.push_back(best.train_mse);
        if (opts.early_stop_window > 0 && epoch >= opts.early_stop_window &&
            best_history[static_cast<std::size_t>(epoch - opts.early_stop_window)] - best.train_mse <
                opts.early_stop_tol) {
            break;
        }
        net.step(m.rnn.theta(), std::move(grad));
    }
    best.epochs = std::min(epoch + 1, opts.epochs);
    return best;
}

/// Teacher-forced predictions for days [t_begin, t_end] from the observed series.
inline std::vector<double> lstm_predict(const LstmBaseline& m, std::span<const double> series, long t_begin,
                                        long t_end)
{
    std::vector<double> out;
    for (long t = t_begin; t <= t_end; ++t) {
        out.push_back(m.output_scale * edge_rnn_forward(lstm_window(m, series, t), m.rnn));
    }
    return out;
}

inline void save_lstm(const LstmBaseline& m, Checkpoint& ck)
{
    ck.set_attr("model.kind", "lstm");
    ck.set_attr("model.horizon", std::to_string(m.shape.horizon));
    ck.set_attr("model.W", std::to_string(m.shape.W));
    ck.set_scalar("lstm.input_scale", m.input_scale);
    ck.set_scalar("lstm.output_scale", m.output_scale);
    m.rnn.save(ck);
}

inline LstmBaseline load_lstm(const Checkpoint& ck)
{
    if (ck.attr("model.kind") != "lstm") {
        throw std::runtime_error("checkpoint holds a " + ck.attr("model.kind") + " model, not an LSTM");
    }
    LstmBaseline m;
    m.shape.horizon = std::stoi(ck.attr("model.horizon"));
    m.shape.W = std::stoul(ck.attr("model.W"));
    m.input_scale = ck.scalar("lstm.input_scale");
    m.output_scale = ck.scalar("lstm.output_scale");
    m.rnn = EdgeRnnWeights::load(ck);
    m.shape.arch = m.rnn.architecture();
    return m;
}

} // namespace iernn

#endif // IERNN_LSTM_BASELINE_HPP
