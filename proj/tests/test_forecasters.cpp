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
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace iernn;
using iernn::testing::toy_problem;

namespace
{

TrainOptions quick(int epochs = 60)
{
    TrainOptions o;
    o.epochs = epochs;
    return o;
}

Checkpoint round_trip(const Checkpoint& ck)
{
    std::stringstream buf;
    ck.save(buf);
    return Checkpoint::load(buf);
}

std::vector<double> ar1(double phi, double mu, std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<double> x{mu};
    for (std::size_t k = 0; k < 200 + n; ++k) {
        x.push_back(mu + phi * (x.back() - mu) + e(rng));
    }
    return {x.end() - static_cast<long>(n), x.end()};
}

} // namespace

TEST(IernnModel, ParameterCounts)
{
    ModelShape shape;
    EXPECT_EQ(init_iernn(ModelKind::iernn, shape, 0, 133).trainable_parameters(), 3281u + 6u);
    EXPECT_EQ(init_iernn(ModelKind::iernn_policy, shape, 0, 133).trainable_parameters(), 3281u + 10u);
    EXPECT_EQ(init_iernn(ModelKind::iequation, shape, 0, 133).trainable_parameters(), 5u);
    shape.arch = RnnArchitecture::single_wide();
    EXPECT_EQ(init_iernn(ModelKind::iernn, shape, 0, 133).rnn.size(), 3871u);
}

TEST(IernnModel, InitIsSeededAndInUnitInterval)
{
    ModelShape shape;
    auto a = init_iernn(ModelKind::iernn, shape, 17, 133);
    auto b = init_iernn(ModelKind::iernn, shape, 17, 133);
    auto c = init_iernn(ModelKind::iernn, shape, 18, 133);
    EXPECT_EQ(a.epi.alpha, b.epi.alpha);
    EXPECT_NE(a.epi.alpha, c.epi.alpha);
    for (double* v : epi_fields(a.epi)) {
        EXPECT_GE(*v, 0.0);
        EXPECT_LE(*v, 1.0);
    }
    EXPECT_THROW(init_iernn(ModelKind::lstm, shape, 0, 133), std::invalid_argument);
}

TEST(IernnModel, FullLossGradientMatchesDifferences)
{
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        auto r = iernn::testing::full_loss_grad_check(seed, seed % 3 == 0);
        EXPECT_LE(r.max_rel_error, 1e-5) << "seed " << seed << " worst " << r.worst;
        EXPECT_GT(r.checked, 70u);
    }
}

TEST(IernnModel, NoInflowCouplingMeansNoRnnGradient)
{
    auto tp = toy_problem(3);
    auto m = init_iernn(ModelKind::iernn, tp.shape, 3, 40);
    m.epi.sigma2 = 0.0;
    m.epi.beta2 = 0.0;
    const long tb = first_target(tp.shape), te = static_cast<long>(tp.ctx.length()) - 1;
    const auto inputs = make_inflow_inputs(m, tp.ctx, tb - 1 - tp.shape.P, te - 1);
    auto g = iernn_loss_grad(m, tp.ctx, inputs, tb, te);
    for (double v : g.rnn) {
        EXPECT_EQ(v, 0.0);
    }

    // and predictions match the I-equation with the same scalars
    auto ieq = m;
    ieq.uses_inflow = false;
    auto other = m;
    other.rnn = EdgeRnnWeights::random(m.shape.arch, 99);
    auto p1 = iernn_predict(m, tp.ctx, tb, te);
    auto p2 = iernn_predict(ieq, tp.ctx, tb, te);
    auto p3 = iernn_predict(other, tp.ctx, tb, te);
    EXPECT_EQ(p1, p2);
    EXPECT_EQ(p1, p3);
}

TEST(IernnModel, TeacherForcingReadsOnlyThePast)
{
    auto tp = toy_problem(4);
    for (int h : {1, 7}) {
        tp.shape.horizon = h;
        auto m = init_iernn(ModelKind::iernn, tp.shape, 4, 40);
        const long t = 40;
        const double base = iernn_predict(m, tp.ctx, t, t)[0];
        auto ctx = tp.ctx;
        for (auto& series : ctx.values) {
            for (std::size_t k = static_cast<std::size_t>(t - h + 1); k < series.size(); ++k) {
                series[k] = 0.5;
            }
        }
        EXPECT_EQ(iernn_predict(m, ctx, t, t)[0], base) << "h=" << h;
    }
}

TEST(IernnModel, DecayOrdersOneStepPredictions)
{
    auto tp = toy_problem(5);
    for (auto kind : {ModelKind::iernn, ModelKind::iernn_policy, ModelKind::iequation}) {
        auto m = init_iernn(kind, tp.shape, 5, 40);
        const long tb = first_target(tp.shape), te = static_cast<long>(tp.ctx.length()) - 1;
        EXPECT_EQ(iernn_predict(m, tp.ctx, tb, te, 1.0), iernn_predict(m, tp.ctx, tb, te));
        std::vector<double> prev = iernn_predict(m, tp.ctx, tb, te, 0.0);
        for (double d : {0.25, 0.5, 1.0, 1.5, 2.0}) {
            auto cur = iernn_predict(m, tp.ctx, tb, te, d);
            for (std::size_t k = 0; k < cur.size(); ++k) {
                EXPECT_GE(cur[k], prev[k]);
            }
            prev = cur;
        }
        EXPECT_THROW(iernn_predict(m, tp.ctx, tb, te, -0.5), std::invalid_argument);
    }
}

TEST(IernnModel, FreeRunningFeedsPredictionsBack)
{
    auto tp = toy_problem(6);
    auto m = init_iernn(ModelKind::iernn, tp.shape, 6, 40);
    const long tb = 45, te = 59;
    auto tf = iernn_predict(m, tp.ctx, tb, te);
    auto fr = iernn_predict(m, tp.ctx, tb, te, 1.0, Rollout::free_running);
    EXPECT_EQ(tf[0], fr[0]);
    EXPECT_NE(tf.back(), fr.back());
}

TEST(IernnModel, TrainingImprovesLossKeepsBoundsAndIsDeterministic)
{
    auto tp = toy_problem(7, 80, 0.001);
    for (auto kind : {ModelKind::iernn, ModelKind::iernn_policy, ModelKind::iequation}) {
        auto m = init_iernn(kind, tp.shape, 7, 60);
        const long tb = first_target(tp.shape), te = 59;
        auto r1 = train_iernn(m, tp.ctx, tb, te, quick());
        auto r2 = train_iernn(m, tp.ctx, tb, te, quick());
        EXPECT_LT(r1.train_mse, iernn_loss(m, tp.ctx, tb, te));
        EXPECT_EQ(r1.train_mse, r2.train_mse);
        EXPECT_NEAR(iernn_loss(r1.model, tp.ctx, tb, te), r1.train_mse, 1e-12 * r1.train_mse);
        EXPECT_EQ(r1.model.epi.S0, tp.ctx.S0);
        for (double* v : epi_fields(r1.model.epi)) {
            EXPECT_GE(*v, 0.0);
            EXPECT_LE(*v, 1.0);
        }
    }
}

TEST(IernnModel, ZeroTargetReachesNumericalFloor)
{
    auto tp = toy_problem(8, 60, 0.0);
    tp.ctx.S0 = 0.0;
    auto m = init_iernn(ModelKind::iequation, tp.shape, 8, 40);
    m.epi.alpha = 0.0;
    const long tb = first_target(tp.shape), te = 59;
    auto r = train_iernn(m, tp.ctx, tb, te, quick(500));
    EXPECT_LE(r.train_mse, 1e-12);
}

TEST(IernnModel, CheckpointRoundTripIsExact)
{
    auto tp = toy_problem(9);
    for (auto kind : {ModelKind::iernn, ModelKind::iernn_policy, ModelKind::iequation}) {
        auto m = train_iernn(init_iernn(kind, tp.shape, 9, 40), tp.ctx, first_target(tp.shape), 59, quick(5)).model;
        Checkpoint ck;
        save_iernn(m, ck);
        auto back = load_iernn(round_trip(ck));
        EXPECT_EQ(back.kind(), kind);
        EXPECT_EQ(iernn_predict(back, tp.ctx, 30, 59), iernn_predict(m, tp.ctx, 30, 59));
    }
}

TEST(IernnModel, RejectsTargetsWithoutHistory)
{
    auto tp = toy_problem(10);
    auto m = init_iernn(ModelKind::iernn, tp.shape, 10, 40);
    EXPECT_THROW(iernn_predict(m, tp.ctx, first_target(tp.shape) - 1, 40), std::out_of_range);
    EXPECT_THROW(iernn_predict(m, tp.ctx, 40, 60), std::out_of_range);
}

TEST(LstmBaseline, LearnsConstantSeries)
{
    std::vector<double> series(80, 0.004);
    ModelShape shape;
    auto m = init_lstm(shape, 1);
    auto r = train_lstm(m, series, first_target(shape), 79, quick(1500));
    for (double y : lstm_predict(r.model, series, 70, 79)) {
        EXPECT_NEAR(y, 0.004, 1e-3 * 0.004 + 1e-6);
    }
}

TEST(LstmBaseline, WindowUsesOnlyThePast)
{
    std::vector<double> series(40);
    for (std::size_t k = 0; k < 40; ++k) {
        series[k] = 0.001 * static_cast<double>(k + 1);
    }
    ModelShape shape;
    shape.horizon = 7;
    auto m = init_lstm(shape, 2);
    m.input_scale = 10.0;
    auto w = lstm_window(m, series, 30);
    ASSERT_EQ(w.size(), shape.W);
    EXPECT_DOUBLE_EQ(w.back(), 10.0 * series[23]);
    EXPECT_DOUBLE_EQ(w.front(), 10.0 * series[17]);
}

TEST(LstmBaseline, CheckpointRoundTripAndDeterminism)
{
    std::vector<double> series(70);
    for (std::size_t k = 0; k < 70; ++k) {
        series[k] = 1e-4 * (1.0 + std::sin(0.2 * static_cast<double>(k)));
    }
    ModelShape shape;
    auto r1 = train_lstm(init_lstm(shape, 3), series, first_target(shape), 59, quick(20));
    auto r2 = train_lstm(init_lstm(shape, 3), series, first_target(shape), 59, quick(20));
    EXPECT_EQ(r1.train_mse, r2.train_mse);
    Checkpoint ck;
    save_lstm(r1.model, ck);
    auto back = load_lstm(round_trip(ck));
    EXPECT_EQ(lstm_predict(back, series, 60, 69), lstm_predict(r1.model, series, 60, 69));
    EXPECT_EQ(back.trainable_parameters(), 3281u);
}

TEST(NelderMead, MinimizesRosenbrock)
{
    auto f = [](const std::vector<double>& x) {
        return 100.0 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1.0 - x[0]) * (1.0 - x[0]);
    };
    auto r = nelder_mead(f, {-1.2, 1.0});
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], 1.0, 1e-5);
    EXPECT_LT(r.value, 1e-10);
}

TEST(NelderMead, RespectsInfeasibleRegion)
{
    auto f = [](const std::vector<double>& x) {
        if (x[0] < 0.5) {
            return std::numeric_limits<double>::infinity();
        }
        return x[0] * x[0];
    };
    auto r = nelder_mead(f, {2.0});
    EXPECT_NEAR(r.x[0], 0.5, 1e-6);
    EXPECT_THROW(nelder_mead(f, {0.0}), std::invalid_argument);
}

TEST(Arima, Differencing)
{
    const std::vector<double> x{1, 4, 9, 16};
    EXPECT_EQ(difference(x, 0), x);
    EXPECT_EQ(difference(x, 1), (std::vector<double>{3, 5, 7}));
}

TEST(Arima, StationarityAndInvertibility)
{
    const std::vector<double> ok{0.5, 0.3}, unit{1.0}, explosive{1.2}, edge{0.0, 1.0};
    EXPECT_TRUE(roots_outside_unit_circle(ok));
    EXPECT_FALSE(roots_outside_unit_circle(unit));
    EXPECT_FALSE(roots_outside_unit_circle(explosive));
    EXPECT_FALSE(roots_outside_unit_circle(edge));
    EXPECT_TRUE(roots_outside_unit_circle(std::vector<double>{}));
}

TEST(Arima, RecoversAr1Coefficient)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto x = ar1(0.7, 0.0, 500, seed);
        auto m = arima_fit(x, {1, 0, 0});
        ASSERT_EQ(m.phi.size(), 1u);
        EXPECT_GE(m.phi[0], 0.6);
        EXPECT_LE(m.phi[0], 0.8);
        EXPECT_NEAR(m.sigma2, 1.0, 0.2);
    }
}

TEST(Arima, OneStepAr1ForecastIsExact)
{
    auto x = ar1(0.6, 3.0, 300, 11);
    auto m = arima_fit(x, {1, 0, 0});
    for (double last : {0.0, 2.5, 7.0}) {
        std::vector<double> ctx(x.begin(), x.end());
        ctx.push_back(last);
        EXPECT_EQ(arima_forecast(m, ctx, 1), m.mu + m.phi[0] * (last - m.mu));
    }
}

TEST(Arima, ForecastOfWhiteNoiseIsNearMean)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> e(5.0, 1.0);
    std::vector<double> x(200);
    for (auto& v : x) {
        v = e(rng);
    }
    auto m = arima_fit(x, {0, 0, 0});
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 200.0;
    EXPECT_NEAR(m.mu, mean, 1e-6);
    EXPECT_NEAR(arima_forecast(m, x, 1), mean, 1e-6);
    EXPECT_NEAR(arima_forecast(m, x, 7), mean, 1e-6);
}

TEST(Arima, SelectionPrefersSimplerOrderOnAr1)
{
    auto x = ar1(0.7, 0.0, 400, 5);
    auto m = arima_select(x);
    EXPECT_GE(m.order.p + m.order.q, 1);
    EXPECT_LE(m.order.p + m.order.q, 3);
}

TEST(Arima, FitRejectsShortSeries)
{
    const std::vector<double> x(10, 1.0);
    EXPECT_THROW(arima_fit(x, {1, 0, 0}), std::invalid_argument);
}

TEST(Arima, CheckpointRoundTripIsExact)
{
    auto x = ar1(0.5, 1.0, 200, 8);
    auto m = arima_fit(x, {1, 1, 1});
    Checkpoint ck;
    save_arima(m, ck);
    auto back = load_arima(round_trip(ck));
    EXPECT_EQ(back.order, m.order);
    EXPECT_EQ(back.phi, m.phi);
    EXPECT_EQ(back.theta, m.theta);
    EXPECT_EQ(arima_forecast(back, x, 3), arima_forecast(m, x, 3));
}
