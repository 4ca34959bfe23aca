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
#ifndef IERNN_HARNESS_HPP
#define IERNN_HARNESS_HPP

#include "iernn/arima.hpp"
#include "iernn/config.hpp"
#include "iernn/iernn_model.hpp"
#include "iernn/ingest.hpp"
#include "iernn/lstm_baseline.hpp"
#include "iernn/region_graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

namespace iernn
{

inline double mse(std::span<const double> pred, std::span<const double> truth)
{
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("mse: length mismatch (" + std::to_string(pred.size()) + " vs " +
                                    std::to_string(truth.size()) + ")");
    }
    if (pred.empty()) {
        throw std::invalid_argument("mse: empty series");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double d = pred[k] - truth[k];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

/// Runs `n` independent tasks on up to `jobs` threads; task k writes only its own slot.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& task)
{
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (jobs == 1) {
        for (std::size_t k = 0; k < n; ++k) {
            task(k);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < n; k = next++) {
                task(k);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
}

inline unsigned default_jobs()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Case series of every graph node over the experiment window plus the graph itself.
struct Dataset {
    RegionGraph graph;
    std::vector<DailySeries> series; ///< one per graph node, all starting at the window start
    std::size_t n_train = 133;
    std::size_t n_test = 35;

    std::size_t length() const
    {
        return n_train + n_test;
    }

    const DailySeries& region(const std::string& name) const
    {
        for (const auto& s : series) {
            if (s.region == name) {
                return s;
            }
        }
        throw std::invalid_argument("unknown state '" + name + "'");
    }
};

/// Windows ingested series to [cfg.start, cfg.start + n_train + n_test) for every node of `graph`.
inline Dataset make_dataset(RegionGraph graph, const std::vector<DailySeries>& ingested, const Config& cfg)
{
    Dataset ds{std::move(graph), {}, cfg.n_train, cfg.n_test};
    for (std::size_t i = 0; i < ds.graph.size(); ++i) {
        const auto& name = ds.graph.name(i);
        auto it = std::find_if(ingested.begin(), ingested.end(), [&](const auto& s) { return s.region == name; });
        if (it == ingested.end()) {
            throw std::invalid_argument("no case data for graph node '" + name + "'");
        }
        DailySeries s = *it;
        if (s.start > cfg.start) {
            // no reports yet: zero new cases
            s.values.insert(s.values.begin(), static_cast<std::size_t>((s.start - cfg.start).count()), 0.0);
            s.start = cfg.start;
        }
        ds.series.push_back(window(s, cfg.start, ds.length()));
    }
    return ds;
}

/// Model inputs for one state. S0 is one minus the infected share up to and including day 0.
inline RegionContext make_context(const Dataset& ds, const std::string& state)
{
    if (!ds.graph.contains(state)) {
        throw std::invalid_argument("unknown state '" + state + "'");
    }
    RegionContext ctx;
    ctx.graph = &ds.graph;
    ctx.node = ds.graph.index_of(state);
    for (const auto& s : ds.series) {
        ctx.values.push_back(s.values);
    }
    const auto& own = ds.series[ctx.node];
    ctx.S0 = 1.0 - (own.cumulative_before + own.values.at(0));
    return ctx;
}

/// A trained model of any kind.
using AnyModel = std::variant<IernnModel, LstmBaseline, ArimaModel>;

inline ModelKind kind_of(const AnyModel& m)
{
    if (auto* p = std::get_if<IernnModel>(&m)) {
        return p->kind();
    }
    return std::holds_alternative<LstmBaseline>(m) ? ModelKind::lstm : ModelKind::arima;
}

inline std::size_t trainable_parameters(const AnyModel& m)
{
    if (auto* p = std::get_if<IernnModel>(&m)) {
        return p->trainable_parameters();
    }
    if (auto* p = std::get_if<LstmBaseline>(&m)) {
        return p->trainable_parameters();
    }
    return std::get<ArimaModel>(m).parameter_count();
}

inline void save_model(const AnyModel& m, Checkpoint& ck)
{
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, IernnModel>) {
                save_iernn(v, ck);
            } else if constexpr (std::is_same_v<T, LstmBaseline>) {
                save_lstm(v, ck);
            } else {
                save_arima(v, ck);
            }
        },
        m);
}

inline AnyModel load_model(const Checkpoint& ck)
{
    switch (parse_model_kind(ck.attr("model.kind"))) {
    case ModelKind::lstm:
        return load_lstm(ck);
    case ModelKind::arima:
        return load_arima(ck);
    default:
        return load_iernn(ck);
    }
}

/**
 * Teacher-forced h-step predictions for days [t_begin, t_end]. ARIMA forecasts
 * day t from the observed series up to t - h.
 */
inline std::vector<double> predict(const AnyModel& m, const RegionContext& ctx, int horizon, long t_begin, long t_end)
{
    if (auto* p = std::get_if<IernnModel>(&m)) {
        return iernn_predict(*p, ctx, t_begin, t_end);
    }
    if (auto* p = std::get_if<LstmBaseline>(&m)) {
        return lstm_predict(*p, ctx.own(), t_begin, t_end);
    }
    const auto& a = std::get<ArimaModel>(m);
    std::vector<double> out;
    for (long t = t_begin; t <= t_end; ++t) {
        out.push_back(arima_forecast(a, std::span<const double>(ctx.own()).first(static_cast<std::size_t>(t - horizon + 1)),
                                     horizon));
    }
    return out;
}

struct FitOutcome {
    AnyModel model;
    FitReport report;
};

/**
 * Trains one model on the first n_train days of `state` and scores it on the
 * next n_test. Every model is supervised from the same first target day.
 */
inline FitOutcome fit_and_score(const Dataset& ds, const std::string& state, ModelKind kind, int horizon,
                                std::uint64_t seed, const Config& cfg)
{
    auto ctx = make_context(ds, state);
    ModelShape shape = cfg.model;
    shape.horizon = horizon;
    const long t_begin = first_target(shape);
    const long t_train_end = static_cast<long>(ds.n_train) - 1;
    const long t_test_begin = static_cast<long>(ds.n_train);
    const long t_test_end = static_cast<long>(ds.length()) - 1;
    if (t_begin > t_train_end) {
        throw std::invalid_argument("training window too short for the configured P, p, W and horizon");
    }

    FitOutcome out{IernnModel{}, {}};
    out.report.region = state;
    out.report.model = to_string(kind);
    out.report.horizon = horizon;
    out.report.seed = seed;
    switch (kind) {
    case ModelKind::iernn:
    case ModelKind::iernn_policy:
    case ModelKind::iequation: {
        auto r = train_iernn(init_iernn(kind, shape, seed, ds.n_train), ctx, t_begin, t_train_end, cfg.train);
        out.report.train_mse = r.train_mse;
        out.report.epochs = r.epochs;
        out.model = std::move(r.model);
        break;
    }
    case ModelKind::lstm: {
        auto r = train_lstm(init_lstm(shape, seed), ctx.own(), t_begin, t_train_end, cfg.train);
        out.report.train_mse = r.train_mse;
        out.report.epochs = r.epochs;
        out.model = std::move(r.model);
        break;
    }
    case ModelKind::arima: {
        auto m = arima_select(std::span<const double>(ctx.own()).first(ds.n_train), cfg.arima);
        out.model = m;
        auto fit = predict(out.model, ctx, horizon, t_begin, t_train_end);
        out.report.train_mse = mse(fit, std::span<const double>(ctx.own()).subspan(static_cast<std::size_t>(t_begin),
                                                                                    fit.size()));
        out.report.epochs = 0;
        break;
    }
    }
    auto pred = predict(out.model, ctx, horizon, t_test_begin, t_test_end);
    out.report.test_mse = mse(pred, std::span<const double>(ctx.own()).subspan(ds.n_train, ds.n_test));
    if (!std::isfinite(out.report.test_mse)) {
        throw TrainingDiverged("non-finite test MSE for " + state + " " + to_string(kind));
    }
    return out;
}

/// One (state, model, horizon, trial) outcome; failed trials carry the error text.
struct TrialRecord {
    std::string state;
    std::string model;
    int horizon = 1;
    int trial = 0;
    std::uint64_t seed = 0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    int epochs = 0;
    bool failed = false;
    std::string error;
};

struct CellSummary {
    std::string state;
    std::string model;
    int horizon = 1;
    std::size_t trials = 0; ///< successful trials
    std::size_t failures = 0;
    double mean_train = 0.0;
    double mean_test = 0.0;
    double var_test = 0.0; ///< population variance of the test MSEs
};

/// Per-trial results; summaries are recomputed from the stored rows on demand.
class ResultsTable
{
public:
    void add(TrialRecord r)
    {
        m_rows.push_back(std::move(r));
    }

    /// Rows sorted by (state, model, horizon, trial).
    std::vector<TrialRecord> rows() const
    {
        auto out = m_rows;
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            return std::tie(a.state, a.model, a.horizon, a.trial) < std::tie(b.state, b.model, b.horizon, b.trial);
        });
        return out;
    }

    std::vector<CellSummary> summary() const
    {
        std::map<std::tuple<std::string, std::string, int>, CellSummary> cells;
        for (const auto& r : m_rows) {
            auto& c = cells[{r.state, r.model, r.horizon}];
            c.state = r.state;
            c.model = r.model;
            c.horizon = r.horizon;
            if (r.failed) {
                ++c.failures;
                continue;
            }
            ++c.trials;
            c.mean_train += r.train_mse;
            c.mean_test += r.test_mse;
        }
        for (auto& [key, c] : cells) {
            if (c.trials > 0) {
                c.mean_train /= static_cast<double>(c.trials);
                c.mean_test /= static_cast<double>(c.trials);
            }
        }
        for (const auto& r : m_rows) {
            if (!r.failed) {
                auto& c = cells[{r.state, r.model, r.horizon}];
                c.var_test += (r.test_mse - c.mean_test) * (r.test_mse - c.mean_test) / static_cast<double>(c.trials);
            }
        }
        std::vector<CellSummary> out;
        for (auto& [key, c] : cells) {
            out.push_back(c);
        }
        return out;
    }

    std::optional<CellSummary> cell(const std::string& state, const std::string& model, int horizon) const
    {
        for (auto& c : summary()) {
            if (c.state == state && c.model == model && c.horizon == horizon) {
                return c;
            }
        }
        return std::nullopt;
    }

    std::size_t failures() const
    {
        return static_cast<std::size_t>(std::count_if(m_rows.begin(), m_rows.end(), [](const auto& r) { return r.failed; }));
    }

private:
    std::vector<TrialRecord> m_rows;
};

struct ExperimentSpec {
    std::vector<std::string> states{"California", "Florida", "Virginia"};
    std::vector<int> horizons{1, 7};
    std::vector<ModelKind> models;
    int trials = 20;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
};

namespace detail
{

inline TrialRecord run_trial(const Dataset& ds, const Config& cfg, const std::string& state, ModelKind kind,
                             int horizon, int trial, std::uint64_t seed)
{
    TrialRecord r;
    r.state = state;
    r.model = to_string(kind);
    r.horizon = horizon;
    r.trial = trial;
    r.seed = seed;
    try {
        auto fit = fit_and_score(ds, state, kind, horizon, seed, cfg);
        r.train_mse = fit.report.train_mse;
        r.test_mse = fit.report.test_mse;
        r.epochs = fit.report.epochs;
    } catch (const TrainingDiverged& e) {
        r.failed = true;
        r.error = e.what();
    } catch (const std::runtime_error& e) {
        r.failed = true;
        r.error = e.what();
    }
    return r;
}

struct Job {
    std::string state;
    ModelKind kind;
    int horizon;
    int trial;
};

inline ResultsTable run_jobs(const Dataset& ds, const Config& cfg, const std::vector<Job>& jobs, std::uint64_t base,
                             unsigned threads)
{
    std::vector<TrialRecord> out(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t k) {
        const auto& j = jobs[k];
        out[k] = run_trial(ds, cfg, j.state, j.kind, j.horizon, j.trial, base + static_cast<std::uint64_t>(j.trial));
    });
    ResultsTable table;
    for (auto& r : out) {
        table.add(std::move(r));
    }
    return table;
}

} // namespace detail

/// Random-initialization study: every (state, model, horizon) trained `trials` times with seeds seed, seed+1, ...
inline ResultsTable run_robustness(const Dataset& ds, const Config& cfg, ExperimentSpec spec)
{
    if (spec.models.empty()) {
        spec.models = {ModelKind::iernn, ModelKind::iequation};
    }
    if (spec.trials < 1) {
        throw std::invalid_argument("need at least one trial");
    }
    std::vector<detail::Job> jobs;
    for (const auto& s : spec.states) {
        make_context(ds, s); // validates the name before any work starts
        for (auto m : spec.models) {
            for (int h : spec.horizons) {
                for (int t = 0; t < spec.trials; ++t) {
                    jobs.push_back({s, m, h, t});
                }
            }
        }
    }
    return detail::run_jobs(ds, cfg, jobs, spec.seed, spec.jobs);
}

struct ComparisonCell {
    std::string state;
    std::string model;
    int horizon = 1;
    bool available = false; ///< false when every seed failed
    int trial = 0;          ///< trial whose test MSE is reported
    double train_mse = 0.0;
    double test_mse = 0.0;
    std::size_t failures = 0;
};

/// Models of the comparison tables; ARIMA only forecasts one day ahead there.
inline std::vector<ModelKind> comparison_models(int horizon)
{
    if (horizon == 1) {
        return {ModelKind::iernn_policy, ModelKind::iernn, ModelKind::lstm, ModelKind::arima};
    }
    return {ModelKind::iernn_policy, ModelKind::iernn, ModelKind::lstm};
}

/**
 * Cross-model comparison: each stochastic model is trained with
 * `cfg.comparison_seeds` seeds and the median-test-MSE trial (lower median
 * for even counts) is reported. ARIMA is deterministic and fitted once.
 * Also returns every per-trial row.
 */
inline std::vector<ComparisonCell> run_comparison(const Dataset& ds, const Config& cfg, const ExperimentSpec& spec,
                                                  ResultsTable* trials = nullptr)
{
    std::vector<detail::Job> jobs;
    for (const auto& s : spec.states) {
        make_context(ds, s);
        for (int h : spec.horizons) {
            for (auto m : comparison_models(h)) {
                const int n = m == ModelKind::arima ? 1 : cfg.comparison_seeds;
                for (int t = 0; t < n; ++t) {
                    jobs.push_back({s, m, h, t});
                }
            }
        }
    }
    auto table = detail::run_jobs(ds, cfg, jobs, spec.seed, spec.jobs);
    std::map<std::tuple<std::string, std::string, int>, std::vector<TrialRecord>> groups;
    for (const auto& r : table.rows()) {
        groups[{r.state, r.model, r.horizon}].push_back(r);
    }
    std::vector<ComparisonCell> out;
    for (const auto& s : spec.states) {
        for (int h : spec.horizons) {
            for (auto m : comparison_models(h)) {
                ComparisonCell c;
                c.state = s;
                c.model = to_string(m);
                c.horizon = h;
                std::vector<TrialRecord> ok;
                for (const auto& r : groups[{s, c.model, h}]) {
                    if (r.failed) {
                        ++c.failures;
                    } else {
                        ok.push_back(r);
                    }
                }
                if (!ok.empty()) {
                    std::stable_sort(ok.begin(), ok.end(),
                                     [](const auto& a, const auto& b) { return a.test_mse < b.test_mse; });
                    const auto& med = ok[(ok.size() - 1) / 2];
                    c.available = true;
                    c.trial = med.trial;
                    c.train_mse = med.train_mse;
                    c.test_mse = med.test_mse;
                }
                out.push_back(c);
            }
        }
    }
    if (trials) {
        *trials = std::move(table);
    }
    return out;
}

struct SweepPoint {
    double decay = 1.0;
    std::size_t day_index = 0; ///< offset from the window start
    Date date{};
    double predicted = 0.0;
};

/**
 * Free-running trajectories over days [t_begin, t_end], one per decay factor,
 * sorted by (decay, day_index).
 */
inline std::vector<SweepPoint> run_decay_sweep(const IernnModel& m, const RegionContext& ctx, std::vector<double> decays,
                                               long t_begin, long t_end, Date start)
{
    std::sort(decays.begin(), decays.end());
    decays.erase(std::unique(decays.begin(), decays.end()), decays.end());
    std::vector<SweepPoint> out;
    for (double d : decays) {
        auto traj = iernn_predict(m, ctx, t_begin, t_end, d, Rollout::free_running);
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const auto day = static_cast<std::size_t>(t_begin) + k;
            out.push_back({d, day, start + std::chrono::days{static_cast<long>(day)}, traj[k]});
        }
    }
    return out;
}

inline std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6e", v);
    return buf;
}

inline std::string format_decay(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline void write_results_csv(std::ostream& out, const ResultsTable& table)
{
    out << "state,model,horizon,trial,train_mse,test_mse\n";
    for (const auto& r : table.rows()) {
        if (r.failed) {
            continue;
        }
        out << r.state << ',' << r.model << ',' << r.horizon << ',' << r.trial << ',' << format_number(r.train_mse)
            << ',' << format_number(r.test_mse) << '\n';
    }
}

inline void write_comparison_csv(std::ostream& out, const std::vector<ComparisonCell>& cells)
{
    out << "state,model,horizon,trial,train_mse,test_mse\n";
    for (const auto& c : cells) {
        if (!c.available) {
            continue;
        }
        out << c.state << ',' << c.model << ',' << c.horizon << ',' << c.trial << ',' << format_number(c.train_mse)
            << ',' << format_number(c.test_mse) << '\n';
    }
}

inline void write_sweep_csv(std::ostream& out, const std::string& state, const std::vector<SweepPoint>& points)
{
    out << "state,decay,day_index,date,predicted_fraction\n";
    char buf[32];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.10g", p.predicted);
        out << state << ',' << format_decay(p.decay) << ',' << p.day_index << ',' << format_date(p.date) << ',' << buf
            << '\n';
    }
}

namespace detail
{

inline std::string render_grid(const std::vector<std::vector<std::string>>& grid)
{
    std::vector<std::size_t> width;
    for (const auto& row : grid) {
        width.resize(std::max(width.size(), row.size()), 0);
        for (std::size_t c = 0; c < row.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    std::string out;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        std::string line;
        for (std::size_t c = 0; c < grid[r].size(); ++c) {
            const auto& cell = grid[r][c];
            if (c == 0) {
                line += cell + std::string(width[c] - cell.size(), ' ');
            } else {
                line += "  " + std::string(width[c] - cell.size(), ' ') + cell;
            }
        }
        while (!line.empty() && line.back() == ' ') {
            line.pop_back();
        }
        out += line + '\n';
        if (r == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < width.size(); ++c) {
                total += width[c] + (c ? 2 : 0);
            }
            out += std::string(total, '-') + '\n';
        }
    }
    return out;
}

} // namespace detail

/// Mean train/test MSE per state and model for one horizon, laid out like the robustness tables.
inline std::string format_robustness_table(const ResultsTable& table, int horizon)
{
    std::vector<std::string> states, models;
    for (const auto& c : table.summary()) {
        if (c.horizon != horizon) {
            continue;
        }
        if (std::find(states.begin(), states.end(), c.state) == states.end()) {
            states.push_back(c.state);
        }
        if (std::find(models.begin(), models.end(), c.model) == models.end()) {
            models.push_back(c.model);
        }
    }
    std::vector<std::vector<std::string>> grid{{"state"}};
    for (const auto& m : models) {
        grid[0].push_back(m + " train");
        grid[0].push_back(m + " test");
        grid[0].push_back(m + " failed");
    }
    for (const auto& s : states) {
        std::vector<std::string> row{s};
        for (const auto& m : models) {
            const auto c = table.cell(s, m, horizon);
            const bool ok = c && c->trials > 0;
            row.push_back(ok ? format_number(c->mean_train) : "-");
            row.push_back(ok ? format_number(c->mean_test) : "-");
            row.push_back(std::to_string(c ? c->failures : 0));
        }
        grid.push_back(std::move(row));
    }
    return "horizon " + std::to_string(horizon) + ", mean MSE over trials\n" + detail::render_grid(grid);
}

/// Test MSE per state (rows) and model (columns) for one horizon.
inline std::string format_comparison_table(const std::vector<ComparisonCell>& cells, int horizon)
{
    std::vector<std::string> states;
    std::vector<std::vector<std::string>> grid{{"state"}};
    for (auto m : comparison_models(horizon)) {
        grid[0].push_back(to_string(m));
    }
    for (const auto& c : cells) {
        if (c.horizon == horizon && std::find(states.begin(), states.end(), c.state) == states.end()) {
            states.push_back(c.state);
        }
    }
    for (const auto& s : states) {
        std::vector<std::string> row{s};
        for (auto m : comparison_models(horizon)) {
            std::string v = "-";
            for (const auto& c : cells) {
                if (c.state == s && c.horizon == horizon && c.model == to_string(m) && c.available) {
                    v = format_number(c.test_mse);
                }
            }
            row.push_back(v);
        }
        grid.push_back(std::move(row));
    }
    return "horizon " + std::to_string(horizon) + ", test MSE\n" + detail::render_grid(grid);
}

} // namespace iernn

#endif // IERNN_HARNESS_HPP
