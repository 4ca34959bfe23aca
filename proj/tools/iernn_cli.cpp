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

// iernn: ingest case data, train models, and run the evaluation studies.

#include "iernn/iernn.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace iernn;

namespace
{

/// Usage mistakes detected after CLI11 parsing; exit code 2 like CLI11's own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string series_path;
    std::string edges_path;
    std::string out_dir = ".";
    unsigned jobs = default_jobs();
};

void add_common(CLI::App* app, Common& c, bool needs_data)
{
    app->add_option("--config", c.config_path, "key=value configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", c.overrides, "override one configuration key, e.g. --set train.epochs=500");
    if (needs_data) {
        app->add_option("--series", c.series_path, "normalized series CSV written by 'iernn ingest'")
            ->required()
            ->check(CLI::ExistingFile);
        app->add_option("--edges", c.edges_path, "border edge list (state_a,state_b)")
            ->required()
            ->check(CLI::ExistingFile);
    }
    app->add_option("--out", c.out_dir, "output directory (created if missing)");
    app->add_option("--jobs", c.jobs, "parallel jobs (default: logical cores)")->check(CLI::PositiveNumber);
}

Config load_config(const Common& c)
{
    Config cfg;
    if (!c.config_path.empty()) {
        read_config_file(c.config_path, cfg);
    }
    for (const auto& kv : c.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--set expects key=value, got '" + kv + "'");
        }
        apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    validate(cfg);
    return cfg;
}

Dataset load_dataset(const Common& c, const Config& cfg)
{
    std::ifstream edges_in(c.edges_path);
    RegionGraph graph = [&] {
        try {
            return graph_from_edges(parse_edge_list(edges_in));
        } catch (const ParseError& e) {
            throw ParseError(c.edges_path + ": " + e.what(), e.line());
        }
    }();
    std::ifstream series_in(c.series_path);
    std::vector<DailySeries> series;
    try {
        series = parse_series_csv(series_in);
    } catch (const ParseError& e) {
        throw ParseError(c.series_path + ": " + e.what(), e.line());
    }
    return make_dataset(std::move(graph), series, cfg);
}

fs::path prepare_out(const Common& c)
{
    fs::path dir(c.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << text;
}

std::string file_stem(const std::string& state, ModelKind kind, int horizon, std::uint64_t seed)
{
    std::string s = state;
    std::replace(s.begin(), s.end(), ' ', '_');
    return s + "_" + to_string(kind) + "_h" + std::to_string(horizon) + "_s" + std::to_string(seed);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) {
            out.push_back(tok);
        }
    }
    return out;
}

void check_horizons(const std::vector<int>& hs)
{
    for (int h : hs) {
        if (h != 1 && h != 7) {
            throw UsageError("horizon must be 1 or 7, got " + std::to_string(h));
        }
    }
}

void check_states(const Dataset& ds, const std::vector<std::string>& states)
{
    for (const auto& s : states) {
        if (!ds.graph.contains(s)) {
            throw UsageError("unknown state '" + s + "'");
        }
    }
}

/// Prints the failed cells; returns the process exit code.
int report_failures(const std::vector<TrialRecord>& rows)
{
    int failed = 0;
    for (const auto& r : rows) {
        if (r.failed) {
            std::cerr << "failed: " << r.state << ' ' << r.model << " h=" << r.horizon << " trial " << r.trial << ": "
                      << r.error << '\n';
            ++failed;
        }
    }
    return failed ? 1 : 0;
}

int cmd_ingest(const std::string& cases, const std::string& population, bool smooth, const Common& c)
{
    std::ifstream cases_in(cases);
    std::ifstream pop_in(population);
    std::vector<CumulativeRecord> records;
    PopulationTable pop;
    try {
        records = parse_cases_csv(cases_in);
    } catch (const ParseError& e) {
        throw ParseError(cases + ": " + e.what(), e.line());
    }
    try {
        pop = parse_population_csv(pop_in);
    } catch (const ParseError& e) {
        throw ParseError(population + ": " + e.what(), e.line());
    }
    IngestOptions opts;
    opts.smooth = smooth;
    IngestSummary sum;
    auto series = ingest(records, pop, opts, &sum);
    auto dir = prepare_out(c);

    std::ostringstream csv;
    write_series_csv(csv, series);
    write_text(dir / "series.csv", csv.str());

    std::ostringstream text;
    text << "rows " << sum.rows << "\nclamped_negative " << sum.clamped << "\nfilled_days " << sum.filled
         << "\nstates " << series.size() << '\n';
    for (const auto& s : series) {
        text << s.region << ' ' << format_date(s.start) << ' ' << format_date(s.date_at(s.size() - 1)) << ' '
             << s.size() << '\n';
    }
    write_text(dir / "ingest_summary.txt", text.str());
    std::cout << text.str();
    return 0;
}

int cmd_train(const std::string& state, const std::string& model, int horizon, std::uint64_t seed, const Common& c)
{
    check_horizons({horizon});
    const auto kind = parse_model_kind(model);
    auto cfg = load_config(c);
    auto ds = load_dataset(c, cfg);
    check_states(ds, {state});
    auto fit = fit_and_score(ds, state, kind, horizon, seed, cfg);

    auto dir = prepare_out(c);
    const auto stem = file_stem(state, kind, horizon, seed);
    Checkpoint ck;
    save_model(fit.model, ck);
    ck.set_attr("train.state", state);
    ck.set_attr("train.seed", std::to_string(seed));
    ck.save_file((dir / (stem + ".ckpt")).string());
    write_text(dir / (stem + "_report.csv"), fit_report_header() + "\n" + fit_report_row(fit.report) + "\n");
    std::cout << "parameters " << trainable_parameters(fit.model) << "\ntrain_mse " << format_number(fit.report.train_mse)
              << "\ntest_mse " << format_number(fit.report.test_mse) << "\nepochs " << fit.report.epochs << '\n';
    return 0;
}

int cmd_evaluate(std::vector<std::string> states, std::vector<int> horizons, bool train, const std::string& ckpt_dir,
                 std::uint64_t seed, const Common& c)
{
    check_horizons(horizons);
    auto cfg = load_config(c);
    auto ds = load_dataset(c, cfg);
    check_states(ds, states);
    ExperimentSpec spec;
    spec.states = states;
    spec.horizons = horizons;
    spec.seed = seed;
    spec.jobs = c.jobs;

    std::vector<ComparisonCell> cells;
    std::vector<TrialRecord> rows;
    if (train) {
        ResultsTable trials;
        cells = run_comparison(ds, cfg, spec, &trials);
        rows = trials.rows();
    } else {
        for (const auto& s : states) {
            auto ctx = make_context(ds, s);
            for (int h : horizons) {
                for (auto kind : comparison_models(h)) {
                    const auto path = fs::path(ckpt_dir) / (file_stem(s, kind, h, seed) + ".ckpt");
                    if (!fs::exists(path)) {
                        throw std::runtime_error("missing checkpoint '" + path.string() + "' (run 'iernn train' or pass --train)");
                    }
                    auto m = load_model(Checkpoint::load_file(path.string()));
                    ModelShape shape = cfg.model;
                    shape.horizon = h;
                    const long tb = first_target(shape);
                    const auto own = std::span<const double>(ctx.own());
                    auto fit = predict(m, ctx, h, tb, static_cast<long>(ds.n_train) - 1);
                    auto test = predict(m, ctx, h, static_cast<long>(ds.n_train), static_cast<long>(ds.length()) - 1);
                    ComparisonCell cell{s, to_string(kind), h, true, 0,
                                        mse(fit, own.subspan(static_cast<std::size_t>(tb), fit.size())),
                                        mse(test, own.subspan(ds.n_train, ds.n_test)), 0};
                    cells.push_back(cell);
                }
            }
        }
    }
    auto dir = prepare_out(c);
    std::ostringstream csv;
    write_comparison_csv(csv, cells);
    write_text(dir / "comparison.csv", csv.str());
    std::string tables;
    for (int h : horizons) {
        tables += format_comparison_table(cells, h) + "\n";
    }
    write_text(dir / "comparison.txt", tables);
    std::cout << tables;
    int code = report_failures(rows);
    for (const auto& cell : cells) {
        if (!cell.available) {
            std::cerr << "no successful seed: " << cell.state << ' ' << cell.model << " h=" << cell.horizon << '\n';
            code = 1;
        }
    }
    return code;
}

int cmd_robustness(std::vector<std::string> states, std::vector<int> horizons, std::vector<std::string> models,
                   int trials, std::uint64_t seed, const Common& c)
{
    check_horizons(horizons);
    auto cfg = load_config(c);
    auto ds = load_dataset(c, cfg);
    check_states(ds, states);
    ExperimentSpec spec;
    spec.states = states;
    spec.horizons = horizons;
    spec.trials = trials > 0 ? trials : cfg.trials;
    spec.seed = seed;
    spec.jobs = c.jobs;
    for (const auto& m : models) {
        spec.models.push_back(parse_model_kind(m));
    }
    auto table = run_robustness(ds, cfg, spec);

    auto dir = prepare_out(c);
    std::ostringstream csv;
    write_results_csv(csv, table);
    write_text(dir / "robustness.csv", csv.str());
    std::string text;
    for (int h : horizons) {
        text += format_robustness_table(table, h) + "\n";
    }
    write_text(dir / "robustness.txt", text);
    std::cout << text;
    return report_failures(table.rows());
}

int cmd_sweep(const std::string& state, const std::string& decays_arg, const std::string& checkpoint, bool train,
              std::uint64_t seed, const Common& c)
{
    std::vector<double> decays;
    for (const auto& tok : split_list(decays_arg)) {
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (*end != '\0' || !(v >= 0.0) || !std::isfinite(v)) {
            throw UsageError("bad decay factor '" + tok + "'");
        }
        decays.push_back(v);
    }
    if (decays.empty()) {
        throw UsageError("--decays needs at least one factor");
    }
    auto cfg = load_config(c);
    auto ds = load_dataset(c, cfg);
    check_states(ds, {state});
    IernnModel model;
    if (train) {
        auto fit = fit_and_score(ds, state, ModelKind::iernn_policy, cfg.model.horizon, seed, cfg);
        model = std::get<IernnModel>(fit.model);
    } else {
        if (checkpoint.empty()) {
            throw UsageError("sweep needs --checkpoint or --train");
        }
        if (!fs::exists(checkpoint)) {
            throw std::runtime_error("missing checkpoint '" + checkpoint + "'");
        }
        auto any = load_model(Checkpoint::load_file(checkpoint));
        if (kind_of(any) != ModelKind::iernn_policy) {
            throw UsageError("sweep needs an iernn-policy checkpoint, got " + to_string(kind_of(any)));
        }
        model = std::get<IernnModel>(any);
    }
    auto ctx = make_context(ds, state);
    auto points = run_decay_sweep(model, ctx, decays, static_cast<long>(ds.n_train), static_cast<long>(ds.length()) - 1,
                                  cfg.start);
    auto dir = prepare_out(c);
    std::ostringstream csv;
    write_sweep_csv(csv, state, points);
    write_text(dir / "sweep.csv", csv.str());
    std::cout << "wrote " << points.size() << " rows to " << (dir / "sweep.csv").string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"IeRNN epidemic forecasting toolkit"};
    app.require_subcommand(1);

    Common common;
    std::string cases, population;
    bool smooth = false;
    auto* ingest_cmd = app.add_subcommand("ingest", "normalize cumulative case counts to daily infectious fractions");
    ingest_cmd->add_option("--cases", cases, "cases CSV (date,state,fips,cases,deaths)")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("--population", population, "population CSV (state,population)")
        ->required()
        ->check(CLI::ExistingFile);
    ingest_cmd->add_flag("--smooth", smooth, "apply a centered 7-day moving average");
    add_common(ingest_cmd, common, false);

    std::string state = "California", model = "iernn";
    int horizon = 1;
    std::uint64_t seed = 0;
    auto* train_cmd = app.add_subcommand("train", "train one model and write its checkpoint and report");
    train_cmd->add_option("--state", state, "state to fit")->required();
    train_cmd->add_option("--model", model, "iernn, iernn-policy, ieq, lstm or arima")
        ->check(CLI::IsMember({"iernn", "iernn-policy", "ieq", "lstm", "arima"}));
    train_cmd->add_option("--horizon", horizon, "prediction horizon in days (1 or 7)");
    train_cmd->add_option("--seed", seed, "initialization seed");
    add_common(train_cmd, common, true);

    std::string states_arg = "California,Florida,Virginia", horizons_arg = "1,7", models_arg = "iernn,ieq";
    std::string ckpt_dir;
    bool on_the_fly = false;
    int trials = 0;
    auto* eval_cmd = app.add_subcommand("evaluate", "cross-model test MSE tables");
    eval_cmd->add_option("--states", states_arg, "comma-separated states");
    eval_cmd->add_option("--horizons", horizons_arg, "comma-separated horizons");
    eval_cmd->add_option("--seed", seed, "base seed");
    eval_cmd->add_option("--checkpoint-dir", ckpt_dir, "directory of checkpoints written by 'iernn train'");
    eval_cmd->add_flag("--train", on_the_fly, "train every model (median of eval.comparison_seeds seeds)");
    add_common(eval_cmd, common, true);

    auto* rob_cmd = app.add_subcommand("robustness", "repeated random-initialization study");
    rob_cmd->add_option("--states", states_arg, "comma-separated states");
    rob_cmd->add_option("--horizons", horizons_arg, "comma-separated horizons");
    rob_cmd->add_option("--models", models_arg, "comma-separated models");
    rob_cmd->add_option("--trials", trials, "trials per cell (default: eval.trials)")->check(CLI::PositiveNumber);
    rob_cmd->add_option("--seed", seed, "base seed; trial k uses seed + k");
    add_common(rob_cmd, common, true);

    std::string decays_arg = "0.25,0.5,1,1.5,2", checkpoint;
    auto* sweep_cmd = app.add_subcommand("sweep", "free-running test-decay trajectories of an iernn-policy model");
    sweep_cmd->add_option("--state", state, "state to roll out");
    sweep_cmd->add_option("--decays", decays_arg, "comma-separated beta1 multipliers");
    sweep_cmd->add_option("--checkpoint", checkpoint, "iernn-policy checkpoint");
    sweep_cmd->add_flag("--train", on_the_fly, "train the model instead of loading a checkpoint");
    sweep_cmd->add_option("--seed", seed, "seed used with --train");
    add_common(sweep_cmd, common, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest_cmd) {
            return cmd_ingest(cases, population, smooth, common);
        }
        if (*train_cmd) {
            return cmd_train(state, model, horizon, seed, common);
        }
        std::vector<int> horizons;
        for (const auto& h : split_list(horizons_arg)) {
            try {
                horizons.push_back(std::stoi(h));
            } catch (const std::exception&) {
                throw UsageError("bad horizon '" + h + "'");
            }
        }
        if (*eval_cmd) {
            if (!on_the_fly && ckpt_dir.empty()) {
                throw UsageError("evaluate needs --checkpoint-dir or --train");
            }
            return cmd_evaluate(split_list(states_arg), horizons, on_the_fly, ckpt_dir, seed, common);
        }
        if (*rob_cmd) {
            return cmd_robustness(split_list(states_arg), horizons, split_list(models_arg), trials, seed, common);
        }
        return cmd_sweep(state, decays_arg, checkpoint, on_the_fly, seed, common);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
