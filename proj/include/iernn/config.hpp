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
#ifndef IERNN_CONFIG_HPP
#define IERNN_CONFIG_HPP

// Flat key=value configuration. Blank lines and lines starting with '#' are
// ignored. Recognized keys (defaults in parentheses):
//
//   train.lr_net (0.001)          train.lr_epi (0.01)
//   train.l2_net (0.0001)         train.l2_epi (0)
//   train.epochs (2000)           train.early_stop_window (100)
//   train.early_stop_tol (1e-13)  train.seed (0)
//   train.b2_net (0.999)          train.b2_epi (0.9)
//   model.hidden (16,16)          model.P (14)
//   model.p (7)                   model.W (7)
//   model.horizon (1)
//   split.train (133)             split.test (35)
//   data.start (2020-03-03)       data.smooth (false)
//   arima.max_p (3)  arima.max_q (3)  arima.max_d (1)
//   eval.trials (20)              eval.comparison_seeds (5)
//
// Unknown keys are an error so that typos do not silently fall back to defaults.

#include "iernn/ingest.hpp"
#include "iernn/lstm.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace iernn
{

struct TrainOptions {
    double lr_net = 1e-3;
    double lr_epi = 1e-2;
    double l2_net = 1e-4;
    double l2_epi = 0.0;
    int epochs = 2000;
    int early_stop_window = 100;
    double early_stop_tol = 1e-13;
    double b2_net = 0.999;
    double b2_epi = 0.9;
};

struct ModelShape {
    RnnArchitecture arch = RnnArchitecture::stacked_default();
    int P = 14;
    std::size_t p = 7;
    std::size_t W = 7;
    int horizon = 1;
};

struct ArimaGrid {
    int max_p = 3;
    int max_q = 3;
    int max_d = 1;
};

struct Config {
    TrainOptions train;
    ModelShape model;
    std::uint64_t seed = 0;
    std::size_t n_train = 133;
    std::size_t n_test = 35;
    Date start = make_date(2020, 3, 3);
    bool smooth = false;
    ArimaGrid arima;
    int trials = 20;
    int comparison_seeds = 5;
};

inline std::vector<std::size_t> parse_size_list(const std::string& s)
{
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto comma = s.find(',', pos);
        auto tok = std::string(detail::trim(std::string_view(s).substr(pos, comma - pos)));
        std::size_t v = 0;
        if (!detail::parse_int(std::string_view(tok), v) || v == 0) {
            throw std::invalid_argument("expected a comma-separated list of positive integers, got '" + s + "'");
        }
        out.push_back(v);
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return out;
}

/// Applies one `key=value` setting to `cfg`.
inline void apply_setting(Config& cfg, const std::string& key, const std::string& value)
{
    auto as_double = [&] {
        char* end = nullptr;
        double v = std::strtod(value.c_str(), &end);
        if (value.empty() || *end != '\0') {
            throw std::invalid_argument("config key " + key + ": '" + value + "' is not a number");
        }
        return v;
    };
    auto as_long = [&] {
        long v = 0;
        if (!detail::parse_int(std::string_view(value), v)) {
            throw std::invalid_argument("config key " + key + ": '" + value + "' is not an integer");
        }
        return v;
    };
    auto as_bool = [&] {
        if (value == "true" || value == "1") {
            return true;
        }
        if (value == "false" || value == "0") {
            return false;
        }
        throw std::invalid_argument("config key " + key + ": '" + value + "' is not a boolean");
    };

    if (key == "train.lr_net") {
        cfg.train.lr_net = as_double();
    } else if (key == "train.lr_epi") {
        cfg.train.lr_epi = as_double();
    } else if (key == "train.l2_net") {
        cfg.train.l2_net = as_double();
    } else if (key == "train.l2_epi") {
        cfg.train.l2_epi = as_double();
    } else if (key == "train.epochs") {
        cfg.train.epochs = static_cast<int>(as_long());
    } else if (key == "train.early_stop_window") {
        cfg.train.early_stop_window = static_cast<int>(as_long());
    } else if (key == "train.b2_net") {
        cfg.train.b2_net = as_double();
    } else if (key == "train.b2_epi") {
        cfg.train.b2_epi = as_double();
    } else if (key == "train.early_stop_tol") {
        cfg.train.early_stop_tol = as_double();
    } else if (key == "train.seed") {
        cfg.seed = static_cast<std::uint64_t>(as_long());
    } else if (key == "model.hidden") {
        cfg.model.arch.hidden = parse_size_list(value);
    } else if (key == "model.P") {
        cfg.model.P = static_cast<int>(as_long());
    } else if (key == "model.p") {
        cfg.model.p = static_cast<std::size_t>(as_long());
    } else if (key == "model.W") {
        cfg.model.W = static_cast<std::size_t>(as_long());
    } else if (key == "model.horizon") {
        cfg.model.horizon = static_cast<int>(as_long());
    } else if (key == "split.train") {
        cfg.n_train = static_cast<std::size_t>(as_long());
    } else if (key == "split.test") {
        cfg.n_test = static_cast<std::size_t>(as_long());
    } else if (key == "data.start") {
        if (!parse_date(value, cfg.start)) {
            throw std::invalid_argument("config key data.start: bad date '" + value + "'");
        }
    } else if (key == "data.smooth") {
        cfg.smooth = as_bool();
    } else if (key == "arima.max_p") {
        cfg.arima.max_p = static_cast<int>(as_long());
    } else if (key == "arima.max_q") {
        cfg.arima.max_q = static_cast<int>(as_long());
    } else if (key == "arima.max_d") {
        cfg.arima.max_d = static_cast<int>(as_long());
    } else if (key == "eval.trials") {
        cfg.trials = static_cast<int>(as_long());
    } else if (key == "eval.comparison_seeds") {
        cfg.comparison_seeds = static_cast<int>(as_long());
    } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

inline void validate(const Config& cfg)
{
    if (cfg.model.horizon != 1 && cfg.model.horizon != 7) {
        throw std::invalid_argument("horizon must be 1 or 7");
    }
    if (cfg.model.P < 0 || cfg.model.p < 1 || cfg.model.W < 1) {
        throw std::invalid_argument("need P >= 0, p >= 1, W >= 1");
    }
    if (cfg.train.epochs < 1 || cfg.trials < 1 || cfg.comparison_seeds < 1) {
        throw std::invalid_argument("epochs, trials and comparison seeds must be >= 1");
    }
    if (cfg.train.l2_net < 0 || cfg.train.l2_epi < 0 || cfg.train.lr_net <= 0 || cfg.train.lr_epi <= 0 ||
        !(cfg.train.b2_net > 0 && cfg.train.b2_net < 1) || !(cfg.train.b2_epi > 0 && cfg.train.b2_epi < 1)) {
        throw std::invalid_argument("learning rates must be positive, L2 coefficients non-negative and b2 in (0, 1)");
    }
    if (cfg.arima.max_d < 0 || cfg.arima.max_d > 1 || cfg.arima.max_p < 0 || cfg.arima.max_q < 0) {
        throw std::invalid_argument("ARIMA grid needs d in {0,1} and non-negative p, q");
    }
}

inline void read_config(std::istream& in, Config& cfg)
{
    detail::LineReader reader(in);
    std::string line;
    while (reader.next(line)) {
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("expected key=value", reader.line_number());
        }
        try {
            apply_setting(cfg, std::string(detail::trim(t.substr(0, eq))), std::string(detail::trim(t.substr(eq + 1))));
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), reader.line_number());
        }
    }
}

inline void read_config_file(const std::string& path, Config& cfg)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    read_config(in, cfg);
}

} // namespace iernn

#endif // IERNN_CONFIG_HPP
