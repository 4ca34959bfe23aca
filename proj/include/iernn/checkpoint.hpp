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
#ifndef IERNN_CHECKPOINT_HPP
#define IERNN_CHECKPOINT_HPP

// Text checkpoint format, one entry per line:
//
//   iernn-checkpoint 1
//   attr <key> <value>                      free-form string value (rest of line)
//   tensor <name> <rows> <cols> <v1> ... <vN>   N = rows * cols, row-major
//
// Numbers are written as C99 hexadecimal floats ("%a"), so a save/load round
// trip reproduces every double bit for bit. Entry order is preserved.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace iernn
{

struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
};

inline std::string format_hex(double v)
{
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline double parse_double(const std::string& s)
{
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') {
        throw std::invalid_argument("not a number: '" + s + "'");
    }
    return v;
}

class Checkpoint
{
public:
    void set_attr(const std::string& key, const std::string& value)
    {
        for (auto& kv : m_attrs) {
            if (kv.first == key) {
                kv.second = value;
                return;
            }
        }
        m_attrs.emplace_back(key, value);
    }
    void set_scalar(const std::string& key, double value)
    {
        set_tensor(key, 1, 1, {value});
    }
    void set_tensor(const std::string& name, std::size_t rows, std::size_t cols, std::vector<double> values)
    {
        if (values.size() != rows * cols) {
            throw std::invalid_argument("tensor '" + name + "' shape does not match value count");
        }
        for (auto& kv : m_tensors) {
            if (kv.first == name) {
                kv.second = {rows, cols, std::move(values)};
                return;
            }
        }
        m_tensors.emplace_back(name, Tensor{rows, cols, std::move(values)});
    }

    bool has_attr(const std::string& key) const
    {
        for (const auto& kv : m_attrs) {
            if (kv.first == key) {
                return true;
            }
        }
        return false;
    }
    const std::string& attr(const std::string& key) const
    {
        for (const auto& kv : m_attrs) {
            if (kv.first == key) {
                return kv.second;
            }
        }
        throw std::out_of_range("checkpoint has no attribute '" + key + "'");
    }
    const Tensor& tensor(const std::string& name) const
    {
        for (const auto& kv : m_tensors) {
            if (kv.first == name) {
                return kv.second;
            }
        }
        throw std::out_of_range("checkpoint has no tensor '" + name + "'");
    }
    double scalar(const std::string& name) const
    {
        const auto& t = tensor(name);
        if (t.values.size() != 1) {
            throw std::invalid_argument("tensor '" + name + "' is not a scalar");
        }
        return t.values[0];
    }

    void save(std::ostream& out) const
    {
        out << "iernn-checkpoint 1\n";
        for (const auto& [k, v] : m_attrs) {
            out << "attr " << k << ' ' << v << '\n';
        }
        for (const auto& [name, t] : m_tensors) {
            out << "tensor " << name << ' ' << t.rows << ' ' << t.cols;
            for (double v : t.values) {
                out << ' ' << format_hex(v);
            }
            out << '\n';
        }
    }

    static Checkpoint load(std::istream& in)
    {
        Checkpoint ck;
        std::string line;
        if (!std::getline(in, line) || line != "iernn-checkpoint 1") {
            throw std::runtime_error("not an iernn checkpoint (bad magic line)");
        }
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) {
                continue;
            }
            std::istringstream ls(line);
            std::string kind, name;
            ls >> kind >> name;
            if (kind == "attr") {
                std::string value;
                std::getline(ls, value);
                if (!value.empty() && value.front() == ' ') {
                    value.erase(0, 1);
                }
                ck.set_attr(name, value);
            } else if (kind == "tensor") {
                std::size_t rows = 0, cols = 0;
                if (!(ls >> rows >> cols)) {
                    throw std::runtime_error("checkpoint line " + std::to_string(lineno) + ": bad tensor shape");
                }
                std::vector<double> values;
                values.reserve(rows * cols);
                std::string tok;
                while (ls >> tok) {
                    values.push_back(parse_double(tok));
                }
                if (values.size() != rows * cols) {
                    throw std::runtime_error("checkpoint line " + std::to_string(lineno) + ": tensor '" + name +
                                             "' has " + std::to_string(values.size()) + " values, shape says " +
                                             std::to_string(rows * cols));
                }
                ck.set_tensor(name, rows, cols, std::move(values));
            } else {
                throw std::runtime_error("checkpoint line " + std::to_string(lineno) + ": unknown entry '" + kind + "'");
            }
        }
        return ck;
    }

    void save_file(const std::string& path) const
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write checkpoint '" + path + "'");
        }
        save(out);
    }
    static Checkpoint load_file(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw std::runtime_error("checkpoint not found: '" + path + "'");
        }
        return load(in);
    }

private:
    std::vector<std::pair<std::string, std::string>> m_attrs;
    std::vector<std::pair<std::string, Tensor>> m_tensors;
};

} // namespace iernn

#endif // IERNN_CHECKPOINT_HPP
