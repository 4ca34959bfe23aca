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
#ifndef IERNN_REGION_GRAPH_HPP
#define IERNN_REGION_GRAPH_HPP

#include "iernn/ingest.hpp"

#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace iernn
{

/// Undirected 0/1 adjacency over named regions. Immutable after construction.
class RegionGraph
{
public:
    RegionGraph() = default;

    RegionGraph(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& edges)
        : m_nodes(std::move(nodes))
        , m_adj(m_nodes.size() * m_nodes.size(), 0)
    {
        for (std::size_t k = 0; k < m_nodes.size(); ++k) {
            if (!m_index.emplace(m_nodes[k], k).second) {
                throw std::invalid_argument("duplicate node '" + m_nodes[k] + "'");
            }
        }
        for (const auto& [a, b] : edges) {
            auto ia = index_checked(a);
            auto ib = index_checked(b);
            if (ia == ib) {
                throw std::invalid_argument("self-loop on '" + a + "'");
            }
            m_adj[ia * size() + ib] = 1;
            m_adj[ib * size() + ia] = 1;
        }
        m_neighbors.resize(size());
        for (std::size_t i = 0; i < size(); ++i) {
            for (std::size_t j = 0; j < size(); ++j) {
                if (m_adj[i * size() + j]) {
                    m_neighbors[i].push_back(j);
                }
            }
        }
    }

    std::size_t size() const
    {
        return m_nodes.size();
    }
    const std::vector<std::string>& nodes() const
    {
        return m_nodes;
    }
    const std::string& name(std::size_t i) const
    {
        return m_nodes.at(i);
    }
    bool contains(const std::string& name) const
    {
        return m_index.count(name) != 0;
    }
    std::size_t index_of(const std::string& name) const
    {
        auto it = m_index.find(name);
        if (it == m_index.end()) {
            throw std::out_of_range("region '" + name + "' is not a graph node");
        }
        return it->second;
    }
    int adjacent(std::size_t i, std::size_t j) const
    {
        return m_adj[i * size() + j];
    }
    const std::vector<std::size_t>& neighbors(std::size_t i) const
    {
        return m_neighbors.at(i);
    }

private:
    std::size_t index_checked(const std::string& name) const
    {
        auto it = m_index.find(name);
        if (it == m_index.end()) {
            throw std::invalid_argument("edge endpoint '" + name + "' is not in the node list");
        }
        return it->second;
    }

    std::vector<std::string> m_nodes;
    std::map<std::string, std::size_t> m_index;
    std::vector<std::uint8_t> m_adj;
    std::vector<std::vector<std::size_t>> m_neighbors;
};

inline RegionGraph build_graph(const std::vector<std::pair<std::string, std::string>>& edges,
                               std::vector<std::string> nodes)
{
    return RegionGraph(std::move(nodes), edges);
}

/// Reads `state_a,state_b` rows.
inline std::vector<std::pair<std::string, std::string>> parse_edge_list(std::istream& in)
{
    detail::LineReader reader(in);
    std::string line;
    if (!reader.next(line) || line != "state_a,state_b") {
        throw ParseError("expected header state_a,state_b", reader.line_number());
    }
    std::vector<std::pair<std::string, std::string>> edges;
    while (reader.next(line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw ParseError("expected 'state_a,state_b'", reader.line_number());
        }
        edges.emplace_back(fields[0], fields[1]);
    }
    return edges;
}

/// Graph whose node set is exactly the endpoints of `edges`, sorted by name.
inline RegionGraph graph_from_edges(const std::vector<std::pair<std::string, std::string>>& edges)
{
    std::map<std::string, int> seen;
    for (const auto& [a, b] : edges) {
        seen[a];
        seen[b];
    }
    std::vector<std::string> nodes;
    for (const auto& kv : seen) {
        nodes.push_back(kv.first);
    }
    return RegionGraph(std::move(nodes), edges);
}

struct EdgeFeatureConfig {
    std::size_t p = 7; ///< trailing days summed per neighbor
};

/// Neighbor average of trailing p-day sums, reading I_{j,t-p} .. I_{j,t-1} only.
/// `node_values[j]` is node j's series on a shared time axis.
inline double edge_feature(const RegionGraph& graph, std::span<const std::vector<double>> node_values, std::size_t i,
                           long t, const EdgeFeatureConfig& cfg = {})
{
    if (cfg.p < 1) {
        throw std::invalid_argument("edge feature lookback p must be >= 1");
    }
    const auto& nbrs = graph.neighbors(i);
    if (nbrs.empty()) {
        throw std::invalid_argument("region '" + graph.name(i) + "' has no neighbors");
    }
    if (node_values.size() != graph.size()) {
        throw std::invalid_argument("series count does not match graph size");
    }
    if (t - static_cast<long>(cfg.p) < 0) {
        throw std::out_of_range("edge feature at t=" + std::to_string(t) + " needs " + std::to_string(cfg.p) +
                                " days of history");
    }
    double total = 0.0;
    for (auto j : nbrs) {
        const auto& v = node_values[j];
        if (static_cast<std::size_t>(t) > v.size()) {
            throw std::out_of_range("series of '" + graph.name(j) + "' ends before t=" + std::to_string(t));
        }
        double s = 0.0;
        for (std::size_t k = 1; k <= cfg.p; ++k) {
            s += v[static_cast<std::size_t>(t) - k];
        }
        total += s;
    }
    return total / static_cast<double>(nbrs.size());
}

/// [f_{t_end-W+1}, ..., f_{t_end}]
inline std::vector<double> edge_feature_sequence(const RegionGraph& graph,
                                                 std::span<const std::vector<double>> node_values, std::size_t i,
                                                 long t_end, std::size_t window, const EdgeFeatureConfig& cfg = {})
{
    if (window < 1) {
        throw std::invalid_argument("edge feature window must be >= 1");
    }
    const long first = t_end - static_cast<long>(window) + 1;
    if (first - static_cast<long>(cfg.p) < 0) {
        throw std::out_of_range("edge feature sequence ending at t=" + std::to_string(t_end) + " needs " +
                                std::to_string(window + cfg.p - 1) + " days of history");
    }
    std::vector<double> out;
    out.reserve(window);
    for (long t = first; t <= t_end; ++t) {
        out.push_back(edge_feature(graph, node_values, i, t, cfg));
    }
    return out;
}

/// Aligns `series` to graph node order over [start, start + length). Every node must have data.
inline std::vector<std::vector<double>> align_to_graph(const RegionGraph& graph, const std::vector<DailySeries>& series,
                                                       Date start, std::size_t length)
{
    std::vector<std::vector<double>> out(graph.size());
    std::vector<bool> found(graph.size(), false);
    for (const auto& s : series) {
        if (!graph.contains(s.region)) {
            continue;
        }
        auto i = graph.index_of(s.region);
        out[i] = window(s, start, length).values;
        found[i] = true;
    }
    for (std::size_t i = 0; i < graph.size(); ++i) {
        if (!found[i]) {
            throw std::invalid_argument("no case data for graph node '" + graph.name(i) + "'");
        }
    }
    return out;
}

} // namespace iernn

#endif // IERNN_REGION_GRAPH_HPP
