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
#include "iernn/region_graph.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

using namespace iernn;

#ifndef IERNN_DATA_DIR
#error "IERNN_DATA_DIR must point at the bundled data directory"
#endif

namespace
{

RegionGraph path_abc()
{
    return build_graph({{"A", "B"}, {"B", "C"}}, {"A", "B", "C"});
}

double loop_oracle(const std::vector<std::vector<double>>& v, const std::vector<std::size_t>& nbrs, long t,
                   std::size_t p)
{
    double total = 0;
    for (auto j : nbrs) {
        for (long k = t - static_cast<long>(p); k < t; ++k) {
            total += v[j][static_cast<std::size_t>(k)];
        }
    }
    return total / static_cast<double>(nbrs.size());
}

} // namespace

TEST(BuildGraph, SymmetricAdjacency)
{
    auto g = build_graph({{"A", "B"}}, {"A", "B", "C"});
    EXPECT_EQ(g.adjacent(0, 1), 1);
    EXPECT_EQ(g.adjacent(1, 0), 1);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(g.adjacent(i, i), 0);
        EXPECT_EQ(g.adjacent(i, 2), 0);
    }
}

TEST(BuildGraph, EmptyEdgesGiveZeroMatrix)
{
    auto g = build_graph({}, {"A", "B"});
    EXPECT_EQ(g.adjacent(0, 1) + g.adjacent(1, 0), 0);
    EXPECT_TRUE(g.neighbors(0).empty());
}

TEST(BuildGraph, RejectsUnknownEndpointsSelfLoopsAndDuplicates)
{
    EXPECT_THROW(build_graph({{"A", "Z"}}, {"A", "B"}), std::invalid_argument);
    EXPECT_THROW(build_graph({{"A", "A"}}, {"A", "B"}), std::invalid_argument);
    EXPECT_THROW(build_graph({}, {"A", "A"}), std::invalid_argument);
}

TEST(BundledEdges, MatchesKnownBorders)
{
    std::ifstream in(std::string(IERNN_DATA_DIR) + "/us_state_borders.csv");
    ASSERT_TRUE(in) << "missing bundled edge list";
    auto g = graph_from_edges(parse_edge_list(in));
    EXPECT_EQ(g.size(), 49u); // 48 contiguous states + DC
    EXPECT_FALSE(g.contains("Alaska"));
    EXPECT_FALSE(g.contains("Hawaii"));

    auto names = [&](const std::string& s) {
        std::set<std::string> out;
        for (auto j : g.neighbors(g.index_of(s))) {
            out.insert(g.name(j));
        }
        return out;
    };
    EXPECT_EQ(names("California"), (std::set<std::string>{"Arizona", "Nevada", "Oregon"}));
    EXPECT_EQ(names("Florida"), (std::set<std::string>{"Alabama", "Georgia"}));
    EXPECT_EQ(names("Virginia"), (std::set<std::string>{"District of Columbia", "Kentucky", "Maryland",
                                                        "North Carolina", "Tennessee", "West Virginia"}));
    EXPECT_EQ(names("Maine"), (std::set<std::string>{"New Hampshire"}));
    EXPECT_EQ(names("Missouri").size(), 8u);
    EXPECT_EQ(names("Tennessee").size(), 8u);
}

TEST(EdgeFeature, HandExample)
{
    auto g = path_abc();
    std::vector<std::vector<double>> v{{.1, .2, .3}, {0, 0, 0}, {0, .1, .2}};
    EXPECT_NEAR(edge_feature(g, v, 1, 2, {2}), 0.2, 1e-15);
}

TEST(EdgeFeature, ZeroAndConstantCases)
{
    auto g = path_abc();
    std::vector<std::vector<double>> zero(3, std::vector<double>(10, 0.0));
    EXPECT_EQ(edge_feature(g, zero, 0, 9, {7}), 0.0);
    std::vector<std::vector<double>> flat(3, std::vector<double>(10, 0.03));
    EXPECT_NEAR(edge_feature(g, flat, 1, 8, {7}), 7 * 0.03, 1e-15);
}

TEST(EdgeFeature, ReadsStrictlyPastValues)
{
    auto g = path_abc();
    std::vector<std::vector<double>> v(3, std::vector<double>(10, 0.01));
    const double before = edge_feature(g, v, 1, 5, {3});
    v[0][5] = 0.9;
    v[2][6] = 0.9;
    EXPECT_EQ(edge_feature(g, v, 1, 5, {3}), before);
}

TEST(EdgeFeature, ErrorsOnIsolatedNodeAndShortHistory)
{
    auto g = build_graph({{"A", "B"}}, {"A", "B", "C"});
    std::vector<std::vector<double>> v(3, std::vector<double>(10, 0.01));
    EXPECT_THROW(edge_feature(g, v, 2, 5, {3}), std::invalid_argument);
    EXPECT_THROW(edge_feature(g, v, 0, 2, {3}), std::out_of_range);
}

TEST(EdgeFeature, PropertiesOnRandomGraphs)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 3 + rng() % 6;
        std::vector<std::string> nodes;
        for (std::size_t i = 0; i < n; ++i) {
            nodes.push_back("n" + std::to_string(i));
        }
        std::vector<std::pair<std::string, std::string>> edges;
        for (std::size_t i = 1; i < n; ++i) {
            edges.push_back({nodes[rng() % i], nodes[i]});
        }
        auto g = build_graph(edges, nodes);
        const std::size_t p = 1 + rng() % 7, len = 20;
        std::vector<std::vector<double>> v(n, std::vector<double>(len));
        for (auto& s : v) {
            for (auto& x : s) {
                x = u(rng);
            }
        }
        const std::size_t i = rng() % n;
        const long t = static_cast<long>(p + rng() % (len - p));
        const double f = edge_feature(g, v, i, t, {p});
        EXPECT_NEAR(f, loop_oracle(v, g.neighbors(i), t, p), 1e-12);
        EXPECT_GE(f, 0.0);
        EXPECT_LE(f, static_cast<double>(p));

        // linearity
        const double lambda = 3.0 * u(rng);
        auto scaled = v;
        for (auto& s : scaled) {
            for (auto& x : s) {
                x *= lambda;
            }
        }
        EXPECT_NEAR(edge_feature(g, scaled, i, t, {p}), lambda * f, 1e-12);

        // relabeling the nodes leaves the feature unchanged
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::string> renamed(n);
        for (std::size_t k = 0; k < n; ++k) {
            renamed[perm[k]] = nodes[k];
        }
        auto g2 = build_graph(edges, renamed);
        std::vector<std::vector<double>> v2(n);
        for (std::size_t k = 0; k < n; ++k) {
            v2[perm[k]] = v[k];
        }
        EXPECT_NEAR(edge_feature(g2, v2, perm[i], t, {p}), f, 1e-12);
    }
}

TEST(EdgeFeatureSequence, MatchesPointwiseCalls)
{
    auto g = path_abc();
    std::vector<std::vector<double>> v{{.1, .2, .3, .4, .5}, {0, 0, 0, 0, 0}, {0, .1, .2, .05, .3}};
    auto seq = edge_feature_sequence(g, v, 1, 4, 3, {2});
    ASSERT_EQ(seq.size(), 3u);
    for (long k = 0; k < 3; ++k) {
        EXPECT_EQ(seq[static_cast<std::size_t>(k)], edge_feature(g, v, 1, 2 + k, {2}));
    }
    auto one = edge_feature_sequence(g, v, 1, 4, 1, {2});
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], edge_feature(g, v, 1, 4, {2}));
    EXPECT_THROW(edge_feature_sequence(g, v, 1, 3, 3, {2}), std::out_of_range);
}
