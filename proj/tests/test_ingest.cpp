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
#include "iernn/ingest.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace iernn;

namespace
{

std::vector<CumulativeRecord> parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_cases_csv(in);
}

PopulationTable pop_of(const std::string& text)
{
    std::istringstream in(text);
    return parse_population_csv(in);
}

} // namespace

TEST(ParseCases, ReadsAndSortsRecords)
{
    auto recs = parse("date,state,fips,cases,deaths\n"
                      "2020-03-02,Utah,49,5,0\n"
                      "2020-03-01,Utah,49,2,0\n"
                      "2020-03-01,Idaho,16,1,0\n");
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0].region, "Idaho");
    EXPECT_EQ(recs[1].date, make_date(2020, 3, 1));
    EXPECT_EQ(recs[2].cumulative_cases, 5);
}

TEST(ParseCases, AcceptsCrlf)
{
    auto recs = parse("date,state,fips,cases,deaths\r\n2020-03-01,Utah,49,2,0\r\n");
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].region, "Utah");
}

TEST(ParseCases, MalformedDateReportsLine)
{
    try {
        parse("date,state,fips,cases,deaths\n2020-03-01,Utah,49,2,0\n2020-13-01,Utah,49,3,0\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(ParseCases, RejectsBadHeaderNegativeAndDuplicates)
{
    EXPECT_THROW(parse("day,state,fips,cases,deaths\n"), ParseError);
    EXPECT_THROW(parse("date,state,fips,cases,deaths\n2020-03-01,Utah,49,-2,0\n"), ParseError);
    EXPECT_THROW(parse("date,state,fips,cases,deaths\n2020-03-01,Utah,49,2,0\n2020-03-01,Utah,49,3,0\n"),
                 ParseError);
    EXPECT_THROW(parse("date,state,fips,cases,deaths\n2020-03-01,Utah,49,x,0\n"), ParseError);
}

TEST(DailyNew, DifferencesAndClamps)
{
    auto d = to_daily_new({0, 3, 7, 7});
    EXPECT_EQ(d.counts, (std::vector<std::int64_t>{0, 3, 4, 0}));
    EXPECT_EQ(d.clamped, 0u);

    auto c = to_daily_new({5, 10, 8, 12});
    EXPECT_EQ(c.counts, (std::vector<std::int64_t>{5, 5, 0, 4}));
    EXPECT_EQ(c.clamped, 1u);
}

TEST(DailyNew, SumTelescopesWithoutCorrections)
{
    std::mt19937_64 rng(3);
    std::vector<std::int64_t> cum{static_cast<std::int64_t>(rng() % 10)};
    for (int k = 0; k < 200; ++k) {
        cum.push_back(cum.back() + static_cast<std::int64_t>(rng() % 50));
    }
    auto d = to_daily_new(cum);
    std::int64_t sum = 0;
    for (auto v : d.counts) {
        EXPECT_GE(v, 0);
        sum += v;
    }
    EXPECT_EQ(sum, cum.back());
}

TEST(Normalize, DividesByPopulation)
{
    auto pop = pop_of("state,population\nUtah,1000\n");
    auto s = normalize_by_population({10, 0, 1000}, pop, "Utah");
    EXPECT_DOUBLE_EQ(s.values[0], 0.01);
    EXPECT_DOUBLE_EQ(s.values[2], 1.0);
    EXPECT_THROW(normalize_by_population({1001}, pop, "Utah"), std::invalid_argument);
    EXPECT_THROW(normalize_by_population({1}, pop, "Idaho"), std::out_of_range);
}

TEST(Population, RejectsNonPositiveAndDuplicates)
{
    EXPECT_THROW(pop_of("state,population\nUtah,0\n"), ParseError);
    EXPECT_THROW(pop_of("state,population\nUtah,5\nUtah,6\n"), ParseError);
}

TEST(Ingest, GapFillsAndSummarizes)
{
    auto recs = parse("date,state,fips,cases,deaths\n"
                      "2020-03-01,Utah,49,10,0\n"
                      "2020-03-03,Utah,49,30,0\n"
                      "2020-03-04,Utah,49,25,0\n");
    auto pop = pop_of("state,population\nUtah,1000\n");
    IngestSummary sum;
    auto series = ingest(recs, pop, {}, &sum);
    ASSERT_EQ(series.size(), 1u);
    EXPECT_EQ(series[0].size(), 4u);
    EXPECT_EQ(sum.filled, 1u);
    EXPECT_EQ(sum.clamped, 1u);
    EXPECT_DOUBLE_EQ(series[0].values[1], 0.0);
    EXPECT_DOUBLE_EQ(series[0].values[2], 0.02);
}

TEST(Ingest, StartKeepsEarlierCasesAsCumulative)
{
    auto recs = parse("date,state,fips,cases,deaths\n"
                      "2020-03-01,Utah,49,10,0\n"
                      "2020-03-02,Utah,49,30,0\n"
                      "2020-03-03,Utah,49,35,0\n");
    auto pop = pop_of("state,population\nUtah,1000\n");
    IngestOptions opts;
    opts.start = make_date(2020, 3, 2);
    auto s = ingest(recs, pop, opts)[0];
    EXPECT_EQ(s.start, make_date(2020, 3, 2));
    EXPECT_DOUBLE_EQ(s.cumulative_before, 0.01);
    EXPECT_EQ(s.values, (std::vector<double>{0.02, 0.005}));
}

TEST(Window, CarriesCumulativeBefore)
{
    DailySeries s{"Utah", make_date(2020, 3, 1), {0.1, 0.2, 0.3, 0.4}, 0.05};
    auto w = window(s, make_date(2020, 3, 3), 2);
    EXPECT_EQ(w.values, (std::vector<double>{0.3, 0.4}));
    EXPECT_NEAR(w.cumulative_before, 0.35, 1e-15);
    EXPECT_THROW(window(s, make_date(2020, 2, 28), 2), std::invalid_argument);
    EXPECT_THROW(window(s, make_date(2020, 3, 3), 3), std::invalid_argument);
}

TEST(MovingAverage, ShrinksAtEdgesAndPreservesConstants)
{
    auto flat = centered_moving_average7(std::vector<double>(10, 0.25));
    for (double v : flat) {
        EXPECT_DOUBLE_EQ(v, 0.25);
    }
    auto m = centered_moving_average7({7, 0, 0, 0, 0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(m[0], 7.0 / 4.0);
    EXPECT_DOUBLE_EQ(m[3], 1.0);
    EXPECT_DOUBLE_EQ(m[4], 0.0);
}

TEST(Split, DefaultSizes)
{
    DailySeries s{"Utah", make_date(2020, 3, 3), std::vector<double>(168, 0.0)};
    auto sp = split_train_test(s);
    EXPECT_EQ(sp.train.size(), 133u);
    EXPECT_EQ(sp.test.size(), 35u);
    EXPECT_EQ(sp.test.start, make_date(2020, 7, 14));
    DailySeries short_series{"Utah", make_date(2020, 3, 3), std::vector<double>(100, 0.0)};
    EXPECT_THROW(split_train_test(short_series), std::invalid_argument);
}

TEST(SeriesCsv, RoundTripsAtTenDigits)
{
    std::vector<DailySeries> in{{"Utah", make_date(2020, 3, 1), {1.0 / 3.0, 2.5e-5, 0.0}}};
    std::ostringstream out;
    write_series_csv(out, in);
    EXPECT_EQ(out.str(), "date,state,infectious_fraction\n2020-03-01,Utah,0.3333333333\n"
                         "2020-03-02,Utah,2.5e-05\n2020-03-03,Utah,0\n");
    std::istringstream back(out.str());
    auto parsed = parse_series_csv(back);
    ASSERT_EQ(parsed.size(), 1u);
    EXPECT_NEAR(parsed[0].values[0], 1.0 / 3.0, 1e-10);
    EXPECT_EQ(parsed[0].start, make_date(2020, 3, 1));
}
