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
#ifndef IERNN_INGEST_HPP
#define IERNN_INGEST_HPP

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace iernn
{

using Date = std::chrono::sys_days;

/// Error raised for malformed input files; `line()` is 1-based (0 if unknown).
class ParseError : public std::runtime_error
{
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what)
        , m_line(line)
    {
    }
    std::size_t line() const
    {
        return m_line;
    }

private:
    std::size_t m_line;
};

namespace detail
{

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

template <class Int>
bool parse_int(std::string_view s, Int& value)
{
    if (s.empty()) {
        return false;
    }
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    return ec == std::errc() && ptr == s.data() + s.size();
}

/// Reads lines, strips CR and a UTF-8 BOM on the first line.
class LineReader
{
public:
    explicit LineReader(std::istream& in)
        : m_in(in)
    {
    }
    bool next(std::string& line)
    {
        if (!std::getline(m_in, line)) {
            return false;
        }
        ++m_line;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (m_line == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) {
            line.erase(0, 3);
        }
        return true;
    }
    std::size_t line_number() const
    {
        return m_line;
    }

private:
    std::istream& m_in;
    std::size_t m_line = 0;
};

} // namespace detail

/// Parses an ISO `YYYY-MM-DD` date. Returns false on malformed or invalid dates.
inline bool parse_date(std::string_view s, Date& out)
{
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        return false;
    }
    int y = 0;
    unsigned m = 0, d = 0;
    if (!detail::parse_int(s.substr(0, 4), y) || !detail::parse_int(s.substr(5, 2), m) ||
        !detail::parse_int(s.substr(8, 2), d)) {
        return false;
    }
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        return false;
    }
    out = Date{ymd};
    return true;
}

inline Date make_date(int y, unsigned m, unsigned d)
{
    return Date{std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}};
}

inline std::string format_date(Date date)
{
    std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
}

struct CumulativeRecord {
    Date date;
    std::string region;
    std::int64_t cumulative_cases = 0;

    bool operator==(const CumulativeRecord&) const = default;
};

/// Parses the `date,state,fips,cases,deaths` format. Output is sorted by (region, date).
inline std::vector<CumulativeRecord> parse_cases_csv(std::istream& in)
{
    detail::LineReader reader(in);
    std::string line;
    if (!reader.next(line)) {
        throw ParseError("empty input, expected header date,state,fips,cases,deaths", 0);
    }
    auto header = detail::split_csv_line(line);
    if (header.size() != 5 || header[0] != "date" || header[1] != "state" || header[2] != "fips" ||
        header[3] != "cases" || header[4] != "deaths") {
        throw ParseError("bad header '" + line + "', expected date,state,fips,cases,deaths", reader.line_number());
    }

    std::vector<CumulativeRecord> records;
    std::vector<std::size_t> line_of;
    while (reader.next(line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 5) {
            throw ParseError("expected 5 fields, got " + std::to_string(fields.size()), reader.line_number());
        }
        CumulativeRecord rec;
        if (!parse_date(fields[0], rec.date)) {
            throw ParseError("malformed date '" + std::string(fields[0]) + "'", reader.line_number());
        }
        if (fields[1].empty()) {
            throw ParseError("empty state name", reader.line_number());
        }
        rec.region = std::string(fields[1]);
        if (!detail::parse_int(fields[3], rec.cumulative_cases)) {
            throw ParseError("malformed cases value '" + std::string(fields[3]) + "'", reader.line_number());
        }
        if (rec.cumulative_cases < 0) {
            throw ParseError("negative cases value " + std::to_string(rec.cumulative_cases), reader.line_number());
        }
        records.push_back(std::move(rec));
        line_of.push_back(reader.line_number());
    }

    std::vector<std::size_t> order(records.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        order[k] = k;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(records[a].region, records[a].date) < std::tie(records[b].region, records[b].date);
    });
    std::vector<CumulativeRecord> sorted;
    sorted.reserve(records.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& rec = records[order[k]];
        if (!sorted.empty() && sorted.back().region == rec.region && sorted.back().date == rec.date) {
            throw ParseError("duplicate entry for (" + format_date(rec.date) + ", " + rec.region + ")",
                             line_of[order[k]]);
        }
        sorted.push_back(rec);
    }
    return sorted;
}

/// region -> population (persons)
class PopulationTable
{
public:
    void set(const std::string& region, std::int64_t population)
    {
        if (population <= 0) {
            throw std::invalid_argument("population of " + region + " must be positive");
        }
        m_pop[region] = population;
    }
    std::int64_t at(const std::string& region) const
    {
        auto it = m_pop.find(region);
        if (it == m_pop.end()) {
            throw std::out_of_range("region '" + region + "' missing from population table");
        }
        return it->second;
    }
    bool contains(const std::string& region) const
    {
        return m_pop.count(region) != 0;
    }
    std::size_t size() const
    {
        return m_pop.size();
    }

private:
    std::map<std::string, std::int64_t> m_pop;
};

inline PopulationTable parse_population_csv(std::istream& in)
{
    detail::LineReader reader(in);
    std::string line;
    if (!reader.next(line)) {
        throw ParseError("empty input, expected header state,population", 0);
    }
    auto header = detail::split_csv_line(line);
    if (header.size() != 2 || header[0] != "state" || header[1] != "population") {
        throw ParseError("bad header '" + line + "', expected state,population", reader.line_number());
    }
    PopulationTable table;
    while (reader.next(line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        auto fields = detail::split_csv_line(line);
        std::int64_t pop = 0;
        if (fields.size() != 2 || !detail::parse_int(fields[1], pop) || pop <= 0) {
            throw ParseError("expected 'state,positive_population'", reader.line_number());
        }
        if (table.contains(std::string(fields[0]))) {
            throw ParseError("duplicate state '" + std::string(fields[0]) + "'", reader.line_number());
        }
        table.set(std::string(fields[0]), pop);
    }
    return table;
}

/// One region's records, gap-filled to a contiguous daily range.
struct RegionCumulative {
    std::string region;
    Date start;
    std::vector<std::int64_t> cumulative;
};

/// Splits (region, date)-sorted records per region and forward-fills missing interior days.
inline std::vector<RegionCumulative> group_and_fill(const std::vector<CumulativeRecord>& records)
{
    std::vector<RegionCumulative> out;
    for (const auto& rec : records) {
        if (out.empty() || out.back().region != rec.region) {
            out.push_back({rec.region, rec.date, {rec.cumulative_cases}});
            continue;
        }
        auto& cur = out.back();
        auto expected = cur.start + std::chrono::days{static_cast<long>(cur.cumulative.size())};
        if (rec.date < expected) {
            throw std::invalid_argument("records for " + rec.region + " are not sorted by date");
        }
        while (expected < rec.date) {
            cur.cumulative.push_back(cur.cumulative.back());
            expected += std::chrono::days{1};
        }
        cur.cumulative.push_back(rec.cumulative_cases);
    }
    return out;
}

struct DailyCounts {
    std::vector<std::int64_t> counts;
    std::size_t clamped = 0; ///< number of negative differences set to zero
};

/// First difference of a cumulative series; negative corrections clamp to 0.
inline DailyCounts to_daily_new(const std::vector<std::int64_t>& cumulative)
{
    DailyCounts out;
    out.counts.reserve(cumulative.size());
    for (std::size_t k = 0; k < cumulative.size(); ++k) {
        std::int64_t diff = k == 0 ? cumulative[0] : cumulative[k] - cumulative[k - 1];
        if (diff < 0) {
            diff = 0;
            ++out.clamped;
        }
        out.counts.push_back(diff);
    }
    return out;
}

/// Daily infectious fraction I_t of one region.
struct DailySeries {
    std::string region;
    Date start{};
    std::vector<double> values;
    double cumulative_before = 0.0; ///< infected fraction reported before `start`

    std::size_t size() const
    {
        return values.size();
    }
    Date date_at(std::size_t k) const
    {
        return start + std::chrono::days{static_cast<long>(k)};
    }
};

inline DailySeries normalize_by_population(const std::vector<std::int64_t>& daily, const PopulationTable& pop,
                                           const std::string& region, Date start = Date{})
{
    const auto population = pop.at(region);
    DailySeries out{region, start, {}};
    out.values.reserve(daily.size());
    for (auto count : daily) {
        if (count < 0 || count > population) {
            throw std::invalid_argument("daily count " + std::to_string(count) + " outside [0, population] for " +
                                        region);
        }
        out.values.push_back(static_cast<double>(count) / static_cast<double>(population));
    }
    return out;
}

/// Centered 7-day moving average; the window shrinks at the edges.
inline std::vector<double> centered_moving_average7(const std::vector<double>& values)
{
    std::vector<double> out(values.size());
    const long n = static_cast<long>(values.size());
    for (long k = 0; k < n; ++k) {
        long lo = std::max(0L, k - 3), hi = std::min(n - 1, k + 3);
        double sum = 0;
        for (long j = lo; j <= hi; ++j) {
            sum += values[j];
        }
        out[k] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

/// Restricts a series to [first, first + length) days; dates before the series start are an error.
inline DailySeries window(const DailySeries& series, Date first, std::size_t length)
{
    if (first < series.start) {
        throw std::invalid_argument(series.region + " starts at " + format_date(series.start) + ", after requested " +
                                    format_date(first));
    }
    auto offset = static_cast<std::size_t>((first - series.start).count());
    if (offset + length > series.size()) {
        throw std::invalid_argument(series.region + " has " + std::to_string(series.size() - std::min(offset, series.size())) +
                                    " days from " + format_date(first) + ", need " + std::to_string(length));
    }
    double before = series.cumulative_before;
    for (std::size_t k = 0; k < offset; ++k) {
        before += series.values[k];
    }
    return {series.region, first, {series.values.begin() + offset, series.values.begin() + offset + length}, before};
}

struct SplitSeries {
    DailySeries train;
    DailySeries test;
};

inline SplitSeries split_train_test(const DailySeries& series, std::size_t n_train = 133, std::size_t n_test = 35)
{
    if (n_train + n_test > series.size()) {
        throw std::invalid_argument("series " + series.region + " has " + std::to_string(series.size()) +
                                    " days; split needs at least " + std::to_string(n_train + n_test));
    }
    SplitSeries out;
    out.train = {series.region, series.start, {series.values.begin(), series.values.begin() + n_train},
                 series.cumulative_before};
    double before = series.cumulative_before;
    for (std::size_t k = 0; k < n_train; ++k) {
        before += series.values[k];
    }
    out.test = {series.region, series.date_at(n_train),
                {series.values.begin() + n_train, series.values.begin() + n_train + n_test}, before};
    return out;
}

struct IngestOptions {
    bool smooth = false;
    std::optional<Date> start; ///< drop days before this date (series must cover it)
};

struct IngestSummary {
    std::size_t rows = 0;
    std::size_t clamped = 0;
    std::size_t filled = 0;
};

/// Full pipeline: records -> per-region DailySeries, sorted by region name.
inline std::vector<DailySeries> ingest(const std::vector<CumulativeRecord>& records, const PopulationTable& pop,
                                       const IngestOptions& opts = {}, IngestSummary* summary = nullptr)
{
    std::vector<DailySeries> out;
    IngestSummary sum;
    sum.rows = records.size();
    const auto regions = group_and_fill(records);
    for (const auto& region : regions) {
        auto daily = to_daily_new(region.cumulative);
        sum.clamped += daily.clamped;
        auto series = normalize_by_population(daily.counts, pop, region.region, region.start);
        if (opts.smooth) {
            series.values = centered_moving_average7(series.values);
        }
        if (opts.start) {
            if (series.start > *opts.start) {
                // region reported its first case after the window start
                auto pad = static_cast<std::size_t>((series.start - *opts.start).count());
                series.values.insert(series.values.begin(), pad, 0.0);
            } else {
                auto drop = std::min(static_cast<std::size_t>((*opts.start - series.start).count()), series.size());
                for (std::size_t k = 0; k < drop; ++k) {
                    series.cumulative_before += series.values[k];
                }
                series.values.erase(series.values.begin(),
                                    series.values.begin() + static_cast<long>(drop));
            }
            series.start = *opts.start;
        }
        out.push_back(std::move(series));
    }
    std::size_t rows_after = 0;
    for (const auto& r : regions) {
        rows_after += r.cumulative.size();
    }
    sum.filled = rows_after - records.size();
    if (summary) {
        *summary = sum;
    }
    return out;
}

/// Writes `date,state,infectious_fraction` with 10 significant digits.
inline void write_series_csv(std::ostream& out, const std::vector<DailySeries>& series, bool header = true)
{
    if (header) {
        out << "date,state,infectious_fraction\n";
    }
    char buf[64];
    for (const auto& s : series) {
        for (std::size_t k = 0; k < s.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.10g", s.values[k]);
            out << format_date(s.date_at(k)) << ',' << s.region << ',' << buf << '\n';
        }
    }
}

/// Reads the format produced by write_series_csv; each region must be contiguous and dated daily.
inline std::vector<DailySeries> parse_series_csv(std::istream& in)
{
    detail::LineReader reader(in);
    std::string line;
    if (!reader.next(line) || line != "date,state,infectious_fraction") {
        throw ParseError("expected header date,state,infectious_fraction", reader.line_number());
    }
    std::map<std::string, DailySeries> by_region;
    while (reader.next(line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        auto fields = detail::split_csv_line(line);
        Date date;
        if (fields.size() != 3 || !parse_date(fields[0], date)) {
            throw ParseError("expected 'date,state,fraction'", reader.line_number());
        }
        std::string value(fields[2]);
        char* end = nullptr;
        double v = std::strtod(value.c_str(), &end);
        if (end == value.c_str() || *end != '\0' || !(v >= 0.0 && v <= 1.0)) {
            throw ParseError("fraction '" + value + "' is not in [0,1]", reader.line_number());
        }
        auto [it, inserted] = by_region.try_emplace(std::string(fields[1]));
        auto& s = it->second;
        if (inserted) {
            s.region = fields[1];
            s.start = date;
        } else if (date != s.date_at(s.size())) {
            throw ParseError("non-contiguous date for " + s.region, reader.line_number());
        }
        s.values.push_back(v);
    }
    std::vector<DailySeries> out;
    for (auto& [name, s] : by_region) {
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace iernn

#endif // IERNN_INGEST_HPP
