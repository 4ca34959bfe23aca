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

// Generates the bundled state-level case file (NYT us-states.csv layout) from a
// stochastic chain-binomial SEIR over the US border graph. Each state follows a
// contact-rate schedule with an early-spring lockdown, a late-spring reopening
// whose strength depends on the region, and a midsummer tightening. Reported
// cases pass through a testing ramp-up, a reporting delay and weekday effects.
//
//   make_synthetic_cases --borders data/us_state_borders.csv
//       --population data/us_state_population.csv --seed 20200303 > data/synthetic_us_states.csv

#include "iernn/ingest.hpp"
#include "iernn/region_graph.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace
{

struct StateProfile {
    double r0 = 2.8;        // before distancing
    double r_lockdown = 0.85;
    double r_reopen = 1.1;
    double r_summer = 0.9;  // after the midsummer tightening
    double reopen_day = 75; // days after 2020-02-01
    double tighten_day = 165;
    double seed_rate = 5.0; // imported infections per day in February
};

const std::set<std::string> kSunBelt{"Arizona", "California", "Florida", "Texas", "Georgia", "South Carolina",
                                     "Alabama", "Mississippi", "Louisiana", "Nevada", "Tennessee", "Oklahoma",
                                     "Arkansas", "Utah", "Idaho", "North Carolina"};
const std::set<std::string> kEarlyHubs{"New York", "New Jersey", "Massachusetts", "Connecticut", "Louisiana",
                                       "Michigan", "Illinois", "Washington", "Pennsylvania", "Rhode Island",
                                       "District of Columbia", "Maryland", "Delaware"};

double smooth_step(double t, double center, double width)
{
    return 0.5 * (1.0 + std::tanh((t - center) / width));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Synthetic state-level COVID-19 case generator"};
    std::string borders = "data/us_state_borders.csv";
    std::string population = "data/us_state_population.csv";
    std::uint64_t seed = 20200303;
    int days = 244; // 2020-02-01 .. 2020-09-30
    double coupling = 0.12;
    app.add_option("--borders", borders, "edge list CSV")->check(CLI::ExistingFile);
    app.add_option("--population", population, "population CSV")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "random seed");
    app.add_option("--days", days, "days simulated from 2020-02-01");
    app.add_option("--coupling", coupling, "share of contacts with bordering states");
    CLI11_PARSE(app, argc, argv);

    std::ifstream bin(borders), pin(population);
    auto edges = iernn::parse_edge_list(bin);
    auto pop = iernn::parse_population_csv(pin);

    std::vector<std::string> names;
    {
        std::ifstream again(population);
        std::string line;
        std::getline(again, line);
        while (std::getline(again, line)) {
            if (!line.empty()) {
                names.push_back(line.substr(0, line.find(',')));
            }
        }
    }
    iernn::RegionGraph graph(names, edges);
    const std::size_t n = graph.size();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    std::vector<StateProfile> prof(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& p = prof[i];
        const auto& s = names[i];
        p.r0 = 3.3 + 0.3 * jitter(rng);
        p.r_lockdown = 0.95 + 0.05 * jitter(rng);
        p.reopen_day = 100 + 10 * jitter(rng); // mid May
        p.tighten_day = 166 + 6 * jitter(rng); // mid July
        p.r_reopen = 1.16 + 0.06 * jitter(rng);
        p.r_summer = 0.9 + 0.05 * jitter(rng);
        if (kSunBelt.count(s)) {
            p.r_reopen = 1.55 + 0.06 * jitter(rng);
            p.r_summer = 0.85 + 0.04 * jitter(rng);
        }
        if (kEarlyHubs.count(s)) {
            p.r0 = 4.4 + 0.2 * jitter(rng);
            p.r_lockdown = 0.75 + 0.05 * jitter(rng);
            p.r_reopen = 0.95 + 0.05 * jitter(rng);
            p.seed_rate = 20.0;
        }
        if (s == "California" || s == "Florida" || s == "Washington") {
            p.seed_rate = 10.0;
        }
        p.seed_rate *= std::sqrt(static_cast<double>(pop.at(s)) / 5e6);
    }

    const double sigma = 1.0 / 5.2;
    const double gamma = 1.0 / 6.5;
    const double lockdown_day = 49; // 2020-03-21
    std::vector<double> S(n), E(n, 0), I(n, 0), N(n);
    for (std::size_t i = 0; i < n; ++i) {
        N[i] = static_cast<double>(pop.at(names[i]));
        S[i] = N[i];
    }

    // onsets[i][d] = infections becoming infectious on day d
    std::vector<std::vector<double>> onsets(n, std::vector<double>(static_cast<std::size_t>(days), 0.0));
    for (int d = 0; d < days; ++d) {
        std::vector<double> frac(n);
        for (std::size_t i = 0; i < n; ++i) {
            frac[i] = I[i] / N[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = prof[i];
            const double t = d;
            double r = p.r0;
            r += (p.r_lockdown - r) * smooth_step(t, lockdown_day, 4.0);
            r += (p.r_reopen - p.r_lockdown) * smooth_step(t, p.reopen_day, 7.0);
            r += (p.r_summer - p.r_reopen) * smooth_step(t, p.tighten_day, 6.0);
            const double beta = r * gamma;
            double force = frac[i];
            const auto& nb = graph.neighbors(i);
            if (!nb.empty()) {
                double m = 0;
                for (auto j : nb) {
                    m += frac[j];
                }
                force = (1.0 - coupling) * frac[i] + coupling * m / static_cast<double>(nb.size());
            }
            const double p_inf = 1.0 - std::exp(-beta * force);
            std::binomial_distribution<long> infect(static_cast<long>(S[i]), p_inf);
            std::binomial_distribution<long> onset(static_cast<long>(E[i]), 1.0 - std::exp(-sigma));
            std::binomial_distribution<long> recover(static_cast<long>(I[i]), 1.0 - std::exp(-gamma));
            double new_e = static_cast<double>(infect(rng));
            double new_i = static_cast<double>(onset(rng));
            double new_r = static_cast<double>(recover(rng));
            if (d < 45) {
                std::poisson_distribution<long> imports(p.seed_rate * smooth_step(t, 12.0, 6.0));
                new_e += static_cast<double>(imports(rng));
            }
            S[i] -= new_e;
            E[i] += new_e - new_i;
            I[i] += new_i - new_r;
            onsets[i][static_cast<std::size_t>(d)] = new_i;
        }
    }

    // Reporting: testing ramp, 1-7 day delay, weekday effect, gamma-Poisson noise.
    const double weekday[7] = {1.12, 1.05, 1.15, 1.10, 1.02, 0.80, 0.76}; // Sat..Fri from 2020-02-01
    std::cout << "date,state,fips,cases,deaths\n";
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> reported(static_cast<std::size_t>(days) + 8, 0.0);
        for (int d = 0; d < days; ++d) {
            const double ascertain = 0.06 + 0.2 * smooth_step(d, 75.0, 18.0);
            const double expected = onsets[i][static_cast<std::size_t>(d)] * ascertain;
            if (expected <= 0) {
                continue;
            }
            static const double delay[8] = {0.05, 0.2, 0.25, 0.2, 0.12, 0.08, 0.06, 0.04};
            for (int k = 0; k < 8; ++k) {
                reported[static_cast<std::size_t>(d + k)] += expected * delay[k];
            }
        }
        long cumulative = 0;
        const double shape = 40.0;
        for (int d = 0; d < days; ++d) {
            const double mean = reported[static_cast<std::size_t>(d)] * weekday[d % 7];
            long count = 0;
            if (mean > 0) {
                std::gamma_distribution<double> g(shape, mean / shape);
                std::poisson_distribution<long> pois(g(rng));
                count = pois(rng);
            }
            cumulative += count;
            if (cumulative == 0) {
                continue;
            }
            auto date = iernn::make_date(2020, 2, 1) + std::chrono::days{d};
            std::cout << iernn::format_date(date) << ',' << names[i] << ",00," << cumulative << ",0\n";
        }
    }
    return 0;
}
