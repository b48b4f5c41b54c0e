#include <doctest.h>

#include <random>

#include "facilmut/metrics.hpp"

using namespace facilmut;

namespace {

std::vector<RunMetrics> runs_from(std::initializer_list<RunMetrics> list) { return {list}; }

std::map<Approach, std::vector<RunMetrics>> random_batch(std::uint64_t seed, int per_approach) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::map<Approach, std::vector<RunMetrics>> runs;
    int shift = 0;
    for (auto a : {Approach::FMX, Approach::FM, Approach::OM, Approach::OMX}) {
        for (int i = 0; i < per_approach; ++i) {
            runs[a].push_back({0.9 + 0.01 * n(rng), 0.3 + 0.1 * shift + 0.05 * n(rng), 100 + 10 * shift + 5 * n(rng),
                               800 + 100 * shift + 20 * n(rng)});
        }
        ++shift;
    }
    return runs;
}

}  // namespace

TEST_CASE("unique viable behaviors") {
    Archive empty;
    CHECK(unique_viable_behaviors(empty) == 0);

    Archive archive;
    archive.insert_evaluated("grad", 0.6, 0);
    archive.insert_evaluated("(grad + 0.0)", 0.6, 1);
    archive.insert_preselected("alpha", 0.1, 1);
    CHECK(unique_viable_behaviors(archive) == 2);

    archive.insert_evaluated("(grad * 0.5)", 0.5, 2);
    CHECK(unique_viable_behaviors(archive) == 2);
    CHECK(unique_viable_behaviors(archive, 0.0) == 4);
    CHECK(unique_viable_behaviors(archive, 0.6) == 0);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Archive big;
    for (int i = 0; i < 300; ++i) {
        big.insert_evaluated("e" + std::to_string(i), u(rng), i);
    }
    int previous = unique_viable_behaviors(big, -1.0);
    CHECK(previous == 300);
    for (double t = 0.0; t <= 1.0; t += 0.05) {
        const int now = unique_viable_behaviors(big, t);
        CHECK(now <= previous);
        previous = now;
    }
}

TEST_CASE("metric names") {
    CHECK(metric_key(Metric::BestFitness) == "best_fitness");
    CHECK(metric_key(Metric::PopulationFitness) == "population_fitness");
    CHECK(metric_key(Metric::Diversity) == "population_diversity");
    CHECK(metric_key(Metric::Cost) == "computational_cost");
    CHECK(higher_is_better(Metric::Diversity));
    CHECK_FALSE(higher_is_better(Metric::Cost));
    const RunMetrics m{0.1, 0.2, 3.0, 4.0};
    CHECK(m.get(Metric::BestFitness) == 0.1);
    CHECK(m.get(Metric::PopulationFitness) == 0.2);
    CHECK(m.get(Metric::Diversity) == 3.0);
    CHECK(m.get(Metric::Cost) == 4.0);
}

TEST_CASE("comparison structure") {
    const auto runs = random_batch(11, 10);
    const auto report = build_comparison(runs);
    CHECK(report.pairwise.size() == 6 * kAllMetrics.size());
    CHECK(report.summary.size() == kAllMetrics.size());
    for (const auto& t : report.pairwise) {
        CHECK(t.a < t.b);
        const auto& sa = report.samples.at(t.a).at(t.metric);
        const auto& sb = report.samples.at(t.b).at(t.metric);
        const auto direct = welch_t_test(sa, sb);
        CHECK(t.welch.p_two_sided == direct.p_two_sided);
        CHECK(t.stars == significance_stars(direct.p_two_sided));
        CHECK(t.effect.d == cohens_d(sa, sb).d);
    }

    const auto& pop = report.summary[1];
    CHECK(pop.metric == Metric::PopulationFitness);
    CHECK(pop.best == Approach::OMX);
    CHECK(pop.band == "L");
    const auto& cost = report.summary[3];
    CHECK(cost.metric == Metric::Cost);
    CHECK(cost.best == Approach::FMX);

    std::map<Approach, std::vector<RunMetrics>> two = {{Approach::FM, runs.at(Approach::FM)},
                                                       {Approach::OM, runs.at(Approach::OM)}};
    const auto small = build_comparison(two);
    CHECK(small.pairwise.size() == kAllMetrics.size());
    CHECK(small.pairwise[0].a == Approach::FM);
    CHECK(small.pairwise[0].b == Approach::OM);
}

TEST_CASE("identical run sets are not significant") {
    const auto list = runs_from({{0.8, 0.5, 10, 100}, {0.9, 0.6, 12, 120}, {0.85, 0.4, 11, 90}});
    const auto report = build_comparison({{Approach::FMX, list}, {Approach::OMX, list}});
    for (const auto& t : report.pairwise) {
        CHECK(t.welch.p_two_sided == doctest::Approx(1.0));
        CHECK(t.stars.empty());
        CHECK(t.effect.band == "S");
    }
    for (const auto& s : report.summary) {
        CHECK(s.best == Approach::FMX);
    }
}

TEST_CASE("too few runs") {
    const auto one = runs_from({{0.8, 0.5, 10, 100}});
    const auto two = runs_from({{0.8, 0.5, 10, 100}, {0.7, 0.4, 9, 90}});
    CHECK_THROWS_AS(build_comparison({{Approach::FM, two}, {Approach::OM, one}}), std::invalid_argument);
}

TEST_CASE("csv and table") {
    const auto report = build_comparison(random_batch(4, 5));
    const auto csv = comparison_csv(report);
    CHECK(csv.rfind(
              "metric,approach_a,approach_b,mean_a,mean_b,t,df,p_value,stars,cohens_d,effect_band,degenerate\n", 0) ==
          0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 24);
    CHECK(csv.find("population_fitness,FMX,OMX,") != std::string::npos);

    const auto table = comparison_table(report);
    CHECK(table.find("Approach") != std::string::npos);
    CHECK(table.find("Computational Cost") != std::string::npos);
    CHECK(table.find("*") != std::string::npos);
    CHECK(table.find("FMX vs OMX") != std::string::npos);
}
