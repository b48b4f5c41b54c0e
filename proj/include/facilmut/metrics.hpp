#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "facilmut/evolution.hpp"
#include "facilmut/stats.hpp"

namespace facilmut {

/// Distinct canonical phenotypes in the run archive with fitness strictly
/// above `threshold`.
int unique_viable_behaviors(const Archive& archive, double threshold = 0.5);

enum class Metric { BestFitness, PopulationFitness, Diversity, Cost };

inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::BestFitness, Metric::PopulationFitness,
                                                      Metric::Diversity, Metric::Cost};

/// Machine name, e.g. "best_fitness".
std::string_view metric_key(Metric metric);
/// Table heading, e.g. "Best Fitness".
std::string_view metric_title(Metric metric);
/// Computational cost is the only lower-is-better metric.
bool higher_is_better(Metric metric);

/// The four per-run samples that enter the comparison.
struct RunMetrics {
    /// Evolution-time fitness of the run's best individual.
    double best_fitness = 0.0;
    /// Mean fitness of the final generation.
    double population_fitness = 0.0;
    double unique_viable = 0.0;
    double evaluations = 0.0;

    double get(Metric metric) const;
};

RunMetrics summarize(const RunRecord& record);

struct PairwiseTest {
    Metric metric;
    Approach a;
    Approach b;
    double mean_a = 0.0;
    double mean_b = 0.0;
    WelchResult welch;
    EffectSize effect;
    std::string stars;
};

struct MetricSummary {
    Metric metric;
    std::map<Approach, double> means;
    Approach best;
    /// Effect-size band of best vs runner-up; empty with a single approach.
    std::string band;
};

struct ComparisonReport {
    std::map<Approach, std::map<Metric, std::vector<double>>> samples;
    std::vector<PairwiseTest> pairwise;
    std::vector<MetricSummary> summary;
};

/// All pairwise Welch tests and effect sizes per metric, plus the best
/// approach per metric. Needs at least two runs per approach.
ComparisonReport build_comparison(const std::map<Approach, std::vector<RunMetrics>>& runs);
ComparisonReport build_comparison(const std::map<Approach, std::vector<RunRecord>>& runs);

/// One row per pairwise test per metric.
std::string comparison_csv(const ComparisonReport& report);
/// Aligned text table: one row per approach, the best per metric wrapped in
/// asterisks with its effect band, followed by the pairwise tests.
std::string comparison_table(const ComparisonReport& report);

}  // namespace facilmut
