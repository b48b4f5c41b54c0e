#include "facilmut/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace facilmut {

int unique_viable_behaviors(const Archive& archive, double threshold) {
    return static_cast<int>(std::count_if(archive.entries().begin(), archive.entries().end(),
                                          [&](const auto& kv) { return kv.second.fitness > threshold; }));
}

std::string_view metric_key(Metric metric) {
    switch (metric) {
        case Metric::BestFitness: return "best_fitness";
        case Metric::PopulationFitness: return "population_fitness";
        case Metric::Diversity: return "population_diversity";
        case Metric::Cost: return "computational_cost";
    }
    return "?";
}

std::string_view metric_title(Metric metric) {
    switch (metric) {
        case Metric::BestFitness: return "Best Fitness";
        case Metric::PopulationFitness: return "Population Fitness";
        case Metric::Diversity: return "Population Diversity";
        case Metric::Cost: return "Computational Cost";
    }
    return "?";
}

bool higher_is_better(Metric metric) { return metric != Metric::Cost; }

double RunMetrics::get(Metric metric) const {
    switch (metric) {
        case Metric::BestFitness: return best_fitness;
        case Metric::PopulationFitness: return population_fitness;
        case Metric::Diversity: return unique_viable;
        case Metric::Cost: return evaluations;
    }
    return 0.0;
}

RunMetrics summarize(const RunRecord& record) {
    RunMetrics m;
    m.best_fitness = record.best_individual.fitness;
    m.population_fitness = record.generation_stats.empty() ? 0.0 : record.generation_stats.back().mean_fitness;
    m.unique_viable = record.unique_viable_count;
    m.evaluations = static_cast<double>(record.evaluations_performed);
    return m;
}

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ComparisonReport build_comparison(const std::map<Approach, std::vector<RunMetrics>>& runs) {
    ComparisonReport report;
    for (const auto& [approach, list] : runs) {
        if (list.size() < 2) {
            throw std::invalid_argument(
                fmt::format("approach {} has {} run(s); at least 2 are needed", to_string(approach), list.size()));
        }
        for (auto metric : kAllMetrics) {
            auto& samples = report.samples[approach][metric];
            for (const auto& r : list) {
                samples.push_back(r.get(metric));
            }
        }
    }

    // Enum order FMX, FM, OM, OMX, which std::map preserves.
    std::vector<Approach> approaches;
    for (const auto& kv : runs) {
        approaches.push_back(kv.first);
    }

    for (auto metric : kAllMetrics) {
        for (std::size_t i = 0; i < approaches.size(); ++i) {
            for (std::size_t j = i + 1; j < approaches.size(); ++j) {
                const auto& a = report.samples[approaches[i]][metric];
                const auto& b = report.samples[approaches[j]][metric];
                PairwiseTest test{metric, approaches[i], approaches[j], mean_of(a), mean_of(b),
                                  welch_t_test(a, b), cohens_d(a, b), {}};
                test.stars = std::string(significance_stars(test.welch.p_two_sided));
                report.pairwise.push_back(std::move(test));
            }
        }

        MetricSummary summary{metric, {}, approaches.front(), {}};
        for (auto a : approaches) {
            summary.means[a] = mean_of(report.samples[a][metric]);
        }
        std::vector<Approach> ranked = approaches;
        std::stable_sort(ranked.begin(), ranked.end(), [&](Approach x, Approach y) {
            return higher_is_better(metric) ? summary.means[x] > summary.means[y] : summary.means[x] < summary.means[y];
        });
        summary.best = ranked.front();
        if (ranked.size() > 1) {
            const auto effect = cohens_d(report.samples[ranked[0]][metric], report.samples[ranked[1]][metric]);
            summary.band = std::string(effect.band);
        }
        report.summary.push_back(std::move(summary));
    }
    return report;
}

ComparisonReport build_comparison(const std::map<Approach, std::vector<RunRecord>>& runs) {
    std::map<Approach, std::vector<RunMetrics>> metrics;
    for (const auto& [approach, records] : runs) {
        auto& out = metrics[approach];
        for (const auto& r : records) {
            out.push_back(summarize(r));
        }
    }
    return build_comparison(metrics);
}

std::string comparison_csv(const ComparisonReport& report) {
    std::string out = "metric,approach_a,approach_b,mean_a,mean_b,t,df,p_value,stars,cohens_d,effect_band,degenerate\n";
    for (const auto& t : report.pairwise) {
        out += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{:.17g},{},{}\n", metric_key(t.metric),
                           to_string(t.a), to_string(t.b), t.mean_a, t.mean_b, t.welch.t, t.welch.degrees_of_freedom,
                           t.welch.p_two_sided, t.stars, t.effect.d, t.effect.band,
                           t.welch.degenerate || t.effect.degenerate ? 1 : 0);
    }
    return out;
}

std::string comparison_table(const ComparisonReport& report) {
    auto format_value = [](Metric metric, double v) {
        return metric == Metric::BestFitness || metric == Metric::PopulationFitness ? fmt::format("{:.3f}", v)
                                                                                    : fmt::format("{:.1f}", v);
    };

    std::vector<std::string> header = {"Approach"};
    for (const auto& s : report.summary) {
        header.emplace_back(metric_title(s.metric));
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& [approach, unused] : report.samples) {
        std::vector<std::string> row = {std::string(to_string(approach))};
        for (const auto& s : report.summary) {
            auto cell = format_value(s.metric, s.means.at(approach));
            if (approach == s.best) {
                cell = "*" + cell + (s.band.empty() ? "" : "[" + s.band + "]") + "*";
            }
            row.push_back(std::move(cell));
        }
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : rows) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    auto emit_row = [&](const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            line += fmt::format("{}{:<{}}", c == 0 ? "" : " | ", cells[c], width[c]);
        }
        while (!line.empty() && line.back() == ' ') {
            line.pop_back();
        }
        return line + "\n";
    };

    std::string out = emit_row(header);
    std::size_t rule = 0;
    for (auto w : width) {
        rule += w;
    }
    out += std::string(rule + 3 * (width.size() - 1), '-') + "\n";
    for (const auto& row : rows) {
        out += emit_row(row);
    }
    out += "\nBest per metric in *asterisks* with Cohen's d band vs runner-up (S/M/L).\n\n";
    out += "Pairwise Welch t-tests:\n";
    for (const auto& t : report.pairwise) {
        out += fmt::format("  {:<22} {:>3} vs {:<3}  t={:>9.4f}  p={:.4g} {:<4}  d={:.3f} [{}]\n",
                           metric_title(t.metric), to_string(t.a), to_string(t.b), t.welch.t, t.welch.p_two_sided,
                           t.stars, t.effect.d, t.effect.band);
    }
    return out;
}

}  // namespace facilmut
