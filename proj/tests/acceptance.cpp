// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <sys/wait.h>

#include <fmt/format.h>

#include "facilmut/bundled_grammars.hpp"
#include "facilmut/evolution.hpp"
#include "facilmut/experiment.hpp"
#include "facilmut/fitness.hpp"
#include "facilmut/metrics.hpp"
#include "facilmut/parallel.hpp"
#include "facilmut/stats.hpp"
#include "support.hpp"

using namespace facilmut;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

bool within_3_sigma(long hits, long trials, double p) {
    const double n = static_cast<double>(trials);
    return std::abs(static_cast<double>(hits) - n * p) <= 3.0 * std::sqrt(n * p * (1.0 - p));
}

Outcome preset_fidelity() {
    Outcome o;
    const std::map<Approach, std::pair<double, MutationPolicy>> table = {
        {Approach::FMX, {0.01, MutationPolicy(0.01, {{"const", 0.15}, {"var_const", 0.05}})}},
        {Approach::FM, {0.0, MutationPolicy(0.01, {{"const", 0.15}, {"var_const", 0.05}})}},
        {Approach::OM, {0.0, MutationPolicy(0.15)}},
        {Approach::OMX, {0.9, MutationPolicy(0.15)}},
    };
    for (const auto& [approach, row] : table) {
        const auto c = EvolutionConfig::preset(approach);
        const auto name = std::string(to_string(approach));
        o.require(c.approach == approach, name + " approach");
        o.require(c.crossover_rate == row.first, name + " crossover");
        o.require(c.mutation_policy == row.second, name + " mutation policy");
        o.require(c.population_size == 100, name + " population");
        o.require(c.generations == 200, name + " generations");
        o.require(c.elitism_fraction == 0.01 && c.elite_count() == 1, name + " elitism");
        o.require(c.tournament_size == 2, name + " tournament");
        o.require(c.max_depth == 17, name + " max depth");
    }
    o.require(EvolutionConfig::preset(Approach::FM).mutation_policy == MutationPolicy::facilitated(), "facilitated()");
    o.require(EvolutionConfig::preset(Approach::OM).mutation_policy == MutationPolicy::homogeneous(0.15),
              "homogeneous()");
    if (o.pass) o.detail = "FMX, FM, OM, OMX match field by field";
    return o;
}

Outcome mutation_calibration() {
    Outcome o;
    const auto& g = bundled_grammar(kFacilitatedGrammar);
    const auto policy = EvolutionConfig::preset(Approach::FM).mutation_policy;
    std::map<std::string, long> trials, flips;
    auto tier = [](const std::string& nt) { return nt == "const" || nt == "var_const" ? nt : std::string("default"); };
    Rng rng(777);
    auto enough = [&] { return trials["const"] >= 100000 && trials["var_const"] >= 100000 && trials["default"] >= 100000; };
    while (!enough()) {
        auto genotype = random_genotype(g, 17, rng);
        const auto mask = map_genotype(g, genotype, 17, rng).consumed;
        const auto child = mutate(genotype, g, policy, mask, rng);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i].productions.size() < 2) continue;
            for (int k = 0; k < mask[i]; ++k) {
                const auto t = tier(g[i].name);
                ++trials[t];
                flips[t] += child.codons[i][static_cast<std::size_t>(k)] != genotype.codons[i][static_cast<std::size_t>(k)];
            }
        }
    }
    const std::map<std::string, double> expected = {{"const", 0.15}, {"var_const", 0.05}, {"default", 0.01}};
    for (const auto& [t, rate] : expected) {
        const double freq = static_cast<double>(flips[t]) / static_cast<double>(trials[t]);
        o.detail += fmt::format("{}{} {:.4f}/{} over {}", o.detail.empty() ? "" : ", ", t, freq, rate, trials[t]);
        if (!within_3_sigma(flips[t], trials[t], rate)) {
            o.pass = false;
            o.detail += " (outside 3 sigma)";
        }
    }
    return o;
}

Outcome archive_soundness() {
    Outcome o;
    auto config = EvolutionConfig::preset(Approach::FMX);
    config.population_size = 30;
    config.generations = 20;
    config.master_seed = 42;
    const TaskEvaluator task(config.task);
    std::mutex m;
    std::map<std::string, int> trained;
    std::set<std::string> non_gradient_trained;
    Evaluator counting = [&](const Phenotype& p) {
        {
            std::lock_guard lock(m);
            ++trained[p.canonical()];
            if (!uses_gradient(p)) non_gradient_trained.insert(p.canonical());
        }
        return task(p);
    };

    std::set<std::string> gradient_seen;
    bool non_gradient_ok = true;
    long trained_entries = 0;
    RunOptions options;
    options.eval_threads = 2;
    options.on_generation = [&](const PopulationState& state, const GenerationStats&) {
        for (const auto& ind : state.population) {
            if (uses_gradient(ind.phenotype)) {
                gradient_seen.insert(ind.phenotype.canonical());
            } else if (ind.fitness != 0.1 || ind.evaluated) {
                non_gradient_ok = false;
            }
        }
        trained_entries = 0;
        for (const auto& [c, e] : state.archive.entries()) {
            trained_entries += e.trained ? 1 : 0;
            if (!e.trained && (e.fitness != 0.1 || uses_gradient(parse_phenotype(c)))) non_gradient_ok = false;
        }
    };
    const auto record = run(config, bundled_grammar(default_grammar_name(config.approach)), counting, "fmx", options);

    long total_calls = 0;
    bool duplicates = false;
    for (const auto& [c, n] : trained) {
        total_calls += n;
        duplicates = duplicates || n != 1;
    }
    o.require(record.evaluations_performed == total_calls,
              fmt::format("evaluations {} != evaluator calls {}", record.evaluations_performed, total_calls));
    o.require(static_cast<std::size_t>(total_calls) == gradient_seen.size(),
              fmt::format("training events {} != distinct gradient canonicals {}", total_calls, gradient_seen.size()));
    o.require(trained_entries == total_calls,
              fmt::format("trained archive entries {} != evaluator calls {}", trained_entries, total_calls));
    o.require(!duplicates, "a canonical was trained more than once");
    o.require(non_gradient_trained.empty(), "a non-gradient phenotype was trained");
    o.require(non_gradient_ok, "a non-gradient phenotype did not get exactly 0.1 untrained");
    o.detail = o.pass ? fmt::format("{} training events, {} distinct gradient canonicals, archive {}", total_calls,
                                    gradient_seen.size(), record.archive_size)
                      : o.detail;
    return o;
}

Outcome numerics() {
    Outcome o;
    FitnessTaskConfig cfg;
    cfg.feature_scale = 1.0;
    const auto data = generate_task(cfg);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    const std::size_t p = static_cast<std::size_t>(cfg.feature_dim) + 1;
    for (int draw = 0; draw < 100; ++draw) {
        std::vector<double> params(p);
        for (auto& v : params) v = n(rng);
        const auto g = logistic_gradient(data.train, params);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            const double h = 1e-5;
            auto plus = params, minus = params;
            plus[i] += h;
            minus[i] -= h;
            const double fd = (logistic_loss(data.train, plus) - logistic_loss(data.train, minus)) / (2.0 * h);
            num += (fd - g[i]) * (fd - g[i]);
            den += fd * fd;
        }
        worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
    }
    o.require(worst < 1e-4, fmt::format("gradient relative error {:.2e}", worst));

    const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 3, 4, 5, 6};
    const auto w = welch_t_test(a, b);
    // scipy.stats.ttest_ind(a, b, equal_var=False)
    o.require(std::abs(w.p_two_sided - 0.34659350708733416) < 1e-3, fmt::format("welch p {:.10f}", w.p_two_sided));

    const std::vector<double> x = {2, 4, 6}, y = {1, 3, 5};
    const auto d = cohens_d(x, y);
    o.require(d.d == 0.5 && d.band == "M", fmt::format("cohen d {}", d.d));

    const bool stars = significance_stars(0.05) == "" && significance_stars(std::nextafter(0.05, 0.0)) == "*" &&
                       significance_stars(0.01) == "**" && significance_stars(std::nextafter(0.01, 1.0)) == "*" &&
                       significance_stars(0.001) == "***" && significance_stars(std::nextafter(0.001, 1.0)) == "**" &&
                       significance_stars(0.0001) == "***" &&
                       significance_stars(std::nextafter(0.0001, 0.0)) == "****";
    o.require(stars, "star bands");
    if (o.pass) {
        o.detail = fmt::format("fd error {:.1e}, welch p {:.6f}, d {}", worst, w.p_two_sided, d.d);
    }
    return o;
}

Outcome baseline() {
    Outcome o;
    const TaskEvaluator task{FitnessTaskConfig{}};
    const double gd = task(parse_phenotype("(0.01 * grad)"));
    const double zero = task(parse_phenotype("(0.0 * grad)"));
    o.require(gd >= 0.9, fmt::format("plain descent {:.4f}", gd));
    o.require(std::abs(zero - 0.5) <= 0.1, fmt::format("zero update {:.4f}", zero));
    if (o.pass) o.detail = fmt::format("plain descent {:.4f}, zero update {:.4f}", gd, zero);
    return o;
}

Outcome directional() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    struct Job {
        Approach approach;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (auto a : kAllApproaches) {
        for (std::uint64_t s = 1; s <= 10; ++s) jobs.push_back({a, s});
    }
    std::vector<RunMetrics> metrics(jobs.size());
    const int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
        auto config = EvolutionConfig::preset(jobs[i].approach);
        config.population_size = 50;
        config.generations = 60;
        config.master_seed = jobs[i].seed;
        const TaskEvaluator evaluator(config.task);
        const auto record =
            run(config, bundled_grammar(default_grammar_name(config.approach)), evaluator,
                std::string(default_grammar_name(config.approach)));
        metrics[i] = summarize(record);
    });
    std::map<Approach, std::vector<RunMetrics>> runs;
    for (std::size_t i = 0; i < jobs.size(); ++i) runs[jobs[i].approach].push_back(metrics[i]);
    const auto report = build_comparison(runs);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    auto mean = [&](Approach a, Metric m) { return report.summary[static_cast<std::size_t>(m)].means.at(a); };
    double p_fmx_omx = 1.0;
    for (const auto& t : report.pairwise) {
        if (t.metric == Metric::PopulationFitness && t.a == Approach::FMX && t.b == Approach::OMX) {
            p_fmx_omx = t.welch.p_two_sided;
        }
    }
    const double pf_fmx = mean(Approach::FMX, Metric::PopulationFitness);
    const double pf_fm = mean(Approach::FM, Metric::PopulationFitness);
    const double pf_om = mean(Approach::OM, Metric::PopulationFitness);
    const double pf_omx = mean(Approach::OMX, Metric::PopulationFitness);
    const double uv_fmx = mean(Approach::FMX, Metric::Diversity);
    const double uv_omx = mean(Approach::OMX, Metric::Diversity);
    const double ev_fm = mean(Approach::FM, Metric::Cost);
    const double ev_omx = mean(Approach::OMX, Metric::Cost);

    o.require(pf_fmx > pf_omx, "population fitness FMX <= OMX");
    o.require(pf_fm > pf_om, "population fitness FM <= OM");
    o.require(p_fmx_omx < 0.05, fmt::format("FMX vs OMX p = {:.3g}", p_fmx_omx));
    o.require(uv_fmx > uv_omx, "unique viable FMX <= OMX");
    o.require(ev_omx > ev_fm, "evaluations OMX <= FM");
    o.require(secs <= 600.0, fmt::format("took {:.0f} s", secs));
    o.detail = fmt::format(
        "pop fitness FMX {:.3f} OMX {:.3f} FM {:.3f} OM {:.3f} (FMX-OMX p {:.2g}); unique viable FMX {:.1f} OMX {:.1f}; "
        "evaluations OMX {:.1f} FM {:.1f}; {:.1f} s{}{}",
        pf_fmx, pf_omx, pf_fm, pf_om, p_fmx_omx, uv_fmx, uv_omx, ev_omx, ev_fm, secs, o.pass ? "" : "; ", o.detail);
    return o;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = testsupport::read_file(e.path());
    }
    return files;
}

Outcome determinism() {
    Outcome o;
    testsupport::TempDir tmp("accept");
    const auto spec = tmp.path() / "spec.json";
    testsupport::write_file(
        spec, R"({"approaches": ["FMX", "FM", "OM", "OMX"], "seeds": [1, 2], "overrides": {"population_size": 20, "generations": 10}})");
    auto exec = [&](const std::string& out, int jobs) {
        const auto cmd = fmt::format("\"{}\" run --spec \"{}\" --out \"{}\" --jobs {} >/dev/null 2>&1", FACILMUT_CLI_PATH,
                                     spec.string(), (tmp.path() / out).string(), jobs);
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    o.require(exec("one", 1) == 0, "first execution failed");
    o.require(exec("four", 4) == 0, "second execution failed");
    if (!o.pass) return o;
    const auto a = snapshot(tmp.path() / "one");
    const auto b = snapshot(tmp.path() / "four");
    o.require(a.size() == 17, fmt::format("{} artifacts", a.size()));
    o.require(a == b, "artifacts differ between --jobs 1 and --jobs 4");
    if (o.pass) o.detail = fmt::format("{} artifacts identical across --jobs 1 and --jobs 4", a.size());
    return o;
}

bool same_individual(const Individual& x, const Individual& y) {
    return x.genotype == y.genotype && x.phenotype.canonical() == y.phenotype.canonical() && x.consumed == y.consumed &&
           x.fitness == y.fitness && x.evaluated == y.evaluated;
}

Outcome elitism() {
    Outcome o;
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int r = 0; r < 50; ++r) {
        const auto approach = kAllApproaches[static_cast<std::size_t>(r % 4)];
        auto config = EvolutionConfig::preset(approach);
        config.population_size = std::uniform_int_distribution<int>(10, 40)(rng);
        config.generations = std::uniform_int_distribution<int>(3, 12)(rng);
        config.elitism_fraction = std::uniform_real_distribution<double>(0.01, 0.2)(rng);
        config.master_seed = rng();
        config.task.train_size = 80;
        config.task.validation_size = 40;
        config.task.fitness_size = 40;
        config.task.max_epochs = 30;
        const TaskEvaluator evaluator(config.task);
        const auto elites = static_cast<std::size_t>(config.elite_count());

        std::vector<Individual> previous;
        double best_so_far = -1.0;
        RunOptions options;
        options.on_generation = [&](const PopulationState& state, const GenerationStats& stats) {
            if (stats.best_fitness < best_so_far) {
                o.require(false, fmt::format("run {} generation {} best decreased", r, stats.generation));
            }
            best_so_far = std::max(best_so_far, stats.best_fitness);
            if (!previous.empty()) {
                std::vector<std::size_t> order(previous.size());
                std::iota(order.begin(), order.end(), 0);
                std::stable_sort(order.begin(), order.end(),
                                 [&](std::size_t a, std::size_t b) { return previous[a].fitness > previous[b].fitness; });
                for (std::size_t e = 0; e < elites; ++e) {
                    if (!same_individual(state.population[e], previous[order[e]])) {
                        o.require(false, fmt::format("run {} generation {} elite {} altered", r, stats.generation, e));
                    }
                }
            }
            previous = state.population;
            ++checked;
        };
        run(config, bundled_grammar(default_grammar_name(approach)), evaluator, "x", options);
    }
    if (o.pass) o.detail = fmt::format("50 runs, {} generations checked", checked);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"preset fidelity", preset_fidelity},
        {"mutation-rate calibration", mutation_calibration},
        {"archive soundness", archive_soundness},
        {"numerics oracles", numerics},
        {"baseline viability", baseline},
        {"directional replication", directional},
        {"determinism", determinism},
        {"elitism and monotonicity", elitism},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        fmt::print("{} {} ({:.1f} s): {}\n", outcome.pass ? "PASS" : "FAIL", name, secs, outcome.detail);
        std::fflush(stdout);
        failed += outcome.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
