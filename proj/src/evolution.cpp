#include "facilmut/evolution.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "facilmut/bundled_grammars.hpp"
#include "facilmut/metrics.hpp"
#include "facilmut/parallel.hpp"

namespace facilmut {

std::string_view to_string(Approach approach) {
    switch (approach) {
        case Approach::FMX: return "FMX";
        case Approach::FM: return "FM";
        case Approach::OM: return "OM";
        case Approach::OMX: return "OMX";
    }
    return "?";
}

Approach parse_approach(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    for (auto a : kAllApproaches) {
        if (to_string(a) == upper) {
            return a;
        }
    }
    throw std::invalid_argument(fmt::format("unknown approach '{}' (expected FMX, FM, OM or OMX)", name));
}

std::string_view default_grammar_name(Approach approach) {
    return approach == Approach::FMX || approach == Approach::FM ? kFacilitatedGrammar : kOriginalGrammar;
}

std::string_view to_string(Provenance provenance) {
    switch (provenance) {
        case Provenance::Preselected: return "preselected";
        case Provenance::ArchiveHit: return "archive_hit";
        case Provenance::Evaluated: return "evaluated";
    }
    return "?";
}

EvolutionConfig EvolutionConfig::preset(Approach approach) {
    EvolutionConfig config;
    config.approach = approach;
    switch (approach) {
        case Approach::FMX:
            config.crossover_rate = 0.01;
            config.mutation_policy = MutationPolicy::facilitated();
            break;
        case Approach::FM:
            config.crossover_rate = 0.0;
            config.mutation_policy = MutationPolicy::facilitated();
            break;
        case Approach::OM:
            config.crossover_rate = 0.0;
            config.mutation_policy = MutationPolicy::homogeneous(0.15);
            break;
        case Approach::OMX:
            config.crossover_rate = 0.9;
            config.mutation_policy = MutationPolicy::homogeneous(0.15);
            break;
    }
    return config;
}

int EvolutionConfig::elite_count() const {
    // The epsilon keeps 0.01 * 100 from rounding up to 2.
    return static_cast<int>(std::ceil(elitism_fraction * population_size - 1e-9));
}

void EvolutionConfig::validate() const {
    if (population_size < 1) {
        throw std::invalid_argument("population_size must be positive");
    }
    if (generations < 0) {
        throw std::invalid_argument("generations must be non-negative");
    }
    if (!(elitism_fraction >= 0.0 && elitism_fraction <= 1.0)) {
        throw std::invalid_argument("elitism_fraction must be in [0,1]");
    }
    if (tournament_size < 1) {
        throw std::invalid_argument("tournament_size must be positive");
    }
    if (max_depth < 1) {
        throw std::invalid_argument("max_depth must be positive");
    }
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
        throw std::invalid_argument("crossover_rate must be in [0,1]");
    }
    task.validate();
}

const Archive::Entry* Archive::find(const std::string& canonical) const {
    auto it = entries_.find(canonical);
    return it == entries_.end() ? nullptr : &it->second;
}

void Archive::insert_evaluated(const std::string& canonical, double fitness, int generation) {
    if (entries_.contains(canonical)) {
        throw std::logic_error(fmt::format("phenotype '{}' evaluated twice", canonical));
    }
    ++evaluations_performed_;
    entries_.emplace(canonical, Entry{fitness, generation, evaluations_performed_, true});
}

void Archive::insert_preselected(const std::string& canonical, double fitness, int generation) {
    entries_.try_emplace(canonical, Entry{fitness, generation, evaluations_performed_, false});
}

FitnessAssignment assign_fitness(const Phenotype& phenotype, Archive& archive, const Evaluator& evaluator,
                                 int generation, double nonviable_fitness) {
    const Phenotype* one[] = {&phenotype};
    return assign_fitness_batch(one, archive, evaluator, generation, nonviable_fitness, 1).front();
}

std::vector<FitnessAssignment> assign_fitness_batch(std::span<const Phenotype* const> phenotypes, Archive& archive,
                                                    const Evaluator& evaluator, int generation,
                                                    double nonviable_fitness, int threads) {
    std::vector<FitnessAssignment> out(phenotypes.size());
    std::vector<const Phenotype*> pending;
    std::map<std::string, std::size_t> pending_index;
    std::vector<std::optional<std::size_t>> waits_on(phenotypes.size());

    for (std::size_t i = 0; i < phenotypes.size(); ++i) {
        const Phenotype& ph = *phenotypes[i];
        if (!uses_gradient(ph)) {
            out[i] = {nonviable_fitness, Provenance::Preselected};
        } else if (const auto* entry = archive.find(ph.canonical())) {
            out[i] = {entry->fitness, Provenance::ArchiveHit};
        } else if (auto it = pending_index.find(ph.canonical()); it != pending_index.end()) {
            out[i].provenance = Provenance::ArchiveHit;
            waits_on[i] = it->second;
        } else {
            pending_index.emplace(ph.canonical(), pending.size());
            out[i].provenance = Provenance::Evaluated;
            waits_on[i] = pending.size();
            pending.push_back(&ph);
        }
    }

    std::vector<double> scores(pending.size());
    parallel_for(pending.size(), threads, [&](std::size_t k) { scores[k] = evaluator(*pending[k]); });

    // Replay inserts in input order so the archive matches one-at-a-time assignment.
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].provenance == Provenance::Preselected) {
            archive.insert_preselected(phenotypes[i]->canonical(), nonviable_fitness, generation);
        } else if (waits_on[i]) {
            out[i].fitness = scores[*waits_on[i]];
            if (out[i].provenance == Provenance::Evaluated) {
                archive.insert_evaluated(phenotypes[i]->canonical(), out[i].fitness, generation);
            }
        }
    }
    return out;
}

std::size_t tournament_select(std::span<const Individual> population, int k, Rng& rng) {
    if (population.empty() || k < 1) {
        throw std::invalid_argument("tournament needs a non-empty population and k >= 1");
    }
    std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
    std::vector<std::size_t> best;
    for (int draw = 0; draw < k; ++draw) {
        const auto i = pick(rng);
        if (best.empty() || population[i].fitness > population[best.front()].fitness) {
            best.assign(1, i);
        } else if (population[i].fitness == population[best.front()].fitness) {
            best.push_back(i);
        }
    }
    if (best.size() == 1) {
        return best.front();
    }
    std::uniform_int_distribution<std::size_t> tie(0, best.size() - 1);
    return best[tie(rng)];
}

namespace {

constexpr std::uint64_t kInitStream = 0x1A17;
constexpr std::uint64_t kOffspringStream = 0x0FF5;

void summarize_population(const std::vector<Individual>& population, GenerationStats& stats) {
    stats.best_fitness = population.front().fitness;
    double total = 0.0;
    stats.fitness_histogram.fill(0);
    for (const auto& ind : population) {
        stats.best_fitness = std::max(stats.best_fitness, ind.fitness);
        total += ind.fitness;
        const int bin = std::clamp(static_cast<int>(std::floor(ind.fitness * kHistogramBins)), 0, kHistogramBins - 1);
        ++stats.fitness_histogram[static_cast<std::size_t>(bin)];
    }
    stats.mean_fitness = total / static_cast<double>(population.size());
}

void score_offspring(std::span<Individual> offspring, Archive& archive, const Evaluator& evaluator, int generation,
                     double nonviable_fitness, int threads, GenerationStats& stats) {
    std::vector<const Phenotype*> phenotypes;
    phenotypes.reserve(offspring.size());
    for (const auto& ind : offspring) {
        phenotypes.push_back(&ind.phenotype);
    }
    const auto assigned = assign_fitness_batch(phenotypes, archive, evaluator, generation, nonviable_fitness, threads);
    for (std::size_t i = 0; i < offspring.size(); ++i) {
        offspring[i].fitness = assigned[i].fitness;
        offspring[i].evaluated = assigned[i].provenance == Provenance::Evaluated;
        switch (assigned[i].provenance) {
            case Provenance::Preselected: ++stats.preselection_rejections; break;
            case Provenance::ArchiveHit: ++stats.archive_hits; break;
            case Provenance::Evaluated: ++stats.new_evaluations; break;
        }
    }
}

Individual make_individual(const Grammar& grammar, Genotype genotype, int max_depth, Rng& rng) {
    Individual ind;
    auto outcome = map_genotype(grammar, genotype, max_depth, rng);
    ind.genotype = std::move(genotype);
    ind.phenotype = std::move(outcome.phenotype);
    ind.consumed = std::move(outcome.consumed);
    return ind;
}

}  // namespace

PopulationState initialize_population(const EvolutionConfig& config, const Grammar& grammar,
                                      const Evaluator& evaluator, GenerationStats& stats, int eval_threads) {
    config.validate();
    PopulationState state;
    state.population.reserve(static_cast<std::size_t>(config.population_size));
    for (int slot = 0; slot < config.population_size; ++slot) {
        Rng rng = make_rng(config.master_seed, {kInitStream, static_cast<std::uint64_t>(slot)});
        auto genotype = random_genotype(grammar, config.max_depth, rng);
        state.population.push_back(make_individual(grammar, std::move(genotype), config.max_depth, rng));
    }
    stats = GenerationStats{};
    score_offspring(state.population, state.archive, evaluator, 0, config.task.nonviable_fitness, eval_threads,
                    stats);
    summarize_population(state.population, stats);
    return state;
}

GenerationStats step_generation(PopulationState& state, const EvolutionConfig& config, const Grammar& grammar,
                                const Evaluator& evaluator, int eval_threads) {
    const int generation = state.generation + 1;
    const auto& parents = state.population;
    const auto size = parents.size();

    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return parents[a].fitness > parents[b].fitness; });

    const auto elites = std::min<std::size_t>(static_cast<std::size_t>(config.elite_count()), size);
    std::vector<Individual> next;
    next.reserve(size);
    for (std::size_t e = 0; e < elites; ++e) {
        next.push_back(parents[order[e]]);
    }

    GenerationStats stats;
    stats.generation = generation;
    for (std::size_t slot = elites; slot < size; ++slot) {
        Rng rng = make_rng(config.master_seed,
                           {kOffspringStream, static_cast<std::uint64_t>(generation), static_cast<std::uint64_t>(slot)});
        const Individual& a = parents[tournament_select(parents, config.tournament_size, rng)];

        Genotype child;
        std::vector<int> mask;
        if (config.crossover_rate > 0.0 && std::bernoulli_distribution(config.crossover_rate)(rng)) {
            const Individual& b = parents[tournament_select(parents, config.tournament_size, rng)];
            child = crossover(a.genotype, b.genotype, grammar, rng);
            // The recombined genotype has no mapping yet; map it to find its active codons.
            mask = map_genotype(grammar, child, config.max_depth, rng).consumed;
            ++stats.crossovers;
        } else {
            child = a.genotype;
            mask = a.consumed;
        }
        child = mutate(child, grammar, config.mutation_policy, mask, rng);
        next.push_back(make_individual(grammar, std::move(child), config.max_depth, rng));
    }

    score_offspring(std::span(next).subspan(elites), state.archive, evaluator, generation,
                    config.task.nonviable_fitness, eval_threads, stats);
    summarize_population(next, stats);

    state.population = std::move(next);
    state.generation = generation;
    return stats;
}

RunRecord run(const EvolutionConfig& config, const Grammar& grammar, const Evaluator& evaluator,
              std::string grammar_name, const RunOptions& options) {
    config.validate();
    RunRecord record;
    record.config = config;
    record.grammar_name = std::move(grammar_name);

    bool have_best = false;
    auto track_best = [&](const PopulationState& state) {
        for (const auto& ind : state.population) {
            if (!have_best || ind.fitness > record.best_individual.fitness) {
                record.best_individual = ind;
                record.best_generation = state.generation;
                have_best = true;
            }
        }
    };

    GenerationStats stats;
    PopulationState state = initialize_population(config, grammar, evaluator, stats, options.eval_threads);
    record.generation_stats.push_back(stats);
    track_best(state);
    if (options.on_generation) {
        options.on_generation(state, stats);
    }

    for (int g = 0; g < config.generations; ++g) {
        stats = step_generation(state, config, grammar, evaluator, options.eval_threads);
        record.generation_stats.push_back(stats);
        track_best(state);
        if (options.on_generation) {
            options.on_generation(state, stats);
        }
    }

    record.unique_viable_count = unique_viable_behaviors(state.archive);
    record.evaluations_performed = state.archive.evaluations_performed();
    record.archive_size = state.archive.size();
    return record;
}

RunRecord run(const EvolutionConfig& config, const RunOptions& options) {
    const auto name = default_grammar_name(config.approach);
    const TaskEvaluator evaluator(config.task);
    return run(
        config, bundled_grammar(name), [&](const Phenotype& ph) { return evaluator(ph); }, std::string(name),
        options);
}

}  // namespace facilmut
