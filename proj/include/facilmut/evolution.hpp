#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facilmut/fitness.hpp"
#include "facilmut/grammar.hpp"
#include "facilmut/phenotype.hpp"
#include "facilmut/random.hpp"
#include "facilmut/sge.hpp"

namespace facilmut {

/// The four compared setups: facilitated mutation with rare crossover,
/// facilitated mutation alone, homogeneous mutation alone, homogeneous
/// mutation with heavy crossover.
enum class Approach { FMX, FM, OM, OMX };

inline constexpr std::array<Approach, 4> kAllApproaches = {Approach::FMX, Approach::FM, Approach::OM, Approach::OMX};

std::string_view to_string(Approach approach);
/// Case-insensitive. Throws std::invalid_argument for unknown names.
Approach parse_approach(std::string_view name);

/// Bundled grammar used when no grammar is given: the restructured grammar for
/// FMX/FM, the original layout for OM/OMX.
std::string_view default_grammar_name(Approach approach);

struct EvolutionConfig {
    Approach approach = Approach::FMX;
    int population_size = 100;
    int generations = 200;
    double elitism_fraction = 0.01;
    int tournament_size = 2;
    int max_depth = 17;
    double crossover_rate = 0.01;
    MutationPolicy mutation_policy = MutationPolicy::facilitated();
    std::uint64_t master_seed = 0;
    FitnessTaskConfig task;

    /// Evolutionary parameters of the named setup; everything else at defaults.
    static EvolutionConfig preset(Approach approach);

    int elite_count() const;
    void validate() const;
    bool operator==(const EvolutionConfig&) const = default;
};

enum class Provenance { Preselected, ArchiveHit, Evaluated };

std::string_view to_string(Provenance provenance);

struct Individual {
    Genotype genotype;
    Phenotype phenotype;
    /// Active codon counts from the latest mapping; the mutation mask.
    std::vector<int> consumed;
    double fitness = 0.0;
    /// True only when the fitness came from a training run.
    bool evaluated = false;
};

/// Run-scoped memo of canonical phenotype -> fitness.
class Archive {
public:
    struct Entry {
        double fitness = 0.0;
        int first_seen_generation = 0;
        long evaluation_count_at_insert = 0;
        /// False for pre-selected (non-gradient) phenotypes.
        bool trained = false;
    };

    const Entry* find(const std::string& canonical) const;
    /// Records a training result. Throws std::logic_error on a repeat insert.
    void insert_evaluated(const std::string& canonical, double fitness, int generation);
    /// Records a pre-selection placeholder; no-op if already present.
    void insert_preselected(const std::string& canonical, double fitness, int generation);

    long evaluations_performed() const noexcept { return evaluations_performed_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

private:
    std::map<std::string, Entry> entries_;
    long evaluations_performed_ = 0;
};

/// Scores a gradient-using phenotype by training. Must be deterministic and
/// safe to call concurrently.
using Evaluator = std::function<double(const Phenotype&)>;

struct FitnessAssignment {
    double fitness = 0.0;
    Provenance provenance = Provenance::Preselected;
};

/// Pre-selection, then archive lookup, then evaluation.
FitnessAssignment assign_fitness(const Phenotype& phenotype, Archive& archive, const Evaluator& evaluator,
                                 int generation, double nonviable_fitness = 0.1);

/// Same outcome as calling assign_fitness on each phenotype in order, with the
/// distinct new phenotypes trained on up to `threads` workers.
std::vector<FitnessAssignment> assign_fitness_batch(std::span<const Phenotype* const> phenotypes, Archive& archive,
                                                    const Evaluator& evaluator, int generation,
                                                    double nonviable_fitness, int threads);

/// Index of the fittest of k uniform draws with replacement; ties broken
/// uniformly among the tied draws.
std::size_t tournament_select(std::span<const Individual> population, int k, Rng& rng);

inline constexpr int kHistogramBins = 20;

struct GenerationStats {
    int generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
    std::array<int, kHistogramBins> fitness_histogram{};
    int new_evaluations = 0;
    int archive_hits = 0;
    int preselection_rejections = 0;
    int crossovers = 0;
};

struct PopulationState {
    int generation = 0;
    std::vector<Individual> population;
    Archive archive;
};

struct RunRecord {
    EvolutionConfig config;
    std::string grammar_name;
    std::vector<GenerationStats> generation_stats;
    Individual best_individual;
    int best_generation = 0;
    int unique_viable_count = 0;
    long evaluations_performed = 0;
    std::size_t archive_size = 0;
};

struct RunOptions {
    /// Workers for fitness evaluation inside one generation; does not affect results.
    int eval_threads = 1;
    /// Called after each generation's stats are recorded.
    std::function<void(const PopulationState&, const GenerationStats&)> on_generation;
};

/// Samples, maps and scores the initial population (generation 0).
PopulationState initialize_population(const EvolutionConfig& config, const Grammar& grammar,
                                      const Evaluator& evaluator, GenerationStats& stats, int eval_threads = 1);

/// Elites first, then tournament-selected offspring: optional crossover,
/// per-codon mutation, mapping, fitness assignment. Randomness for slot s of
/// generation g comes from a stream derived from (master_seed, g, s).
GenerationStats step_generation(PopulationState& state, const EvolutionConfig& config, const Grammar& grammar,
                                const Evaluator& evaluator, int eval_threads = 1);

RunRecord run(const EvolutionConfig& config, const Grammar& grammar, const Evaluator& evaluator,
              std::string grammar_name, const RunOptions& options = {});

/// Runs with the bundled grammar for the approach and the synthetic task.
RunRecord run(const EvolutionConfig& config, const RunOptions& options = {});

}  // namespace facilmut
