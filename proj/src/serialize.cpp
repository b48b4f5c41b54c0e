#include "facilmut/serialize.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace facilmut {

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

json genotype_to_json(const Genotype& genotype, const Grammar& grammar) {
    json j = json::object();
    for (std::size_t i = 0; i < grammar.size(); ++i) {
        j[grammar[i].name] = i < genotype.codons.size() ? genotype.codons[i] : std::vector<int>{};
    }
    return j;
}

Genotype genotype_from_json(const json& j, const Grammar& grammar) {
    if (!j.is_object()) {
        throw std::invalid_argument("genotype must be a JSON object");
    }
    Genotype g(grammar.size());
    for (const auto& [name, codons] : j.items()) {
        const auto idx = grammar.index_of(name);
        if (!idx) {
            throw std::invalid_argument(fmt::format("genotype names unknown non-terminal <{}>", name));
        }
        g.codons[*idx] = codons.get<std::vector<int>>();
    }
    if (!is_valid(g, grammar)) {
        throw std::invalid_argument("genotype codon out of range for grammar");
    }
    return g;
}

json to_json(const MutationPolicy& policy) {
    json rates = json::object();
    for (const auto& [name, r] : policy.rates()) {
        rates[name] = r;
    }
    return json{{"default_rate", policy.default_rate()}, {"rates", rates}};
}

json to_json(const FitnessTaskConfig& c) {
    return json{{"feature_dim", c.feature_dim},
                {"train_size", c.train_size},
                {"validation_size", c.validation_size},
                {"fitness_size", c.fitness_size},
                {"holdout_test_size", c.holdout_test_size},
                {"max_epochs", c.max_epochs},
                {"early_stop_patience", c.early_stop_patience},
                {"data_seed", c.data_seed},
                {"class_separation", c.class_separation},
                {"feature_scale", c.feature_scale},
                {"nonviable_fitness", c.nonviable_fitness},
                {"posthoc_train_factor", c.posthoc_train_factor},
                {"posthoc_max_epochs", c.posthoc_max_epochs}};
}

json to_json(const EvolutionConfig& c) {
    return json{{"approach", to_string(c.approach)},
                {"population_size", c.population_size},
                {"generations", c.generations},
                {"elitism_fraction", c.elitism_fraction},
                {"tournament_size", c.tournament_size},
                {"max_depth", c.max_depth},
                {"crossover_rate", c.crossover_rate},
                {"mutation_policy", to_json(c.mutation_policy)},
                {"master_seed", c.master_seed},
                {"task", to_json(c.task)}};
}

namespace {

[[noreturn]] void unknown_key(std::string_view where, std::string_view key) {
    throw std::invalid_argument(fmt::format("unknown {} field '{}'", where, key));
}

template <typename T>
void read(const json& value, std::string_view key, T& out) {
    try {
        out = value.get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(fmt::format("field '{}' has the wrong type", key));
    }
}

}  // namespace

void apply_overrides(FitnessTaskConfig& c, const json& overrides) {
    if (!overrides.is_object()) {
        throw std::invalid_argument("task overrides must be a JSON object");
    }
    for (const auto& [key, v] : overrides.items()) {
        if (key == "feature_dim") read(v, key, c.feature_dim);
        else if (key == "train_size") read(v, key, c.train_size);
        else if (key == "validation_size") read(v, key, c.validation_size);
        else if (key == "fitness_size") read(v, key, c.fitness_size);
        else if (key == "holdout_test_size") read(v, key, c.holdout_test_size);
        else if (key == "max_epochs") read(v, key, c.max_epochs);
        else if (key == "early_stop_patience") read(v, key, c.early_stop_patience);
        else if (key == "data_seed") read(v, key, c.data_seed);
        else if (key == "class_separation") read(v, key, c.class_separation);
        else if (key == "feature_scale") read(v, key, c.feature_scale);
        else if (key == "nonviable_fitness") read(v, key, c.nonviable_fitness);
        else if (key == "posthoc_train_factor") read(v, key, c.posthoc_train_factor);
        else if (key == "posthoc_max_epochs") read(v, key, c.posthoc_max_epochs);
        else unknown_key("task", key);
    }
}

void apply_overrides(EvolutionConfig& c, const json& overrides) {
    if (!overrides.is_object()) {
        throw std::invalid_argument("overrides must be a JSON object");
    }
    for (const auto& [key, v] : overrides.items()) {
        if (key == "population_size") read(v, key, c.population_size);
        else if (key == "generations") read(v, key, c.generations);
        else if (key == "elitism_fraction") read(v, key, c.elitism_fraction);
        else if (key == "tournament_size") read(v, key, c.tournament_size);
        else if (key == "max_depth") read(v, key, c.max_depth);
        else if (key == "crossover_rate") read(v, key, c.crossover_rate);
        else if (key == "master_seed") read(v, key, c.master_seed);
        else if (key == "task") apply_overrides(c.task, v);
        else if (key == "mutation_policy") {
            double fallback = c.mutation_policy.default_rate();
            std::map<std::string, double> rates = c.mutation_policy.rates();
            for (const auto& [pk, pv] : v.items()) {
                if (pk == "default_rate") read(pv, pk, fallback);
                else if (pk == "rates") read(pv, pk, rates);
                else unknown_key("mutation_policy", pk);
            }
            c.mutation_policy = MutationPolicy(fallback, std::move(rates));
        } else {
            unknown_key("evolution config", key);
        }
    }
}

EvolutionConfig config_from_json(const json& j) {
    if (!j.contains("approach")) {
        throw std::invalid_argument("config is missing 'approach'");
    }
    EvolutionConfig c = EvolutionConfig::preset(parse_approach(j.at("approach").get<std::string>()));
    json rest = j;
    rest.erase("approach");
    apply_overrides(c, rest);
    return c;
}

json to_json(const GenerationStats& s) {
    return json{{"generation", s.generation},
                {"best_fitness", s.best_fitness},
                {"mean_fitness", s.mean_fitness},
                {"fitness_histogram", s.fitness_histogram},
                {"new_evaluations", s.new_evaluations},
                {"archive_hits", s.archive_hits},
                {"preselection_rejections", s.preselection_rejections},
                {"crossovers", s.crossovers}};
}

json to_json(const RunRecord& r, const Grammar& grammar) {
    json stats = json::array();
    for (const auto& s : r.generation_stats) {
        stats.push_back(to_json(s));
    }
    const auto& best = r.best_individual;
    return json{{"config", to_json(r.config)},
                {"grammar", r.grammar_name},
                {"generation_stats", stats},
                {"best_individual",
                 {{"canonical", best.phenotype.canonical()},
                  {"fitness", best.fitness},
                  {"generation", r.best_generation},
                  {"genotype", genotype_to_json(best.genotype, grammar)}}},
                {"unique_viable_count", r.unique_viable_count},
                {"evaluations_performed", r.evaluations_performed},
                {"archive_size", r.archive_size}};
}

std::string generations_csv(const std::vector<GenerationStats>& stats) {
    std::string out = kGenerationsCsvHeader;
    out += '\n';
    for (const auto& s : stats) {
        out += fmt::format("{},{},{},{},{},{}\n", s.generation, format_real(s.best_fitness),
                           format_real(s.mean_fitness), s.new_evaluations, s.archive_hits, s.preselection_rejections);
    }
    return out;
}

json to_json(const PostHocResult& r) {
    return json{{"canonical", r.canonical},
                {"test_accuracies", r.test_accuracies},
                {"validation_accuracies", r.validation_accuracies},
                {"mean_test_accuracy", r.mean_test_accuracy},
                {"stddev_test_accuracy", r.stddev_test_accuracy},
                {"mean_validation_accuracy", r.mean_validation_accuracy}};
}

}  // namespace facilmut
