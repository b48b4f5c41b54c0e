#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "facilmut/evolution.hpp"
#include "facilmut/fitness.hpp"
#include "facilmut/grammar.hpp"
#include "facilmut/sge.hpp"

namespace facilmut {

using json = nlohmann::ordered_json;

/// {"<bare non-terminal name>": [codons...], ...} in grammar order.
json genotype_to_json(const Genotype& genotype, const Grammar& grammar);
/// Missing names become empty lists; unknown names or out-of-range codons throw.
Genotype genotype_from_json(const json& j, const Grammar& grammar);

json to_json(const MutationPolicy& policy);
json to_json(const FitnessTaskConfig& config);
json to_json(const EvolutionConfig& config);

/// Overwrites the fields present in `overrides`; unknown keys throw
/// std::invalid_argument so typos in experiment files surface.
void apply_overrides(FitnessTaskConfig& config, const json& overrides);
void apply_overrides(EvolutionConfig& config, const json& overrides);

/// Preset for j["approach"] with the remaining fields applied as overrides.
EvolutionConfig config_from_json(const json& j);

json to_json(const GenerationStats& stats);
json to_json(const RunRecord& record, const Grammar& grammar);

/// Header plus one row per generation:
/// generation,best_fitness,mean_fitness,new_evaluations,archive_hits,preselection_rejections
std::string generations_csv(const std::vector<GenerationStats>& stats);
inline constexpr const char* kGenerationsCsvHeader =
    "generation,best_fitness,mean_fitness,new_evaluations,archive_hits,preselection_rejections";

json to_json(const PostHocResult& result);

/// Real numbers as text with 17 significant digits.
std::string format_real(double value);

}  // namespace facilmut
