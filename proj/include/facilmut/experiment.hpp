#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "facilmut/evolution.hpp"
#include "facilmut/serialize.hpp"

namespace facilmut {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// A batch of runs: every approach crossed with every seed.
struct ExperimentSpec {
    std::vector<Approach> approaches;
    std::vector<std::uint64_t> seeds;
    /// Bundled per-approach grammar when empty.
    std::optional<std::filesystem::path> grammar_path;
    /// Sparse EvolutionConfig overrides, see apply_overrides.
    json overrides = json::object();
    std::filesystem::path output_dir;
};

/// Reads {"approaches": [...], "seeds": [..] | {"base": b, "count": n},
/// "grammar_path": ..., "overrides": {...}, "output_dir": ...}. Every field is
/// optional here; cmd_run checks completeness. Relative grammar paths resolve
/// against `base_dir`.
ExperimentSpec parse_experiment_spec(const json& j, const std::filesystem::path& base_dir = {});

/// Reads a grammar file; errors carry the path.
Grammar load_grammar(const std::filesystem::path& path);

/// Terminals that are neither operators nor bindable, in sorted order.
std::vector<std::string> unbound_terminals(const Grammar& grammar);

/// Directory of one run relative to the batch output directory.
std::filesystem::path run_directory(Approach approach, std::uint64_t seed);

/// Executes every (approach, seed) pair on up to `jobs` workers, writing
/// runs/<APPROACH>-seed<seed>/{generations.csv,run.json} and manifest.json.
int cmd_run(const ExperimentSpec& spec, int jobs, std::ostream& out, std::ostream& err);

/// Post-hoc analysis of the best individual per approach in a batch (or of a
/// single run directory); writes posthoc.json into `path`.
int cmd_posthoc(const std::filesystem::path& path, int repetitions, std::ostream& out, std::ostream& err);

/// Writes comparison.csv into the batch directory and prints the summary table.
int cmd_compare(const std::filesystem::path& batch, std::ostream& out, std::ostream& err);

/// Prints the grammar inventory; exit 0 iff it parses and every terminal binds.
int cmd_validate(const std::filesystem::path& grammar_path, std::ostream& out, std::ostream& err);

}  // namespace facilmut
