#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "facilmut/experiment.hpp"

namespace fs = std::filesystem;
using namespace facilmut;

namespace {

struct RunFlags {
    std::string spec_path;
    std::string out;
    int jobs = 1;
    std::optional<std::uint64_t> seed_base;
    std::optional<std::uint64_t> seed_count;
    std::vector<std::string> approaches;
};

int do_run(const RunFlags& flags) {
    ExperimentSpec spec;
    try {
        if (!flags.spec_path.empty()) {
            std::ifstream in(flags.spec_path);
            if (!in) {
                std::cerr << "error: cannot read spec " << flags.spec_path << "\n";
                return kExitUsage;
            }
            spec = parse_experiment_spec(json::parse(in), fs::path(flags.spec_path).parent_path());
        }
        if (!flags.approaches.empty()) {
            spec.approaches.clear();
            for (const auto& a : flags.approaches) {
                spec.approaches.push_back(parse_approach(a));
            }
        } else if (spec.approaches.empty()) {
            spec.approaches.assign(kAllApproaches.begin(), kAllApproaches.end());
        }
        if (flags.seed_base || flags.seed_count) {
            spec.seeds.clear();
            const auto base = flags.seed_base.value_or(1);
            for (std::uint64_t i = 0; i < flags.seed_count.value_or(1); ++i) {
                spec.seeds.push_back(base + i);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    if (!flags.out.empty()) {
        spec.output_dir = flags.out;
    } else if (spec.output_dir.empty()) {
        if (const char* env = std::getenv("FACILMUT_OUT"); env != nullptr && *env != '\0') {
            spec.output_dir = env;
        }
    }
    return cmd_run(spec, flags.jobs, std::cout, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grammar-guided evolution of optimizer update rules with per-non-terminal mutation rates"};
    app.require_subcommand(1);

    RunFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "Run every (approach, seed) pair of an experiment");
    run_cmd->add_option("--spec", run_flags.spec_path, "Experiment spec (JSON)")->check(CLI::ExistingFile);
    run_cmd->add_option("--out", run_flags.out, "Output directory (falls back to $FACILMUT_OUT)");
    run_cmd->add_option("--jobs", run_flags.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed-base", run_flags.seed_base, "First seed (default 1)");
    run_cmd->add_option("--seeds", run_flags.seed_count, "Number of consecutive seeds");
    run_cmd->add_option("--approach", run_flags.approaches, "Approaches, e.g. FMX,FM,OM,OMX")->delimiter(',');

    std::string posthoc_path;
    int repetitions = 15;
    auto* posthoc_cmd = app.add_subcommand("posthoc", "Extended retraining of each approach's champion");
    posthoc_cmd->add_option("path", posthoc_path, "Batch or run directory")->required();
    posthoc_cmd->add_option("--repetitions", repetitions, "Independent repetitions")->check(CLI::PositiveNumber);

    std::string compare_path;
    auto* compare_cmd = app.add_subcommand("compare", "Pairwise statistics across approaches of a batch");
    compare_cmd->add_option("batch", compare_path, "Batch directory")->required();

    std::string grammar_path;
    auto* validate_cmd = app.add_subcommand("validate", "Check a grammar file and list its non-terminals");
    validate_cmd->add_option("grammar", grammar_path, "Grammar file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (*run_cmd) {
        return do_run(run_flags);
    }
    if (*posthoc_cmd) {
        return cmd_posthoc(posthoc_path, repetitions, std::cout, std::cerr);
    }
    if (*compare_cmd) {
        return cmd_compare(compare_path, std::cout, std::cerr);
    }
    return cmd_validate(grammar_path, std::cout, std::cerr);
}
