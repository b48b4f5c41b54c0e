#include "facilmut/experiment.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "facilmut/bundled_grammars.hpp"
#include "facilmut/fitness.hpp"
#include "facilmut/metrics.hpp"
#include "facilmut/parallel.hpp"

namespace fs = std::filesystem;

namespace facilmut {

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot read {}", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    }
    out << text;
    if (!out) {
        throw std::runtime_error(fmt::format("failed writing {}", path.string()));
    }
}

json read_json(const fs::path& path) {
    const auto text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(fmt::format("corrupt JSON in {}: {}", path.string(), e.what()));
    }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct LoadedRun {
    Approach approach;
    std::uint64_t seed;
    fs::path directory;
    json record;
};

// Completed runs of a batch, in manifest order.
std::vector<LoadedRun> load_batch(const fs::path& batch) {
    const auto manifest = read_json(batch / "manifest.json");
    std::vector<LoadedRun> runs;
    try {
        for (const auto& entry : manifest.at("runs")) {
            if (entry.at("status").get<std::string>() != "completed") {
                continue;
            }
            LoadedRun r{parse_approach(entry.at("approach").get<std::string>()), entry.at("seed").get<std::uint64_t>(),
                        batch / entry.at("directory").get<std::string>(), {}};
            r.record = read_json(r.directory / "run.json");
            runs.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error(fmt::format("malformed manifest or run record under {}: {}", batch.string(), e.what()));
    }
    return runs;
}

}  // namespace

ExperimentSpec parse_experiment_spec(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) {
        throw std::invalid_argument("experiment spec must be a JSON object");
    }
    ExperimentSpec spec;
    for (const auto& [key, v] : j.items()) {
        if (key == "approaches") {
            for (const auto& a : v) {
                spec.approaches.push_back(parse_approach(a.get<std::string>()));
            }
        } else if (key == "seeds") {
            if (v.is_array()) {
                spec.seeds = v.get<std::vector<std::uint64_t>>();
            } else if (v.is_object()) {
                const auto base = v.at("base").get<std::uint64_t>();
                const auto count = v.at("count").get<std::uint64_t>();
                for (std::uint64_t i = 0; i < count; ++i) {
                    spec.seeds.push_back(base + i);
                }
            } else {
                throw std::invalid_argument("'seeds' must be an array or {\"base\": b, \"count\": n}");
            }
        } else if (key == "grammar_path") {
            fs::path p = v.get<std::string>();
            spec.grammar_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        } else if (key == "overrides") {
            spec.overrides = v;
        } else if (key == "output_dir") {
            spec.output_dir = v.get<std::string>();
        } else {
            throw std::invalid_argument(fmt::format("unknown experiment spec field '{}'", key));
        }
    }
    return spec;
}

Grammar load_grammar(const fs::path& path) {
    const auto text = read_text(path);
    try {
        return parse_grammar(text);
    } catch (const GrammarError& e) {
        throw GrammarError(fmt::format("{}:{}", path.string(), e.what()));
    }
}

std::vector<std::string> unbound_terminals(const Grammar& grammar) {
    std::vector<std::string> out;
    for (const auto& t : grammar.terminals()) {
        if (!is_bindable_terminal(t) && !is_operator_terminal(t)) {
            out.push_back(t);
        }
    }
    return out;
}

fs::path run_directory(Approach approach, std::uint64_t seed) {
    return fs::path("runs") / fmt::format("{}-seed{}", to_string(approach), seed);
}

int cmd_run(const ExperimentSpec& spec, int jobs, std::ostream& out, std::ostream& err) {
    if (spec.approaches.empty() || spec.seeds.empty()) {
        err << "error: the experiment needs at least one approach and one seed\n";
        return kExitUsage;
    }
    if (spec.output_dir.empty()) {
        err << "error: no output directory (use --out, output_dir, or FACILMUT_OUT)\n";
        return kExitUsage;
    }

    std::optional<Grammar> custom;
    if (spec.grammar_path) {
        try {
            custom = load_grammar(*spec.grammar_path);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kExitUsage;
        }
    }
    auto grammar_for = [&](Approach a) -> const Grammar& {
        return custom ? *custom : bundled_grammar(default_grammar_name(a));
    };
    auto grammar_label = [&](Approach a) {
        return custom ? spec.grammar_path->generic_string() : std::string(default_grammar_name(a));
    };

    struct Task {
        Approach approach;
        std::uint64_t seed;
        EvolutionConfig config;
    };
    std::vector<Task> tasks;
    try {
        for (auto approach : spec.approaches) {
            const auto unbound = unbound_terminals(grammar_for(approach));
            if (!unbound.empty()) {
                err << fmt::format("error: grammar {} has unbound terminal(s): {}\n", grammar_label(approach),
                                   fmt::join(unbound, ", "));
                return kExitUsage;
            }
            for (auto seed : spec.seeds) {
                EvolutionConfig config = EvolutionConfig::preset(approach);
                apply_overrides(config, spec.overrides);
                config.master_seed = seed;
                config.validate();
                if (config.max_depth < grammar_for(approach).start().min_depth) {
                    throw std::invalid_argument(fmt::format("max_depth {} is too small for grammar {}",
                                                            config.max_depth, grammar_label(approach)));
                }
                tasks.push_back({approach, seed, std::move(config)});
            }
        }
        fs::create_directories(spec.output_dir / "runs");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    std::vector<std::string> status(tasks.size(), "skipped");
    std::vector<std::string> errors(tasks.size());
    std::vector<std::string> summaries(tasks.size());
    std::atomic<bool> abort{false};

    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        if (abort) {
            return;
        }
        const auto& task = tasks[i];
        const auto dir = spec.output_dir / run_directory(task.approach, task.seed);
        try {
            fs::create_directories(dir);
            const Grammar& grammar = grammar_for(task.approach);
            const TaskEvaluator evaluator(task.config.task);
            const auto record = run(
                task.config, grammar, [&](const Phenotype& ph) { return evaluator(ph); },
                grammar_label(task.approach));
            write_text(dir / "generations.csv", generations_csv(record.generation_stats));
            write_text(dir / "run.json", dump(to_json(record, grammar)));
            status[i] = "completed";
            summaries[i] = fmt::format("best {:.4f}  final mean {:.4f}  viable {}  evaluations {}",
                                       record.best_individual.fitness, record.generation_stats.back().mean_fitness,
                                       record.unique_viable_count, record.evaluations_performed);
        } catch (const std::exception& e) {
            status[i] = "failed";
            errors[i] = e.what();
            abort = true;
            try {
                write_text(dir / "error.txt", errors[i] + "\n");
            } catch (...) {
            }
        }
    });

    json manifest;
    manifest["approaches"] = json::array();
    for (auto a : spec.approaches) {
        manifest["approaches"].push_back(to_string(a));
    }
    manifest["seeds"] = spec.seeds;
    manifest["overrides"] = spec.overrides;
    manifest["runs"] = json::array();
    bool ok = true;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        json entry{{"approach", to_string(tasks[i].approach)},
                   {"seed", tasks[i].seed},
                   {"directory", run_directory(tasks[i].approach, tasks[i].seed).generic_string()},
                   {"grammar", grammar_label(tasks[i].approach)},
                   {"status", status[i]}};
        if (!errors[i].empty()) {
            entry["error"] = errors[i];
        }
        manifest["runs"].push_back(std::move(entry));
        ok = ok && status[i] == "completed";
    }
    try {
        write_text(spec.output_dir / "manifest.json", dump(manifest));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        out << fmt::format("{:<4} seed {:<6} {:<9} {}\n", to_string(tasks[i].approach), tasks[i].seed, status[i],
                           status[i] == "failed" ? errors[i] : summaries[i]);
    }
    return ok ? kExitOk : kExitRuntime;
}

int cmd_posthoc(const fs::path& path, int repetitions, std::ostream& out, std::ostream& err) {
    if (repetitions < 1) {
        err << "error: repetitions must be at least 1\n";
        return kExitUsage;
    }
    try {
        std::vector<LoadedRun> runs;
        if (fs::exists(path / "manifest.json")) {
            runs = load_batch(path);
        } else if (fs::exists(path / "run.json")) {
            auto record = read_json(path / "run.json");
            const auto config = config_from_json(record.at("config"));
            runs.push_back({config.approach, config.master_seed, path, std::move(record)});
        } else {
            err << fmt::format("error: {} has neither manifest.json nor run.json\n", path.string());
            return kExitRuntime;
        }
        if (runs.empty()) {
            err << "error: no completed runs found\n";
            return kExitRuntime;
        }

        // Highest evolution-time fitness per approach; earlier runs win ties.
        std::map<Approach, const LoadedRun*> champions;
        for (const auto& r : runs) {
            const double f = r.record.at("best_individual").at("fitness").get<double>();
            auto [it, inserted] = champions.emplace(r.approach, &r);
            if (!inserted && f > it->second->record.at("best_individual").at("fitness").get<double>()) {
                it->second = &r;
            }
        }

        json report;
        report["repetitions"] = repetitions;
        report["champions"] = json::array();
        for (const auto& [approach, champ] : champions) {
            const auto config = config_from_json(champ->record.at("config"));
            const auto& best = champ->record.at("best_individual");
            const auto canonical = best.at("canonical").get<std::string>();
            const auto result = post_hoc(parse_phenotype(canonical), config.task, repetitions);

            json entry{{"approach", to_string(approach)},
                       {"seed", champ->seed},
                       {"run_directory", fs::relative(champ->directory, path).generic_string()},
                       {"evolution_fitness", best.at("fitness")}};
            const json result_json = to_json(result);
            for (const auto& [k, v] : result_json.items()) {
                entry[k] = v;
            }
            entry["task"] = to_json(config.task);
            report["champions"].push_back(std::move(entry));

            out << fmt::format("{:<4} seed {:<6} evolution {:.4f}  post-hoc test {:.4f} +/- {:.4f}  {}\n",
                               to_string(approach), champ->seed, best.at("fitness").get<double>(),
                               result.mean_test_accuracy, result.stddev_test_accuracy, canonical);
        }
        write_text(path / "posthoc.json", dump(report));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_compare(const fs::path& batch, std::ostream& out, std::ostream& err) {
    std::map<Approach, std::vector<RunMetrics>> metrics;
    try {
        for (const auto& r : load_batch(batch)) {
            const auto& rec = r.record;
            RunMetrics m;
            m.best_fitness = rec.at("best_individual").at("fitness").get<double>();
            m.population_fitness = rec.at("generation_stats").back().at("mean_fitness").get<double>();
            m.unique_viable = rec.at("unique_viable_count").get<double>();
            m.evaluations = rec.at("evaluations_performed").get<double>();
            metrics[r.approach].push_back(m);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }

    if (metrics.size() < 2) {
        err << "error: insufficient samples: comparison needs at least two approaches\n";
        return kExitUsage;
    }
    for (const auto& [approach, list] : metrics) {
        if (list.size() < 2) {
            err << fmt::format("error: insufficient samples: approach {} has {} completed run(s), need 2\n",
                               to_string(approach), list.size());
            return kExitUsage;
        }
    }

    try {
        const auto report = build_comparison(metrics);
        write_text(batch / "comparison.csv", comparison_csv(report));
        out << "Best Fitness is evolution-time fitness of each run's best individual.\n\n";
        out << comparison_table(report);

        if (fs::exists(batch / "posthoc.json")) {
            const auto posthoc = read_json(batch / "posthoc.json");
            out << "\nPost-hoc holdout accuracy of each approach's champion:\n";
            for (const auto& c : posthoc.at("champions")) {
                out << fmt::format("  {:<4} {:.4f} +/- {:.4f}  {}\n", c.at("approach").get<std::string>(),
                                   c.at("mean_test_accuracy").get<double>(), c.at("stddev_test_accuracy").get<double>(),
                                   c.at("canonical").get<std::string>());
            }
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_validate(const fs::path& grammar_path, std::ostream& out, std::ostream& err) {
    std::optional<Grammar> grammar;
    try {
        grammar = load_grammar(grammar_path);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    out << fmt::format("grammar {}: {} non-terminals, start <{}>\n\n", grammar_path.string(), grammar->size(),
                       grammar->start().name);
    out << fmt::format("{:<16} {:>11} {:>9}  {}\n", "non-terminal", "productions", "min_depth", "recursive");
    for (const auto& nt : grammar->nonterminals()) {
        out << fmt::format("{:<16} {:>11} {:>9}  {}\n", "<" + nt.name + ">", nt.productions.size(), nt.min_depth,
                           nt.recursive ? "yes" : "no");
    }

    out << "\nterminals:\n";
    bool bound = true;
    for (const auto& t : grammar->terminals()) {
        std::string_view kind = "UNBOUND";
        if (is_operator_terminal(t)) {
            kind = "operator";
        } else if (t == "grad" || t == "w" || t == "alpha" || t == "beta") {
            kind = "variable";
        } else if (is_bindable_terminal(t)) {
            kind = "literal";
        } else {
            bound = false;
        }
        out << fmt::format("  {:<10} {}\n", t, kind);
    }
    if (!bound) {
        err << fmt::format("error: {}: unbound terminal(s): {}\n", grammar_path.string(),
                           fmt::join(unbound_terminals(*grammar), ", "));
        return kExitUsage;
    }
    out << "\nvalid\n";
    return kExitOk;
}

}  // namespace facilmut
