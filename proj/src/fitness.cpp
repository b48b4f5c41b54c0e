#include "facilmut/fitness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "facilmut/random.hpp"

namespace facilmut {

void FitnessTaskConfig::validate() const {
    auto positive = [](std::string_view name, long v) {
        if (v <= 0) {
            throw std::invalid_argument(fmt::format("task.{} must be positive, got {}", name, v));
        }
    };
    positive("feature_dim", feature_dim);
    positive("train_size", train_size);
    positive("validation_size", validation_size);
    positive("fitness_size", fitness_size);
    positive("holdout_test_size", holdout_test_size);
    positive("max_epochs", max_epochs);
    positive("early_stop_patience", early_stop_patience);
    positive("posthoc_train_factor", posthoc_train_factor);
    positive("posthoc_max_epochs", posthoc_max_epochs);
    if (early_stop_patience > max_epochs) {
        throw std::invalid_argument("task.early_stop_patience must not exceed task.max_epochs");
    }
    if (!(class_separation >= 0.0) || !std::isfinite(class_separation)) {
        throw std::invalid_argument("task.class_separation must be finite and non-negative");
    }
    if (!(feature_scale > 0.0) || !std::isfinite(feature_scale)) {
        throw std::invalid_argument("task.feature_scale must be finite and positive");
    }
    if (!(nonviable_fitness >= 0.0 && nonviable_fitness <= 1.0)) {
        throw std::invalid_argument("task.nonviable_fitness must be in [0,1]");
    }
}

namespace {

Dataset draw_split(int rows, int dim, double separation, double scale, Rng rng) {
    Dataset data;
    data.dim = dim;
    data.features.resize(static_cast<std::size_t>(rows) * static_cast<std::size_t>(dim));
    data.labels.resize(static_cast<std::size_t>(rows));
    const double offset = 0.5 * separation / std::sqrt(static_cast<double>(dim));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < rows; ++i) {
        const int label = i % 2;
        data.labels[static_cast<std::size_t>(i)] = label;
        const double shift = label == 1 ? offset : -offset;
        for (int j = 0; j < dim; ++j) {
            data.features[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)] =
                scale * (noise(rng) + shift);
        }
    }
    return data;
}

double linear_score(std::span<const double> x, std::span<const double> params) {
    double z = params.back();
    for (std::size_t j = 0; j < x.size(); ++j) {
        z += params[j] * x[j];
    }
    return z;
}

std::optional<double> parse_literal(std::string_view token) {
    double value = 0.0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

TaskData generate_task(const FitnessTaskConfig& config) {
    config.validate();
    const auto split = [&](int rows, std::uint64_t tag) {
        return draw_split(rows, config.feature_dim, config.class_separation, config.feature_scale,
                          make_rng(config.data_seed, {tag}));
    };
    return TaskData{split(config.train_size, 1), split(config.validation_size, 2), split(config.fitness_size, 3),
                    split(config.holdout_test_size, 4)};
}

bool is_operator_terminal(std::string_view token) {
    return token == "+" || token == "-" || token == "*" || token == "/";
}

bool is_bindable_terminal(std::string_view token) {
    return token == "grad" || token == "w" || token == "alpha" || token == "beta" ||
           parse_literal(token).has_value();
}

UpdateRule::UpdateRule(const Phenotype& phenotype) {
    emit(phenotype.root());
    std::size_t depth = 0;
    for (const auto& instr : program_) {
        if (instr.op >= Op::Add) {
            --depth;
        } else {
            max_stack_ = std::max(max_stack_, ++depth);
        }
    }
}

void UpdateRule::emit(const ExprNode& node) {
    if (node.is_leaf()) {
        const auto& t = node.token;
        if (t == "grad") {
            program_.push_back({Op::Grad, 0.0});
        } else if (t == "w") {
            program_.push_back({Op::Weight, 0.0});
        } else if (t == "alpha") {
            program_.push_back({Op::Alpha, 0.0});
        } else if (t == "beta") {
            program_.push_back({Op::Beta, 0.0});
        } else if (auto v = parse_literal(t)) {
            program_.push_back({Op::Literal, *v});
        } else {
            throw BindingError(fmt::format("unbound terminal '{}'", t));
        }
        return;
    }
    if (node.children.size() != 2 || !is_operator_terminal(node.token)) {
        throw BindingError(fmt::format("unsupported expression '{}'", canonicalize(node)));
    }
    emit(node.children[0]);
    emit(node.children[1]);
    const Op op = node.token == "+" ? Op::Add : node.token == "-" ? Op::Sub : node.token == "*" ? Op::Mul : Op::Div;
    program_.push_back({op, 0.0});
}

double UpdateRule::operator()(const EvalEnvironment& env) const {
    std::array<double, 64> small{};
    std::vector<double> large;
    double* stack = small.data();
    if (max_stack_ > small.size()) {
        large.resize(max_stack_);
        stack = large.data();
    }
    std::size_t top = 0;
    for (const auto& instr : program_) {
        switch (instr.op) {
            case Op::Grad: stack[top++] = env.grad; break;
            case Op::Weight: stack[top++] = env.w; break;
            case Op::Alpha: stack[top++] = env.alpha; break;
            case Op::Beta: stack[top++] = env.beta; break;
            case Op::Literal: stack[top++] = instr.value; break;
            default: {
                const double rhs = stack[--top];
                double& lhs = stack[top - 1];
                switch (instr.op) {
                    case Op::Add: lhs += rhs; break;
                    case Op::Sub: lhs -= rhs; break;
                    case Op::Mul: lhs *= rhs; break;
                    default:
                        if (std::abs(rhs) > 1e-8) {
                            lhs /= rhs;
                        }
                        break;
                }
            }
        }
    }
    return stack[0];
}

double eval_expression(const Phenotype& phenotype, const EvalEnvironment& env) {
    return UpdateRule(phenotype)(env);
}

double logistic_loss(const Dataset& data, std::span<const double> params) {
    // Direct form: a saturated probability yields an infinite loss, which the
    // trainer treats as divergence.
    double total = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-linear_score(data.row(i), params)));
        total -= data.labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return total / static_cast<double>(data.rows());
}

std::vector<double> logistic_gradient(const Dataset& data, std::span<const double> params) {
    std::vector<double> grad(params.size(), 0.0);
    const std::size_t dim = static_cast<std::size_t>(data.dim);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const auto x = data.row(i);
        const double p = 1.0 / (1.0 + std::exp(-linear_score(x, params)));
        const double err = p - data.labels[i];
        for (std::size_t j = 0; j < dim; ++j) {
            grad[j] += err * x[j];
        }
        grad[dim] += err;
    }
    const double n = static_cast<double>(data.rows());
    for (auto& g : grad) {
        g /= n;
    }
    return grad;
}

double classification_accuracy(const Dataset& data, std::span<const double> params) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const int predicted = linear_score(data.row(i), params) > 0.0 ? 1 : 0;
        correct += predicted == data.labels[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data.rows());
}

TrainingResult train_logistic(const UpdateRule& rule, const Dataset& train, const Dataset& validation,
                              const Dataset& score_set, const TrainingOptions& options) {
    std::vector<double> params(static_cast<std::size_t>(train.dim) + 1, 0.0);
    std::vector<double> best_params = params;
    TrainingResult result;
    double best_validation = -1.0;
    int stale = 0;

    for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
        const auto grad = logistic_gradient(train, params);
        EvalEnvironment env;
        for (std::size_t i = 0; i < params.size(); ++i) {
            env.grad = grad[i];
            env.w = params[i];
            params[i] -= rule(env);
        }
        result.epochs_run = epoch;

        const bool finite = std::all_of(params.begin(), params.end(), [](double p) { return std::isfinite(p); });
        if (!finite || !std::isfinite(logistic_loss(train, params))) {
            result.diverged = true;
            result.fitness_accuracy = options.nonviable_fitness;
            result.best_validation_accuracy = std::max(best_validation, 0.0);
            return result;
        }

        const double accuracy = classification_accuracy(validation, params);
        if (accuracy > best_validation) {
            best_validation = accuracy;
            best_params = params;
            stale = 0;
        } else if (options.early_stop_patience && ++stale >= *options.early_stop_patience) {
            break;
        }
    }

    result.best_validation_accuracy = best_validation;
    result.fitness_accuracy = classification_accuracy(score_set, best_params);
    return result;
}

TrainingResult train_and_score(const UpdateRule& rule, const TaskData& data, const FitnessTaskConfig& config) {
    return train_logistic(rule, data.train, data.validation, data.fitness,
                          {config.max_epochs, config.early_stop_patience, config.nonviable_fitness});
}

TrainingResult train_and_score(const Phenotype& phenotype, const TaskData& data, const FitnessTaskConfig& config) {
    return train_and_score(UpdateRule(phenotype), data, config);
}

PostHocResult post_hoc(const Phenotype& phenotype, const FitnessTaskConfig& config, int repetitions) {
    if (repetitions < 1) {
        throw std::invalid_argument("post-hoc repetitions must be at least 1");
    }
    config.validate();
    const UpdateRule rule(phenotype);

    PostHocResult out;
    out.canonical = phenotype.canonical();
    for (int r = 0; r < repetitions; ++r) {
        FitnessTaskConfig rep = config;
        rep.data_seed = derive_seed(config.data_seed, {0x9057'4A0CULL, static_cast<std::uint64_t>(r)});
        rep.train_size = config.train_size * config.posthoc_train_factor;
        const TaskData data = generate_task(rep);
        const auto trained = train_logistic(rule, data.train, data.validation, data.holdout,
                                            {config.posthoc_max_epochs, std::nullopt, config.nonviable_fitness});
        out.test_accuracies.push_back(trained.fitness_accuracy);
        out.validation_accuracies.push_back(trained.best_validation_accuracy);
    }

    const double n = static_cast<double>(repetitions);
    out.mean_test_accuracy = std::accumulate(out.test_accuracies.begin(), out.test_accuracies.end(), 0.0) / n;
    out.mean_validation_accuracy =
        std::accumulate(out.validation_accuracies.begin(), out.validation_accuracies.end(), 0.0) / n;
    if (repetitions > 1) {
        double ss = 0.0;
        for (double a : out.test_accuracies) {
            ss += (a - out.mean_test_accuracy) * (a - out.mean_test_accuracy);
        }
        out.stddev_test_accuracy = std::sqrt(ss / (n - 1.0));
    }
    return out;
}

TaskEvaluator::TaskEvaluator(FitnessTaskConfig config) : config_(config), data_(generate_task(config_)) {}

double TaskEvaluator::operator()(const Phenotype& phenotype) const {
    return train_and_score(phenotype, data_, config_).fitness_accuracy;
}

}  // namespace facilmut
