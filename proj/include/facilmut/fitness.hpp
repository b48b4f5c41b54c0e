#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "facilmut/phenotype.hpp"

namespace facilmut {

/// Synthetic binary classification task standing in for full-scale network
/// training. Evolution-time scoring uses train/validation/fitness splits; the
/// holdout split is reserved for post-hoc analysis.
struct FitnessTaskConfig {
    int feature_dim = 5;
    int train_size = 200;
    int validation_size = 100;
    int fitness_size = 100;
    int holdout_test_size = 200;
    int max_epochs = 100;
    int early_stop_patience = 10;
    std::uint64_t data_seed = 20230701;
    /// Distance between class means in units of the cluster spread.
    double class_separation = 3.5;
    /// Multiplies every feature. Larger inputs make large steps diverge while
    /// leaving the separability of the classes unchanged.
    double feature_scale = 30.0;
    double nonviable_fitness = 0.1;
    int posthoc_train_factor = 4;
    int posthoc_max_epochs = 500;

    void validate() const;
    bool operator==(const FitnessTaskConfig&) const = default;
};

/// Row-major feature matrix with 0/1 labels.
struct Dataset {
    int dim = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t rows() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
};

struct TaskData {
    Dataset train;
    Dataset validation;
    Dataset fitness;
    Dataset holdout;
};

/// Two isotropic Gaussian clusters whose means are `class_separation` apart
/// along the diagonal, scaled by `feature_scale`; labels alternate so classes
/// are balanced. Every split draws from its own stream derived from data_seed.
TaskData generate_task(const FitnessTaskConfig& config);

/// Values an update expression can read. alpha and beta are fixed scalars.
struct EvalEnvironment {
    double grad = 0.0;
    double w = 0.0;
    double alpha = 0.01;
    double beta = 0.9;
};

/// Literal constants offered by the bundled grammars' <const> rule.
inline constexpr std::array<double, 12> kConstantSet = {0.0,  1e-5, 5e-5, 1e-4, 5e-4, 1e-3,
                                                        5e-3, 1e-2, 5e-2, 1e-1, 5e-1, 1.0};

/// Raised when an expression contains a terminal that is neither a variable,
/// a numeric literal nor an operator in a binary position.
class BindingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// True when `token` is a variable name or a numeric literal.
bool is_bindable_terminal(std::string_view token);
/// True for the binary operators + - * /.
bool is_operator_terminal(std::string_view token);

/// Expression compiled to a flat postfix program.
class UpdateRule {
public:
    explicit UpdateRule(const Phenotype& phenotype);

    /// May return a non-finite value; division is protected (x / y = x when |y| <= 1e-8).
    double operator()(const EvalEnvironment& env) const;

private:
    enum class Op : std::uint8_t { Grad, Weight, Alpha, Beta, Literal, Add, Sub, Mul, Div };
    struct Instr {
        Op op;
        double value;
    };

    void emit(const ExprNode& node);

    std::vector<Instr> program_;
    std::size_t max_stack_ = 0;
};

/// Convenience wrapper compiling and evaluating in one call.
double eval_expression(const Phenotype& phenotype, const EvalEnvironment& env);

struct TrainingResult {
    double fitness_accuracy = 0.0;
    double best_validation_accuracy = 0.0;
    int epochs_run = 0;
    bool diverged = false;
};

/// Model parameters are laid out as [w_0 .. w_{dim-1}, bias].
double logistic_loss(const Dataset& data, std::span<const double> params);
std::vector<double> logistic_gradient(const Dataset& data, std::span<const double> params);
double classification_accuracy(const Dataset& data, std::span<const double> params);

/// Options for one training run of the logistic model.
struct TrainingOptions {
    int max_epochs = 100;
    /// Disabled when empty.
    std::optional<int> early_stop_patience;
    double nonviable_fitness = 0.1;
};

/// Full-batch training from zero-initialized parameters with p <- p - rule(grad, p),
/// restoring the best-validation parameters before scoring on `score_set`.
TrainingResult train_logistic(const UpdateRule& rule, const Dataset& train, const Dataset& validation,
                              const Dataset& score_set, const TrainingOptions& options);

/// Evolution-time fitness: train on the training split, early-stop on the
/// validation split, score on the fitness split.
TrainingResult train_and_score(const UpdateRule& rule, const TaskData& data, const FitnessTaskConfig& config);
TrainingResult train_and_score(const Phenotype& phenotype, const TaskData& data, const FitnessTaskConfig& config);

struct PostHocResult {
    std::string canonical;
    std::vector<double> test_accuracies;
    std::vector<double> validation_accuracies;
    double mean_test_accuracy = 0.0;
    double stddev_test_accuracy = 0.0;
    double mean_validation_accuracy = 0.0;
};

/// Repeats extended training (enlarged training split, raised epoch cap, no
/// early stop) on freshly generated data per repetition and scores on the
/// holdout split.
PostHocResult post_hoc(const Phenotype& phenotype, const FitnessTaskConfig& config, int repetitions = 15);

/// Scores phenotypes against one fixed task. Thread-safe: evaluation only
/// reads the shared datasets.
class TaskEvaluator {
public:
    explicit TaskEvaluator(FitnessTaskConfig config);

    double operator()(const Phenotype& phenotype) const;

    const FitnessTaskConfig& config() const noexcept { return config_; }
    const TaskData& data() const noexcept { return data_; }

private:
    FitnessTaskConfig config_;
    TaskData data_;
};

}  // namespace facilmut
