#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "promptfwa/problems.hpp"
#include "promptfwa/rng.hpp"

namespace promptfwa::fwa {

using problems::Instance;

/// `baseline` is the plain initial fireworks algorithm (uniform moves);
/// `appendix` is the guided, LP-repairing operator set for aircraft landing.
enum class Preset { baseline, appendix };

enum class Encoding {
    permutation,          // airland, flowshop
    fixed_weight_binary,  // pmedian: exactly p ones
    group_labels,         // epp: labels 1..8, every label used
};

std::string_view to_string(Preset preset);
Preset preset_from_string(std::string_view name);
Encoding encoding_of(const Instance& instance);

class ConfigError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FwaParams {
    std::size_t fw_size = 5;
    std::size_t sp_size = 20;
    double init_amp = 5;
    std::size_t max_iter = 200;
    double mutation_rate = 0.2;
    std::size_t stall_limit = 10;

    /// Throws ConfigError on fw_size < 1, sp_size < fw_size, rate outside [0, 1].
    void validate() const;
};

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

struct Individual {
    std::vector<int> payload;
    double fitness = kInfeasible;  // minimization; +inf when infeasible
    std::vector<double> times;     // airland only: landing times by sequence position
};

/// Converts an individual's payload to a problem-suite solution.
problems::Solution to_solution(const Instance& instance, const Individual& ind);

/// Builds an individual from a payload, computing its fitness (and times for airland).
Individual make_individual(const Instance& instance, std::vector<int> payload);

/// True when the payload satisfies its encoding's structural constraint.
bool structurally_valid(const Instance& instance, std::span<const int> payload);

struct EvaluationBudget {
    std::optional<std::size_t> max_evaluations;
    std::optional<std::chrono::duration<double>> wall_clock;
};

/// Counts evaluations against a budget and remembers the best solution seen.
/// Fitness comes from the problem-suite evaluator on the individual's solution.
class BudgetedEvaluator {
  public:
    BudgetedEvaluator(const Instance& instance, EvaluationBudget budget);

    /// Evaluates and charges one evaluation; nullopt (and no charge) once the budget is spent.
    std::optional<double> compute(const Individual& ind);
    bool stop() const;
    std::size_t evaluations() const { return evaluations_; }
    const std::optional<Individual>& best() const { return best_; }
    double best_fitness() const { return best_ ? best_fitness_ : kInfeasible; }

  private:
    const Instance& instance_;
    EvaluationBudget budget_;
    std::chrono::steady_clock::time_point start_;
    std::size_t evaluations_ = 0;
    std::optional<Individual> best_;
    double best_fitness_ = kInfeasible;
};

std::vector<Individual> initialize_population(const Instance& instance, Preset preset, const FwaParams& params, Rng& rng);
std::vector<Individual> initialize_population(const Instance& instance, Preset preset, const FwaParams& params,
                                              std::uint64_t seed);

/// clamp(floor(init_amp * (1.5 - f / max_f)), 1, fw_size) per firework.
/// Non-finite fitnesses count as the worst (f = max_f); when no finite positive
/// maximum exists every firework gets clamp(floor(init_amp), 1, fw_size).
std::vector<int> adaptive_amplitudes(std::span<const double> fitnesses, double init_amp, std::size_t fw_size);

/// Up to max(1, sp_size / fw_size) pairwise-distinct sparks, none equal to the firework.
std::vector<Individual> explode(const Instance& instance, const Individual& firework, int amp, Preset preset,
                                const FwaParams& params, Rng& rng);

/// At most max(1, floor(|sparks| * mutation_rate)) mutants, each distinct from every spark.
std::vector<Individual> mutate_sparks(const Instance& instance, std::span<const Individual> sparks, const FwaParams& params,
                                      Preset preset, Rng& rng);

/// Elite, diversity, fill and duplicate rounds over population + sparks + mutants.
std::vector<Individual> select_next(const Instance& instance, std::span<const Individual> population,
                                    std::span<const Individual> sparks, std::span<const Individual> mutants,
                                    const FwaParams& params);

struct FwaResult {
    problems::Solution solution;
    double objective = kInfeasible;  // +inf when nothing feasible was found
    bool feasible = false;
    std::vector<double> trace;  // global best fitness after each iteration's evaluation
    std::size_t evaluations = 0;
    std::size_t iterations = 0;
};

FwaResult run_fwa(const Instance& instance, Preset preset, const FwaParams& params, EvaluationBudget budget,
                  std::uint64_t seed);

}  // namespace promptfwa::fwa
