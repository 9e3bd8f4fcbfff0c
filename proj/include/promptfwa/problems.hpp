#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace promptfwa::problems {

/// Raised when instance text or JSON cannot be turned into a valid instance.
/// `line` is 1-based; 0 means the location is not line-addressable (JSON).
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Caller supplied a solution of the wrong shape (length mismatch, wrong problem).
class InputError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
    using std::domain_error::domain_error;
};

enum class Sense { minimize, maximize };
enum class ProblemKind { airland, flowshop, pmedian, epp };

std::string_view to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(std::string_view name);
std::string_view to_string(Sense sense);
Sense sense_from_string(std::string_view name);

/// Dense row-major matrix.
template <class T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, T fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct Plane {
    double appearance = 0;
    double earliest = 0;
    double target = 0;
    double latest = 0;
    double penalty_early = 0;  // per unit of earliness
    double penalty_late = 0;   // per unit of lateness

    friend bool operator==(const Plane&, const Plane&) = default;
};

struct AircraftLandingInstance {
    double freeze_time = 0;  // carried through, never used in scoring
    std::vector<Plane> planes;
    Matrix<double> separation;  // separation(i, j): minimum gap when i lands before j
    int n_runways = 1;

    std::size_t size() const { return planes.size(); }
    friend bool operator==(const AircraftLandingInstance&, const AircraftLandingInstance&) = default;
};

/// Processing times are stored jobs x machines: proc(job, machine).
struct FlowShopInstance {
    Matrix<double> proc;

    std::size_t n_jobs() const { return proc.rows; }
    std::size_t m_machines() const { return proc.cols; }
    friend bool operator==(const FlowShopInstance&, const FlowShopInstance&) = default;
};

struct PMedianInstance {
    std::size_t p = 1;
    Matrix<double> dist;

    std::size_t n_vertices() const { return dist.rows; }
    friend bool operator==(const PMedianInstance&, const PMedianInstance&) = default;
};

struct EppInstance {
    static constexpr int group_count = 8;
    Matrix<int> attrs;  // individuals x attributes, entries 0/1

    std::size_t n_individuals() const { return attrs.rows; }
    std::size_t m_attributes() const { return attrs.cols; }
    friend bool operator==(const EppInstance&, const EppInstance&) = default;
};

using Instance = std::variant<AircraftLandingInstance, FlowShopInstance, PMedianInstance, EppInstance>;

ProblemKind kind_of(const Instance& instance);

// Each validate() throws ParseError (line 0) naming the broken invariant.
void validate(const AircraftLandingInstance& inst);
void validate(const FlowShopInstance& inst);
void validate(const PMedianInstance& inst);
void validate(const EppInstance& inst);
void validate(const Instance& inst);

// ---- solutions ----------------------------------------------------------

struct LandingSchedule {
    std::vector<int> runway;  // empty means every plane on runway 1
    std::vector<double> times;
    friend bool operator==(const LandingSchedule&, const LandingSchedule&) = default;
};

struct JobPermutation {
    std::vector<int> order;
    friend bool operator==(const JobPermutation&, const JobPermutation&) = default;
};

struct MedianSet {
    std::vector<int> vertices;
    friend bool operator==(const MedianSet&, const MedianSet&) = default;
};

/// Labels are 1-based group ids in 1..8.
struct GroupAssignment {
    std::vector<int> labels;
    friend bool operator==(const GroupAssignment&, const GroupAssignment&) = default;
};

using Solution = std::variant<LandingSchedule, JobPermutation, MedianSet, GroupAssignment>;

// ---- evaluation ---------------------------------------------------------

enum class Violation {
    none,
    window,
    separation,
    not_a_permutation,
    cardinality,
    bad_index,
    empty_group,
    bad_label,
};

std::string_view to_string(Violation v);

struct EvaluationOutcome {
    bool feasible = false;
    std::optional<double> objective;  // engaged iff feasible
    Violation violation = Violation::none;
    std::string detail;

    static EvaluationOutcome ok(double objective) { return {true, objective, Violation::none, {}}; }
    static EvaluationOutcome invalid(Violation v, std::string detail) { return {false, std::nullopt, v, std::move(detail)}; }
};

struct EppOptions {
    /// An assignment leaving some group empty is infeasible (otherwise it is merely scored).
    bool require_all_groups = true;
};

EvaluationOutcome evaluate_landing(const AircraftLandingInstance& inst, const LandingSchedule& sched);
EvaluationOutcome evaluate_flowshop(const FlowShopInstance& inst, const JobPermutation& perm);
EvaluationOutcome evaluate_pmedian(const PMedianInstance& inst, const MedianSet& medians);
EvaluationOutcome evaluate_epp(const EppInstance& inst, const GroupAssignment& assign, EppOptions options = {});

/// Landing cost of the given times, ignoring feasibility.
double landing_penalty(const AircraftLandingInstance& inst, const std::vector<double>& times);

/// Dispatches on the instance; a solution of the wrong alternative is an InputError.
EvaluationOutcome evaluate(const Instance& inst, const Solution& solution, EppOptions options = {});

// ---- scoring ------------------------------------------------------------

struct PerformanceRatio {
    double value = 0;
    Sense sense = Sense::minimize;
};

/// reference/best for minimization, best/reference for maximization.
/// Equal arguments always give exactly 1 (this covers best = reference = 0).
/// A nonpositive denominator otherwise raises DomainError.
PerformanceRatio performance_ratio(double best, double reference, Sense sense);

/// Ratio of an evaluated outcome; infeasible outcomes score 0.
double outcome_ratio(const EvaluationOutcome& outcome, double reference, Sense sense);

/// An instance together with its reference objective, as stored in instance files.
struct BenchmarkInstance {
    std::string name;
    Instance instance;
    std::optional<double> reference;  // absent for raw OR-Library text
    Sense sense = Sense::minimize;
};

}  // namespace promptfwa::problems
