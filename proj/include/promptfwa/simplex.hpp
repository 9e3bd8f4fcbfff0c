#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace promptfwa::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// min cost.x  subject to  rows (equalities) and lower <= x <= upper.
/// Every variable needs at least one finite bound.
struct LinearProgram {
    struct Entry {
        std::size_t col;
        double coef;
    };

    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> cost;
    std::vector<std::vector<Entry>> rows;
    std::vector<double> rhs;

    std::size_t num_vars() const { return cost.size(); }

    std::size_t add_var(double lo, double hi, double c) {
        lower.push_back(lo);
        upper.push_back(hi);
        cost.push_back(c);
        return cost.size() - 1;
    }

    void add_row(std::vector<Entry> entries, double b) {
        rows.push_back(std::move(entries));
        rhs.push_back(b);
    }
};

enum class LpStatus { optimal, infeasible, unbounded };

/// Dense-tableau primal simplex over bounded variables.
///
/// Rows whose residual can be absorbed by a singleton column start with that
/// column basic; the rest get an artificial and go through phase one. Pricing
/// is Dantzig's rule, falling back to Bland's rule after a run of degenerate
/// pivots.
class BoundedSimplex {
  public:
    explicit BoundedSimplex(const LinearProgram& lp);

    LpStatus solve();

    /// Lexicographic refinement: keeps the current objective value fixed by
    /// pinning every nonbasic column with a nonzero reduced cost at its bound,
    /// then minimizes `objective` over what is left. Call only after an optimal solve().
    LpStatus minimize_on_optimal_face(std::span<const double> objective);

    double value(std::size_t j) const { return x_[j]; }
    double objective_value() const;

  private:
    double& t(std::size_t i, std::size_t j) { return tab_[i * cols_ + j]; }
    double t(std::size_t i, std::size_t j) const { return tab_[i * cols_ + j]; }

    void price(const std::vector<double>& c);
    LpStatus iterate(bool phase_one);
    void pivot(std::size_t row, std::size_t col);
    void drive_out_artificials();

    std::size_t rows_ = 0;
    std::size_t structural_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> tab_;  // B^-1 A
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<double> cost_;
    std::vector<double> x_;
    std::vector<double> reduced_;
    std::vector<std::size_t> basis_;
    std::vector<char> is_basic_;
    std::vector<char> at_upper_;
    bool solved_ = false;
};

}  // namespace promptfwa::lp
