#include "promptfwa/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace promptfwa::lp {

namespace {

constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr int kDegenerateRunBeforeBland = 50;

}  // namespace

BoundedSimplex::BoundedSimplex(const LinearProgram& lp) {
    rows_ = lp.rows.size();
    structural_ = lp.num_vars();
    lower_ = lp.lower;
    upper_ = lp.upper;
    cost_ = lp.cost;

    x_.resize(structural_);
    at_upper_.assign(structural_, 0);
    for (std::size_t j = 0; j < structural_; ++j) {
        if (std::isfinite(lower_[j])) {
            x_[j] = lower_[j];
        } else if (std::isfinite(upper_[j])) {
            x_[j] = upper_[j];
            at_upper_[j] = 1;
        } else {
            throw std::invalid_argument("free variables are not supported");
        }
    }

    std::vector<std::size_t> col_count(structural_, 0);
    for (const auto& row : lp.rows)
        for (const auto& e : row)
            if (e.coef != 0) ++col_count[e.col];

    // Choose a starting basic column per row: a singleton column that can absorb
    // the residual within its bounds, else an artificial.
    basis_.assign(rows_, structural_);
    std::vector<double> residual(rows_);
    std::vector<double> art_sign;
    std::vector<std::size_t> art_row;
    std::vector<char> claimed(structural_, 0);
    for (std::size_t r = 0; r < rows_; ++r) {
        double res = lp.rhs[r];
        for (const auto& e : lp.rows[r]) res -= e.coef * x_[e.col];
        residual[r] = res;
        bool found = false;
        for (const auto& e : lp.rows[r]) {
            if (e.coef == 0 || col_count[e.col] != 1 || claimed[e.col]) continue;
            const double v = x_[e.col] + res / e.coef;
            if (v >= lower_[e.col] - kFeasTol && v <= upper_[e.col] + kFeasTol) {
                basis_[r] = e.col;
                claimed[e.col] = 1;
                x_[e.col] = std::clamp(v, lower_[e.col], upper_[e.col]);
                found = true;
                break;
            }
        }
        if (!found) {
            art_row.push_back(r);
            art_sign.push_back(res >= 0 ? 1.0 : -1.0);
        }
    }

    cols_ = structural_ + art_row.size();
    tab_.assign(rows_ * cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r)
        for (const auto& e : lp.rows[r]) t(r, e.col) += e.coef;
    for (std::size_t k = 0; k < art_row.size(); ++k) {
        const std::size_t col = structural_ + k;
        const std::size_t r = art_row[k];
        t(r, col) = art_sign[k];
        basis_[r] = col;
        lower_.push_back(0.0);
        upper_.push_back(kInfinity);
        cost_.push_back(0.0);
        x_.push_back(std::abs(residual[r]));
        at_upper_.push_back(0);
    }

    // The starting basis is diagonal, so B^-1 A is a row scaling.
    for (std::size_t r = 0; r < rows_; ++r) {
        const double d = t(r, basis_[r]);
        if (d != 1.0)
            for (std::size_t j = 0; j < cols_; ++j) t(r, j) /= d;
    }
    is_basic_.assign(cols_, 0);
    for (std::size_t b : basis_) is_basic_[b] = 1;
}

void BoundedSimplex::price(const std::vector<double>& c) {
    reduced_.assign(c.begin(), c.end());
    for (std::size_t r = 0; r < rows_; ++r) {
        const double cb = c[basis_[r]];
        if (cb == 0) continue;
        for (std::size_t j = 0; j < cols_; ++j) reduced_[j] -= cb * t(r, j);
    }
}

void BoundedSimplex::pivot(std::size_t row, std::size_t col) {
    const double piv = t(row, col);
    double* prow = &tab_[row * cols_];
    for (std::size_t j = 0; j < cols_; ++j) prow[j] /= piv;
    prow[col] = 1.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        if (i == row) continue;
        const double f = t(i, col);
        if (f == 0) continue;
        double* r = &tab_[i * cols_];
        for (std::size_t j = 0; j < cols_; ++j)
            if (prow[j] != 0) r[j] -= f * prow[j];
        r[col] = 0.0;
    }
    const double dq = reduced_[col];
    if (dq != 0)
        for (std::size_t j = 0; j < cols_; ++j)
            if (prow[j] != 0) reduced_[j] -= dq * prow[j];
    reduced_[col] = 0.0;

    is_basic_[basis_[row]] = 0;
    basis_[row] = col;
    is_basic_[col] = 1;
}

LpStatus BoundedSimplex::iterate(bool phase_one) {
    const std::size_t max_iter = 200 * (rows_ + cols_) + 1000;
    int degenerate_run = 0;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        const bool bland = degenerate_run >= kDegenerateRunBeforeBland;

        // Entering column.
        std::size_t q = cols_;
        double best = 0;
        for (std::size_t j = 0; j < cols_; ++j) {
            if (is_basic_[j] || upper_[j] - lower_[j] <= 0) continue;
            if (!phase_one && j >= structural_) continue;
            const double d = reduced_[j];
            const bool improving = at_upper_[j] ? d > kCostTol : d < -kCostTol;
            if (!improving) continue;
            if (bland) {
                q = j;
                break;
            }
            if (std::abs(d) > best) {
                best = std::abs(d);
                q = j;
            }
        }
        if (q == cols_) return LpStatus::optimal;

        const double dir = at_upper_[q] ? -1.0 : 1.0;

        // Ratio test.
        std::size_t leave = rows_;
        double theta = upper_[q] - lower_[q];
        double leave_mag = 0;
        for (std::size_t i = 0; i < rows_; ++i) {
            const double a = t(i, q);
            if (std::abs(a) <= kPivotTol) continue;
            const std::size_t b = basis_[i];
            const double delta = -dir * a;  // change of x_b per unit step
            double limit;
            if (delta < 0) {
                limit = (x_[b] - lower_[b]) / -delta;
            } else {
                if (!std::isfinite(upper_[b])) continue;
                limit = (upper_[b] - x_[b]) / delta;
            }
            limit = std::max(limit, 0.0);
            bool take = false;
            if (limit < theta - 1e-12)
                take = true;
            else if (limit <= theta + 1e-12 && leave != rows_)
                take = bland ? b < basis_[leave] : std::abs(a) > leave_mag;
            if (take) {
                theta = limit;
                leave = i;
                leave_mag = std::abs(a);
            }
        }
        if (!std::isfinite(theta)) return LpStatus::unbounded;

        degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;

        for (std::size_t i = 0; i < rows_; ++i) {
            const double a = t(i, q);
            if (a != 0) x_[basis_[i]] -= dir * a * theta;
        }
        x_[q] += dir * theta;

        if (leave == rows_) {
            // Bound flip.
            at_upper_[q] = !at_upper_[q];
            x_[q] = at_upper_[q] ? upper_[q] : lower_[q];
            continue;
        }
        const std::size_t b = basis_[leave];
        const double delta = -dir * t(leave, q);
        at_upper_[b] = delta > 0;
        x_[b] = at_upper_[b] ? upper_[b] : lower_[b];
        at_upper_[q] = 0;
        pivot(leave, q);
    }
    throw std::runtime_error("simplex iteration limit exceeded");
}

void BoundedSimplex::drive_out_artificials() {
    for (std::size_t r = 0; r < rows_; ++r) {
        if (basis_[r] < structural_) continue;
        std::size_t col = cols_;
        double mag = kPivotTol;
        for (std::size_t j = 0; j < structural_; ++j) {
            if (is_basic_[j]) continue;
            if (std::abs(t(r, j)) > mag) {
                mag = std::abs(t(r, j));
                col = j;
            }
        }
        if (col == cols_) continue;  // redundant row; the artificial stays basic at zero
        const std::size_t art = basis_[r];
        x_[art] = 0.0;
        pivot(r, col);
    }
    for (std::size_t j = structural_; j < cols_; ++j) upper_[j] = 0.0;
}

LpStatus BoundedSimplex::solve() {
    if (cols_ > structural_) {
        std::vector<double> c1(cols_, 0.0);
        for (std::size_t j = structural_; j < cols_; ++j) c1[j] = 1.0;
        price(c1);
        iterate(true);
        double infeasibility = 0;
        for (std::size_t j = structural_; j < cols_; ++j) infeasibility += x_[j];
        if (infeasibility > kFeasTol) return LpStatus::infeasible;
        drive_out_artificials();
    }
    std::vector<double> c(cols_, 0.0);
    std::copy(cost_.begin(), cost_.begin() + static_cast<std::ptrdiff_t>(structural_), c.begin());
    price(c);
    const LpStatus status = iterate(false);
    solved_ = status == LpStatus::optimal;
    return status;
}

LpStatus BoundedSimplex::minimize_on_optimal_face(std::span<const double> objective) {
    if (!solved_) throw std::logic_error("minimize_on_optimal_face needs an optimal basis");
    for (std::size_t j = 0; j < structural_; ++j) {
        if (is_basic_[j] || std::abs(reduced_[j]) <= kCostTol) continue;
        lower_[j] = upper_[j] = x_[j];
    }
    std::vector<double> c(cols_, 0.0);
    std::copy(objective.begin(), objective.end(), c.begin());
    price(c);
    return iterate(false);
}

double BoundedSimplex::objective_value() const {
    double z = 0;
    for (std::size_t j = 0; j < structural_; ++j) z += cost_[j] * x_[j];
    return z;
}

}  // namespace promptfwa::lp
