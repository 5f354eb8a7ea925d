#include "planchat/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace planchat::opt {

std::string to_string(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::Capacity: return "capacity";
        case ConstraintKind::Material: return "material";
        case ConstraintKind::Linking: return "linking";
        case ConstraintKind::Demand: return "demand";
        case ConstraintKind::Restriction: return "restriction";
        case ConstraintKind::Other: return "other";
    }
    return "other";
}

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
        case SolveStatus::IterationLimit: return "IterationLimit";
    }
    return "Unknown";
}

std::size_t LPProblem::add_row(std::vector<double> coeffs, Sense sense, double rhs_value, ConstraintTag tag) {
    coeffs.resize(num_vars(), 0.0);
    rows.push_back(std::move(coeffs));
    senses.push_back(sense);
    rhs.push_back(rhs_value);
    tags.push_back(std::move(tag));
    return rows.size() - 1;
}

std::size_t LPProblem::add_variable(std::string name, double cost) {
    variable_names.push_back(std::move(name));
    objective.push_back(cost);
    for (auto& r : rows) r.push_back(0.0);
    return objective.size() - 1;
}

void LPProblem::check_dimensions() const {
    const auto n = objective.size();
    if (!variable_names.empty() && variable_names.size() != n) {
        throw DimensionMismatch(fmt::format("{} variable names for {} objective coefficients", variable_names.size(), n));
    }
    if (senses.size() != rows.size() || rhs.size() != rows.size() || tags.size() != rows.size()) {
        throw DimensionMismatch(fmt::format("rows={} senses={} rhs={} tags={}", rows.size(), senses.size(),
                                            rhs.size(), tags.size()));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != n) {
            throw DimensionMismatch(fmt::format("row {} has {} coefficients, expected {}", i, rows[i].size(), n));
        }
    }
}

double LPProblem::row_activity(std::size_t row, const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += rows[row][j] * x[j];
    return s;
}

double LPProblem::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (double v : x) worst = std::max(worst, -v);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double lhs = row_activity(i, x);
        switch (senses[i]) {
            case Sense::LessEqual: worst = std::max(worst, lhs - rhs[i]); break;
            case Sense::GreaterEqual: worst = std::max(worst, rhs[i] - lhs); break;
            case Sense::Equal: worst = std::max(worst, std::abs(lhs - rhs[i])); break;
        }
    }
    return worst;
}

namespace {

class Tableau {
public:
    Tableau(const LPProblem& lp, const SimplexOptions& opt) : opt_(opt), n_(lp.num_vars()), m_(lp.num_rows()) {
        std::size_t slacks = 0, artificials = 0;
        for (std::size_t i = 0; i < m_; ++i) {
            auto sense = effective_sense(lp, i);
            if (sense != Sense::Equal) ++slacks;
            if (sense != Sense::LessEqual) ++artificials;
        }
        first_artificial_ = n_ + slacks;
        cols_ = first_artificial_ + artificials;
        t_.assign(m_, std::vector<double>(cols_ + 1, 0.0));
        basis_.assign(m_, 0);
        active_.assign(m_, true);

        std::size_t next_slack = n_, next_art = first_artificial_;
        for (std::size_t i = 0; i < m_; ++i) {
            const double sign = lp.rhs[i] < 0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < n_; ++j) t_[i][j] = sign * lp.rows[i][j];
            t_[i][cols_] = sign * lp.rhs[i];
            switch (effective_sense(lp, i)) {
                case Sense::LessEqual:
                    t_[i][next_slack] = 1.0;
                    basis_[i] = next_slack++;
                    break;
                case Sense::GreaterEqual:
                    t_[i][next_slack++] = -1.0;
                    t_[i][next_art] = 1.0;
                    basis_[i] = next_art++;
                    break;
                case Sense::Equal:
                    t_[i][next_art] = 1.0;
                    basis_[i] = next_art++;
                    break;
            }
        }
        rhs_scale_ = 1.0;
        for (double b : lp.rhs) rhs_scale_ = std::max(rhs_scale_, std::abs(b));
    }

    /// Runs phase 1 and phase 2. `cost` covers the structural columns.
    LPSolution solve(const std::vector<double>& cost) {
        LPSolution sol;
        std::vector<double> phase1(cols_, 0.0);
        for (std::size_t j = first_artificial_; j < cols_; ++j) phase1[j] = 1.0;

        auto st = iterate(phase1, /*allow_artificial=*/true, sol.iterations);
        if (st == SolveStatus::IterationLimit) return finish(sol, st);
        double infeasibility = 0.0;
        for (std::size_t i = 0; i < m_; ++i)
            if (active_[i] && basis_[i] >= first_artificial_) infeasibility += t_[i][cols_];
        if (infeasibility > opt_.feasibility_tol * rhs_scale_) return finish(sol, SolveStatus::Infeasible);

        drive_out_artificials();

        std::vector<double> phase2(cols_, 0.0);
        std::copy(cost.begin(), cost.end(), phase2.begin());
        st = iterate(phase2, /*allow_artificial=*/false, sol.iterations);
        if (st != SolveStatus::Optimal) return finish(sol, st);

        sol.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (active_[i] && basis_[i] < n_) sol.x[basis_[i]] = std::max(0.0, t_[i][cols_]);
        }
        sol.objective = 0.0;
        for (std::size_t j = 0; j < n_; ++j) sol.objective += cost[j] * sol.x[j];
        sol.status = SolveStatus::Optimal;
        return sol;
    }

private:
    static Sense effective_sense(const LPProblem& lp, std::size_t i) {
        if (lp.rhs[i] >= 0) return lp.senses[i];
        switch (lp.senses[i]) {
            case Sense::LessEqual: return Sense::GreaterEqual;
            case Sense::GreaterEqual: return Sense::LessEqual;
            case Sense::Equal: return Sense::Equal;
        }
        return Sense::Equal;
    }

    LPSolution finish(LPSolution& sol, SolveStatus st) {
        sol.status = st;
        sol.x.clear();
        sol.objective = 0.0;
        return sol;
    }

    bool is_basic(std::size_t j) const {
        for (std::size_t i = 0; i < m_; ++i)
            if (active_[i] && basis_[i] == j) return true;
        return false;
    }

    SolveStatus iterate(const std::vector<double>& cost, bool allow_artificial, std::size_t& iterations) {
        const std::size_t limit_col = allow_artificial ? cols_ : first_artificial_;
        std::vector<char> basic(cols_, 0);
        while (true) {
            std::fill(basic.begin(), basic.end(), 0);
            for (std::size_t i = 0; i < m_; ++i)
                if (active_[i]) basic[basis_[i]] = 1;

            // Reduced costs are recomputed from the current rows each pass so that
            // round-off in an updated objective row cannot accumulate.
            std::size_t entering = cols_;
            for (std::size_t j = 0; j < limit_col; ++j) {
                if (basic[j]) continue;
                double d = cost[j];
                for (std::size_t i = 0; i < m_; ++i)
                    if (active_[i]) d -= cost[basis_[i]] * t_[i][j];
                if (d < -opt_.optimality_tol) {
                    entering = j;
                    break;
                }
            }
            if (entering == cols_) return SolveStatus::Optimal;

            std::size_t leaving = m_;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                if (!active_[i]) continue;
                double a = t_[i][entering];
                if (a <= opt_.pivot_tol) continue;
                double ratio = t_[i][cols_] / a;
                if (leaving == m_) {
                    best_ratio = ratio;
                    leaving = i;
                    continue;
                }
                double tie = 1e-12 * std::max(1.0, std::abs(best_ratio));
                if (ratio < best_ratio - tie) {
                    best_ratio = ratio;
                    leaving = i;
                } else if (ratio <= best_ratio + tie && leaving != m_ && basis_[i] < basis_[leaving]) {
                    leaving = i;
                }
            }
            if (leaving == m_) return SolveStatus::Unbounded;
            if (iterations >= opt_.max_iterations) return SolveStatus::IterationLimit;
            pivot(leaving, entering);
            ++iterations;
        }
    }

    void pivot(std::size_t r, std::size_t c) {
        auto& prow = t_[r];
        const double p = prow[c];
        for (auto& v : prow) v /= p;
        prow[c] = 1.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r || !active_[i]) continue;
            auto& row = t_[i];
            const double f = row[c];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= cols_; ++j) {
                row[j] -= f * prow[j];
                if (std::abs(row[j]) < 1e-14) row[j] = 0.0;
            }
            row[c] = 0.0;
            if (row[cols_] < 0.0 && row[cols_] > -opt_.feasibility_tol) row[cols_] = 0.0;
        }
        basis_[r] = c;
    }

    void drive_out_artificials() {
        for (std::size_t i = 0; i < m_; ++i) {
            if (!active_[i] || basis_[i] < first_artificial_) continue;
            std::size_t best = cols_;
            double best_mag = opt_.pivot_tol * 1e3;
            for (std::size_t j = 0; j < first_artificial_; ++j) {
                double mag = std::abs(t_[i][j]);
                if (mag > best_mag && !is_basic(j)) {
                    best_mag = mag;
                    best = j;
                }
            }
            if (best == cols_) {
                active_[i] = false;  // redundant equality
            } else {
                pivot(i, best);
            }
        }
    }

    SimplexOptions opt_;
    std::size_t n_, m_;
    std::size_t first_artificial_ = 0;
    std::size_t cols_ = 0;
    double rhs_scale_ = 1.0;
    std::vector<std::vector<double>> t_;
    std::vector<std::size_t> basis_;
    std::vector<bool> active_;
};

}  // namespace

LPSolution solve_lp(const LPProblem& problem, const SimplexOptions& options) {
    problem.check_dimensions();
    if (problem.num_rows() == 0) {
        LPSolution sol;
        sol.x.assign(problem.num_vars(), 0.0);
        for (double c : problem.objective) {
            if (c < -options.optimality_tol) {
                sol.status = SolveStatus::Unbounded;
                sol.x.clear();
                return sol;
            }
        }
        sol.status = SolveStatus::Optimal;
        return sol;
    }
    Tableau tableau(problem, options);
    return tableau.solve(problem.objective);
}

}  // namespace planchat::opt
