#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace planchat::opt {

enum class Sense { LessEqual, Equal, GreaterEqual };

enum class ConstraintKind { Capacity, Material, Linking, Demand, Restriction, Other };

std::string to_string(ConstraintKind kind);

/// Identifies the planning constraint family a row belongs to. `entity` is the
/// plant, material, product or order id; `day` is the horizon index (-1 when the
/// row is not dated).
struct ConstraintTag {
    ConstraintKind kind = ConstraintKind::Other;
    std::string entity;
    int day = -1;
    bool operator==(const ConstraintTag&) const = default;
};

/// min c'x  s.t.  A x (senses) b,  x >= 0.  A is dense, row-major.
struct LPProblem {
    std::vector<std::string> variable_names;
    std::vector<double> objective;
    std::vector<std::vector<double>> rows;
    std::vector<Sense> senses;
    std::vector<double> rhs;
    std::vector<ConstraintTag> tags;

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_rows() const { return rows.size(); }

    /// Appends a row and returns its index.
    std::size_t add_row(std::vector<double> coeffs, Sense sense, double rhs_value, ConstraintTag tag = {});
    std::size_t add_variable(std::string name, double cost);

    /// Throws DimensionMismatch when the sizes disagree.
    void check_dimensions() const;

    double row_activity(std::size_t row, const std::vector<double>& x) const;
    /// Largest bound or row violation of `x`; 0 for a feasible point.
    double max_violation(const std::vector<double>& x) const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(SolveStatus status);

struct LPSolution {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    std::size_t iterations = 0;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct SimplexOptions {
    double feasibility_tol = 1e-7;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-11;
    std::size_t max_iterations = 50000;
};

/// Two-phase primal simplex on a dense tableau with Bland's smallest-index rule,
/// so pivoting is deterministic and cannot cycle.
LPSolution solve_lp(const LPProblem& problem, const SimplexOptions& options = {});

}  // namespace planchat::opt
