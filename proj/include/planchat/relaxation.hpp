#pragma once

#include <vector>

#include "planchat/lp.hpp"

namespace planchat::opt {

struct RowViolation {
    std::size_t row = 0;
    ConstraintTag tag;
    double amount = 0.0;
};

struct RelaxationReport {
    SolveStatus status = SolveStatus::Optimal;  // status of the elastic solve itself
    double total_violation = 0.0;
    std::vector<RowViolation> violated;  // rows with violation > 1e-6, in row order
    double relaxed_objective = 0.0;      // original objective at the relaxed point
    std::vector<double> x;               // structural values at the relaxed point
};

/// Elastic relaxation: every row gets a nonnegative slack (a pair for equality
/// rows) that absorbs its violation. The slacks are charged a weight of
/// 1e6 * (1 + max |c_j|) on top of the original objective, so the solve first
/// minimizes total violation and then the original objective.
RelaxationReport relax_infeasible(const LPProblem& problem, const SimplexOptions& options = {});

}  // namespace planchat::opt
