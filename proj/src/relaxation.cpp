#include "planchat/relaxation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace planchat::opt {

RelaxationReport relax_infeasible(const LPProblem& problem, const SimplexOptions& options) {
    problem.check_dimensions();
    const std::size_t n = problem.num_vars();

    double max_cost = 0.0;
    for (double c : problem.objective) max_cost = std::max(max_cost, std::abs(c));
    const double weight = 1e6 * (1.0 + max_cost);

    LPProblem elastic = problem;
    // (row, column, sign): the slack enters the row with this coefficient.
    struct Slack {
        std::size_t row;
        std::size_t col;
    };
    std::vector<Slack> slacks;
    auto add_slack = [&](std::size_t row, double coeff, const char* suffix) {
        auto col = elastic.add_variable(fmt::format("e{}[{}]", suffix, row), weight);
        elastic.rows[row][col] = coeff;
        slacks.push_back({row, col});
    };
    for (std::size_t i = 0; i < problem.num_rows(); ++i) {
        switch (problem.senses[i]) {
            case Sense::LessEqual: add_slack(i, -1.0, ""); break;
            case Sense::GreaterEqual: add_slack(i, 1.0, ""); break;
            case Sense::Equal:
                add_slack(i, 1.0, "+");
                add_slack(i, -1.0, "-");
                break;
        }
    }

    auto solution = solve_lp(elastic, options);
    RelaxationReport report;
    report.status = solution.status;
    if (solution.status != SolveStatus::Optimal) return report;

    std::vector<double> per_row(problem.num_rows(), 0.0);
    for (auto& s : slacks) per_row[s.row] += solution.x[s.col];
    for (std::size_t i = 0; i < per_row.size(); ++i) {
        if (per_row[i] > 1e-6) {
            report.violated.push_back({i, problem.tags[i], per_row[i]});
            report.total_violation += per_row[i];
        }
    }
    report.x.assign(solution.x.begin(), solution.x.begin() + static_cast<std::ptrdiff_t>(n));
    for (std::size_t j = 0; j < n; ++j) report.relaxed_objective += problem.objective[j] * report.x[j];
    return report;
}

}  // namespace planchat::opt
