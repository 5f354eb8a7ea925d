#pragma once

// Brute-force LP oracle for tiny problems: enumerates every basic point (choose
// n tight constraints out of the rows plus the x >= 0 bounds), keeps the
// feasible ones and takes the best. Unboundedness is decided the same way on
// the recession cone normalized by sum(d) = 1. Shares nothing with the simplex.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "planchat/lp.hpp"

namespace planchat::testing {

struct OracleResult {
    opt::SolveStatus status;
    double objective = 0.0;
};

struct Halfspace {
    std::vector<double> a;
    double b = 0.0;
    opt::Sense sense = opt::Sense::LessEqual;
};

inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> m, std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        if (std::abs(m[piv][col]) < 1e-9) return std::nullopt;
        std::swap(m[piv], m[col]);
        std::swap(rhs[piv], rhs[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = m[r][col] / m[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / m[i][i];
    return x;
}

inline bool satisfies(const std::vector<Halfspace>& hs, const std::vector<double>& x, double tol) {
    for (auto& h : hs) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) lhs += h.a[j] * x[j];
        switch (h.sense) {
            case opt::Sense::LessEqual:
                if (lhs > h.b + tol) return false;
                break;
            case opt::Sense::GreaterEqual:
                if (lhs < h.b - tol) return false;
                break;
            case opt::Sense::Equal:
                if (std::abs(lhs - h.b) > tol) return false;
                break;
        }
    }
    return true;
}

/// Minimizes c.x over {x : hs, x >= 0} by vertex enumeration. `forced` rows are
/// tight in every candidate basis. Returns nullopt when no vertex is feasible.
inline std::optional<double> best_vertex(const std::vector<double>& c, const std::vector<Halfspace>& hs,
                                         const std::vector<Halfspace>& forced) {
    const std::size_t n = c.size();
    std::vector<Halfspace> all = hs;
    for (std::size_t j = 0; j < n; ++j) {
        Halfspace bound{std::vector<double>(n, 0.0), 0.0, opt::Sense::GreaterEqual};
        bound.a[j] = 1.0;
        all.push_back(bound);
    }
    std::vector<Halfspace> checks = all;
    checks.insert(checks.end(), forced.begin(), forced.end());

    const std::size_t free_picks = n - forced.size();
    std::optional<double> best;
    std::vector<std::size_t> pick(free_picks);
    // Iterate over all combinations of `free_picks` indices from `all`.
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == free_picks) {
            std::vector<std::vector<double>> m;
            std::vector<double> rhs;
            for (auto& f : forced) {
                m.push_back(f.a);
                rhs.push_back(f.b);
            }
            for (auto idx : pick) {
                m.push_back(all[idx].a);
                rhs.push_back(all[idx].b);
            }
            auto x = solve_square(m, rhs);
            if (!x || !satisfies(checks, *x, 1e-7)) return;
            double obj = 0.0;
            for (std::size_t j = 0; j < n; ++j) obj += c[j] * (*x)[j];
            if (!best || obj < *best) best = obj;
            return;
        }
        for (std::size_t i = start; i < all.size(); ++i) {
            pick[depth] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

inline OracleResult brute_force_lp(const opt::LPProblem& lp) {
    std::vector<Halfspace> hs;
    for (std::size_t i = 0; i < lp.rows.size(); ++i) hs.push_back({lp.rows[i], lp.rhs[i], lp.senses[i]});
    auto best = best_vertex(lp.objective, hs, {});
    if (!best) return {opt::SolveStatus::Infeasible, 0.0};

    // Recession directions: A d (sense) 0, d >= 0, sum d = 1.
    std::vector<Halfspace> cone;
    for (auto& h : hs) cone.push_back({h.a, 0.0, h.sense});
    Halfspace normalize{std::vector<double>(lp.objective.size(), 1.0), 1.0, opt::Sense::Equal};
    auto ray = best_vertex(lp.objective, cone, {normalize});
    if (ray && *ray < -1e-9) return {opt::SolveStatus::Unbounded, 0.0};
    return {opt::SolveStatus::Optimal, *best};
}

/// Random LP with integer data, 1..max_vars variables and 1..max_rows rows.
inline opt::LPProblem random_lp(std::mt19937& rng, std::size_t max_vars = 6, std::size_t max_rows = 6) {
    std::uniform_int_distribution<int> nvars(1, static_cast<int>(max_vars));
    std::uniform_int_distribution<int> nrows(1, static_cast<int>(max_rows));
    std::uniform_int_distribution<int> coeff(-5, 5);
    std::uniform_int_distribution<int> rhs(-10, 10);
    std::uniform_int_distribution<int> sense(0, 19);
    opt::LPProblem lp;
    const auto n = static_cast<std::size_t>(nvars(rng));
    const auto m = static_cast<std::size_t>(nrows(rng));
    for (std::size_t j = 0; j < n; ++j) lp.add_variable("x" + std::to_string(j), coeff(rng));
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> row(n);
        for (auto& v : row) v = coeff(rng);
        int s = sense(rng);
        auto sn = s < 12 ? opt::Sense::LessEqual : (s < 17 ? opt::Sense::GreaterEqual : opt::Sense::Equal);
        lp.add_row(row, sn, rhs(rng));
    }
    return lp;
}

}  // namespace planchat::testing
