#pragma once

#include "shapecrp/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace shapecrp {

struct NnlsResult {
    Eigen::VectorXd x;
    double kktTol = 0.0;
    int iterations = 0;
};

/// Optimality tolerance used by nnls_solve for a given problem.
inline double nnls_tolerance(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    const double max_col = a.cols() > 0 ? a.colwise().norm().maxCoeff() : 0.0;
    return 10.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(a.rows(), a.cols())) *
           max_col * b.norm();
}

/// Nonnegative least squares, min ||A x - b|| subject to x >= 0, by the
/// Lawson-Hanson active-set method. On return x >= 0 and the gradient
/// g = A^T (A x - b) satisfies g >= -kktTol with |g_j| <= kktTol on the support.
/// Zero entries are +0.0.
inline NnlsResult nnls_solve_detailed(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    if (b.size() != m) {
        throw Error(ErrorCode::DimensionMismatch, "nnls: right-hand side has " + std::to_string(b.size()) +
                                                      " rows, matrix has " + std::to_string(m));
    }
    if (!a.allFinite() || !b.allFinite()) throw Error(ErrorCode::NonFinite, "nnls: non-finite input");

    NnlsResult r;
    r.x = Eigen::VectorXd::Zero(n);
    r.kktTol = nnls_tolerance(a, b);
    const int budget = 3 * static_cast<int>(std::max<Eigen::Index>(n, 1));

    std::vector<char> passive(static_cast<std::size_t>(n), 0);
    std::vector<char> blocked(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> support;
    Eigen::VectorXd w = a.transpose() * b;

    auto solve_support = [&](Eigen::VectorXd& z) {
        support.clear();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (passive[static_cast<std::size_t>(j)]) support.push_back(j);
        }
        Eigen::MatrixXd sub(m, static_cast<Eigen::Index>(support.size()));
        for (std::size_t c = 0; c < support.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(support[c]);
        const Eigen::VectorXd zs = sub.colPivHouseholderQr().solve(b);
        z.setZero(n);
        for (std::size_t c = 0; c < support.size(); ++c) z[support[c]] = zs[static_cast<Eigen::Index>(c)];
    };

    Eigen::VectorXd z(n);
    for (;;) {
        Eigen::Index entering = -1;
        double best = r.kktTol;
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto js = static_cast<std::size_t>(j);
            if (!passive[js] && !blocked[js] && w[j] > best) {
                best = w[j];
                entering = j;
            }
        }
        if (entering < 0) break;
        if (++r.iterations > budget) {
            throw Error(ErrorCode::IterationBudgetExceeded,
                        "nnls exceeded " + std::to_string(budget) + " active-set iterations");
        }
        passive[static_cast<std::size_t>(entering)] = 1;

        bool first_inner = true;
        bool progressed = false;
        for (;;) {
            solve_support(z);
            bool feasible = true;
            for (Eigen::Index j : support) feasible = feasible && z[j] > 0.0;
            if (feasible) {
                r.x = z;
                progressed = true;
                break;
            }
            if (first_inner && !(z[entering] > 0.0)) {
                // Roundoff made the entering coefficient nonpositive; skip it
                // until the iterate moves.
                passive[static_cast<std::size_t>(entering)] = 0;
                blocked[static_cast<std::size_t>(entering)] = 1;
                break;
            }
            first_inner = false;
            double alpha = std::numeric_limits<double>::infinity();
            std::vector<Eigen::Index> leaving;
            for (Eigen::Index j : support) {
                if (z[j] > 0.0) continue;
                const double step = r.x[j] / (r.x[j] - z[j]);
                if (step < alpha) {
                    alpha = step;
                    leaving.assign(1, j);
                } else if (step == alpha) {
                    leaving.push_back(j);
                }
            }
            r.x += alpha * (z - r.x);
            // The blocking coefficients (and any pushed past zero) leave the support.
            for (Eigen::Index j : leaving) r.x[j] = 0.0;
            for (Eigen::Index j : support) {
                if (!(r.x[j] > 0.0)) {
                    r.x[j] = 0.0;
                    passive[static_cast<std::size_t>(j)] = 0;
                }
            }
            progressed = true;
        }
        if (progressed) std::fill(blocked.begin(), blocked.end(), 0);
        w = a.transpose() * (b - a * r.x);
    }

    for (Eigen::Index j = 0; j < n; ++j) {
        if (!(r.x[j] > 0.0)) r.x[j] = 0.0;
    }
    return r;
}

inline Eigen::VectorXd nnls_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    return nnls_solve_detailed(a, b).x;
}

} // namespace shapecrp
