#pragma once

// Discriminative projection from a coding graph. The local scatter measures
// how badly the graph weights reconstruct each sample, the total scatter the
// spread about the mean. The projection keeps the directions with the largest
// generalized eigenvalues of  S_s p = lambda S_c p.

#include "shapecrp/coding.hpp"
#include "shapecrp/error.hpp"
#include "shapecrp/detail/format.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace shapecrp {

struct TotalScatter {
    Eigen::MatrixXd scatter;
    Eigen::VectorXd mean;
    bool degenerate = false; ///< all samples identical
};

struct ScatterPair {
    Eigen::MatrixXd sc;
    Eigen::MatrixXd ss;
    Eigen::VectorXd mean;
    bool degenerate = false;
};

struct ProjectionMatrix {
    Eigen::MatrixXd p;                 ///< m x d, S_c-orthonormal columns
    std::vector<double> genEigenvalues; ///< descending, >= 0
    double epsilonReg = 1e-6;
    std::vector<std::string> warnings;

    Eigen::Index inputDim() const { return p.rows(); }
    Eigen::Index d() const { return p.cols(); }
};

namespace detail {

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

} // namespace detail

/// X (I - W)(I - W)^T X^T, i.e. the sum of outer products of reconstruction residuals.
inline Eigen::MatrixXd local_scatter(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w)
{
    if (w.rows() != w.cols() || w.cols() != x.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "coding matrix is " + std::to_string(w.rows()) + "x" +
                                                      std::to_string(w.cols()) + " for " + std::to_string(x.cols()) +
                                                      " samples");
    }
    const Eigen::MatrixXd residual = x - x * w;
    return detail::symmetrized(residual * residual.transpose());
}

inline Eigen::MatrixXd local_scatter(const Eigen::MatrixXd& x, const CodingMatrix& w)
{
    return local_scatter(x, w.entries);
}

inline TotalScatter total_scatter(const Eigen::MatrixXd& x)
{
    if (x.cols() < 2) throw Error(ErrorCode::InvalidArgument, "total scatter needs at least 2 samples");
    TotalScatter t;
    t.mean = x.rowwise().mean();
    const Eigen::MatrixXd centered = x.colwise() - t.mean;
    t.scatter = detail::symmetrized(centered * centered.transpose());
    t.degenerate = !(centered.cwiseAbs().maxCoeff() > 0.0);
    return t;
}

inline ScatterPair make_scatter_pair(const Eigen::MatrixXd& x, const CodingMatrix& w)
{
    TotalScatter t = total_scatter(x);
    return {local_scatter(x, w), std::move(t.scatter), std::move(t.mean), t.degenerate};
}

inline ProjectionMatrix solve_projection(const ScatterPair& sp, Eigen::Index d, double epsilonReg = 1e-6)
{
    const Eigen::Index m = sp.sc.rows();
    if (sp.sc.cols() != m || sp.ss.rows() != m || sp.ss.cols() != m) {
        throw Error(ErrorCode::DimensionMismatch, "scatter matrices must both be m x m");
    }
    if (d < 1 || d > m) {
        throw Error(ErrorCode::InvalidArgument,
                    "projection dimension " + std::to_string(d) + " outside [1, " + std::to_string(m) + "]");
    }
    if (!(epsilonReg >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilonReg must be >= 0");

    ProjectionMatrix pm;
    pm.epsilonReg = epsilonReg;

    const Eigen::MatrixXd ss = detail::symmetrized(sp.ss);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ss_eig(ss, Eigen::EigenvaluesOnly);
    const double ss_max = ss_eig.eigenvalues().cwiseAbs().maxCoeff();
    const double rank_tol = static_cast<double>(m) * std::numeric_limits<double>::epsilon() * ss_max;
    const auto rank = static_cast<Eigen::Index>((ss_eig.eigenvalues().array() > rank_tol).count());
    if (rank == 0) throw Error(ErrorCode::InvalidArgument, "total scatter is zero (all samples identical)");
    if (d > rank) {
        pm.warnings.push_back("DimensionReduced: requested d=" + std::to_string(d) + " exceeds rank(S_s)=" +
                              std::to_string(rank));
        d = rank;
    }

    Eigen::MatrixXd sc_reg = detail::symmetrized(sp.sc);
    sc_reg.diagonal().array() += epsilonReg * sc_reg.trace() / static_cast<double>(m);
    Eigen::LLT<Eigen::MatrixXd> llt(sc_reg);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::CholeskyFailure, "regularized local scatter is not positive definite");
    }
    const auto lower = llt.matrixL();
    // Reduced symmetric problem  L^{-1} S_s L^{-T} y = lambda y.
    const Eigen::MatrixXd half = lower.solve(ss);
    const Eigen::MatrixXd reduced = detail::symmetrized(lower.solve(half.transpose()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reduced);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "projection eigensolve failed");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return es.eigenvalues()[a] > es.eigenvalues()[b];
    });

    Eigen::MatrixXd y(m, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(j)];
        y.col(j) = es.eigenvectors().col(src);
        pm.genEigenvalues.push_back(std::max(0.0, es.eigenvalues()[src]));
    }
    pm.p = lower.transpose().solve(y);

    for (Eigen::Index j = 0; j < d; ++j) {
        Eigen::Index arg = 0;
        pm.p.col(j).cwiseAbs().maxCoeff(&arg);
        if (pm.p(arg, j) < 0.0) pm.p.col(j) *= -1.0;
    }
    return pm;
}

/// P^T X for training and unseen samples alike.
inline Eigen::MatrixXd project(const ProjectionMatrix& pm, const Eigen::MatrixXd& x)
{
    if (x.rows() != pm.inputDim()) {
        throw Error(ErrorCode::DimensionMismatch, "projection expects " + std::to_string(pm.inputDim()) +
                                                      "-dimensional input, got " + std::to_string(x.rows()));
    }
    return pm.p.transpose() * x;
}

inline constexpr int kProjectionFormatVersion = 1;

inline std::string projection_to_json(const ProjectionMatrix& pm)
{
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(pm.p.size()));
    for (Eigen::Index r = 0; r < pm.p.rows(); ++r) {
        for (Eigen::Index c = 0; c < pm.p.cols(); ++c) row_major.push_back(pm.p(r, c));
    }
    return detail::JsonObjectWriter{}
        .integer("version", kProjectionFormatVersion)
        .integer("m", pm.inputDim())
        .integer("d", pm.d())
        .real("epsilonReg", pm.epsilonReg)
        .reals("genEigenvalues", pm.genEigenvalues)
        .reals("p", row_major)
        .str();
}

inline ProjectionMatrix projection_from_json(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("version").get<int>() != kProjectionFormatVersion) {
            throw Error(ErrorCode::ParseError, "unsupported projection format version");
        }
        const auto m = j.at("m").get<Eigen::Index>();
        const auto d = j.at("d").get<Eigen::Index>();
        const auto values = j.at("p").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(values.size()) != m * d) {
            throw Error(ErrorCode::ParseError, "projection matrix has wrong number of entries");
        }
        ProjectionMatrix pm;
        pm.epsilonReg = j.at("epsilonReg").get<double>();
        pm.genEigenvalues = j.at("genEigenvalues").get<std::vector<double>>();
        pm.p.resize(m, d);
        for (Eigen::Index r = 0; r < m; ++r) {
            for (Eigen::Index c = 0; c < d; ++c) pm.p(r, c) = values[static_cast<std::size_t>(r * d + c)];
        }
        return pm;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("projection JSON: ") + e.what());
    }
}

} // namespace shapecrp
