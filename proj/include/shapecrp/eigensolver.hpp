#pragma once

// Smallest eigenpairs of the symmetric-definite pencil (K, M) with M diagonal.
//
// The pencil is reduced to the standard problem C u = lambda u with
// C = M^{-1/2} K M^{-1/2}, v = M^{-1/2} u. Small problems use a dense
// symmetric solve; larger ones use a block Krylov (Lanczos) iteration on the
// shift-inverted operator (C - sigma I)^{-1} with thick restarts carried out by
// explicit Rayleigh-Ritz on the retained basis. The block size lets repeated
// eigenvalues (symmetric meshes, several components) converge with their full
// multiplicity.

#include "shapecrp/error.hpp"
#include "shapecrp/detail/format.hpp"
#include "shapecrp/detail/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace shapecrp {

enum class EigenMethod { Auto, Dense, ShiftInvert };

struct EigenOptions {
    EigenMethod method = EigenMethod::Auto;
    Eigen::Index denseLimit = 2000; ///< Auto uses the dense solver up to this size
    double tolerance = 1e-10;       ///< relative Ritz residual for convergence
    int budgetFactor = 30;          ///< block operator applications allowed per requested eigenvalue
    int blockSize = 8;
    double shiftFactor = 1e-8;
    double residualBound = 1e-8; ///< required ||K v - lambda M v|| / ||v|| relative to ||K||
    std::uint64_t seed = 0x5eed;
};

struct EigenResult {
    Eigen::VectorXd values;  ///< ascending
    Eigen::MatrixXd vectors; ///< generalized eigenvectors (columns), M-orthonormal
    Eigen::VectorXd residuals; ///< ||K v - lambda M v|| / (||v|| ||K||_inf)
    int blockApplications = 0;
    bool usedDense = true;
};

namespace detail {

inline double infinity_norm(const Eigen::SparseMatrix<double>& a)
{
    Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(a.rows());
    for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) {
            row_sums[it.row()] += std::abs(it.value());
        }
    }
    return row_sums.size() ? row_sums.maxCoeff() : 0.0;
}

/// Orthonormalizes the columns of `block` against basis(:, 0:cols) and among
/// themselves (two Gram-Schmidt passes). Columns that collapse are replaced by
/// fresh random directions.
inline void orthonormalize_block(Eigen::MatrixXd& block, const Eigen::MatrixXd& basis, Eigen::Index cols,
                                 Rng& rng)
{
    const Eigen::Index n = block.rows();
    auto against_basis = [&](Eigen::Ref<Eigen::VectorXd> w) {
        if (cols > 0) {
            const auto q = basis.leftCols(cols);
            for (int pass = 0; pass < 2; ++pass) w -= q * (q.transpose() * w);
        }
    };
    for (Eigen::Index j = 0; j < block.cols(); ++j) {
        for (int attempt = 0;; ++attempt) {
            auto w = block.col(j);
            const double before = w.norm();
            against_basis(w);
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index i = 0; i < j; ++i) w -= block.col(i).dot(w) * block.col(i);
            }
            const double after = w.norm();
            if (before > 0.0 && after > 1e-10 * before) {
                w /= after;
                break;
            }
            if (attempt > 8) throw Error(ErrorCode::ConvergenceFailure, "cannot extend Krylov basis");
            for (Eigen::Index r = 0; r < n; ++r) w[r] = rng.uniform() - 0.5;
        }
    }
}

inline EigenResult finish_pairs(const Eigen::SparseMatrix<double>& stiffness, const Eigen::VectorXd& massDiag,
                                Eigen::VectorXd values, const Eigen::MatrixXd& unitVectors, double knorm)
{
    // unitVectors hold eigenvectors u of C; map back to v = M^{-1/2} u.
    EigenResult out;
    const Eigen::VectorXd inv_sqrt_mass = massDiag.cwiseSqrt().cwiseInverse();
    out.vectors = inv_sqrt_mass.asDiagonal() * unitVectors;
    out.values = std::move(values);
    out.residuals.resize(out.values.size());
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        const Eigen::VectorXd v = out.vectors.col(i);
        const Eigen::VectorXd r = stiffness * v - out.values[i] * massDiag.cwiseProduct(v);
        out.residuals[i] = knorm > 0.0 ? r.norm() / (v.norm() * knorm) : r.norm();
    }
    return out;
}

inline EigenResult dense_smallest(const Eigen::SparseMatrix<double>& c, Eigen::Index k)
{
    const Eigen::MatrixXd dense(c);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "dense eigensolver failed");
    EigenResult r;
    r.values = es.eigenvalues().head(k);
    r.vectors = es.eigenvectors().leftCols(k);
    r.usedDense = true;
    return r;
}

inline EigenResult shift_invert_smallest(const Eigen::SparseMatrix<double>& c, Eigen::Index k, double sigma,
                                         const EigenOptions& opts)
{
    const Eigen::Index n = c.rows();
    const Eigen::Index bs = std::max<Eigen::Index>(1, opts.blockSize);
    // Restarts retain k + bs Ritz vectors and add at least two fresh blocks.
    const Eigen::Index keep = k + bs;
    const Eigen::Index basis_max = keep + bs * std::max<Eigen::Index>(2, (k + bs - 1) / bs);

    Eigen::SparseMatrix<double> shifted = c;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(shifted);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::ConvergenceFailure, "shifted operator is not positive definite");
    }

    Rng rng(opts.seed);
    Eigen::MatrixXd basis(n, basis_max);
    Eigen::Index cols = 0;
    Eigen::MatrixXd next(n, bs);
    for (Eigen::Index j = 0; j < bs; ++j) {
        for (Eigen::Index r = 0; r < n; ++r) next(r, j) = rng.uniform() - 0.5;
    }

    const int budget = opts.budgetFactor * static_cast<int>(k);
    int applications = 0;
    for (;;) {
        // Krylov expansion with the shift-inverted operator.
        while (cols + bs <= basis_max) {
            orthonormalize_block(next, basis, cols, rng);
            basis.middleCols(cols, bs) = next;
            cols += bs;
            if (++applications > budget) {
                throw Error(ErrorCode::ConvergenceFailure,
                            "shift-invert iteration budget of " + std::to_string(budget) + " exhausted");
            }
            next = llt.solve(next);
        }

        // Rayleigh-Ritz on C itself. Projecting the inverse instead would
        // inherit roundoff at the scale of the near-null mode's huge inverse
        // eigenvalue and stall well above the tolerance.
        const Eigen::MatrixXd cb = c * basis.leftCols(cols);
        Eigen::MatrixXd g = basis.leftCols(cols).transpose() * cb;
        g = 0.5 * (g + g.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
        if (es.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "Rayleigh-Ritz solve failed");
        const Eigen::MatrixXd y = es.eigenvectors().leftCols(keep);
        const Eigen::MatrixXd ritz = basis.leftCols(cols) * y;
        const Eigen::MatrixXd c_ritz = cb * y;
        const Eigen::VectorXd rho = es.eigenvalues().head(k);

        // ||C u - rho u|| <= tol * max |rho| over the wanted pairs.
        const double scale = rho.cwiseAbs().maxCoeff();
        Eigen::Index first_unconverged = scale > 0.0 ? k : 0;
        for (Eigen::Index i = 0; i < first_unconverged; ++i) {
            if ((c_ritz.col(i) - rho[i] * ritz.col(i)).norm() > opts.tolerance * scale) first_unconverged = i;
        }
        if (first_unconverged == k) {
            EigenResult r;
            r.values = rho;
            r.vectors = ritz.leftCols(k);
            r.blockApplications = applications;
            r.usedDense = false;
            return r;
        }

        // Thick restart: keep the leading Ritz vectors and expand next from the
        // shift-inverted residuals of the first unconverged ones. Inverting the
        // Ritz vectors themselves would leave only cancellation noise once they
        // are nearly converged.
        const Eigen::Index start = std::min(first_unconverged, keep - bs);
        next = c_ritz.middleCols(start, bs) -
               ritz.middleCols(start, bs) * es.eigenvalues().segment(start, bs).asDiagonal();
        basis.leftCols(keep) = ritz;
        cols = keep;
        if (++applications > budget) {
            throw Error(ErrorCode::ConvergenceFailure,
                        "shift-invert iteration budget of " + std::to_string(budget) + " exhausted");
        }
        next = llt.solve(next).eval();
    }
}

} // namespace detail

/// k smallest eigenpairs of K v = lambda M v, M = diag(massDiag) > 0.
inline EigenResult smallest_generalized_eigenpairs(const Eigen::SparseMatrix<double>& stiffness,
                                                   const Eigen::VectorXd& massDiag, Eigen::Index k,
                                                   const EigenOptions& opts = {})
{
    const Eigen::Index n = stiffness.rows();
    if (k < 1 || k > n) {
        throw Error(ErrorCode::KTooLarge,
                    "requested " + std::to_string(k) + " eigenpairs of a size-" + std::to_string(n) + " pencil");
    }
    if (massDiag.size() != n || !(massDiag.minCoeff() > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "mass matrix must be diagonal positive definite");
    }

    const Eigen::VectorXd scale = massDiag.cwiseSqrt().cwiseInverse();
    Eigen::SparseMatrix<double> c = scale.asDiagonal() * stiffness * scale.asDiagonal();
    c = 0.5 * (c + Eigen::SparseMatrix<double>(c.transpose()));

    bool dense = opts.method == EigenMethod::Dense || (opts.method == EigenMethod::Auto && n <= opts.denseLimit);
    // The Krylov basis must fit; tiny problems always go dense.
    const Eigen::Index bs = std::max(1, opts.blockSize);
    if (!dense && n <= 2 * (std::max(2 * k + bs, k + 3 * bs) + bs)) dense = true;

    EigenResult raw;
    if (dense) {
        raw = detail::dense_smallest(c, k);
    } else {
        // Shift in eigenvalue units (mean stiffness diagonal over mean mass) so
        // that a uniformly rescaled mesh runs the same iteration.
        const double sigma = -opts.shiftFactor * stiffness.diagonal().mean() / massDiag.mean();
        raw = detail::shift_invert_smallest(c, k, sigma, opts);
    }

    const double knorm = detail::infinity_norm(stiffness);
    EigenResult out = detail::finish_pairs(stiffness, massDiag, raw.values, raw.vectors, knorm);
    out.blockApplications = raw.blockApplications;
    out.usedDense = raw.usedDense;
    for (Eigen::Index i = 0; i < out.residuals.size(); ++i) {
        if (!(out.residuals[i] <= opts.residualBound)) {
            throw Error(ErrorCode::ConvergenceFailure,
                        "eigenpair " + std::to_string(i) + " residual " + detail::format_real(out.residuals[i]) +
                            " exceeds bound");
        }
    }
    return out;
}

} // namespace shapecrp
