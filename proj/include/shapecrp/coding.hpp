#pragma once

// Collaborative-representation coding: every sample is reconstructed from all
// the other samples, either by ridge regression (L2 graph) or by nonnegative
// least squares. Column i of the coding matrix holds the code of sample i, so
// the reconstruction residual of sample i is x_i - X * W.col(i).

#include "shapecrp/error.hpp"
#include "shapecrp/nnls.hpp"
#include "shapecrp/detail/format.hpp"
#include "shapecrp/detail/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shapecrp {

enum class CodingMethod { L2, NNLS };

inline std::string_view to_string(CodingMethod m) { return m == CodingMethod::L2 ? "l2" : "nnls"; }

inline std::optional<CodingMethod> parse_coding_method(std::string_view s)
{
    if (s == "l2" || s == "L2") return CodingMethod::L2;
    if (s == "nnls" || s == "NNLS") return CodingMethod::NNLS;
    return std::nullopt;
}

/// m x N matrix of unit-norm sample columns.
class Dictionary {
public:
    Dictionary(Eigen::MatrixXd columns, std::vector<std::string> names = {})
        : m_columns(std::move(columns))
        , m_names(std::move(names))
    {
        if (m_columns.cols() < 2 || m_columns.rows() < 1) {
            throw Error(ErrorCode::InvalidArgument, "dictionary needs m >= 1 rows and N >= 2 columns");
        }
        if (!m_columns.allFinite()) throw Error(ErrorCode::NonFinite, "dictionary has non-finite entries");
        if (m_names.empty()) {
            for (Eigen::Index i = 0; i < m_columns.cols(); ++i) m_names.push_back("#" + std::to_string(i));
        }
        if (static_cast<Eigen::Index>(m_names.size()) != m_columns.cols()) {
            throw Error(ErrorCode::DimensionMismatch, "dictionary names do not match column count");
        }
        for (Eigen::Index i = 0; i < m_columns.cols(); ++i) {
            if (std::abs(m_columns.col(i).norm() - 1.0) > 1e-10) {
                throw Error(ErrorCode::InvalidArgument, "dictionary column '" + m_names[static_cast<std::size_t>(i)] +
                                                            "' is not unit norm");
            }
        }
    }

    /// Normalizes each column before building the dictionary.
    static Dictionary from_unnormalized(Eigen::MatrixXd columns, std::vector<std::string> names = {})
    {
        for (Eigen::Index i = 0; i < columns.cols(); ++i) {
            const double norm = columns.col(i).norm();
            if (!(norm > 0.0)) throw Error(ErrorCode::ZeroDescriptor, "zero dictionary column " + std::to_string(i));
            columns.col(i) /= norm;
        }
        return Dictionary(std::move(columns), std::move(names));
    }

    const Eigen::MatrixXd& columns() const { return m_columns; }
    const std::vector<std::string>& names() const { return m_names; }
    Eigen::Index dim() const { return m_columns.rows(); }
    Eigen::Index size() const { return m_columns.cols(); }

    /// The dictionary with column i removed.
    Eigen::MatrixXd without(Eigen::Index i) const
    {
        const Eigen::Index n = size();
        Eigen::MatrixXd d(dim(), n - 1);
        d.leftCols(i) = m_columns.leftCols(i);
        d.rightCols(n - 1 - i) = m_columns.rightCols(n - 1 - i);
        return d;
    }

private:
    Eigen::MatrixXd m_columns;
    std::vector<std::string> m_names;
};

struct CodeVector {
    Eigen::VectorXd weights;
    Eigen::Index selfIndex = 0;
    CodingMethod method = CodingMethod::L2;
    double kktTol = 0.0; ///< NNLS only
};

struct CodingMatrix {
    Eigen::MatrixXd entries; ///< N x N, column i = code of sample i, zero diagonal
    CodingMethod method = CodingMethod::L2;
    std::optional<double> lambda;
    double kktTol = 0.0; ///< largest per-column NNLS tolerance

    Eigen::Index size() const { return entries.cols(); }
};

/// Ridge parameter scaled with the number of coded samples.
inline double default_lambda(Eigen::Index n) { return 0.001 * static_cast<double>(n) / 700.0; }

/// argmin_w ||b - D w||^2 + lambda ||w||^2 via Cholesky of D^T D + lambda I.
inline Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& d, const Eigen::VectorXd& b, double lambda)
{
    if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge lambda must be positive");
    if (d.rows() != b.size()) throw Error(ErrorCode::DimensionMismatch, "ridge: dictionary and target rows differ");
    Eigen::MatrixXd gram = d.transpose() * d;
    gram.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    const Eigen::VectorXd w = llt.solve(d.transpose() * b);
    if (llt.info() != Eigen::Success || !w.allFinite()) {
        throw Error(ErrorCode::SingularSystem, "ridge normal equations could not be factored");
    }
    return w;
}

namespace detail {

inline Eigen::VectorXd reinsert_zero(const Eigen::VectorXd& w, Eigen::Index i)
{
    Eigen::VectorXd out(w.size() + 1);
    out.head(i) = w.head(i);
    out[i] = 0.0;
    out.tail(w.size() - i) = w.tail(w.size() - i);
    return out;
}

inline void check_index(const Dictionary& dict, Eigen::Index i)
{
    if (i < 0 || i >= dict.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "sample index " + std::to_string(i) + " outside [0, " + std::to_string(dict.size()) + ")");
    }
}

} // namespace detail

inline CodeVector ridge_code(const Dictionary& dict, Eigen::Index i, double lambda)
{
    detail::check_index(dict, i);
    const Eigen::VectorXd w = ridge_solve(dict.without(i), dict.columns().col(i), lambda);
    return {detail::reinsert_zero(w, i), i, CodingMethod::L2, 0.0};
}

inline CodeVector nnls_code(const Dictionary& dict, Eigen::Index i)
{
    detail::check_index(dict, i);
    const NnlsResult r = nnls_solve_detailed(dict.without(i), dict.columns().col(i));
    return {detail::reinsert_zero(r.x, i), i, CodingMethod::NNLS, r.kktTol};
}

/// Codes every column independently (in parallel when workers > 1); the
/// result does not depend on the worker count.
inline CodingMatrix build_coding_matrix(const Dictionary& dict, CodingMethod method,
                                        std::optional<double> lambda = std::nullopt, unsigned workers = 1)
{
    if (method == CodingMethod::L2 && !lambda) {
        throw Error(ErrorCode::InvalidArgument, "L2 coding requires lambda");
    }
    const Eigen::Index n = dict.size();
    CodingMatrix out;
    out.method = method;
    out.lambda = method == CodingMethod::L2 ? lambda : std::nullopt;
    out.entries = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> tolerances(static_cast<std::size_t>(n), 0.0);

    detail::parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t col) {
        const auto i = static_cast<Eigen::Index>(col);
        try {
            const CodeVector code = method == CodingMethod::L2 ? ridge_code(dict, i, *lambda) : nnls_code(dict, i);
            out.entries.col(i) = code.weights;
            tolerances[col] = code.kktTol;
        } catch (const Error& e) {
            rethrow_with_context(e, "coding sample '" + dict.names()[col] + "'");
        }
    });
    for (double t : tolerances) out.kktTol = std::max(out.kktTol, t);
    return out;
}

/// Sparse triplet export, one "row,col,weight" line per nonzero entry.
inline std::string coding_matrix_csv(const CodingMatrix& w)
{
    std::string out = "row,col,weight\n";
    for (Eigen::Index c = 0; c < w.entries.cols(); ++c) {
        for (Eigen::Index r = 0; r < w.entries.rows(); ++r) {
            const double v = w.entries(r, c);
            if (v != 0.0) out += std::to_string(r) + ',' + std::to_string(c) + ',' + detail::format_real(v) + '\n';
        }
    }
    return out;
}

inline std::string coding_matrix_header_json(const CodingMatrix& w)
{
    detail::JsonObjectWriter json;
    json.integer("N", w.size()).string("method", to_string(w.method));
    if (w.lambda) {
        json.real("lambda", *w.lambda);
    } else {
        json.raw("lambda", "null");
    }
    if (w.method == CodingMethod::NNLS) {
        json.real("kktTol", w.kktTol);
    } else {
        json.raw("kktTol", "null");
    }
    return json.str();
}

} // namespace shapecrp
