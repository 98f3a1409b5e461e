#pragma once

// Reference computations used only by the tests. Each one reaches its answer
// by a different route than the library code it checks.

#include "shapecrp/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Nonnegative least squares by exhaustive support enumeration.

struct NnlsOptimum {
    Eigen::VectorXd x;
    double objective = std::numeric_limits<double>::infinity(); ///< ||A x - b||^2
};

/// Every subset S of columns is tried: the unconstrained least-squares fit on S
/// (minimum-norm, by complete orthogonal decomposition) is kept when it is
/// nonnegative. The best feasible fit is the constrained optimum because the
/// optimum is the unconstrained optimum on its own support.
inline NnlsOptimum brute_force_nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    const auto k = static_cast<int>(a.cols());
    NnlsOptimum best;
    best.x = Eigen::VectorXd::Zero(k);
    best.objective = b.squaredNorm();
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        std::vector<int> cols;
        for (int j = 0; j < k; ++j) {
            if (mask & (1u << j)) cols.push_back(j);
        }
        Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(cols[c]);
        const Eigen::VectorXd xs = sub.completeOrthogonalDecomposition().solve(b);
        if ((xs.array() < 0.0).any()) continue;
        const double obj = (sub * xs - b).squaredNorm();
        if (obj < best.objective) {
            best.objective = obj;
            best.x.setZero();
            for (std::size_t c = 0; c < cols.size(); ++c) best.x[cols[c]] = xs[static_cast<Eigen::Index>(c)];
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Ridge regression.

/// Normal equations (D^T D + lambda I) w = D^T x by column-pivoted QR.
inline Eigen::VectorXd ridge_normal_equations(const Eigen::MatrixXd& d, const Eigen::VectorXd& x, double lambda)
{
    Eigen::MatrixXd g = d.transpose() * d;
    g += lambda * Eigen::MatrixXd::Identity(g.rows(), g.cols());
    return g.colPivHouseholderQr().solve(d.transpose() * x);
}

/// Push-through form w = D^T (D D^T + lambda I)^{-1} x, an m x m solve.
inline Eigen::VectorXd ridge_push_through(const Eigen::MatrixXd& d, const Eigen::VectorXd& x, double lambda)
{
    Eigen::MatrixXd g = d * d.transpose();
    g += lambda * Eigen::MatrixXd::Identity(g.rows(), g.cols());
    return d.transpose() * g.fullPivLu().solve(x);
}

// ---------------------------------------------------------------------------
// Generalized symmetric-definite eigenproblems  A v = lambda B v.

struct GenEig {
    Eigen::VectorXd values;  ///< ascending
    Eigen::MatrixXd vectors; ///< B-orthonormal columns
};

/// Reduction through the symmetric inverse square root of B from its own
/// eigendecomposition (no Cholesky factor involved).
inline GenEig generalized_eigen(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(b);
    const Eigen::MatrixXd inv_sqrt =
        eb.eigenvectors() * eb.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * eb.eigenvectors().transpose();
    Eigen::MatrixXd c = inv_sqrt * a * inv_sqrt;
    c = 0.5 * (c + c.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ec(c);
    return {ec.eigenvalues(), inv_sqrt * ec.eigenvectors()};
}

/// Largest principal angle (radians) between the column spaces of u and v.
inline double max_principal_angle(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v)
{
    const Eigen::MatrixXd qu = u.householderQr().householderQ() * Eigen::MatrixXd::Identity(u.rows(), u.cols());
    const Eigen::MatrixXd qv = v.householderQr().householderQ() * Eigen::MatrixXd::Identity(v.rows(), v.cols());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(qu.transpose() * qv);
    const double smallest = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
    return std::acos(smallest);
}

// ---------------------------------------------------------------------------
// Meshes.

/// Edge -> number of incident faces, from an ordered map of vertex pairs.
inline std::map<std::pair<int, int>, int> edge_incidence_map(const shapecrp::TriangleMesh& mesh)
{
    std::map<std::pair<int, int>, int> edges;
    for (const auto& f : mesh.faces) {
        for (int c = 0; c < 3; ++c) {
            const int a = f[static_cast<std::size_t>(c)];
            const int b = f[static_cast<std::size_t>((c + 1) % 3)];
            ++edges[{std::min(a, b), std::max(a, b)}];
        }
    }
    return edges;
}

struct DenseLaplacian {
    Eigen::MatrixXd stiffness;
    Eigen::MatrixXd mass;
};

/// Cotangent Laplacian from interior angles measured with acos, one face at a time.
inline DenseLaplacian dense_cotangent_laplacian(const shapecrp::TriangleMesh& mesh)
{
    const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
    DenseLaplacian out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    for (const auto& f : mesh.faces) {
        const Eigen::Vector3d p[3] = {mesh.vertices[static_cast<std::size_t>(f[0])],
                                      mesh.vertices[static_cast<std::size_t>(f[1])],
                                      mesh.vertices[static_cast<std::size_t>(f[2])]};
        const double area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
        for (int c = 0; c < 3; ++c) {
            // Angle at corner c is opposite the edge joining the other two corners.
            const Eigen::Vector3d u = (p[(c + 1) % 3] - p[c]).normalized();
            const Eigen::Vector3d v = (p[(c + 2) % 3] - p[c]).normalized();
            const double angle = std::acos(std::clamp(u.dot(v), -1.0, 1.0));
            const double w = 0.5 / std::tan(angle);
            const int i = f[static_cast<std::size_t>((c + 1) % 3)];
            const int j = f[static_cast<std::size_t>((c + 2) % 3)];
            out.stiffness(i, j) -= w;
            out.stiffness(j, i) -= w;
            out.stiffness(i, i) += w;
            out.stiffness(j, j) += w;
            out.mass(f[static_cast<std::size_t>(c)], f[static_cast<std::size_t>(c)]) += area / 3.0;
        }
    }
    return out;
}

inline shapecrp::TriangleMesh regular_tetrahedron()
{
    shapecrp::TriangleMesh m;
    m.vertices = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    m.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
    m.name = "tetrahedron";
    return m;
}

// ---------------------------------------------------------------------------
// Random instances.

inline Eigen::MatrixXd gaussian_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols)
{
    std::normal_distribution<double> nd;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = nd(gen);
    }
    return m;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& gen, Eigen::Index n, double floor = 0.1)
{
    const Eigen::MatrixXd g = gaussian_matrix(gen, n, n);
    return g * g.transpose() + floor * static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd normalized_columns(Eigen::MatrixXd m)
{
    for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c).normalize();
    return m;
}

// ---------------------------------------------------------------------------
// Scratch directories.

class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        std::random_device rd;
        m_path = std::filesystem::temp_directory_path() /
                 ("shapecrp_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(m_path);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(m_path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return m_path; }
    std::filesystem::path operator/(const std::string& name) const { return m_path / name; }

private:
    std::filesystem::path m_path;
};

} // namespace oracle
