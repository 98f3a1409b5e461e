#pragma once

#include "shapecrp/error.hpp"
#include "shapecrp/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <string>
#include <vector>

namespace shapecrp {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Discrete Laplace-Beltrami operator as the pencil (stiffness, mass).
///
/// stiffness is the positive semi-definite cotangent matrix (dimensionless,
/// rows sum to zero), mass the barycentric lumped area matrix stored by its
/// diagonal. Generalized eigenvalues of the pencil carry units of 1/area.
struct LaplaceOperator {
    SparseMatrix stiffness;
    Eigen::VectorXd massDiagonal;

    Eigen::Index size() const { return massDiagonal.size(); }

    SparseMatrix mass() const
    {
        SparseMatrix m(size(), size());
        m.reserve(Eigen::VectorXi::Constant(size(), 1));
        for (Eigen::Index i = 0; i < size(); ++i) m.insert(i, i) = massDiagonal[i];
        m.makeCompressed();
        return m;
    }
};

/// Cotangent stiffness with barycentric lumped mass.
///
/// Off-diagonal entry (i, j) is -(cot a + cot b)/2 over the angles opposite the
/// edge; the diagonal is the negated off-diagonal row sum. Mass entry i is a
/// third of the total area of faces incident to i. Boundary edges contribute a
/// single cotangent.
inline LaplaceOperator assemble_lbo(const TriangleMesh& mesh)
{
    const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
    if (n == 0 || mesh.faces.empty()) throw Error(ErrorCode::EmptyMesh, "mesh '" + mesh.name + "' has no faces");

    const double eps = area_epsilon(mesh);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.faces.size() * 6 + static_cast<std::size_t>(n));
    Eigen::VectorXd diagonal = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);

    for (std::size_t fi = 0; fi < mesh.faces.size(); ++fi) {
        const Face& f = mesh.faces[fi];
        const double area = face_area(mesh, f);
        if (!(area > eps)) {
            throw Error(ErrorCode::DegenerateFace, "face " + std::to_string(fi) + " of '" + mesh.name +
                                                       "' has area " + detail::format_real(area));
        }
        for (int c = 0; c < 3; ++c) {
            const int i = f[c];
            const int j = f[(c + 1) % 3];
            const int k = f[(c + 2) % 3];
            // Angle at i is opposite edge (j, k).
            const Vec3 e1 = mesh.vertices[j] - mesh.vertices[i];
            const Vec3 e2 = mesh.vertices[k] - mesh.vertices[i];
            const double cot = e1.dot(e2) / e1.cross(e2).norm();
            if (!std::isfinite(cot)) {
                throw Error(ErrorCode::DegenerateFace,
                            "non-finite cotangent in face " + std::to_string(fi) + " of '" + mesh.name + "'");
            }
            const double w = -0.5 * cot;
            triplets.emplace_back(j, k, w);
            triplets.emplace_back(k, j, w);
            diagonal[j] -= w;
            diagonal[k] -= w;
            mass[i] += area / 3.0;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(mass[i] > 0.0)) {
            throw Error(ErrorCode::UnreferencedVertex,
                        "vertex " + std::to_string(i) + " of '" + mesh.name + "' has no incident face");
        }
        triplets.emplace_back(i, i, diagonal[i]);
    }

    LaplaceOperator op;
    op.stiffness.resize(n, n);
    op.stiffness.setFromTriplets(triplets.begin(), triplets.end());
    op.stiffness.makeCompressed();
    op.massDiagonal = std::move(mass);
    return op;
}

} // namespace shapecrp
