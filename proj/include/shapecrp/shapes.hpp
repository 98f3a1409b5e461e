#pragma once

// Synthetic closed surfaces used for desk-scale experiments and tests.

#include "shapecrp/error.hpp"
#include "shapecrp/mesh.hpp"
#include "shapecrp/detail/rng.hpp"

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace shapecrp {

enum class ShapeFamily { Icosphere, Ellipsoid, Torus };

inline std::string_view to_string(ShapeFamily f)
{
    switch (f) {
    case ShapeFamily::Icosphere: return "icosphere";
    case ShapeFamily::Ellipsoid: return "ellipsoid";
    case ShapeFamily::Torus: return "torus";
    }
    return "unknown";
}

inline std::optional<ShapeFamily> parse_shape_family(std::string_view s)
{
    if (s == "icosphere") return ShapeFamily::Icosphere;
    if (s == "ellipsoid") return ShapeFamily::Ellipsoid;
    if (s == "torus") return ShapeFamily::Torus;
    return std::nullopt;
}

/// Parameters per family:
///  - icosphere: {} or {radius}
///  - ellipsoid: {a, b, c} semi-axes
///  - torus:     {majorRadius, minorRadius}, grid (12*2^subdiv) x (6*2^subdiv)
struct ShapeSpec {
    ShapeFamily family = ShapeFamily::Icosphere;
    std::vector<double> params;
    int subdiv = 0;
    double noise = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline TriangleMesh icosahedron()
{
    const double t = std::numbers::phi;
    TriangleMesh m;
    m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& v : m.vertices) v.normalize();
    m.faces = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    return m;
}

/// One 1-to-4 midpoint subdivision with the new vertices pushed to the unit sphere.
inline TriangleMesh subdivide_sphere(const TriangleMesh& in)
{
    TriangleMesh out;
    out.vertices = in.vertices;
    out.faces.reserve(in.faces.size() * 4);
    std::unordered_map<std::uint64_t, int> midpoints;
    auto midpoint = [&](int a, int b) {
        const auto key = edge_key(a, b);
        if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
        const int idx = static_cast<int>(out.vertices.size());
        out.vertices.push_back((in.vertices[a] + in.vertices[b]).normalized());
        midpoints.emplace(key, idx);
        return idx;
    };
    for (const Face& f : in.faces) {
        const int ab = midpoint(f[0], f[1]);
        const int bc = midpoint(f[1], f[2]);
        const int ca = midpoint(f[2], f[0]);
        out.faces.push_back({f[0], ab, ca});
        out.faces.push_back({f[1], bc, ab});
        out.faces.push_back({f[2], ca, bc});
        out.faces.push_back({ab, bc, ca});
    }
    return out;
}

inline TriangleMesh unit_icosphere(int subdiv)
{
    TriangleMesh m = icosahedron();
    for (int i = 0; i < subdiv; ++i) m = subdivide_sphere(m);
    return m;
}

inline TriangleMesh torus(double major, double minor, int subdiv)
{
    const int nu = 12 << subdiv;
    const int nv = 6 << subdiv;
    TriangleMesh m;
    m.vertices.reserve(static_cast<std::size_t>(nu) * nv);
    for (int i = 0; i < nu; ++i) {
        const double u = 2.0 * std::numbers::pi * i / nu;
        for (int j = 0; j < nv; ++j) {
            const double v = 2.0 * std::numbers::pi * j / nv;
            const double ring = major + minor * std::cos(v);
            m.vertices.emplace_back(ring * std::cos(u), ring * std::sin(u), minor * std::sin(v));
        }
    }
    auto id = [&](int i, int j) { return ((i % nu) * nv) + (j % nv); };
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            m.faces.push_back({a, b, c});
            m.faces.push_back({a, c, d});
        }
    }
    return m;
}

/// Unit vertex normals from area-weighted face normals.
inline std::vector<Vec3> vertex_normals(const TriangleMesh& m)
{
    std::vector<Vec3> normals(m.vertices.size(), Vec3::Zero());
    for (const Face& f : m.faces) {
        const Vec3 n = (m.vertices[f[1]] - m.vertices[f[0]]).cross(m.vertices[f[2]] - m.vertices[f[0]]);
        for (int v : f) normals[v] += n;
    }
    for (Vec3& n : normals) {
        const double len = n.norm();
        if (len > 0.0) n /= len;
    }
    return normals;
}

[[noreturn]] inline void invalid_params(const std::string& what)
{
    throw Error(ErrorCode::InvalidParams, what);
}

} // namespace detail

/// Deterministic closed, consistently oriented (outward) surface. With noise > 0
/// every vertex moves along its normal by a N(0, noise^2) amount drawn from a
/// generator seeded by spec.seed.
inline TriangleMesh generate_shape(const ShapeSpec& spec)
{
    if (spec.subdiv < 0 || spec.subdiv > 6) detail::invalid_params("subdiv must be in [0, 6]");
    if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) detail::invalid_params("noise must be >= 0");
    for (double p : spec.params) {
        if (!std::isfinite(p)) detail::invalid_params("non-finite shape parameter");
    }

    TriangleMesh mesh;
    switch (spec.family) {
    case ShapeFamily::Icosphere: {
        if (spec.params.size() > 1) detail::invalid_params("icosphere takes at most {radius}");
        const double radius = spec.params.empty() ? 1.0 : spec.params[0];
        if (!(radius > 0.0)) detail::invalid_params("icosphere radius must be > 0");
        mesh = detail::unit_icosphere(spec.subdiv);
        if (radius != 1.0) {
            for (Vec3& v : mesh.vertices) v *= radius;
        }
        break;
    }
    case ShapeFamily::Ellipsoid: {
        if (spec.params.size() != 3) detail::invalid_params("ellipsoid takes {a, b, c}");
        const Vec3 axes(spec.params[0], spec.params[1], spec.params[2]);
        if (!(axes.minCoeff() > 0.0)) detail::invalid_params("ellipsoid semi-axes must be > 0");
        mesh = detail::unit_icosphere(spec.subdiv);
        for (Vec3& v : mesh.vertices) v = v.cwiseProduct(axes);
        break;
    }
    case ShapeFamily::Torus: {
        if (spec.params.size() != 2) detail::invalid_params("torus takes {majorRadius, minorRadius}");
        const double major = spec.params[0];
        const double minor = spec.params[1];
        if (!(minor > 0.0) || !(major > minor)) {
            detail::invalid_params("torus needs majorRadius > minorRadius > 0");
        }
        mesh = detail::torus(major, minor, spec.subdiv);
        break;
    }
    }

    if (spec.noise > 0.0) {
        const auto normals = detail::vertex_normals(mesh);
        detail::Rng rng(spec.seed);
        for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
            mesh.vertices[i] += (spec.noise * rng.normal()) * normals[i];
        }
    }
    mesh.name = std::string(to_string(spec.family));
    return mesh;
}

struct SyntheticShape {
    TriangleMesh mesh;
    std::string label;
    std::string filename;
};

/// One class per elongation e, semi-axes (1, 1, e); members differ only by
/// their noise draw. Shape i (class-major order) uses seed derive_seed(seed, i).
inline std::vector<SyntheticShape> synthetic_ellipsoid_classes(const std::vector<double>& elongations, int perClass,
                                                               int subdiv, double noise, std::uint64_t seed)
{
    if (elongations.empty() || perClass < 1) detail::invalid_params("need at least one class and one member");
    std::vector<SyntheticShape> out;
    for (std::size_t c = 0; c < elongations.size(); ++c) {
        char label[48];
        std::snprintf(label, sizeof(label), "ellipsoid_%g", elongations[c]);
        for (int j = 0; j < perClass; ++j) {
            ShapeSpec spec;
            spec.family = ShapeFamily::Ellipsoid;
            spec.params = {1.0, 1.0, elongations[c]};
            spec.subdiv = subdiv;
            spec.noise = noise;
            spec.seed = detail::derive_seed(seed, out.size());
            char file[80];
            std::snprintf(file, sizeof(file), "%s_%03d.off", label, j);
            SyntheticShape s{generate_shape(spec), label, file};
            s.mesh.name = file;
            out.push_back(std::move(s));
        }
    }
    return out;
}

} // namespace shapecrp
