#pragma once

#include "shapecrp/error.hpp"
#include "shapecrp/detail/format.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace shapecrp {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

/// Triangle surface mesh. Face indices refer to `vertices`; no face repeats an
/// index. Geometry is never modified in place, transformations return copies.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::string name;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t face_count() const { return faces.size(); }
};

struct ValidationSummary {
    std::size_t vertexCount = 0;
    std::size_t faceCount = 0;
    double minFaceArea = 0.0;
    double areaEpsilon = 0.0;
    std::size_t degenerateFaces = 0;  ///< faces with area <= areaEpsilon
    std::size_t boundaryEdges = 0;    ///< edges with exactly one incident face
    std::size_t nonManifoldEdges = 0; ///< edges with more than two incident faces
    std::size_t edgeCount = 0;
    std::size_t unreferencedVertices = 0;
    std::size_t components = 0;
    bool closed = false;

    /// True when the mesh satisfies the preconditions of operator assembly.
    bool usable() const
    {
        return faceCount > 0 && degenerateFaces == 0 && unreferencedVertices == 0;
    }
    long long euler_characteristic() const
    {
        return static_cast<long long>(vertexCount) - static_cast<long long>(edgeCount) +
               static_cast<long long>(faceCount);
    }
};

inline double face_area(const TriangleMesh& mesh, const Face& f)
{
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    return 0.5 * (b - a).cross(c - a).norm();
}

inline double bounding_box_diagonal(const TriangleMesh& mesh)
{
    if (mesh.vertices.empty()) return 0.0;
    Vec3 lo = mesh.vertices.front();
    Vec3 hi = lo;
    for (const Vec3& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return (hi - lo).norm();
}

/// Faces with area at or below this value are treated as degenerate.
inline double area_epsilon(const TriangleMesh& mesh)
{
    const double diag = bounding_box_diagonal(mesh);
    return 1e-12 * diag * diag;
}

namespace detail {

inline std::uint64_t edge_key(int a, int b)
{
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

/// Sorted undirected edge keys, one entry per (face, edge) incidence.
inline std::vector<std::uint64_t> edge_incidences(const TriangleMesh& mesh)
{
    std::vector<std::uint64_t> keys;
    keys.reserve(mesh.faces.size() * 3);
    for (const Face& f : mesh.faces) {
        keys.push_back(edge_key(f[0], f[1]));
        keys.push_back(edge_key(f[1], f[2]));
        keys.push_back(edge_key(f[2], f[0]));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n)
        : m_parent(n)
    {
        std::iota(m_parent.begin(), m_parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x)
    {
        while (m_parent[x] != x) {
            m_parent[x] = m_parent[m_parent[x]];
            x = m_parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b) m_parent[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> m_parent;
};

} // namespace detail

/// Number of connected components; every vertex (referenced or not) belongs
/// to exactly one.
inline std::size_t connected_components(const TriangleMesh& mesh)
{
    detail::DisjointSets sets(mesh.vertices.size());
    for (const Face& f : mesh.faces) {
        sets.unite(f[0], f[1]);
        sets.unite(f[1], f[2]);
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        if (sets.find(i) == i) ++count;
    }
    return count;
}

inline ValidationSummary validate_mesh(const TriangleMesh& mesh)
{
    ValidationSummary s;
    s.vertexCount = mesh.vertices.size();
    s.faceCount = mesh.faces.size();
    s.areaEpsilon = area_epsilon(mesh);
    s.minFaceArea = mesh.faces.empty() ? 0.0 : std::numeric_limits<double>::infinity();

    std::vector<char> referenced(mesh.vertices.size(), 0);
    for (const Face& f : mesh.faces) {
        const double area = face_area(mesh, f);
        s.minFaceArea = std::min(s.minFaceArea, area);
        if (!(area > s.areaEpsilon)) ++s.degenerateFaces;
        for (int v : f) referenced[v] = 1;
    }
    s.unreferencedVertices =
        static_cast<std::size_t>(std::count(referenced.begin(), referenced.end(), 0));

    const auto keys = detail::edge_incidences(mesh);
    for (std::size_t i = 0; i < keys.size();) {
        std::size_t j = i;
        while (j < keys.size() && keys[j] == keys[i]) ++j;
        const std::size_t incident = j - i;
        ++s.edgeCount;
        if (incident == 1) ++s.boundaryEdges;
        if (incident > 2) ++s.nonManifoldEdges;
        i = j;
    }
    s.closed = s.boundaryEdges == 0;
    s.components = connected_components(mesh);
    return s;
}

inline TriangleMesh scale_mesh(const TriangleMesh& mesh, double a)
{
    if (!(a > 0.0) || !std::isfinite(a)) {
        throw Error(ErrorCode::NonPositiveScale, "scale factor must be positive, got " +
                                                     detail::format_real(a));
    }
    TriangleMesh out = mesh;
    for (Vec3& v : out.vertices) v *= a;
    return out;
}

namespace detail {

class OffLineReader {
public:
    explicit OffLineReader(std::istream& in)
        : m_in(in)
    {}

    /// Next line with comments stripped that contains at least one token.
    bool next(std::vector<std::string_view>& tokens)
    {
        while (std::getline(m_in, m_line)) {
            ++m_line_number;
            if (const auto hash = m_line.find('#'); hash != std::string::npos) {
                m_line.erase(hash);
            }
            tokens.clear();
            std::string_view rest(m_line);
            std::size_t pos = 0;
            while (pos < rest.size()) {
                while (pos < rest.size() && std::isspace(static_cast<unsigned char>(rest[pos]))) ++pos;
                std::size_t end = pos;
                while (end < rest.size() && !std::isspace(static_cast<unsigned char>(rest[end]))) ++end;
                if (end > pos) tokens.push_back(rest.substr(pos, end - pos));
                pos = end;
            }
            if (!tokens.empty()) return true;
        }
        return false;
    }

    std::size_t line_number() const { return m_line_number; }

private:
    std::istream& m_in;
    std::string m_line;
    std::size_t m_line_number = 0;
};

[[noreturn]] inline void off_error(ErrorCode code, std::size_t line, const std::string& what)
{
    throw Error(code, "line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_token(std::string_view token, std::size_t line)
{
    T value{};
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    if (!token.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        off_error(ErrorCode::MalformedNumber, line, "cannot parse '" + std::string(token) + "'");
    }
    return value;
}

} // namespace detail

/// Parses an ASCII OFF (GeomView) triangle mesh. Comments and blank lines are
/// skipped; trailing per-vertex or per-face fields (colors) are ignored.
inline TriangleMesh parse_off(std::istream& in, std::string name = {})
{
    detail::OffLineReader reader(in);
    std::vector<std::string_view> tok;

    if (!reader.next(tok) || tok.front() != "OFF") {
        detail::off_error(ErrorCode::MissingHeader, reader.line_number(), "expected 'OFF' header");
    }
    // Counts may follow the header on the same line.
    std::vector<std::string_view> counts(tok.begin() + 1, tok.end());
    if (counts.empty()) {
        if (!reader.next(tok)) {
            detail::off_error(ErrorCode::CountMismatch, reader.line_number(), "missing counts line");
        }
        counts = tok;
    }
    const std::size_t counts_line = reader.line_number();
    if (counts.size() < 2) {
        detail::off_error(ErrorCode::CountMismatch, counts_line, "counts line needs 'nv nf [ne]'");
    }
    const auto nv = detail::parse_token<long long>(counts[0], counts_line);
    const auto nf = detail::parse_token<long long>(counts[1], counts_line);
    if (nv < 0 || nf < 0) {
        detail::off_error(ErrorCode::CountMismatch, counts_line, "negative element count");
    }

    TriangleMesh mesh;
    mesh.name = std::move(name);
    mesh.vertices.reserve(static_cast<std::size_t>(nv));
    mesh.faces.reserve(static_cast<std::size_t>(nf));

    for (long long i = 0; i < nv; ++i) {
        if (!reader.next(tok)) {
            detail::off_error(ErrorCode::CountMismatch, reader.line_number(),
                              "declared " + std::to_string(nv) + " vertices, found " +
                                  std::to_string(i));
        }
        const std::size_t line = reader.line_number();
        if (tok.size() < 3) {
            detail::off_error(ErrorCode::MalformedNumber, line, "vertex line needs 3 coordinates");
        }
        mesh.vertices.emplace_back(detail::parse_token<double>(tok[0], line),
                                   detail::parse_token<double>(tok[1], line),
                                   detail::parse_token<double>(tok[2], line));
    }

    for (long long i = 0; i < nf; ++i) {
        if (!reader.next(tok)) {
            detail::off_error(ErrorCode::CountMismatch, reader.line_number(),
                              "declared " + std::to_string(nf) + " faces, found " + std::to_string(i));
        }
        const std::size_t line = reader.line_number();
        const auto arity = detail::parse_token<long long>(tok[0], line);
        if (arity != 3) {
            detail::off_error(ErrorCode::NonTriangleFace, line,
                              "face has " + std::to_string(arity) + " vertices");
        }
        if (tok.size() < 4) {
            detail::off_error(ErrorCode::CountMismatch, line, "face line lists fewer than 3 indices");
        }
        Face f{};
        for (int c = 0; c < 3; ++c) {
            const auto idx = detail::parse_token<long long>(tok[1 + c], line);
            if (idx < 0 || idx >= nv) {
                detail::off_error(ErrorCode::IndexOutOfRange, line,
                                  "vertex index " + std::to_string(idx) + " not in [0, " +
                                      std::to_string(nv) + ")");
            }
            f[c] = static_cast<int>(idx);
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
            detail::off_error(ErrorCode::RepeatedVertex, line, "face repeats a vertex index");
        }
        mesh.faces.push_back(f);
    }

    if (reader.next(tok)) {
        detail::off_error(ErrorCode::CountMismatch, reader.line_number(),
                          "data after the declared " + std::to_string(nf) + " faces");
    }
    return mesh;
}

inline TriangleMesh parse_off(std::string_view text, std::string name = {})
{
    std::istringstream in{std::string(text)};
    return parse_off(in, std::move(name));
}

inline std::string write_off(const TriangleMesh& mesh)
{
    std::string out = "OFF\n";
    out += std::to_string(mesh.vertices.size()) + ' ' + std::to_string(mesh.faces.size()) + " 0\n";
    for (const Vec3& v : mesh.vertices) {
        out += detail::format_real(v.x()) + ' ' + detail::format_real(v.y()) + ' ' +
               detail::format_real(v.z()) + '\n';
    }
    for (const Face& f : mesh.faces) {
        out += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' +
               std::to_string(f[2]) + '\n';
    }
    return out;
}

/// Disjoint union of two meshes; faces of `b` are re-indexed.
inline TriangleMesh merge_meshes(const TriangleMesh& a, const TriangleMesh& b)
{
    TriangleMesh out = a;
    const int offset = static_cast<int>(a.vertices.size());
    out.vertices.insert(out.vertices.end(), b.vertices.begin(), b.vertices.end());
    for (Face f : b.faces) {
        for (int& v : f) v += offset;
        out.faces.push_back(f);
    }
    return out;
}

} // namespace shapecrp
