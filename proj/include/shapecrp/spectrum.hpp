#pragma once

#include "shapecrp/eigensolver.hpp"
#include "shapecrp/error.hpp"
#include "shapecrp/laplace.hpp"
#include "shapecrp/mesh.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shapecrp {

/// Ascending LBO eigenvalues. Eigenvectors are not retained.
struct Spectrum {
    std::vector<double> eigenvalues;
    std::size_t k = 0;
    std::size_t zeroCount = 0;
};

enum class DescriptorKind { ShapeDNA, GPS };

inline std::string_view to_string(DescriptorKind kind)
{
    return kind == DescriptorKind::GPS ? "gps" : "shapedna";
}

inline std::optional<DescriptorKind> parse_descriptor_kind(std::string_view s)
{
    if (s == "gps" || s == "GPS") return DescriptorKind::GPS;
    if (s == "shapedna" || s == "ShapeDNA") return DescriptorKind::ShapeDNA;
    return std::nullopt;
}

struct SpectralDescriptor {
    std::vector<double> values;
    DescriptorKind kind = DescriptorKind::ShapeDNA;
    std::string shapeName;

    std::size_t p() const { return values.size(); }
};

/// Eigenvalues below max(1e-8 * largest, 1e-12) count as zero.
inline double zero_threshold(std::span<const double> ascending)
{
    const double largest = ascending.empty() ? 0.0 : ascending.back();
    return std::max(1e-8 * largest, 1e-12);
}

/// Classifies and clamps raw eigenvalues. Values below -threshold indicate a
/// solver failure rather than geometry.
inline Spectrum make_spectrum(std::vector<double> values)
{
    std::sort(values.begin(), values.end());
    const double threshold = zero_threshold(values);
    Spectrum s;
    s.k = values.size();
    for (double& v : values) {
        if (v < -threshold) {
            throw Error(ErrorCode::ConvergenceFailure,
                        "eigenvalue " + detail::format_real(v) + " is negative beyond the zero threshold");
        }
        if (v < threshold) {
            v = 0.0;
            ++s.zeroCount;
        }
    }
    s.eigenvalues = std::move(values);
    return s;
}

inline Spectrum smallest_eigenpairs(const LaplaceOperator& op, std::size_t k, const EigenOptions& opts = {})
{
    const auto result =
        smallest_generalized_eigenpairs(op.stiffness, op.massDiagonal, static_cast<Eigen::Index>(k), opts);
    return make_spectrum(std::vector<double>(result.values.begin(), result.values.end()));
}

namespace detail {

inline std::span<const double> nonzero_head(const Spectrum& spectrum, std::size_t p)
{
    if (p == 0) throw Error(ErrorCode::InvalidArgument, "descriptor dimension must be positive");
    const std::size_t available = spectrum.eigenvalues.size() - std::min(spectrum.zeroCount, spectrum.eigenvalues.size());
    if (available < p) {
        throw Error(ErrorCode::InsufficientEigenvalues,
                    "need " + std::to_string(p) + " nonzero eigenvalues, spectrum has " + std::to_string(available) +
                        " (request k >= p + zeroCount)");
    }
    return std::span<const double>(spectrum.eigenvalues).subspan(spectrum.zeroCount, p);
}

} // namespace detail

/// First p nonzero eigenvalues (not normalized).
inline SpectralDescriptor shape_dna(const Spectrum& spectrum, std::size_t p, std::string shapeName = {})
{
    const auto head = detail::nonzero_head(spectrum, p);
    return {std::vector<double>(head.begin(), head.end()), DescriptorKind::ShapeDNA, std::move(shapeName)};
}

/// Inverse square roots of the first p nonzero eigenvalues (not normalized).
inline SpectralDescriptor gps(const Spectrum& spectrum, std::size_t p, std::string shapeName = {})
{
    const auto head = detail::nonzero_head(spectrum, p);
    SpectralDescriptor d{{}, DescriptorKind::GPS, std::move(shapeName)};
    d.values.reserve(p);
    for (double lambda : head) d.values.push_back(1.0 / std::sqrt(lambda));
    return d;
}

inline SpectralDescriptor normalize(const SpectralDescriptor& d)
{
    double sq = 0.0;
    for (double v : d.values) sq += v * v;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error(ErrorCode::ZeroDescriptor, "descriptor of '" + d.shapeName + "' has zero or non-finite norm");
    }
    SpectralDescriptor out = d;
    for (double& v : out.values) v /= norm;
    return out;
}

inline SpectralDescriptor make_descriptor(const Spectrum& spectrum, DescriptorKind kind, std::size_t p,
                                          std::string shapeName = {})
{
    return kind == DescriptorKind::GPS ? gps(spectrum, p, std::move(shapeName))
                                       : shape_dna(spectrum, p, std::move(shapeName));
}

/// Extra eigenvalues requested beyond p to absorb several zero modes.
inline constexpr std::size_t kExtraEigenvalues = 4;

/// Mesh to normalized descriptor: assemble, solve for p + 4 eigenvalues,
/// drop zero modes, truncate to p, normalize.
inline SpectralDescriptor compute_descriptor(const TriangleMesh& mesh, DescriptorKind kind, std::size_t p,
                                             const EigenOptions& opts = {})
{
    const LaplaceOperator op = assemble_lbo(mesh);
    const std::size_t k = std::min<std::size_t>(p + kExtraEigenvalues, static_cast<std::size_t>(op.size()));
    const Spectrum spectrum = smallest_eigenpairs(op, k, opts);
    return normalize(make_descriptor(spectrum, kind, p, mesh.name));
}

} // namespace shapecrp
