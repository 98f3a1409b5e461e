#pragma once

// Descriptor cache: one JSON object per line,
//   {"name":..., "kind":"gps"|"shapedna", "p":..., "hash":..., "values":[...]}
// where hash is the content hash of the source mesh file. An entry is valid
// for a request only when (name, kind, p, hash) all match.

#include "shapecrp/error.hpp"
#include "shapecrp/evaluation.hpp"
#include "shapecrp/manifest.hpp"
#include "shapecrp/spectrum.hpp"
#include "shapecrp/detail/format.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace shapecrp {

struct CacheEntry {
    SpectralDescriptor descriptor; ///< shapeName holds the manifest filename
    std::string hash;
};

inline std::string cache_line(const CacheEntry& e)
{
    return detail::JsonObjectWriter{}
               .string("name", e.descriptor.shapeName)
               .string("kind", to_string(e.descriptor.kind))
               .integer("p", static_cast<long long>(e.descriptor.p()))
               .string("hash", e.hash)
               .reals("values", e.descriptor.values)
               .str() +
           '\n';
}

inline std::vector<CacheEntry> parse_cache(std::string_view text)
{
    std::vector<CacheEntry> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view line = detail::trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            CacheEntry e;
            e.descriptor.shapeName = j.at("name").get<std::string>();
            const auto kind = parse_descriptor_kind(j.at("kind").get<std::string>());
            if (!kind) throw Error(ErrorCode::ParseError, "unknown descriptor kind");
            e.descriptor.kind = *kind;
            e.descriptor.values = j.at("values").get<std::vector<double>>();
            if (j.at("p").get<std::size_t>() != e.descriptor.values.size()) {
                throw Error(ErrorCode::ParseError, "p does not match the number of values");
            }
            e.hash = j.value("hash", std::string{});
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::ParseError, "cache line " + std::to_string(line_no) + ": " + ex.what());
        } catch (const Error& ex) {
            throw Error(ex.code(), "cache line " + std::to_string(line_no) + ": " + ex.message());
        }
    }
    return out;
}

inline std::string cache_to_text(const std::vector<CacheEntry>& entries)
{
    std::string out;
    for (const auto& e : entries) out += cache_line(e);
    return out;
}

/// Index of the entry for (name, kind, p), or -1. A non-empty hash must also match.
inline std::ptrdiff_t find_cache_entry(const std::vector<CacheEntry>& entries, std::string_view name,
                                       DescriptorKind kind, std::size_t p, std::string_view hash = {})
{
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& d = entries[i].descriptor;
        if (d.shapeName == name && d.kind == kind && d.p() == p && (hash.empty() || entries[i].hash == hash)) {
            return static_cast<std::ptrdiff_t>(i);
        }
    }
    return -1;
}

/// Builds the labeled dataset for a manifest from cached descriptors. Throws
/// MissingCacheEntry naming every absent shape.
inline LabeledDataset dataset_from_cache(const std::vector<ManifestEntry>& manifest,
                                         const std::vector<CacheEntry>& cache, DescriptorKind kind, std::size_t p)
{
    std::vector<SpectralDescriptor> descriptors;
    std::vector<std::string> labels;
    std::string missing;
    for (const auto& m : manifest) {
        const auto idx = find_cache_entry(cache, m.filename, kind, p);
        if (idx < 0) {
            missing += (missing.empty() ? "" : ", ") + m.filename;
            continue;
        }
        descriptors.push_back(cache[static_cast<std::size_t>(idx)].descriptor);
        labels.push_back(m.label);
    }
    if (!missing.empty()) {
        throw Error(ErrorCode::MissingCacheEntry, "no cached " + std::string(to_string(kind)) + " p=" +
                                                      std::to_string(p) + " descriptor for: " + missing);
    }
    return make_dataset(descriptors, labels);
}

} // namespace shapecrp
