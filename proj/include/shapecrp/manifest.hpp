#pragma once

// Dataset manifests: CSV lines "filename,label". An optional first line
// "filename,label" is a header; blank lines and lines starting with '#' are
// skipped. Filenames are relative to the mesh directory.

#include "shapecrp/error.hpp"

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace shapecrp {

struct ManifestEntry {
    std::string filename;
    std::string label;

    bool operator==(const ManifestEntry&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

} // namespace detail

inline std::vector<ManifestEntry> parse_manifest(std::string_view text)
{
    std::vector<ManifestEntry> out;
    std::size_t line_no = 0;
    bool first = true;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = detail::trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            throw Error(ErrorCode::ParseError,
                        "manifest line " + std::to_string(line_no) + ": expected 'filename,label'");
        }
        const std::string file(detail::trim(line.substr(0, comma)));
        const std::string label(detail::trim(line.substr(comma + 1)));
        const bool header = first && file == "filename" && label == "label";
        first = false;
        if (header) continue;
        if (file.empty() || label.empty()) {
            throw Error(ErrorCode::ParseError, "manifest line " + std::to_string(line_no) + ": empty field");
        }
        out.push_back({file, label});
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (out[i].filename == out[j].filename) {
                throw Error(ErrorCode::ParseError, "manifest lists '" + out[i].filename + "' twice");
            }
        }
    }
    if (out.empty()) throw Error(ErrorCode::ParseError, "manifest has no entries");
    return out;
}

inline std::string manifest_to_csv(const std::vector<ManifestEntry>& entries)
{
    std::string out = "filename,label\n";
    for (const auto& e : entries) out += e.filename + ',' + e.label + '\n';
    return out;
}

/// Orders names by their embedded digit runs numerically ("T2" < "T10").
inline bool natural_less(std::string_view a, std::string_view b)
{
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
        const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
        if (da && db) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
            std::string_view na = a.substr(i, ie - i), nb = b.substr(j, je - j);
            while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
            while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
            if (na.size() != nb.size()) return na.size() < nb.size();
            if (na != nb) return na < nb;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return a.size() - i < b.size() - j;
}

/// Assigns labels to blocks of `groupSize` consecutive files in natural order:
/// files 0..groupSize-1 get "class0", the next block "class1", and so on.
inline std::vector<ManifestEntry> consecutive_manifest(std::vector<std::string> filenames, int groupSize)
{
    if (groupSize < 1) throw Error(ErrorCode::InvalidArgument, "group size must be >= 1");
    if (filenames.empty()) throw Error(ErrorCode::InvalidArgument, "no mesh files to label");
    std::sort(filenames.begin(), filenames.end(), [](const std::string& a, const std::string& b) {
        return natural_less(a, b);
    });
    std::vector<ManifestEntry> out;
    for (std::size_t i = 0; i < filenames.size(); ++i) {
        out.push_back({filenames[i], "class" + std::to_string(i / static_cast<std::size_t>(groupSize))});
    }
    return out;
}

} // namespace shapecrp
