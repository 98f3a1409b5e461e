#pragma once

// Number and JSON text helpers. Persisted reals use 17 significant digits so
// every double round-trips exactly.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <span>
#include <string>
#include <string_view>

namespace shapecrp::detail {

inline std::string format_real(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

inline std::string json_string(std::string_view s)
{
    return nlohmann::json(std::string(s)).dump();
}

inline std::string json_array(std::span<const double> values)
{
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_real(values[i]);
    }
    out += ']';
    return out;
}

/// Minimal ordered JSON object writer for files whose numeric precision is
/// part of the format.
class JsonObjectWriter {
public:
    JsonObjectWriter& raw(std::string_view key, std::string_view json_text)
    {
        m_text += m_text.empty() ? "{" : ",";
        m_text += json_string(key);
        m_text += ':';
        m_text += json_text;
        return *this;
    }
    JsonObjectWriter& real(std::string_view key, double v) { return raw(key, format_real(v)); }
    JsonObjectWriter& integer(std::string_view key, long long v) { return raw(key, std::to_string(v)); }
    JsonObjectWriter& string(std::string_view key, std::string_view v) { return raw(key, json_string(v)); }
    JsonObjectWriter& reals(std::string_view key, std::span<const double> v) { return raw(key, json_array(v)); }

    std::string str() const { return m_text.empty() ? "{}" : m_text + "}"; }

private:
    std::string m_text;
};

} // namespace shapecrp::detail
