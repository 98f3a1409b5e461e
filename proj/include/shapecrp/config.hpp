#pragma once

// Run configuration. File grammar, one item per line:
//   # comment            (also ';')
//   [section]            following keys are read as section.key
//   key = value          value runs to end of line, surrounding spaces trimmed
// Keys outside any section must be written fully qualified (svm.c = 1).
// Unknown keys are rejected. Values given later override earlier ones, which
// is how command-line flags override the file.

#include "shapecrp/coding.hpp"
#include "shapecrp/error.hpp"
#include "shapecrp/evaluation.hpp"
#include "shapecrp/manifest.hpp"
#include "shapecrp/spectrum.hpp"

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shapecrp {

struct ConfigKey {
    std::string_view name;
    std::string_view defaultValue;
    std::string_view help;
};

/// Every accepted key with its default, in echo order.
inline const std::vector<ConfigKey>& config_keys()
{
    static const std::vector<ConfigKey> keys{
        {"paths.meshDir", "", "directory holding the OFF meshes"},
        {"paths.manifest", "", "CSV filename,label"},
        {"paths.cache", "descriptors.jsonl", "descriptor cache"},
        {"paths.out", "", "output file or directory"},
        {"descriptor.kind", "gps", "gps | shapedna"},
        {"descriptor.p", "100", "descriptor length"},
        {"coding.method", "l2", "l2 | nnls"},
        {"coding.lambda", "auto", "ridge parameter, auto = 0.001*N/700"},
        {"projection.d", "15", "output dimension"},
        {"projection.epsilonReg", "1e-06", "relative regularization of the local scatter"},
        {"projection.inputDim", "0", "descriptor prefix fed to coding, 0 = all"},
        {"pipeline.variant", "crp", "crp | baseline"},
        {"pipeline.baselineDim", "10", "descriptor prefix fed to the baseline SVM, 0 = all"},
        {"pipeline.workers", "0", "threads, 0 = hardware concurrency"},
        {"svm.cGrid", "0.1,1,10,100", "candidate c values, empty = use svm.c"},
        {"svm.c", "1", "c when the grid is empty"},
        {"svm.tolerance", "0.0001", "projected-gradient stopping tolerance"},
        {"svm.maxPasses", "1000", "pass budget per binary problem"},
        {"svm.seed", "0", "coordinate order seed"},
        {"svm.innerFolds", "3", "folds used to pick c on training data"},
        {"protocol.mode", "fraction", "fraction | kfold"},
        {"protocol.trainFraction", "0.7", "training share per class"},
        {"protocol.folds", "10", "folds in kfold mode"},
        {"protocol.repetitions", "100", "repetitions"},
        {"protocol.seed", "0", "split seed"},
        {"protocol.stratified", "true", "per-class splitting"},
    };
    return keys;
}

namespace detail {

inline bool is_known_key(std::string_view key)
{
    for (const auto& k : config_keys()) {
        if (k.name == key) return true;
    }
    return false;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text)
{
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw Error(ErrorCode::InvalidArgument,
                    "config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
    }
    return value;
}

} // namespace detail

/// Comma-separated reals; an empty or blank string gives an empty list.
inline std::vector<double> parse_real_list(std::string_view text, std::string_view what = "list")
{
    std::vector<double> out;
    while (!detail::trim(text).empty()) {
        const auto comma = text.find(',');
        out.push_back(detail::parse_number<double>(what, detail::trim(text.substr(0, comma))));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

class RunConfig {
public:
    RunConfig()
    {
        for (const auto& k : config_keys()) m_values[std::string(k.name)] = std::string(k.defaultValue);
    }

    void set(std::string_view key, std::string_view value)
    {
        if (!detail::is_known_key(key)) {
            throw Error(ErrorCode::UnknownConfigKey, "unknown config key '" + std::string(key) + "'");
        }
        m_values[std::string(key)] = std::string(value);
    }

    /// Applies a "key=value" assignment.
    void set_assignment(std::string_view assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorCode::InvalidArgument, "expected key=value, got '" + std::string(assignment) + "'");
        }
        set(detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
    }

    void load_text(std::string_view text)
    {
        std::string section;
        std::size_t line_no = 0;
        while (!text.empty()) {
            const auto nl = text.find('\n');
            const std::string_view line = detail::trim(text.substr(0, nl));
            text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
            ++line_no;
            if (line.empty() || line.front() == '#' || line.front() == ';') continue;
            const auto where = "config line " + std::to_string(line_no) + ": ";
            if (line.front() == '[') {
                if (line.back() != ']') throw Error(ErrorCode::InvalidArgument, where + "unterminated section");
                section = std::string(detail::trim(line.substr(1, line.size() - 2)));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw Error(ErrorCode::InvalidArgument, where + "expected key = value");
            const std::string key(detail::trim(line.substr(0, eq)));
            const std::string full = section.empty() ? key : section + "." + key;
            try {
                set(full, detail::trim(line.substr(eq + 1)));
            } catch (const Error& e) {
                throw Error(e.code(), where + e.message());
            }
        }
    }

    const std::string& get(std::string_view key) const
    {
        const auto it = m_values.find(std::string(key));
        if (it == m_values.end()) throw Error(ErrorCode::UnknownConfigKey, "unknown config key '" + std::string(key) + "'");
        return it->second;
    }

    double real(std::string_view key) const { return detail::parse_number<double>(key, get(key)); }
    long long integer(std::string_view key) const { return detail::parse_number<long long>(key, get(key)); }

    bool boolean(std::string_view key) const
    {
        const auto& v = get(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw Error(ErrorCode::InvalidArgument, "config key '" + std::string(key) + "' expects true/false");
    }

    std::vector<double> reals(std::string_view key) const { return parse_real_list(get(key), key); }

    DescriptorKind descriptor_kind() const
    {
        const auto k = parse_descriptor_kind(get("descriptor.kind"));
        if (!k) throw Error(ErrorCode::InvalidArgument, "descriptor.kind must be gps or shapedna");
        return *k;
    }

    std::size_t descriptor_p() const
    {
        const auto p = integer("descriptor.p");
        if (p < 1) throw Error(ErrorCode::InvalidArgument, "descriptor.p must be >= 1");
        return static_cast<std::size_t>(p);
    }

    unsigned workers() const
    {
        const auto w = integer("pipeline.workers");
        if (w < 0) throw Error(ErrorCode::InvalidArgument, "pipeline.workers must be >= 0");
        return w == 0 ? detail::default_workers() : static_cast<unsigned>(w);
    }

    PipelineConfig pipeline() const
    {
        PipelineConfig cfg;
        const auto variant = parse_pipeline_variant(get("pipeline.variant"));
        if (!variant) throw Error(ErrorCode::InvalidArgument, "pipeline.variant must be crp or baseline");
        cfg.variant = *variant;
        const auto method = parse_coding_method(get("coding.method"));
        if (!method) throw Error(ErrorCode::InvalidArgument, "coding.method must be l2 or nnls");
        cfg.coding = *method;
        if (get("coding.lambda") != "auto") {
            cfg.lambda = real("coding.lambda");
            if (!(*cfg.lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "coding.lambda must be > 0");
        }
        cfg.d = integer("projection.d");
        if (cfg.d < 1) throw Error(ErrorCode::InvalidArgument, "projection.d must be >= 1");
        cfg.epsilonReg = real("projection.epsilonReg");
        if (!(cfg.epsilonReg >= 0.0)) throw Error(ErrorCode::InvalidArgument, "projection.epsilonReg must be >= 0");
        cfg.inputDim = integer("projection.inputDim");
        cfg.baselineDim = integer("pipeline.baselineDim");
        if (cfg.inputDim < 0 || cfg.baselineDim < 0) {
            throw Error(ErrorCode::InvalidArgument, "projection.inputDim and pipeline.baselineDim must be >= 0");
        }
        cfg.cGrid = reals("svm.cGrid");
        for (double c : cfg.cGrid) {
            if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "svm.cGrid entries must be > 0");
        }
        cfg.svm.c = real("svm.c");
        cfg.svm.tolerance = real("svm.tolerance");
        cfg.svm.maxPasses = static_cast<int>(integer("svm.maxPasses"));
        cfg.svm.seed = static_cast<std::uint64_t>(integer("svm.seed"));
        if (!(cfg.svm.c > 0.0) || !(cfg.svm.tolerance > 0.0) || cfg.svm.maxPasses < 1) {
            throw Error(ErrorCode::InvalidArgument, "svm.c and svm.tolerance must be > 0, svm.maxPasses >= 1");
        }
        cfg.innerFolds = static_cast<int>(integer("svm.innerFolds"));
        if (cfg.innerFolds < 2) throw Error(ErrorCode::InvalidArgument, "svm.innerFolds must be >= 2");
        cfg.workers = workers();
        return cfg;
    }

    SplitProtocol protocol() const
    {
        SplitProtocol p;
        const auto& mode = get("protocol.mode");
        if (mode == "fraction") {
            p.mode = SplitMode::Fraction;
        } else if (mode == "kfold") {
            p.mode = SplitMode::KFold;
        } else {
            throw Error(ErrorCode::InvalidArgument, "protocol.mode must be fraction or kfold");
        }
        p.trainFraction = real("protocol.trainFraction");
        p.folds = static_cast<int>(integer("protocol.folds"));
        p.repetitions = static_cast<int>(integer("protocol.repetitions"));
        p.seed = static_cast<std::uint64_t>(integer("protocol.seed"));
        p.stratified = boolean("protocol.stratified");
        p.validate();
        return p;
    }

    /// Effective configuration in the file grammar; load_text(echo()) reproduces it.
    std::string echo() const
    {
        std::string out;
        std::string section;
        for (const auto& k : config_keys()) {
            const auto dot = k.name.find('.');
            const std::string_view sec = k.name.substr(0, dot);
            if (sec != section) {
                out += (out.empty() ? "[" : "\n[") + std::string(sec) + "]\n";
                section = sec;
            }
            out += std::string(k.name.substr(dot + 1)) + " = " + get(k.name) + '\n';
        }
        return out;
    }

    const std::map<std::string, std::string>& values() const { return m_values; }

private:
    std::map<std::string, std::string> m_values;
};

} // namespace shapecrp
