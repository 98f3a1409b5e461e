#pragma once

// Trained model bundle: a directory holding
//   bundle.json      format version, variant, descriptor settings, file list
//   svm.json         classifier
//   projection.json  projection (crp variant)
//   coding.csv       coding matrix triplets (crp variant)
//   coding.json      coding matrix header (crp variant)
//   config.ini       effective run configuration

#include "shapecrp/coding.hpp"
#include "shapecrp/error.hpp"
#include "shapecrp/evaluation.hpp"
#include "shapecrp/io.hpp"
#include "shapecrp/projection.hpp"
#include "shapecrp/spectrum.hpp"
#include "shapecrp/svm.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace shapecrp {

inline constexpr int kBundleFormatVersion = 1;

struct Bundle {
    TrainedPipeline pipeline;
    DescriptorKind kind = DescriptorKind::GPS;
    std::size_t p = 0; ///< descriptor length expected by the pipeline
};

inline void save_bundle(const std::filesystem::path& dir, const Bundle& b, const std::string& configEcho)
{
    const auto& tp = b.pipeline;
    nlohmann::ordered_json meta;
    meta["version"] = kBundleFormatVersion;
    meta["variant"] = to_string(tp.variant);
    meta["descriptorKind"] = to_string(b.kind);
    meta["p"] = b.p;
    meta["inputDim"] = tp.inputDim;
    meta["classLabels"] = tp.model.classLabels;
    meta["trainNames"] = tp.trainNames;
    nlohmann::json files = {"svm.json", "config.ini"};
    if (tp.variant == PipelineVariant::Crp) {
        if (!tp.projection || !tp.coding) throw Error(ErrorCode::InvalidArgument, "crp bundle lacks projection or coding");
        files.push_back("projection.json");
        files.push_back("coding.csv");
        files.push_back("coding.json");
    }
    meta["files"] = files;

    write_file_atomic(dir / "svm.json", model_to_json(tp.model) + "\n");
    write_file_atomic(dir / "config.ini", configEcho);
    if (tp.variant == PipelineVariant::Crp) {
        write_file_atomic(dir / "projection.json", projection_to_json(*tp.projection) + "\n");
        write_file_atomic(dir / "coding.csv", coding_matrix_csv(*tp.coding));
        write_file_atomic(dir / "coding.json", coding_matrix_header_json(*tp.coding) + "\n");
    }
    // Written last: its presence marks a complete bundle.
    write_file_atomic(dir / "bundle.json", meta.dump(2) + "\n");
}

/// Restores everything needed for prediction. The coding matrix is a training
/// diagnostic and is not reloaded.
inline Bundle load_bundle(const std::filesystem::path& dir)
{
    Bundle b;
    try {
        const auto meta = nlohmann::json::parse(read_file(dir / "bundle.json"));
        if (meta.at("version").get<int>() != kBundleFormatVersion) {
            throw Error(ErrorCode::ParseError, "unsupported bundle format version");
        }
        const auto variant = parse_pipeline_variant(meta.at("variant").get<std::string>());
        const auto kind = parse_descriptor_kind(meta.at("descriptorKind").get<std::string>());
        if (!variant || !kind) throw Error(ErrorCode::ParseError, "bundle has unknown variant or descriptor kind");
        b.kind = *kind;
        b.p = meta.at("p").get<std::size_t>();
        b.pipeline.variant = *variant;
        b.pipeline.inputDim = meta.at("inputDim").get<Eigen::Index>();
        b.pipeline.trainNames = meta.at("trainNames").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("bundle.json: ") + e.what());
    }
    b.pipeline.model = model_from_json(read_file(dir / "svm.json"));
    if (b.pipeline.variant == PipelineVariant::Crp) {
        b.pipeline.projection = projection_from_json(read_file(dir / "projection.json"));
    }
    return b;
}

} // namespace shapecrp
