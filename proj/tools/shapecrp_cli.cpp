// shapecrp command-line tool. Exit codes: 0 success, 1 usage, 2 data, 3 numerical.

#include "shapecrp/shapecrp.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace shapecrp;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

int exit_code(ErrorCategory c) { return static_cast<int>(c); }

/// Command-line flag bound to a configuration key. Flags given on the command
/// line override the config file.
struct Flag {
    const char* option;
    const char* key;
};

constexpr Flag kPathFlags[] = {{"--mesh-dir", "paths.meshDir"},
                               {"--manifest", "paths.manifest"},
                               {"--cache", "paths.cache"},
                               {"--out", "paths.out"}};
constexpr Flag kDescriptorFlags[] = {{"--kind", "descriptor.kind"}, {"--dim", "descriptor.p"}};
constexpr Flag kCodingFlags[] = {{"--method", "coding.method"},
                                 {"--lambda", "coding.lambda"},
                                 {"--input-dim", "projection.inputDim"}};
constexpr Flag kPipelineFlags[] = {{"--variant", "pipeline.variant"},
                                   {"--d", "projection.d"},
                                   {"--epsilon-reg", "projection.epsilonReg"},
                                   {"--baseline-dim", "pipeline.baselineDim"},
                                   {"--c-grid", "svm.cGrid"},
                                   {"--c", "svm.c"},
                                   {"--svm-seed", "svm.seed"}};
constexpr Flag kProtocolFlags[] = {{"--mode", "protocol.mode"},
                                   {"--train-fraction", "protocol.trainFraction"},
                                   {"--folds", "protocol.folds"},
                                   {"--repetitions", "protocol.repetitions"},
                                   {"--seed", "protocol.seed"},
                                   {"--stratified", "protocol.stratified"}};
constexpr Flag kWorkerFlags[] = {{"--workers", "pipeline.workers"}};

/// Per-subcommand option storage.
struct CommandOptions {
    std::string configFile;
    std::vector<std::string> assignments;
    std::map<std::string, std::string> flagValues; ///< key -> value
    std::vector<std::pair<CLI::Option*, std::string>> bound;

    template <std::size_t N>
    void add(CLI::App* app, const Flag (&flags)[N])
    {
        for (const auto& f : flags) {
            auto* opt = app->add_option(f.option, flagValues[f.key], std::string("sets ") + f.key);
            bound.emplace_back(opt, f.key);
        }
    }

    RunConfig resolve() const
    {
        RunConfig cfg;
        if (!configFile.empty()) cfg.load_text(read_file(configFile));
        for (const auto& a : assignments) cfg.set_assignment(a);
        for (const auto& [opt, key] : bound) {
            if (opt->count() > 0) cfg.set(key, flagValues.at(key));
        }
        return cfg;
    }
};

void add_common(CLI::App* app, CommandOptions& o)
{
    app->add_option("--config", o.configFile, "key=value config file")->check(CLI::ExistingFile);
    app->add_option("--set", o.assignments, "override any config key (key=value), repeatable");
}

std::string require_path(const RunConfig& cfg, const char* key, const char* flag)
{
    const auto& v = cfg.get(key);
    if (v.empty()) throw Error(ErrorCode::InvalidArgument, std::string("missing ") + flag + " (" + key + ")");
    return v;
}

std::vector<ManifestEntry> load_manifest(const RunConfig& cfg)
{
    return parse_manifest(read_file(require_path(cfg, "paths.manifest", "--manifest")));
}

std::vector<CacheEntry> load_cache_if_present(const fs::path& path)
{
    if (!fs::exists(path)) return {};
    return parse_cache(read_file(path));
}

LabeledDataset load_dataset(const RunConfig& cfg)
{
    const auto manifest = load_manifest(cfg);
    const fs::path cache_path = require_path(cfg, "paths.cache", "--cache");
    if (!fs::exists(cache_path)) {
        throw Error(ErrorCode::MissingCacheEntry, "descriptor cache '" + cache_path.string() + "' does not exist");
    }
    return dataset_from_cache(manifest, parse_cache(read_file(cache_path)), cfg.descriptor_kind(), cfg.descriptor_p());
}

/// Sibling path with a new extension ("out.json" -> "out.csv").
fs::path with_extension(fs::path p, const char* ext) { return p.replace_extension(ext); }

void print_config(const RunConfig& cfg)
{
    std::cout << "# effective configuration\n";
    std::istringstream in(cfg.echo());
    for (std::string line; std::getline(in, line);) std::cout << "#   " << line << '\n';
}

// ---------------------------------------------------------------------------

int cmd_descriptors(const CommandOptions& o, bool force)
{
    const RunConfig cfg = o.resolve();
    const auto manifest = load_manifest(cfg);
    const fs::path mesh_dir = require_path(cfg, "paths.meshDir", "--mesh-dir");
    const fs::path cache_path = require_path(cfg, "paths.cache", "--cache");
    const auto kind = cfg.descriptor_kind();
    const auto p = cfg.descriptor_p();
    print_config(cfg);

    auto cache = load_cache_if_present(cache_path);
    struct Job {
        std::string hash;
        std::optional<CacheEntry> result;
        std::string error;
        std::vector<std::string> warnings;
        ErrorCategory category = ErrorCategory::Data;
        bool reused = false;
    };
    std::vector<Job> jobs(manifest.size());
    detail::parallel_for(manifest.size(), cfg.workers(), [&](std::size_t i) {
        Job& job = jobs[i];
        const auto& entry = manifest[i];
        try {
            const std::string bytes = read_file(mesh_dir / entry.filename);
            job.hash = content_hash(bytes);
            if (!force && find_cache_entry(cache, entry.filename, kind, p, job.hash) >= 0) {
                job.reused = true;
                return;
            }
            TriangleMesh mesh = parse_off(std::string_view(bytes), entry.filename);
            const auto summary = validate_mesh(mesh);
            if (!summary.closed) {
                job.warnings.push_back("mesh is not closed (" + std::to_string(summary.boundaryEdges) +
                                       " boundary edges); proceeding");
            }
            if (summary.nonManifoldEdges > 0) {
                job.warnings.push_back(std::to_string(summary.nonManifoldEdges) + " non-manifold edges");
            }
            job.result = CacheEntry{compute_descriptor(mesh, kind, p), job.hash};
        } catch (const Error& e) {
            job.error = e.what();
            job.category = e.category();
        } catch (const std::exception& e) {
            job.error = e.what();
        }
    });

    std::size_t computed = 0, reused = 0, failed = 0;
    int worst = 0;
    bool changed = false;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& name = manifest[i].filename;
        for (const auto& w : jobs[i].warnings) std::cerr << "warning: " << name << ": " << w << '\n';
        if (!jobs[i].error.empty()) {
            std::cerr << "error: " << name << ": " << jobs[i].error << '\n';
            ++failed;
            worst = std::max(worst, exit_code(jobs[i].category));
            continue;
        }
        if (jobs[i].reused) {
            ++reused;
            continue;
        }
        ++computed;
        changed = true;
        // Replace any entry for the same (name, kind, p), whatever its hash.
        const auto idx = find_cache_entry(cache, name, kind, p);
        if (idx >= 0) {
            cache[static_cast<std::size_t>(idx)] = *jobs[i].result;
        } else {
            cache.push_back(*jobs[i].result);
        }
    }
    if (changed) {
        write_file_atomic(cache_path, cache_to_text(cache));
        write_file_atomic(cache_path.string() + ".config.ini", cfg.echo());
    }
    std::cout << "descriptors: " << computed << " computed, " << reused << " reused, " << failed << " failed -> "
              << cache_path.string() << '\n';
    return worst;
}

int cmd_code(const CommandOptions& o)
{
    const RunConfig cfg = o.resolve();
    const auto pc = cfg.pipeline();
    const auto ds = load_dataset(cfg);
    const fs::path out = require_path(cfg, "paths.out", "--out");
    print_config(cfg);

    const Eigen::MatrixXd x = detail::truncate_normalize(ds.descriptors, pc.inputDim);
    const double lambda = pc.lambda.value_or(default_lambda(x.cols()));
    const auto w = build_coding_matrix(Dictionary(x, ds.names), pc.coding, lambda, pc.workers);
    write_file_atomic(out, coding_matrix_csv(w));
    write_file_atomic(with_extension(out, ".json"), coding_matrix_header_json(w) + "\n");
    write_file_atomic(with_extension(out, ".config.ini"), cfg.echo());

    std::size_t nonzeros = 0;
    for (Eigen::Index c = 0; c < w.entries.cols(); ++c) nonzeros += (w.entries.col(c).array() != 0.0).count();
    std::cout << "coding: N=" << w.size() << " method=" << to_string(w.method) << " nonzeros=" << nonzeros
              << " -> " << out.string() << '\n';
    std::cout << coding_matrix_header_json(w) << '\n';
    return 0;
}

int cmd_train(const CommandOptions& o)
{
    const RunConfig cfg = o.resolve();
    const auto pc = cfg.pipeline();
    const auto ds = load_dataset(cfg);
    const fs::path out = require_path(cfg, "paths.out", "--out");
    print_config(cfg);

    Bundle b;
    b.kind = ds.kind;
    b.p = static_cast<std::size_t>(ds.dim());
    b.pipeline = train_pipeline(ds, pc);
    save_bundle(out, b, cfg.echo());

    const auto features = transform(b.pipeline, ds.descriptors);
    const auto pred = predict_all(b.pipeline.model, features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == ds.labels[i];
    if (b.pipeline.projection) {
        for (const auto& w : b.pipeline.projection->warnings) std::cerr << "warning: " << w << '\n';
    }
    std::cout << "train: " << ds.size() << " samples, " << b.pipeline.model.classCount() << " classes, c="
              << detail::format_real(b.pipeline.model.c) << ", training accuracy "
              << detail::format_real(static_cast<double>(correct) / static_cast<double>(pred.size())) << " -> "
              << out.string() << '\n';
    return 0;
}

int cmd_predict(const CommandOptions& o, const std::string& bundleDir, const std::vector<std::string>& meshes)
{
    const RunConfig cfg = o.resolve();
    const Bundle b = load_bundle(bundleDir);

    std::vector<std::string> names, truth;
    std::vector<SpectralDescriptor> descriptors;
    for (const auto& path : meshes) {
        TriangleMesh mesh = parse_off(std::string_view(read_file(path)), fs::path(path).filename().string());
        descriptors.push_back(compute_descriptor(mesh, b.kind, b.p));
        names.push_back(path);
        truth.emplace_back();
    }
    if (!cfg.get("paths.manifest").empty()) {
        const auto manifest = load_manifest(cfg);
        const auto cache = parse_cache(read_file(require_path(cfg, "paths.cache", "--cache")));
        const auto ds = dataset_from_cache(manifest, cache, b.kind, b.p);
        for (Eigen::Index i = 0; i < ds.size(); ++i) {
            const auto& col = ds.descriptors.col(i);
            descriptors.push_back({std::vector<double>(col.begin(), col.end()), b.kind, ds.names[static_cast<std::size_t>(i)]});
            names.push_back(ds.names[static_cast<std::size_t>(i)]);
            truth.push_back(ds.labels[static_cast<std::size_t>(i)]);
        }
    }
    if (descriptors.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to predict: give meshes or --manifest");

    const auto ds = make_dataset(descriptors, std::vector<std::string>(descriptors.size(), ""));
    const auto pred = predict_all(b.pipeline.model, transform(b.pipeline, ds.descriptors));

    nlohmann::ordered_json report;
    report["bundle"] = bundleDir;
    auto rows = nlohmann::ordered_json::array();
    std::size_t labelled = 0, correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        nlohmann::ordered_json row;
        row["name"] = names[i];
        row["predicted"] = pred[i];
        if (!truth[i].empty()) {
            row["label"] = truth[i];
            ++labelled;
            correct += truth[i] == pred[i];
        }
        rows.push_back(row);
        std::cout << names[i] << " -> " << pred[i] << (truth[i].empty() ? "" : "  (label " + truth[i] + ")")
                  << '\n';
    }
    report["predictions"] = rows;
    if (labelled > 0) {
        const double acc = static_cast<double>(correct) / static_cast<double>(labelled);
        report["accuracy"] = acc;
        std::cout << "accuracy " << detail::format_real(acc) << " (" << correct << "/" << labelled << ")\n";
    }
    report["config"] = cfg.values();
    if (!cfg.get("paths.out").empty()) write_file_atomic(cfg.get("paths.out"), report.dump(2) + "\n");
    return 0;
}

int cmd_evaluate(const CommandOptions& o)
{
    const RunConfig cfg = o.resolve();
    const auto pc = cfg.pipeline();
    const auto proto = cfg.protocol();
    const auto ds = load_dataset(cfg);
    const fs::path out = require_path(cfg, "paths.out", "--out");
    print_config(cfg);

    auto rep = evaluate(ds, proto, pc, cfg.workers());
    rep.config = cfg.values();
    write_file_atomic(out, report_to_json(rep) + "\n");
    write_file_atomic(with_extension(out, ".csv"), report_runs_csv(rep));
    std::cout << "evaluate: " << rep.runs.size() << " runs, mean accuracy " << detail::format_real(rep.meanAccuracy)
              << ", std " << detail::format_real(rep.stdAccuracy) << " -> " << out.string() << '\n';
    return 0;
}

int cmd_sweep(const CommandOptions& o, const std::vector<long long>& dValues)
{
    const RunConfig cfg = o.resolve();
    const auto pc = cfg.pipeline();
    const auto proto = cfg.protocol();
    const auto ds = load_dataset(cfg);
    const fs::path out = require_path(cfg, "paths.out", "--out");
    print_config(cfg);

    std::vector<Eigen::Index> ds_values(dValues.begin(), dValues.end());
    const auto rows = sweep_dimension(ds, proto, pc, ds_values, cfg.workers());
    write_file_atomic(out, sweep_to_csv(rows));
    write_file_atomic(with_extension(out, ".config.ini"), cfg.echo());
    for (const auto& r : rows) {
        std::cout << "d=" << r.d << " mean " << detail::format_real(r.meanAccuracy) << " std "
                  << detail::format_real(r.stdAccuracy) << '\n';
    }
    return 0;
}

struct SynthOptions {
    std::vector<std::string> classes; ///< label:family:p1,p2,...
    std::vector<double> elongations{1.0, 1.5, 2.2};
    int perClass = 30;
    int subdiv = 3;
    double noise = 0.01;
    unsigned long long seed = 0;
    int consecutive = 0;
};

int cmd_synth(const CommandOptions& o, const SynthOptions& s)
{
    const RunConfig cfg = o.resolve();
    if (s.consecutive > 0) {
        // Label existing meshes in blocks of consecutive file numbers.
        const fs::path mesh_dir = require_path(cfg, "paths.meshDir", "--mesh-dir");
        const fs::path manifest_path = require_path(cfg, "paths.manifest", "--manifest");
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(mesh_dir)) {
            if (e.is_regular_file() && e.path().extension() == ".off") files.push_back(e.path().filename().string());
        }
        const auto manifest = consecutive_manifest(files, s.consecutive);
        write_file_atomic(manifest_path, manifest_to_csv(manifest));
        std::cout << "synth: manifest for " << manifest.size() << " meshes in groups of " << s.consecutive << " -> "
                  << manifest_path.string() << '\n';
        return 0;
    }

    const fs::path out = require_path(cfg, "paths.out", "--out");
    std::vector<SyntheticShape> shapes;
    if (s.classes.empty()) {
        shapes = synthetic_ellipsoid_classes(s.elongations, s.perClass, s.subdiv, s.noise, s.seed);
    } else {
        for (const auto& spec_text : s.classes) {
            const auto a = spec_text.find(':');
            const auto b = spec_text.find(':', a == std::string::npos ? a : a + 1);
            if (a == std::string::npos || b == std::string::npos) {
                throw Error(ErrorCode::InvalidArgument, "--class expects label:family:p1,p2,...");
            }
            const std::string label = spec_text.substr(0, a);
            const auto family = parse_shape_family(spec_text.substr(a + 1, b - a - 1));
            if (!family || label.empty()) throw Error(ErrorCode::InvalidArgument, "bad --class '" + spec_text + "'");
            const auto params = parse_real_list(spec_text.substr(b + 1), "--class parameters");
            for (int j = 0; j < s.perClass; ++j) {
                ShapeSpec spec{*family, params, s.subdiv, s.noise,
                               detail::derive_seed(s.seed, shapes.size())};
                char file[160];
                std::snprintf(file, sizeof(file), "%s_%03d.off", label.c_str(), j);
                shapes.push_back({generate_shape(spec), label, file});
            }
        }
    }
    std::vector<ManifestEntry> manifest;
    for (const auto& sh : shapes) {
        write_file_atomic(out / sh.filename, write_off(sh.mesh));
        manifest.push_back({sh.filename, sh.label});
    }
    const fs::path manifest_path =
        cfg.get("paths.manifest").empty() ? out / "manifest.csv" : fs::path(cfg.get("paths.manifest"));
    write_file_atomic(manifest_path, manifest_to_csv(manifest));
    std::cout << "synth: " << shapes.size() << " meshes -> " << out.string() << ", manifest "
              << manifest_path.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"3D shape classification with spectral descriptors and collaborative-representation projections"};
    app.require_subcommand(1);

    CommandOptions desc_o, code_o, train_o, pred_o, eval_o, sweep_o, synth_o;

    auto* desc = app.add_subcommand("descriptors", "compute and cache normalized spectral descriptors");
    add_common(desc, desc_o);
    desc_o.add(desc, kPathFlags);
    desc_o.add(desc, kDescriptorFlags);
    desc_o.add(desc, kWorkerFlags);
    bool force = false;
    desc->add_flag("--force", force, "recompute entries already cached");

    auto* code = app.add_subcommand("code", "build the coding matrix and export it as CSV + JSON header");
    add_common(code, code_o);
    code_o.add(code, kPathFlags);
    code_o.add(code, kDescriptorFlags);
    code_o.add(code, kCodingFlags);
    code_o.add(code, kWorkerFlags);

    auto* train = app.add_subcommand("train", "train on every manifest entry and write a model bundle");
    add_common(train, train_o);
    train_o.add(train, kPathFlags);
    train_o.add(train, kDescriptorFlags);
    train_o.add(train, kCodingFlags);
    train_o.add(train, kPipelineFlags);
    train_o.add(train, kWorkerFlags);

    auto* pred = app.add_subcommand("predict", "classify meshes or cached manifest entries with a bundle");
    add_common(pred, pred_o);
    pred_o.add(pred, kPathFlags);
    std::string bundle_dir;
    std::vector<std::string> meshes;
    pred->add_option("--bundle", bundle_dir, "bundle directory written by train")->required();
    pred->add_option("meshes", meshes, "OFF files to classify");

    auto* eval = app.add_subcommand("evaluate", "repeated train/test evaluation");
    add_common(eval, eval_o);
    eval_o.add(eval, kPathFlags);
    eval_o.add(eval, kDescriptorFlags);
    eval_o.add(eval, kCodingFlags);
    eval_o.add(eval, kPipelineFlags);
    eval_o.add(eval, kProtocolFlags);
    eval_o.add(eval, kWorkerFlags);

    auto* sweep = app.add_subcommand("sweep-dim", "accuracy as a function of projection dimension");
    add_common(sweep, sweep_o);
    sweep_o.add(sweep, kPathFlags);
    sweep_o.add(sweep, kDescriptorFlags);
    sweep_o.add(sweep, kCodingFlags);
    sweep_o.add(sweep, kPipelineFlags);
    sweep_o.add(sweep, kProtocolFlags);
    sweep_o.add(sweep, kWorkerFlags);
    std::vector<long long> d_values;
    sweep->add_option("--d-values", d_values, "projection dimensions to evaluate")->required()->delimiter(',');

    auto* synth = app.add_subcommand("synth", "generate synthetic meshes and a manifest, or label existing meshes");
    add_common(synth, synth_o);
    synth_o.add(synth, kPathFlags);
    SynthOptions so;
    synth->add_option("--class", so.classes, "label:family:p1,p2,... (family icosphere|ellipsoid|torus)");
    synth->add_option("--elongations", so.elongations, "ellipsoid classes (1,1,e) when no --class is given")
        ->delimiter(',');
    synth->add_option("--per-class", so.perClass, "members per class")->check(CLI::PositiveNumber);
    synth->add_option("--subdiv", so.subdiv, "subdivision level")->check(CLI::Range(0, 6));
    synth->add_option("--noise", so.noise, "normal displacement standard deviation")->check(CLI::NonNegativeNumber);
    synth->add_option("--shape-seed", so.seed, "generator seed");
    synth->add_option("--consecutive", so.consecutive,
                      "instead of generating, label --mesh-dir files in groups of this many consecutive numbers")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*desc) return cmd_descriptors(desc_o, force);
        if (*code) return cmd_code(code_o);
        if (*train) return cmd_train(train_o);
        if (*pred) return cmd_predict(pred_o, bundle_dir, meshes);
        if (*eval) return cmd_evaluate(eval_o);
        if (*sweep) return cmd_sweep(sweep_o, d_values);
        if (*synth) return cmd_synth(synth_o, so);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
