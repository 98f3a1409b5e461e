// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any gating criterion fails.

#include "oracles.hpp"

#include "shapecrp/shapecrp.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace shapecrp;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

/// priorSeconds counts shared setup time against this criterion's limit.
void report(int id, const char* title, double limitSeconds, const std::function<Outcome()>& check,
            double priorSeconds = 0.0)
{
    const auto start = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = priorSeconds + std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_time = limitSeconds <= 0.0 || seconds < limitSeconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++g_failures;
    std::printf("[%s] %d. %s (%.2f s%s) %s%s\n", pass ? "PASS" : "FAIL", id, title, seconds,
                limitSeconds > 0.0 ? (" / limit " + std::to_string(static_cast<int>(limitSeconds)) + " s").c_str() : "",
                o.detail.c_str(), in_time ? "" : " [too slow]");
    std::fflush(stdout);
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome nnls_oracle()
{
    std::mt19937_64 gen(1001);
    std::uniform_int_distribution<int> rows(1, 8), cols(1, 12);
    double worst_obj = 0.0;
    bool kkt = true;
    for (int t = 0; t < 200; ++t) {
        const Eigen::MatrixXd a = oracle::gaussian_matrix(gen, rows(gen), cols(gen));
        const Eigen::VectorXd b = oracle::gaussian_matrix(gen, a.rows(), 1);
        const auto r = nnls_solve_detailed(a, b);
        const double obj = (a * r.x - b).squaredNorm();
        worst_obj = std::max(worst_obj, std::abs(obj - oracle::brute_force_nnls(a, b).objective));
        const Eigen::VectorXd g = a.transpose() * (a * r.x - b);
        for (Eigen::Index j = 0; j < r.x.size(); ++j) {
            if (r.x[j] < 0.0 || g[j] < -r.kktTol || (r.x[j] > 0.0 && std::abs(g[j]) > r.kktTol)) kkt = false;
        }
    }
    return {worst_obj <= 1e-8 && kkt, "max |objective - brute force| = " + fmt("%.2e", worst_obj) +
                                          (kkt ? ", KKT holds" : ", KKT violated")};
}

Outcome ridge_oracle()
{
    std::mt19937_64 gen(1002);
    std::uniform_int_distribution<int> dims(2, 30), sizes(3, 60), expo(-4, 2);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Dictionary dict(oracle::normalized_columns(oracle::gaussian_matrix(gen, dims(gen), sizes(gen))));
        const double lambda = std::pow(10.0, expo(gen));
        const Eigen::Index i = t % dict.size();
        const auto code = ridge_code(dict, i, lambda);
        const Eigen::VectorXd ref = oracle::ridge_normal_equations(dict.without(i), dict.columns().col(i), lambda);
        Eigen::VectorXd got(dict.size() - 1);
        got << code.weights.head(i), code.weights.tail(dict.size() - 1 - i);
        worst = std::max(worst, (got - ref).norm() / std::max(ref.norm(), 1e-300));
    }
    return {worst <= 1e-10, "max relative weight error " + fmt("%.2e", worst)};
}

Outcome sphere_spectrum()
{
    const auto op = assemble_lbo(generate_shape({ShapeFamily::Icosphere, {}, 4, 0.0, 0}));
    const auto s = smallest_eigenpairs(op, 16);
    const auto& ev = s.eigenvalues;
    auto mean = [&](std::size_t lo, std::size_t hi) {
        double sum = 0.0;
        for (std::size_t i = lo; i < hi; ++i) sum += ev[i];
        return sum / static_cast<double>(hi - lo);
    };
    const double first = ev[1];
    const double g1 = mean(1, 4), g2 = mean(4, 9), g3 = mean(9, 16);
    const bool ok = s.zeroCount == 1 && std::abs(first - 2.0) <= 0.03 * 2.0 && std::abs(g1 - 2.0) <= 0.05 * 2.0 &&
                    std::abs(g2 - 6.0) <= 0.05 * 6.0 && std::abs(g3 - 12.0) <= 0.05 * 12.0;
    return {ok, "lambda_1 " + fmt("%.5f", first) + ", group means " + fmt("%.5f", g1) + " " + fmt("%.5f", g2) + " " +
                    fmt("%.5f", g3)};
}

Outcome scaling_law()
{
    double worst_value = 0.0;
    double worst_descriptor = 0.0;
    // One mesh on the dense path and one on the iterative path.
    for (int subdiv : {3, 4}) {
        ShapeSpec spec{ShapeFamily::Ellipsoid, {1.0, 1.3, 1.9}, subdiv, 0.01, 77};
        const auto mesh = generate_shape(spec);
        const auto scaled = scale_mesh(mesh, 2.0);
        const auto a = smallest_eigenpairs(assemble_lbo(mesh), 44);
        const auto b = smallest_eigenpairs(assemble_lbo(scaled), 44);
        for (std::size_t i = a.zeroCount; i < a.eigenvalues.size(); ++i) {
            worst_value = std::max(worst_value, std::abs(b.eigenvalues[i] - a.eigenvalues[i] / 4.0) /
                                                    (a.eigenvalues[i] / 4.0));
        }
        for (auto kind : {DescriptorKind::ShapeDNA, DescriptorKind::GPS}) {
            const auto da = normalize(make_descriptor(a, kind, 40));
            const auto db = normalize(make_descriptor(b, kind, 40));
            for (std::size_t i = 0; i < da.values.size(); ++i) {
                worst_descriptor = std::max(worst_descriptor, std::abs(da.values[i] - db.values[i]));
            }
        }
    }
    return {worst_value <= 1e-9 && worst_descriptor <= 1e-9,
            "max eigenvalue rel error " + fmt("%.2e", worst_value) + ", max descriptor difference " +
                fmt("%.2e", worst_descriptor)};
}

Outcome projection_oracle()
{
    std::mt19937_64 gen(1005);
    std::uniform_int_distribution<int> dims(1, 20);
    double worst_value = 0.0;
    double worst_orth = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index m = dims(gen);
        const Eigen::MatrixXd sc = oracle::random_spd(gen, m);
        const Eigen::MatrixXd ss = oracle::random_spd(gen, m);
        const auto pm = solve_projection({sc, ss, Eigen::VectorXd::Zero(m), false}, m, 0.0);
        const auto ref = oracle::generalized_eigen(ss, sc);
        for (Eigen::Index j = 0; j < m; ++j) {
            const double expected = ref.values[m - 1 - j];
            worst_value = std::max(worst_value,
                                   std::abs(pm.genEigenvalues[static_cast<std::size_t>(j)] - expected) / expected);
        }
        const Eigen::MatrixXd gram = pm.p.transpose() * sc * pm.p;
        worst_orth = std::max(worst_orth, (gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff());
    }
    return {worst_value <= 1e-9 && worst_orth <= 1e-8, "max eigenvalue rel error " + fmt("%.2e", worst_value) +
                                                           ", max S_c-orthonormality residual " +
                                                           fmt("%.2e", worst_orth)};
}

// ---------------------------------------------------------------------------
// Synthetic ellipsoid dataset shared by criteria 6 to 8.

LabeledDataset synthetic_dataset()
{
    const auto shapes = synthetic_ellipsoid_classes({1.0, 1.5, 2.2}, 30, 3, 0.01, 2024);
    std::vector<SpectralDescriptor> descriptors;
    std::vector<std::string> labels;
    for (const auto& s : shapes) {
        descriptors.push_back(compute_descriptor(s.mesh, DescriptorKind::GPS, 40));
        labels.push_back(s.label);
    }
    return make_dataset(descriptors, labels);
}

Outcome nnls_sparsity(const LabeledDataset& ds)
{
    const auto w = build_coding_matrix(Dictionary(ds.descriptors, ds.names), CodingMethod::NNLS);
    std::vector<Eigen::Index> counts;
    for (Eigen::Index c = 0; c < w.entries.cols(); ++c) counts.push_back((w.entries.col(c).array() != 0.0).count());
    const auto max_count = *std::max_element(counts.begin(), counts.end());
    std::sort(counts.begin(), counts.end());
    const double median = 0.5 * static_cast<double>(counts[(counts.size() - 1) / 2] + counts[counts.size() / 2]);
    return {max_count <= ds.dim() && median <= 20.0,
            "max nonzeros " + std::to_string(max_count) + " (m = " + std::to_string(ds.dim()) + "), median " +
                fmt("%g", median)};
}

Outcome end_to_end(const LabeledDataset& ds)
{
    SplitProtocol proto;
    proto.trainFraction = 0.7;
    proto.repetitions = 20;
    proto.seed = 7;
    PipelineConfig base;
    base.d = 10;
    PipelineConfig baseline = base;
    baseline.variant = PipelineVariant::Baseline;
    const double baseline_acc = evaluate(ds, proto, baseline).meanAccuracy;
    bool ok = true;
    std::string detail = "baseline " + fmt("%.4f", baseline_acc);
    for (auto method : {CodingMethod::L2, CodingMethod::NNLS}) {
        PipelineConfig cfg = base;
        cfg.coding = method;
        const double acc = evaluate(ds, proto, cfg).meanAccuracy;
        ok = ok && acc >= 0.95 && acc >= baseline_acc - 0.02;
        detail += std::string(", crp-") + std::string(to_string(method)) + " " + fmt("%.4f", acc);
    }
    return {ok, detail};
}

std::string serialized(const TrainedPipeline& tp)
{
    std::string out = model_to_json(tp.model);
    if (tp.coding) out += coding_matrix_csv(*tp.coding);
    if (tp.projection) out += projection_to_json(*tp.projection);
    return out;
}

Outcome no_leakage(const LabeledDataset& ds)
{
    SplitProtocol proto;
    proto.repetitions = 2;
    proto.seed = 11;
    std::size_t checks = 0;
    bool identical = true;
    for (int run = 0; run < proto.run_count(); ++run) {
        const auto split = split_dataset(ds, proto, run);
        for (auto method : {CodingMethod::L2, CodingMethod::NNLS}) {
            PipelineConfig cfg;
            cfg.d = 10;
            cfg.coding = method;
            const std::string reference = serialized(train_pipeline(ds.subset(split.train), cfg));
            for (Eigen::Index removed : split.test) {
                // Drop one test sample from the dataset and remap the training indices.
                std::vector<Eigen::Index> keep;
                for (Eigen::Index i = 0; i < ds.size(); ++i) {
                    if (i != removed) keep.push_back(i);
                }
                const auto pruned = ds.subset(keep);
                std::vector<Eigen::Index> train;
                for (Eigen::Index i : split.train) train.push_back(i < removed ? i : i - 1);
                identical = identical && serialized(train_pipeline(pruned.subset(train), cfg)) == reference;
                ++checks;
            }
        }
    }
    return {identical, std::to_string(checks) + " pruned retrainings compared bit-exactly"};
}

// ---------------------------------------------------------------------------

Outcome shrec_soft(const std::string& dir)
{
    namespace fs = std::filesystem;
    std::vector<ManifestEntry> manifest;
    if (fs::exists(fs::path(dir) / "manifest.csv")) {
        manifest = parse_manifest(read_file(fs::path(dir) / "manifest.csv"));
    } else {
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.path().extension() == ".off") files.push_back(e.path().filename().string());
        }
        manifest = consecutive_manifest(files, 20);
    }
    std::vector<SpectralDescriptor> descriptors;
    std::vector<std::string> labels;
    for (const auto& m : manifest) {
        const auto mesh = parse_off(std::string_view(read_file(fs::path(dir) / m.filename)), m.filename);
        descriptors.push_back(compute_descriptor(mesh, DescriptorKind::GPS, 100));
        labels.push_back(m.label);
    }
    const auto ds = make_dataset(descriptors, labels);
    SplitProtocol proto;
    PipelineConfig crp;
    PipelineConfig baseline;
    baseline.variant = PipelineVariant::Baseline;
    const double a = 100.0 * evaluate(ds, proto, crp, detail::default_workers()).meanAccuracy;
    const double b = 100.0 * evaluate(ds, proto, baseline, detail::default_workers()).meanAccuracy;
    return {a >= 96.0 && std::abs(b - 93.61) <= 3.0,
            "L2Graph-GPS " + fmt("%.2f", a) + "%, GPS-SVM " + fmt("%.2f", b) + "%"};
}

} // namespace

int main()
{
    report(1, "NNLS matches brute-force support enumeration", 10.0, nnls_oracle);
    report(2, "ridge codes match dense normal equations", 5.0, ridge_oracle);
    report(3, "icosphere(4) spectrum approximates l(l+1)", 30.0, sphere_spectrum);
    report(4, "exact eigenvalue scaling law", 30.0, scaling_law);
    report(5, "projection matches dense generalized eigen oracle", 5.0, projection_oracle);

    // Criterion 7 is end to end, so its clock includes descriptor computation.
    const auto start = Clock::now();
    LabeledDataset ds;
    std::string build_error;
    try {
        ds = synthetic_dataset();
    } catch (const std::exception& e) {
        build_error = e.what();
    }
    const double build_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("       synthetic dataset: 90 shapes, GPS p=40, built in %.2f s\n", build_seconds);

    auto with_dataset = [&](std::function<Outcome(const LabeledDataset&)> f) {
        return [&ds, &build_error, f] {
            if (!build_error.empty()) return Outcome{false, "dataset build failed: " + build_error};
            return f(ds);
        };
    };
    report(6, "NNLS codes are sparse", 0.0, with_dataset(nnls_sparsity));
    report(7, "synthetic end-to-end classification", 180.0, with_dataset(end_to_end), build_seconds);
    report(8, "no test-set leakage", 60.0, with_dataset(no_leakage));

    if (const char* dir = std::getenv("SHAPECRP_SHREC11_DIR"); dir && *dir) {
        const auto start9 = Clock::now();
        Outcome o;
        try {
            o = shrec_soft(dir);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] 9. SHREC11 accuracy, not gating (%.2f s) %s\n", o.pass ? "PASS" : "SOFT-FAIL",
                    std::chrono::duration<double>(Clock::now() - start9).count(), o.detail.c_str());
    } else {
        std::printf("[SKIP] 9. SHREC11 accuracy, not gating: set SHAPECRP_SHREC11_DIR to a directory of OFF meshes\n");
    }

    std::printf("%s: %d gating criteria failed\n", g_failures ? "FAILED" : "ALL PASSED", g_failures);
    return g_failures ? 1 : 0;
}
