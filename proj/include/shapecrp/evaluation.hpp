#pragma once

// End-to-end classification: descriptors -> coding graph -> projection ->
// one-vs-all SVM, evaluated over repeated train/test splits.

#include "shapecrp/coding.hpp"
#include "shapecrp/error.hpp"
#include "shapecrp/projection.hpp"
#include "shapecrp/spectrum.hpp"
#include "shapecrp/svm.hpp"
#include "shapecrp/detail/format.hpp"
#include "shapecrp/detail/parallel.hpp"
#include "shapecrp/detail/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace shapecrp {

struct LabeledDataset {
    Eigen::MatrixXd descriptors; ///< m x N, normalized columns
    std::vector<std::string> labels;
    std::vector<std::string> names;
    DescriptorKind kind = DescriptorKind::GPS;

    Eigen::Index size() const { return descriptors.cols(); }
    Eigen::Index dim() const { return descriptors.rows(); }

    /// Distinct labels in first-appearance order.
    std::vector<std::string> classes() const
    {
        std::vector<std::string> out;
        for (const auto& l : labels) {
            if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
        }
        return out;
    }

    void validate() const
    {
        const auto n = static_cast<std::size_t>(size());
        if (labels.size() != n || names.size() != n) {
            throw Error(ErrorCode::DimensionMismatch, "dataset descriptor, label and name counts differ");
        }
        if (!descriptors.allFinite()) throw Error(ErrorCode::NonFinite, "dataset descriptors are not finite");
    }

    /// Subset of the given sample indices, order preserved.
    LabeledDataset subset(const std::vector<Eigen::Index>& idx) const
    {
        LabeledDataset out;
        out.kind = kind;
        out.descriptors.resize(dim(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) {
            out.descriptors.col(static_cast<Eigen::Index>(c)) = descriptors.col(idx[c]);
            out.labels.push_back(labels[static_cast<std::size_t>(idx[c])]);
            out.names.push_back(names[static_cast<std::size_t>(idx[c])]);
        }
        return out;
    }
};

inline LabeledDataset make_dataset(const std::vector<SpectralDescriptor>& descriptors,
                                   const std::vector<std::string>& labels)
{
    if (descriptors.empty()) throw Error(ErrorCode::InvalidArgument, "empty dataset");
    if (descriptors.size() != labels.size()) {
        throw Error(ErrorCode::DimensionMismatch, "descriptor and label counts differ");
    }
    LabeledDataset ds;
    ds.kind = descriptors.front().kind;
    const auto m = static_cast<Eigen::Index>(descriptors.front().p());
    ds.descriptors.resize(m, static_cast<Eigen::Index>(descriptors.size()));
    for (std::size_t i = 0; i < descriptors.size(); ++i) {
        const auto& d = descriptors[i];
        if (static_cast<Eigen::Index>(d.p()) != m || d.kind != ds.kind) {
            throw Error(ErrorCode::DimensionMismatch, "descriptor '" + d.shapeName + "' differs in kind or dimension");
        }
        ds.descriptors.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(d.values.data(), m);
        ds.names.push_back(d.shapeName);
    }
    ds.labels = labels;
    return ds;
}

// ---------------------------------------------------------------------------
// Splits

enum class SplitMode { Fraction, KFold };

struct SplitProtocol {
    SplitMode mode = SplitMode::Fraction;
    double trainFraction = 0.7;
    int folds = 10;
    int repetitions = 100;
    std::uint64_t seed = 0;
    bool stratified = true;

    /// Fraction mode: one run per repetition. K-fold: folds runs per repetition.
    int run_count() const { return mode == SplitMode::KFold ? repetitions * folds : repetitions; }

    void validate() const
    {
        if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be >= 1");
        if (mode == SplitMode::Fraction && !(trainFraction > 0.0 && trainFraction < 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "trainFraction must be in (0, 1)");
        }
        if (mode == SplitMode::KFold && folds < 2) throw Error(ErrorCode::InvalidArgument, "folds must be >= 2");
    }
};

struct Split {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
};

namespace detail {

inline std::vector<std::vector<Eigen::Index>> members_by_class(const LabeledDataset& ds)
{
    const auto classes = ds.classes();
    std::vector<std::vector<Eigen::Index>> groups(classes.size());
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        const auto it = std::find(classes.begin(), classes.end(), ds.labels[static_cast<std::size_t>(i)]);
        groups[static_cast<std::size_t>(it - classes.begin())].push_back(i);
    }
    return groups;
}

} // namespace detail

/// Deterministic split for (protocol.seed, run). Stratified fraction mode
/// puts round-half-up(trainFraction * n_k) samples of each class k in train,
/// kept within [1, n_k - 1]. Index lists are sorted ascending.
inline Split split_dataset(const LabeledDataset& ds, const SplitProtocol& proto, int run)
{
    proto.validate();
    if (run < 0 || run >= proto.run_count()) {
        throw Error(ErrorCode::InvalidArgument,
                    "run " + std::to_string(run) + " outside [0, " + std::to_string(proto.run_count()) + ")");
    }
    const int repetition = proto.mode == SplitMode::KFold ? run / proto.folds : run;
    const int fold = proto.mode == SplitMode::KFold ? run % proto.folds : 0;
    detail::Rng rng(detail::derive_seed(proto.seed, static_cast<std::uint64_t>(repetition)));

    std::vector<std::vector<Eigen::Index>> groups;
    if (proto.stratified) {
        groups = detail::members_by_class(ds);
        const auto classes = ds.classes();
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].size() < 2) {
                throw Error(ErrorCode::ClassTooSmall, "class '" + classes[g] + "' has fewer than 2 samples");
            }
        }
    } else {
        groups.emplace_back(static_cast<std::size_t>(ds.size()));
        std::iota(groups[0].begin(), groups[0].end(), Eigen::Index{0});
    }

    Split split;
    std::size_t fold_offset = 0;
    for (auto& group : groups) {
        rng.shuffle(std::span<Eigen::Index>(group));
        const std::size_t n = group.size();
        if (proto.mode == SplitMode::Fraction) {
            auto n_train = static_cast<std::size_t>(std::floor(proto.trainFraction * static_cast<double>(n) + 0.5));
            n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
            split.train.insert(split.train.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_train));
            split.test.insert(split.test.end(), group.begin() + static_cast<std::ptrdiff_t>(n_train), group.end());
        } else {
            // Deal members round-robin over folds, continuing across classes so
            // fold sizes stay balanced.
            for (std::size_t i = 0; i < n; ++i) {
                const auto f = static_cast<int>((fold_offset + i) % static_cast<std::size_t>(proto.folds));
                (f == fold ? split.test : split.train).push_back(group[i]);
            }
            fold_offset += n;
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

// ---------------------------------------------------------------------------
// Pipeline

enum class PipelineVariant { Crp, Baseline };

inline std::string_view to_string(PipelineVariant v) { return v == PipelineVariant::Crp ? "crp" : "baseline"; }

inline std::optional<PipelineVariant> parse_pipeline_variant(std::string_view s)
{
    if (s == "crp") return PipelineVariant::Crp;
    if (s == "baseline") return PipelineVariant::Baseline;
    return std::nullopt;
}

struct PipelineConfig {
    PipelineVariant variant = PipelineVariant::Crp;
    CodingMethod coding = CodingMethod::L2;
    std::optional<double> lambda;  ///< default: 0.001 * N_train / 700
    Eigen::Index d = 15;
    double epsilonReg = 1e-6;
    Eigen::Index inputDim = 0;     ///< crp input truncation, 0 = full descriptor
    Eigen::Index baselineDim = 10; ///< baseline truncation, 0 = full descriptor
    std::vector<double> cGrid{0.1, 1.0, 10.0, 100.0};
    TrainConfig svm;               ///< svm.c is ignored when cGrid is non-empty
    int innerFolds = 3;
    unsigned workers = 1;          ///< threads for coding columns
};

/// Everything learned from the training split.
struct TrainedPipeline {
    PipelineVariant variant = PipelineVariant::Crp;
    Eigen::Index inputDim = 0;
    std::optional<CodingMatrix> coding;
    std::optional<ProjectionMatrix> projection;
    LinearOvaModel model;
    std::vector<std::string> trainNames;
};

namespace detail {

/// Keeps the first `dim` components (0 or >= m keeps all) and renormalizes.
inline Eigen::MatrixXd truncate_normalize(const Eigen::MatrixXd& x, Eigen::Index dim)
{
    if (dim <= 0 || dim >= x.rows()) return x;
    Eigen::MatrixXd out = x.topRows(dim);
    for (Eigen::Index i = 0; i < out.cols(); ++i) {
        const double norm = out.col(i).norm();
        if (!(norm > 0.0)) throw Error(ErrorCode::ZeroDescriptor, "truncated descriptor has zero norm");
        out.col(i) /= norm;
    }
    return out;
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& idx)
{
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = x.col(idx[c]);
    return out;
}

template <typename T>
std::vector<T> select_items(const std::vector<T>& v, const std::vector<Eigen::Index>& idx)
{
    std::vector<T> out;
    out.reserve(idx.size());
    for (Eigen::Index i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
    return out;
}

inline double accuracy_of(const LinearOvaModel& model, const Eigen::MatrixXd& x, const std::vector<std::string>& y)
{
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) correct += predict(model, x.col(i)) == y[static_cast<std::size_t>(i)];
    return x.cols() ? static_cast<double>(correct) / static_cast<double>(x.cols()) : 0.0;
}

/// Picks c from the grid by stratified inner cross-validation on the training
/// features. Ties go to the earlier grid entry.
inline double select_c(const Eigen::MatrixXd& features, const std::vector<std::string>& labels,
                       const std::vector<std::string>& classOrder, const PipelineConfig& cfg)
{
    if (cfg.cGrid.empty()) return cfg.svm.c;
    if (cfg.cGrid.size() == 1) return cfg.cGrid.front();

    LabeledDataset inner;
    inner.descriptors = features;
    inner.labels = labels;
    inner.names = labels;
    std::size_t smallest = labels.size();
    for (const auto& g : members_by_class(inner)) smallest = std::min(smallest, g.size());
    const int folds = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.innerFolds), smallest));

    std::vector<double> scores(cfg.cGrid.size(), 0.0);
    if (folds >= 2) {
        SplitProtocol proto;
        proto.mode = SplitMode::KFold;
        proto.folds = folds;
        proto.repetitions = 1;
        proto.seed = derive_seed(cfg.svm.seed, 0x1a2b3c);
        for (int f = 0; f < folds; ++f) {
            const Split s = split_dataset(inner, proto, f);
            const auto train_labels = select_items(labels, s.train);
            const auto xtr = select_columns(features, s.train);
            const auto xte = select_columns(features, s.test);
            const auto yte = select_items(labels, s.test);
            for (std::size_t g = 0; g < cfg.cGrid.size(); ++g) {
                TrainConfig tc = cfg.svm;
                tc.c = cfg.cGrid[g];
                // Classes missing from an inner fold are simply not predicted.
                const auto model = train_ova(xtr, train_labels, tc);
                scores[g] += accuracy_of(model, xte, yte);
            }
        }
    } else {
        for (std::size_t g = 0; g < cfg.cGrid.size(); ++g) {
            TrainConfig tc = cfg.svm;
            tc.c = cfg.cGrid[g];
            scores[g] = accuracy_of(train_ova(features, labels, tc, classOrder), features, labels);
        }
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < scores.size(); ++g) {
        if (scores[g] > scores[best]) best = g;
    }
    return cfg.cGrid[best];
}

/// Coding, scatter and full eigen-ordered projection for one training set.
struct CrpStage {
    CodingMatrix coding;
    ProjectionMatrix projection;
};

inline CrpStage fit_crp(const Eigen::MatrixXd& x, const std::vector<std::string>& names, const PipelineConfig& cfg,
                        Eigen::Index d)
{
    CrpStage st;
    try {
        const Dictionary dict(x, names);
        const double lambda = cfg.lambda.value_or(default_lambda(x.cols()));
        st.coding = build_coding_matrix(dict, cfg.coding, lambda, cfg.workers);
    } catch (const Error& e) {
        rethrow_with_context(e, "coding stage");
    }
    try {
        st.projection = solve_projection(make_scatter_pair(x, st.coding), d, cfg.epsilonReg);
    } catch (const Error& e) {
        rethrow_with_context(e, "projection stage");
    }
    return st;
}

inline ProjectionMatrix leading_columns(const ProjectionMatrix& pm, Eigen::Index d)
{
    ProjectionMatrix out = pm;
    d = std::min(d, pm.d());
    out.p = pm.p.leftCols(d);
    out.genEigenvalues.resize(static_cast<std::size_t>(d));
    return out;
}

inline TrainedPipeline fit_classifier(TrainedPipeline tp, const Eigen::MatrixXd& features,
                                      const std::vector<std::string>& labels,
                                      const std::vector<std::string>& classOrder, const PipelineConfig& cfg)
{
    try {
        TrainConfig tc = cfg.svm;
        tc.c = select_c(features, labels, classOrder, cfg);
        tp.model = train_ova(features, labels, tc, classOrder);
    } catch (const Error& e) {
        rethrow_with_context(e, "classifier stage");
    }
    return tp;
}

} // namespace detail

/// Maps normalized descriptors (m x K) into the classifier's feature space.
inline Eigen::MatrixXd transform(const TrainedPipeline& tp, const Eigen::MatrixXd& descriptors)
{
    const Eigen::MatrixXd x = detail::truncate_normalize(descriptors, tp.inputDim);
    if (tp.variant == PipelineVariant::Baseline) return x;
    return project(*tp.projection, x);
}

/// Learns coding, projection and SVM from the given training columns only.
inline TrainedPipeline train_pipeline(const LabeledDataset& train, const PipelineConfig& cfg,
                                      std::vector<std::string> classOrder = {})
{
    train.validate();
    if (classOrder.empty()) classOrder = train.classes();
    TrainedPipeline tp;
    tp.variant = cfg.variant;
    tp.trainNames = train.names;
    tp.inputDim = cfg.variant == PipelineVariant::Baseline ? cfg.baselineDim : cfg.inputDim;
    const Eigen::MatrixXd x = detail::truncate_normalize(train.descriptors, tp.inputDim);
    if (x.rows() < train.dim()) tp.inputDim = x.rows();
    else tp.inputDim = 0;

    if (cfg.variant == PipelineVariant::Crp) {
        auto st = detail::fit_crp(x, train.names, cfg, cfg.d);
        tp.coding = std::move(st.coding);
        tp.projection = std::move(st.projection);
    }
    const Eigen::MatrixXd features = transform(tp, train.descriptors);
    return detail::fit_classifier(std::move(tp), features, train.labels, classOrder, cfg);
}

struct RunResult {
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    Eigen::MatrixXi confusion; ///< rows = true class, cols = predicted, dataset class order
    double selectedC = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

inline RunResult score_run(const TrainedPipeline& tp, const LabeledDataset& ds, const std::vector<Eigen::Index>& test,
                           const std::vector<std::string>& classes)
{
    RunResult r;
    const auto k = static_cast<Eigen::Index>(classes.size());
    r.confusion = Eigen::MatrixXi::Zero(k, k);
    const Eigen::MatrixXd features = transform(tp, select_columns(ds.descriptors, test));
    for (std::size_t t = 0; t < test.size(); ++t) {
        const auto& truth = ds.labels[static_cast<std::size_t>(test[t])];
        const auto& guess = predict(tp.model, features.col(static_cast<Eigen::Index>(t)));
        const auto ti = std::find(classes.begin(), classes.end(), truth) - classes.begin();
        const auto gi = std::find(classes.begin(), classes.end(), guess) - classes.begin();
        ++r.confusion(ti, gi);
        r.correct += truth == guess;
    }
    r.total = test.size();
    r.accuracy = r.total ? static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
    r.selectedC = tp.model.c;
    if (tp.projection) r.warnings = tp.projection->warnings;
    return r;
}

inline void check_split(const LabeledDataset& ds, const Split& split)
{
    std::vector<char> seen(static_cast<std::size_t>(ds.size()), 0);
    for (const auto* part : {&split.train, &split.test}) {
        for (Eigen::Index i : *part) {
            if (i < 0 || i >= ds.size() || seen[static_cast<std::size_t>(i)]) {
                throw Error(ErrorCode::InvalidArgument, "train/test indices must be valid and disjoint");
            }
            seen[static_cast<std::size_t>(i)] = 1;
        }
    }
    if (split.train.empty()) throw Error(ErrorCode::InvalidArgument, "empty training set");
}

} // namespace detail

/// Trains on split.train and scores split.test. The confusion matrix uses the
/// class order of the whole dataset.
inline RunResult run_pipeline(const LabeledDataset& ds, const Split& split, const PipelineConfig& cfg)
{
    ds.validate();
    detail::check_split(ds, split);
    const auto classes = ds.classes();
    const auto train = ds.subset(split.train);
    // Training classes keep dataset order so SVM rows line up across runs.
    std::vector<std::string> train_classes;
    for (const auto& c : classes) {
        if (std::find(train.labels.begin(), train.labels.end(), c) != train.labels.end()) train_classes.push_back(c);
    }
    const TrainedPipeline tp = train_pipeline(train, cfg, train_classes);
    return detail::score_run(tp, ds, split.test, classes);
}

// ---------------------------------------------------------------------------
// Repeated evaluation

struct EvaluationReport {
    double meanAccuracy = 0.0;
    double stdAccuracy = 0.0; ///< population standard deviation
    std::vector<RunResult> runs;
    std::vector<std::string> classLabels;
    Eigen::MatrixXi confusion; ///< summed over runs
    std::map<std::string, std::string> config;

    std::vector<double> perRunAccuracies() const
    {
        std::vector<double> out;
        for (const auto& r : runs) out.push_back(r.accuracy);
        return out;
    }
};

/// Mean and population standard deviation, summed in index order.
inline std::pair<double, double> mean_and_std(const std::vector<double>& values)
{
    if (values.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

inline std::map<std::string, std::string> describe(const PipelineConfig& cfg, const SplitProtocol& proto,
                                                   DescriptorKind kind)
{
    std::map<std::string, std::string> c;
    c["variant"] = std::string(to_string(cfg.variant));
    c["descriptorKind"] = std::string(to_string(kind));
    c["method"] = std::string(to_string(cfg.coding));
    c["lambda"] = cfg.lambda ? detail::format_real(*cfg.lambda) : "auto";
    c["d"] = std::to_string(cfg.d);
    c["epsilonReg"] = detail::format_real(cfg.epsilonReg);
    c["inputDim"] = std::to_string(cfg.inputDim);
    c["baselineDim"] = std::to_string(cfg.baselineDim);
    std::string grid;
    for (double g : cfg.cGrid) grid += (grid.empty() ? "" : ",") + detail::format_real(g);
    c["cGrid"] = grid.empty() ? detail::format_real(cfg.svm.c) : grid;
    c["protocol.mode"] = proto.mode == SplitMode::KFold ? "kfold" : "fraction";
    c["protocol.trainFraction"] = detail::format_real(proto.trainFraction);
    c["protocol.folds"] = std::to_string(proto.folds);
    c["protocol.repetitions"] = std::to_string(proto.repetitions);
    c["protocol.seed"] = std::to_string(proto.seed);
    c["protocol.stratified"] = proto.stratified ? "true" : "false";
    return c;
}

namespace detail {

inline EvaluationReport aggregate(std::vector<RunResult> runs, std::vector<std::string> classes)
{
    EvaluationReport rep;
    rep.classLabels = std::move(classes);
    const auto k = static_cast<Eigen::Index>(rep.classLabels.size());
    rep.confusion = Eigen::MatrixXi::Zero(k, k);
    std::vector<double> acc;
    for (const auto& r : runs) {
        rep.confusion += r.confusion;
        acc.push_back(r.accuracy);
    }
    std::tie(rep.meanAccuracy, rep.stdAccuracy) = mean_and_std(acc);
    rep.runs = std::move(runs);
    return rep;
}

} // namespace detail

/// Runs every split of the protocol (concurrently when workers > 1) and
/// aggregates in run-index order.
inline EvaluationReport evaluate(const LabeledDataset& ds, const SplitProtocol& proto, const PipelineConfig& cfg,
                                 unsigned workers = 1)
{
    ds.validate();
    proto.validate();
    std::vector<RunResult> runs(static_cast<std::size_t>(proto.run_count()));
    PipelineConfig run_cfg = cfg;
    if (workers > 1) run_cfg.workers = 1;
    detail::parallel_for(runs.size(), workers, [&](std::size_t run) {
        try {
            runs[run] = run_pipeline(ds, split_dataset(ds, proto, static_cast<int>(run)), run_cfg);
        } catch (const Error& e) {
            rethrow_with_context(e, "run " + std::to_string(run));
        }
    });
    auto rep = detail::aggregate(std::move(runs), ds.classes());
    rep.config = describe(cfg, proto, ds.kind);
    return rep;
}

struct SweepRow {
    Eigen::Index d = 0;
    double meanAccuracy = 0.0;
    double stdAccuracy = 0.0;
};

/// Accuracy as a function of projection dimension on shared splits. For the
/// crp variant the coding graph and eigen-ordered projection are computed once
/// per run; each d keeps the leading d directions.
inline std::vector<SweepRow> sweep_dimension(const LabeledDataset& ds, const SplitProtocol& proto,
                                             const PipelineConfig& cfg, const std::vector<Eigen::Index>& dValues,
                                             unsigned workers = 1)
{
    ds.validate();
    proto.validate();
    if (dValues.empty()) throw Error(ErrorCode::InvalidArgument, "sweep needs at least one d value");
    const Eigen::Index input_dim = cfg.inputDim > 0 && cfg.inputDim < ds.dim() ? cfg.inputDim : ds.dim();
    for (Eigen::Index d : dValues) {
        if (d < 1 || d > input_dim) {
            throw Error(ErrorCode::InvalidArgument, "sweep dimension " + std::to_string(d) + " outside [1, " +
                                                        std::to_string(input_dim) + "]");
        }
    }
    const Eigen::Index d_max = *std::max_element(dValues.begin(), dValues.end());
    const auto classes = ds.classes();
    const int n_runs = proto.run_count();
    // acc[d index][run]
    std::vector<std::vector<double>> acc(dValues.size(), std::vector<double>(static_cast<std::size_t>(n_runs)));
    PipelineConfig run_cfg = cfg;
    if (workers > 1) run_cfg.workers = 1;

    detail::parallel_for(static_cast<std::size_t>(n_runs), workers, [&](std::size_t run) {
        const Split split = split_dataset(ds, proto, static_cast<int>(run));
        detail::check_split(ds, split);
        const auto train = ds.subset(split.train);
        std::vector<std::string> train_classes;
        for (const auto& c : classes) {
            if (std::find(train.labels.begin(), train.labels.end(), c) != train.labels.end()) {
                train_classes.push_back(c);
            }
        }
        TrainedPipeline base;
        base.variant = cfg.variant;
        base.trainNames = train.names;
        base.inputDim = input_dim < ds.dim() ? input_dim : 0;
        std::optional<detail::CrpStage> stage;
        if (cfg.variant == PipelineVariant::Crp) {
            stage = detail::fit_crp(detail::truncate_normalize(train.descriptors, base.inputDim), train.names, run_cfg,
                                    d_max);
            base.coding = stage->coding;
        }
        for (std::size_t di = 0; di < dValues.size(); ++di) {
            TrainedPipeline tp = base;
            if (stage) tp.projection = detail::leading_columns(stage->projection, dValues[di]);
            const Eigen::MatrixXd features = transform(tp, train.descriptors);
            tp = detail::fit_classifier(std::move(tp), features, train.labels, train_classes, run_cfg);
            acc[di][run] = detail::score_run(tp, ds, split.test, classes).accuracy;
        }
    });

    std::vector<SweepRow> rows;
    for (std::size_t di = 0; di < dValues.size(); ++di) {
        const auto [mean, sd] = mean_and_std(acc[di]);
        rows.push_back({dValues[di], mean, sd});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Report output

inline std::string report_to_json(const EvaluationReport& rep)
{
    nlohmann::ordered_json j;
    j["meanAccuracy"] = rep.meanAccuracy;
    j["stdAccuracy"] = rep.stdAccuracy;
    j["perRunAccuracies"] = rep.perRunAccuracies();
    j["classLabels"] = rep.classLabels;
    auto confusion = nlohmann::json::array();
    for (Eigen::Index r = 0; r < rep.confusion.rows(); ++r) {
        std::vector<int> row(rep.confusion.row(r).begin(), rep.confusion.row(r).end());
        confusion.push_back(row);
    }
    j["confusion"] = confusion;
    std::vector<double> cs;
    for (const auto& r : rep.runs) cs.push_back(r.selectedC);
    j["selectedC"] = cs;
    j["config"] = rep.config;
    return j.dump(2);
}

/// One row per run: run,accuracy,correct,total,c
inline std::string report_runs_csv(const EvaluationReport& rep)
{
    std::string out = "run,accuracy,correct,total,c\n";
    for (std::size_t i = 0; i < rep.runs.size(); ++i) {
        const auto& r = rep.runs[i];
        out += std::to_string(i) + ',' + detail::format_real(r.accuracy) + ',' + std::to_string(r.correct) + ',' +
               std::to_string(r.total) + ',' + detail::format_real(r.selectedC) + '\n';
    }
    return out;
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows)
{
    std::string out = "d,meanAccuracy,stdAccuracy\n";
    for (const auto& r : rows) {
        out += std::to_string(r.d) + ',' + detail::format_real(r.meanAccuracy) + ',' +
               detail::format_real(r.stdAccuracy) + '\n';
    }
    return out;
}

} // namespace shapecrp
