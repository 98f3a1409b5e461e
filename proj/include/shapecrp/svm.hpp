#pragma once

// Linear one-vs-all soft-margin SVM trained by dual coordinate ascent
// (hinge loss, L2 regularizer, bias folded in as a constant feature). The
// solver sees features centered on the training mean and divided by one
// scalar RMS spread; the stored weights and biases act on raw features.

#include "shapecrp/error.hpp"
#include "shapecrp/detail/format.hpp"
#include "shapecrp/detail/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace shapecrp {

struct TrainConfig {
    double c = 1.0;
    double tolerance = 1e-4;
    int maxPasses = 1000;
    std::uint64_t seed = 0;
};

struct LinearOvaModel {
    std::vector<std::string> classLabels;
    Eigen::MatrixXd weights; ///< K x d
    Eigen::VectorXd biases;  ///< K
    double c = 1.0;

    Eigen::Index featureDim() const { return weights.cols(); }
    std::size_t classCount() const { return classLabels.size(); }
};

/// Per binary problem solver state at termination.
struct BinarySolveInfo {
    Eigen::VectorXd alpha; ///< dual variables in the caller's sample order
    int passes = 0;
    double maxViolation = 0.0;
    double primal = 0.0;
    double dual = 0.0;
    bool converged = false;

    double duality_gap() const { return primal - dual; }
};

struct OvaTrainResult {
    LinearOvaModel model;
    std::vector<BinarySolveInfo> problems;
};

namespace detail {

inline bool column_less(const Eigen::MatrixXd& x, const std::vector<std::string>& labels, Eigen::Index a,
                        Eigen::Index b)
{
    const auto& la = labels[static_cast<std::size_t>(a)];
    const auto& lb = labels[static_cast<std::size_t>(b)];
    if (la != lb) return la < lb;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        if (x(r, a) != x(r, b)) return x(r, a) < x(r, b);
    }
    return false;
}

/// Visiting order independent of the input sample order: samples are ranked
/// by content and the ranking is shuffled per pass from the seed.
inline std::vector<Eigen::Index> canonical_order(const Eigen::MatrixXd& x, const std::vector<std::string>& labels)
{
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return column_less(x, labels, a, b); });
    return order;
}

struct Standardizer {
    Eigen::VectorXd mean;
    double scale = 1.0;
};

/// Training mean and RMS distance to it, accumulated in canonical order so the
/// result is bit-identical under any permutation of the samples.
inline Standardizer standardizer(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& canonical)
{
    Standardizer st;
    st.mean = Eigen::VectorXd::Zero(x.rows());
    for (Eigen::Index i : canonical) st.mean += x.col(i);
    st.mean /= static_cast<double>(x.cols());
    double sq = 0.0;
    for (Eigen::Index i : canonical) sq += (x.col(i) - st.mean).squaredNorm();
    const double rms = std::sqrt(sq / static_cast<double>(x.cols()));
    st.scale = rms > 0.0 && std::isfinite(rms) ? rms : 1.0;
    return st;
}

inline double projected_gradient(double g, double alpha, double upper)
{
    if (alpha <= 0.0) return std::min(g, 0.0);
    if (alpha >= upper) return std::max(g, 0.0);
    return g;
}

/// One binary problem, y in {-1,+1}. Returns augmented weights (last entry = bias).
inline Eigen::VectorXd train_binary(const Eigen::MatrixXd& aug, const Eigen::VectorXd& y,
                                    const std::vector<Eigen::Index>& canonical, const TrainConfig& cfg,
                                    BinarySolveInfo& info)
{
    const Eigen::Index n = aug.cols();
    const double upper = cfg.c;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(aug.rows());
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd qd = aug.colwise().squaredNorm().transpose();
    std::vector<Eigen::Index> order = canonical;

    info = {};
    for (int pass = 0;; ++pass) {
        double violation = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double g = y[i] * w.dot(aug.col(i)) - 1.0;
            violation = std::max(violation, std::abs(projected_gradient(g, alpha[i], upper)));
        }
        info.maxViolation = violation;
        info.passes = pass;
        if (violation <= cfg.tolerance) {
            info.converged = true;
            break;
        }
        if (pass >= cfg.maxPasses) break;

        order = canonical;
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(pass)));
        rng.shuffle(std::span<Eigen::Index>(order));
        for (Eigen::Index i : order) {
            const double g = y[i] * w.dot(aug.col(i)) - 1.0;
            const double pg = projected_gradient(g, alpha[i], upper);
            if (pg == 0.0) continue;
            const double old = alpha[i];
            alpha[i] = std::clamp(old - g / qd[i], 0.0, upper);
            w += (alpha[i] - old) * y[i] * aug.col(i);
        }
    }

    double hinge = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) hinge += std::max(0.0, 1.0 - y[i] * w.dot(aug.col(i)));
    info.primal = 0.5 * w.squaredNorm() + cfg.c * hinge;
    info.dual = alpha.sum() - 0.5 * w.squaredNorm();
    info.alpha = std::move(alpha);
    return w;
}

} // namespace detail

/// Trains K binary classifiers, class k positive against the rest. Class order
/// is `classOrder` when given, otherwise first appearance in `labels`.
inline OvaTrainResult train_ova_detailed(const Eigen::MatrixXd& features, const std::vector<std::string>& labels,
                                         const TrainConfig& cfg, std::vector<std::string> classOrder = {})
{
    const Eigen::Index n = features.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw Error(ErrorCode::DimensionMismatch, "label count differs from sample count");
    }
    if (!(cfg.c > 0.0) || !(cfg.tolerance > 0.0) || cfg.maxPasses < 1) {
        throw Error(ErrorCode::InvalidArgument, "SVM config needs c > 0, tolerance > 0, maxPasses >= 1");
    }
    if (!features.allFinite()) throw Error(ErrorCode::NonFinite, "SVM features contain non-finite values");
    if (n < 2) throw Error(ErrorCode::SingleClass, "need at least 2 training samples");

    if (classOrder.empty()) {
        for (const auto& l : labels) {
            if (std::find(classOrder.begin(), classOrder.end(), l) == classOrder.end()) classOrder.push_back(l);
        }
    }
    if (classOrder.size() < 2) throw Error(ErrorCode::SingleClass, "training data has a single class");
    for (const auto& cls : classOrder) {
        if (std::find(labels.begin(), labels.end(), cls) == labels.end()) {
            throw Error(ErrorCode::EmptyClass, "class '" + cls + "' has no training samples");
        }
    }

    const Eigen::Index d = features.rows();
    const auto canonical = detail::canonical_order(features, labels);
    const detail::Standardizer st = detail::standardizer(features, canonical);
    Eigen::MatrixXd aug(d + 1, n);
    aug.topRows(d) = (features.colwise() - st.mean) / st.scale;
    aug.row(d).setOnes();

    OvaTrainResult out;
    out.model.classLabels = classOrder;
    out.model.c = cfg.c;
    const auto k = static_cast<Eigen::Index>(classOrder.size());
    out.model.weights.resize(k, d);
    out.model.biases.resize(k);
    out.problems.resize(classOrder.size());
    for (Eigen::Index cls = 0; cls < k; ++cls) {
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y[i] = labels[static_cast<std::size_t>(i)] == classOrder[static_cast<std::size_t>(cls)] ? 1.0 : -1.0;
        }
        const Eigen::VectorXd w =
            detail::train_binary(aug, y, canonical, cfg, out.problems[static_cast<std::size_t>(cls)]);
        // Fold the standardization back so the model acts on raw features.
        out.model.weights.row(cls) = w.head(d).transpose() / st.scale;
        out.model.biases[cls] = w[d] - w.head(d).dot(st.mean) / st.scale;
    }
    return out;
}

inline LinearOvaModel train_ova(const Eigen::MatrixXd& features, const std::vector<std::string>& labels,
                                const TrainConfig& cfg, std::vector<std::string> classOrder = {})
{
    return train_ova_detailed(features, labels, cfg, std::move(classOrder)).model;
}

inline Eigen::VectorXd decision_values(const LinearOvaModel& model, const Eigen::VectorXd& x)
{
    if (x.size() != model.featureDim()) {
        throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.featureDim()) +
                                                      " features, got " + std::to_string(x.size()));
    }
    return model.weights * x + model.biases;
}

/// Index of the largest value; ties go to the lowest index.
inline Eigen::Index argmax_first(const Eigen::VectorXd& values)
{
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

inline const std::string& predict(const LinearOvaModel& model, const Eigen::VectorXd& x)
{
    return model.classLabels[static_cast<std::size_t>(argmax_first(decision_values(model, x)))];
}

inline std::vector<std::string> predict_all(const LinearOvaModel& model, const Eigen::MatrixXd& x)
{
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index i = 0; i < x.cols(); ++i) out.push_back(predict(model, x.col(i)));
    return out;
}

inline constexpr int kModelFormatVersion = 1;

inline std::string model_to_json(const LinearOvaModel& model)
{
    std::vector<double> row_major;
    for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < model.weights.cols(); ++c) row_major.push_back(model.weights(r, c));
    }
    const std::vector<double> biases(model.biases.begin(), model.biases.end());
    return detail::JsonObjectWriter{}
        .integer("version", kModelFormatVersion)
        .raw("classLabels", nlohmann::json(model.classLabels).dump())
        .real("c", model.c)
        .integer("featureDim", model.featureDim())
        .reals("weights", row_major)
        .reals("biases", biases)
        .str();
}

inline LinearOvaModel model_from_json(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("version").get<int>() != kModelFormatVersion) {
            throw Error(ErrorCode::ParseError, "unsupported SVM model format version");
        }
        LinearOvaModel model;
        model.classLabels = j.at("classLabels").get<std::vector<std::string>>();
        model.c = j.at("c").get<double>();
        const auto d = j.at("featureDim").get<Eigen::Index>();
        const auto k = static_cast<Eigen::Index>(model.classLabels.size());
        const auto w = j.at("weights").get<std::vector<double>>();
        const auto b = j.at("biases").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != k * d || static_cast<Eigen::Index>(b.size()) != k) {
            throw Error(ErrorCode::ParseError, "SVM model arrays do not match classLabels/featureDim");
        }
        model.weights.resize(k, d);
        model.biases.resize(k);
        for (Eigen::Index r = 0; r < k; ++r) {
            for (Eigen::Index c = 0; c < d; ++c) model.weights(r, c) = w[static_cast<std::size_t>(r * d + c)];
            model.biases[r] = b[static_cast<std::size_t>(r)];
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("SVM model JSON: ") + e.what());
    }
}

} // namespace shapecrp
