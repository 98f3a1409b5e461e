#include "oracles.hpp"

#include "shapecrp/coding.hpp"
#include "shapecrp/nnls.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace shapecrp;

namespace {

void expect_kkt(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const NnlsResult& r)
{
    const Eigen::VectorXd g = a.transpose() * (a * r.x - b);
    for (Eigen::Index j = 0; j < r.x.size(); ++j) {
        EXPECT_GE(r.x[j], 0.0);
        EXPECT_GE(g[j], -r.kktTol) << j;
        if (r.x[j] > 0.0) {
            EXPECT_LE(std::abs(g[j]), r.kktTol) << j;
        }
    }
}

Dictionary random_dictionary(std::mt19937_64& gen, Eigen::Index m, Eigen::Index n, bool positive = false)
{
    Eigen::MatrixXd x = oracle::gaussian_matrix(gen, m, n);
    if (positive) x = x.cwiseAbs();
    return Dictionary(oracle::normalized_columns(x));
}

} // namespace

TEST(Ridge, OrthonormalPairExample)
{
    Eigen::MatrixXd cols(3, 3);
    const double s = 1.0 / std::sqrt(2.0);
    cols << s, 1, 0, //
        s, 0, 1,     //
        0, 0, 0;
    const Dictionary dict(cols);
    const auto code = ridge_code(dict, 0, 1.0);
    // (I + I)^{-1} D^T x with x = (1,1,0)/sqrt2.
    EXPECT_EQ(code.weights[0], 0.0);
    EXPECT_NEAR(code.weights[1], 0.5 * s, 1e-15);
    EXPECT_NEAR(code.weights[2], 0.5 * s, 1e-15);

    const Eigen::MatrixXd d = Eigen::MatrixXd::Identity(4, 2);
    const Eigen::Vector4d x(1, 1, 0, 0);
    const Eigen::VectorXd w = ridge_solve(d, x, 1.0);
    EXPECT_NEAR(w[0], 0.5, 1e-15);
    EXPECT_NEAR(w[1], 0.5, 1e-15);
}

TEST(Ridge, OrthogonalTargetGivesZero)
{
    const Eigen::MatrixXd d = Eigen::MatrixXd::Identity(4, 3);
    const Eigen::Vector4d x(0, 0, 0, 1);
    EXPECT_EQ(ridge_solve(d, x, 0.3), Eigen::VectorXd::Zero(3));
}

TEST(Ridge, MatchesNormalEquationOracle)
{
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 50; ++trial) {
        const auto dict = random_dictionary(gen, 6 + trial % 10, 5 + trial % 20);
        const double lambda = std::pow(10.0, -3.0 + trial % 5);
        for (Eigen::Index i = 0; i < dict.size(); i += 3) {
            const auto code = ridge_code(dict, i, lambda);
            const Eigen::VectorXd ref = oracle::ridge_normal_equations(dict.without(i), dict.columns().col(i), lambda);
            const Eigen::VectorXd alt = oracle::ridge_push_through(dict.without(i), dict.columns().col(i), lambda);
            Eigen::VectorXd got(dict.size() - 1);
            got << code.weights.head(i), code.weights.tail(dict.size() - 1 - i);
            EXPECT_LE((got - ref).norm(), 1e-10 * ref.norm());
            EXPECT_LE((got - alt).norm(), 1e-9 * alt.norm());
            EXPECT_EQ(code.weights[i], 0.0);
        }
    }
}

TEST(Ridge, WeightNormShrinksWithLambda)
{
    std::mt19937_64 gen(3);
    const auto dict = random_dictionary(gen, 8, 15);
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {0.01, 1.0, 100.0}) {
        const Eigen::VectorXd ref = oracle::ridge_normal_equations(dict.without(2), dict.columns().col(2), lambda);
        const double norm = ridge_code(dict, 2, lambda).weights.norm();
        EXPECT_NEAR(norm, ref.norm(), 1e-10 * ref.norm());
        EXPECT_LT(norm, previous);
        previous = norm;
    }
}

TEST(Ridge, RejectsBadInput)
{
    std::mt19937_64 gen(5);
    const auto dict = random_dictionary(gen, 3, 4);
    EXPECT_THROW(ridge_code(dict, 0, 0.0), Error);
    EXPECT_THROW(ridge_code(dict, 4, 1.0), Error);
    EXPECT_THROW(Dictionary(Eigen::MatrixXd::Ones(3, 2)), Error);
    EXPECT_THROW(Dictionary(Eigen::MatrixXd::Identity(3, 1)), Error);
}

TEST(Nnls, IdentityExactFit)
{
    const Eigen::VectorXd w = nnls_solve(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(2, 3, 0));
    EXPECT_EQ(w, Eigen::Vector3d(2, 3, 0));
}

TEST(Nnls, NegativeOptimumClamped)
{
    const Eigen::VectorXd w = nnls_solve(Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0));
    ASSERT_EQ(w.size(), 1);
    EXPECT_EQ(w[0], 0.0);
    EXPECT_FALSE(std::signbit(w[0]));
}

TEST(Nnls, MatchesBruteForce)
{
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const Eigen::MatrixXd a = oracle::gaussian_matrix(gen, 6, 10);
        const Eigen::VectorXd b = oracle::gaussian_matrix(gen, 6, 1);
        const auto r = nnls_solve_detailed(a, b);
        const auto best = oracle::brute_force_nnls(a, b);
        EXPECT_NEAR((a * r.x - b).squaredNorm(), best.objective, 1e-8);
        expect_kkt(a, b, r);
        EXPECT_LE((a * r.x - b).norm(), b.norm());
        EXPECT_LE((r.x.array() > 0.0).count(), a.rows());
    }
}

TEST(Nnls, OverdeterminedAndWideShapes)
{
    std::mt19937_64 gen(7);
    for (auto [m, k] : {std::pair{12, 4}, std::pair{3, 12}, std::pair{1, 5}, std::pair{8, 8}}) {
        const Eigen::MatrixXd a = oracle::gaussian_matrix(gen, m, k);
        const Eigen::VectorXd b = oracle::gaussian_matrix(gen, m, 1);
        const auto r = nnls_solve_detailed(a, b);
        EXPECT_NEAR((a * r.x - b).squaredNorm(), oracle::brute_force_nnls(a, b).objective, 1e-8);
        expect_kkt(a, b, r);
        EXPECT_LE(r.iterations, 3 * k);
    }
}

TEST(Nnls, ToleranceFormula)
{
    Eigen::MatrixXd a(2, 3);
    a << 3, 0, 1, //
        4, 1, 0;
    const Eigen::Vector2d b(1, 1);
    const double expected = 10.0 * std::numeric_limits<double>::epsilon() * 3.0 * 5.0 * std::sqrt(2.0);
    EXPECT_DOUBLE_EQ(nnls_tolerance(a, b), expected);
}

TEST(Nnls, Errors)
{
    EXPECT_THROW(nnls_solve(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector2d(1, 1)), Error);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(0, 0) = std::nan("");
    EXPECT_THROW(nnls_solve(bad, Eigen::Vector2d(1, 1)), Error);
}

TEST(CodingMatrix, TwoSamplesOneAtom)
{
    Eigen::MatrixXd x(2, 2);
    x << 1, 0.6, //
        0, 0.8;
    const Dictionary dict(x);
    for (CodingMethod method : {CodingMethod::L2, CodingMethod::NNLS}) {
        const auto w = build_coding_matrix(dict, method, 0.1);
        EXPECT_EQ(w.entries(0, 0), 0.0);
        EXPECT_EQ(w.entries(1, 1), 0.0);
        EXPECT_GT(w.entries(1, 0), 0.0);
        EXPECT_GT(w.entries(0, 1), 0.0);
    }
    EXPECT_NEAR(build_coding_matrix(dict, CodingMethod::NNLS).entries(1, 0), 0.6, 1e-15);
}

TEST(CodingMatrix, DuplicatePairUnderNnls)
{
    // Columns 0 and 1 coincide; the other atoms are orthogonal to them.
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(5, 5);
    x(0, 0) = x(0, 1) = 1.0;
    x(1, 2) = 1.0;
    x(2, 3) = 1.0;
    x.col(4) = Eigen::VectorXd::Zero(5);
    x(3, 4) = 0.6;
    x(4, 4) = 0.8;
    const Dictionary dict(x);
    const auto w = build_coding_matrix(dict, CodingMethod::NNLS);
    EXPECT_NEAR(w.entries(1, 0), 1.0, 1e-12);
    EXPECT_NEAR(w.entries(0, 1), 1.0, 1e-12);
    for (Eigen::Index r = 2; r < 5; ++r) EXPECT_EQ(w.entries(r, 0), 0.0);
    const auto oracle_fit = oracle::brute_force_nnls(dict.without(0), dict.columns().col(0));
    EXPECT_NEAR(oracle_fit.x[0], 1.0, 1e-12);
}

TEST(CodingMatrix, StructuralInvariants)
{
    std::mt19937_64 gen(99);
    const auto dict = random_dictionary(gen, 6, 40, true);
    const auto nnls = build_coding_matrix(dict, CodingMethod::NNLS);
    const auto l2 = build_coding_matrix(dict, CodingMethod::L2, default_lambda(40));
    for (Eigen::Index i = 0; i < 40; ++i) {
        EXPECT_EQ(nnls.entries(i, i), 0.0);
        EXPECT_EQ(l2.entries(i, i), 0.0);
        EXPECT_FALSE(std::signbit(nnls.entries(i, i)));
        EXPECT_LE((nnls.entries.col(i).array() != 0.0).count(), dict.dim());
        const Eigen::VectorXd b = dict.columns().col(i);
        EXPECT_LE((dict.columns() * nnls.entries.col(i) - b).norm(), b.norm());
    }
    EXPECT_TRUE((nnls.entries.array() >= 0.0).all());
    for (Eigen::Index k = 0; k < nnls.entries.size(); ++k) EXPECT_FALSE(std::signbit(nnls.entries.data()[k]));
    EXPECT_EQ(nnls.method, CodingMethod::NNLS);
    EXPECT_FALSE(nnls.lambda.has_value());
    EXPECT_EQ(*l2.lambda, default_lambda(40));
    EXPECT_GT(nnls.kktTol, 0.0);
}

TEST(CodingMatrix, DeterministicAcrossWorkers)
{
    std::mt19937_64 gen(123);
    const auto dict = random_dictionary(gen, 10, 60, true);
    for (CodingMethod method : {CodingMethod::L2, CodingMethod::NNLS}) {
        const auto one = build_coding_matrix(dict, method, 0.01, 1);
        for (unsigned workers : {2u, 3u, 8u}) {
            const auto many = build_coding_matrix(dict, method, 0.01, workers);
            EXPECT_TRUE((one.entries.array() == many.entries.array()).all());
            EXPECT_EQ(coding_matrix_csv(one), coding_matrix_csv(many));
        }
    }
}

TEST(CodingMatrix, L2RequiresLambda)
{
    std::mt19937_64 gen(1);
    const auto dict = random_dictionary(gen, 3, 5);
    EXPECT_THROW(build_coding_matrix(dict, CodingMethod::L2), Error);
}

TEST(CodingMatrix, ZeroColumnRejected)
{
    try {
        Dictionary::from_unnormalized(Eigen::MatrixXd::Zero(3, 3));
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroDescriptor);
    }
}

TEST(CodingMatrix, DefaultLambda)
{
    EXPECT_DOUBLE_EQ(default_lambda(700), 0.001);
    EXPECT_DOUBLE_EQ(default_lambda(420), 0.001 * 420.0 / 700.0);
}

TEST(CodingMatrix, CsvAndHeader)
{
    Eigen::MatrixXd x(2, 3);
    x << 1, 0, 0.6, //
        0, 1, 0.8;
    const auto w = build_coding_matrix(Dictionary(x, {"a", "b", "c"}), CodingMethod::NNLS);
    const auto csv = coding_matrix_csv(w);
    EXPECT_EQ(csv.substr(0, 15), "row,col,weight\n");
    const auto at = csv.find("\n0,2,");
    ASSERT_NE(at, std::string::npos) << csv;
    // 17 significant digits round-trip exactly.
    EXPECT_EQ(std::stod(csv.substr(at + 5)), w.entries(0, 2));
    EXPECT_NEAR(w.entries(0, 2), 0.6, 1e-15);
    const auto header = coding_matrix_header_json(w);
    EXPECT_NE(header.find("\"N\":3"), std::string::npos) << header;
    EXPECT_NE(header.find("\"method\":\"nnls\""), std::string::npos) << header;
    EXPECT_NE(header.find("\"lambda\":null"), std::string::npos) << header;
}

TEST(CodingMatrix, MethodNames)
{
    EXPECT_EQ(parse_coding_method("l2"), CodingMethod::L2);
    EXPECT_EQ(parse_coding_method("nnls"), CodingMethod::NNLS);
    EXPECT_FALSE(parse_coding_method("l1"));
}
