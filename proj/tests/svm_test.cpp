#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "masskit/encoding.hpp"
#include "masskit/impute.hpp"
#include "masskit/rng.hpp"
#include "masskit/svm.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace masskit;

namespace {

const KernelParams kLinear{1.0, 0.0, 1};

// two points on the number line, one per class
struct PairFixture {
    std::vector<std::vector<double>> rows{{1.0}, {-1.0}};
    std::vector<int> labels{1, 0};
    SvmParams params{10.0, 1e-3, 10};
};

TEST(PolyKernel, ClosedFormValues) {
    EXPECT_DOUBLE_EQ(poly_kernel(std::vector<double>{1, 2}, std::vector<double>{3, 4}, kLinear), 11.0);
    KernelParams quartic{1.0, 0.1, 4};
    EXPECT_DOUBLE_EQ(poly_kernel(std::vector<double>{1, 0}, std::vector<double>{1, 0}, quartic),
                     std::pow(1.1, 4));
}

TEST(PolyKernel, SymmetryOnRandomPairs) {
    Rng rng(3);
    KernelParams k{0.7, 0.3, 3};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(4), b(4);
        for (double& v : a) v = rng.uniform(-2, 2);
        for (double& v : b) v = rng.uniform(-2, 2);
        EXPECT_DOUBLE_EQ(poly_kernel(a, b, k), poly_kernel(b, a, k));
    }
}

TEST(PolyKernel, Errors) {
    EXPECT_THROW(poly_kernel(std::vector<double>{1}, std::vector<double>{1, 2}, kLinear),
                 std::invalid_argument);
    EXPECT_THROW(poly_kernel(std::vector<double>{1}, std::vector<double>{1}, KernelParams{0.0, 0.0, 1}),
                 std::invalid_argument);
    EXPECT_THROW(poly_kernel(std::vector<double>{1}, std::vector<double>{1}, KernelParams{1.0, 0.0, 0}),
                 std::invalid_argument);
}

TEST(PolyKernel, GramMatrixIsPositiveSemidefinite) {
    Rng rng(4);
    KernelParams k{1.5, 0.2, 3};  // r >= 0
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t n = 2 + rng.below(7);
        std::vector<std::vector<double>> rows(n, std::vector<double>(3));
        for (auto& row : rows) {
            for (double& v : row) v = rng.uniform(-1, 1);
        }
        std::vector<std::vector<double>> gram(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) gram[i][j] = poly_kernel(rows[i], rows[j], k);
        }
        EXPECT_GE(oracle::min_symmetric_eigenvalue(gram), -1e-9);
    }
}

TEST(TrainSvm, HandSolvedPair) {
    PairFixture fx;
    SvmModel m = train_svm(fx.rows, fx.labels, fx.params, kLinear);
    EXPECT_TRUE(m.converged);
    ASSERT_EQ(m.alpha.size(), 2u);
    EXPECT_NEAR(m.alpha[0], 0.5, 1e-6);
    EXPECT_NEAR(m.alpha[1], 0.5, 1e-6);
    EXPECT_NEAR(m.bias, 0.0, 1e-9);
    EXPECT_NEAR(m.decision_value(std::vector<double>{0.5}), 0.5, 1e-9);
    EXPECT_NEAR(m.dual_objective, 0.5, 1e-9);
    EXPECT_NEAR(svm_margin(m), 1.0, 1e-9);
    EXPECT_NEAR(m.sum_alpha_y(), 0.0, 1e-8);

    // grid oracle over the one free direction (alpha1 = alpha2)
    double grid = oracle::svm_grid_best_dual(fx.rows, {1, -1}, fx.params.c, kLinear, 1e-3);
    EXPECT_NEAR(m.dual_objective, grid, 1e-3);

    KktReport rep = kkt_report(m, fx.rows, fx.labels, fx.params);
    EXPECT_NEAR(rep.max_residual, 0.0, 1e-9);
}

TEST(TrainSvm, XorSeparableWithQuadraticKernel) {
    std::vector<std::vector<double>> rows{{1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
    std::vector<int> labels{0, 0, 1, 1};
    KernelParams k{1.0, 0.0, 2};
    SvmParams p{10.0, 1e-3, 10};
    SvmModel m = train_svm(rows, labels, p, k);
    EXPECT_TRUE(m.converged);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(m.classify(rows[i]), labels[i]);
    }
    // refined concave grid search agrees with the SMO optimum
    std::vector<int> signs{-1, -1, 1, 1};
    double grid = oracle::svm_refined_best_dual(rows, signs, p.c, k, 1e-3);
    EXPECT_NEAR(m.dual_objective, grid, 1e-3 * (1.0 + std::fabs(grid)));
}

TEST(TrainSvm, ThreePointExhaustiveGridOptimality) {
    std::vector<std::vector<double>> rows{{0.0}, {1.0}, {2.0}};
    std::vector<int> labels{0, 0, 1};
    SvmParams p{1.0, 1e-4, 20};
    SvmModel m = train_svm(rows, labels, p, kLinear);
    std::vector<int> signs{-1, -1, 1};
    double grid = oracle::svm_grid_best_dual(rows, signs, p.c, kLinear, 1e-3);
    EXPECT_NEAR(m.dual_objective, grid, 1e-3 * (1.0 + std::fabs(grid)));
}

TEST(TrainSvm, FourPointFixturesMatchGridSearch) {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::vector<double>> rows(4, std::vector<double>(2));
        std::vector<int> labels{0, 0, 1, 1};
        for (auto& row : rows) {
            for (double& v : row) v = rng.uniform(-1, 1);
        }
        KernelParams k{1.0, 0.5, 2};
        SvmParams p{2.0, 1e-4, 50};
        SvmModel m = train_svm(rows, labels, p, k);
        std::vector<int> signs{-1, -1, 1, 1};
        double grid = oracle::svm_refined_best_dual(rows, signs, p.c, k, 5e-4);
        EXPECT_NEAR(m.dual_objective, grid, 1e-3 * (1.0 + std::fabs(grid))) << "trial " << trial;
        EXPECT_NEAR(m.sum_alpha_y(), 0.0, 1e-8);
        KktReport rep = kkt_report(m, rows, labels, p);
        EXPECT_LE(rep.max_residual, p.kkt_tolerance + 1e-9) << "trial " << trial;
    }
}

TEST(TrainSvm, DualTraceNonDecreasing) {
    Dataset ds = testutil::synthetic_masses(120, 31);
    FeatureMatrix fm = encode(ds);
    SvmModel m = train_svm(fm, SvmParams{10.0, 1e-3, 10}, KernelParams{1.0, 0.1, 4});
    ASSERT_GT(m.dual_trace.size(), 2u);
    for (std::size_t i = 1; i < m.dual_trace.size(); ++i) {
        EXPECT_GE(m.dual_trace[i], m.dual_trace[i - 1] - 1e-9) << "step " << i;
    }
}

TEST(TrainSvm, DegenerateLabelsError) {
    std::vector<std::vector<double>> rows{{0.0}, {1.0}};
    EXPECT_THROW(train_svm(rows, std::vector<int>{1, 1}, {}, kLinear), std::invalid_argument);
    EXPECT_THROW(train_svm({}, std::vector<int>{}, {}, kLinear), std::invalid_argument);
}

TEST(TrainSvm, NonConvergenceIsFlaggedNotFatal) {
    Dataset ds = testutil::synthetic_masses(150, 33);
    FeatureMatrix fm = encode(ds);
    SvmParams tight{10.0, 1e-12, 1};  // one sweep cannot satisfy an impossible tolerance
    SvmModel m = train_svm(fm, tight, KernelParams{1.0, 0.1, 2});
    EXPECT_FALSE(m.converged);
    EXPECT_GT(m.alpha.size(), 0u);
}

TEST(TrainSvm, ConvergedModelSatisfiesKkt) {
    Dataset ds = testutil::synthetic_masses(200, 35);
    FeatureMatrix fm = encode(ds);
    SvmParams p{10.0, 1e-3, 20};
    KernelParams k{1.0, 0.1, 4};
    SvmModel m = train_svm(fm, p, k);
    ASSERT_TRUE(m.converged);
    KktReport rep = kkt_report(m, fm.rows, fm.labels, p);
    EXPECT_LE(rep.max_residual, p.kkt_tolerance + 1e-9);
    EXPECT_NEAR(rep.sum_alpha_y, 0.0, 1e-8);
    for (std::size_t i = 0; i < m.alpha.size(); ++i) {
        EXPECT_GT(m.alpha[i], 0.0);
        EXPECT_LE(m.alpha[i], p.c);
    }
    // unbounded support vectors sit on the unit margin
    std::vector<double> alphas(fm.size(), 0.0);
    for (std::size_t s = 0; s < m.sv_index.size(); ++s) alphas[m.sv_index[s]] = m.alpha[s];
    for (std::size_t i = 0; i < fm.size(); ++i) {
        if (alphas[i] > 0.0 && alphas[i] < p.c) {
            double y = fm.labels[i] == 1 ? 1.0 : -1.0;
            EXPECT_NEAR(y * m.decision_value(fm.rows[i]), 1.0, p.kkt_tolerance + 1e-9);
        }
    }
}

TEST(Margin, ScalesWithTheData) {
    PairFixture fx;
    SvmModel base = train_svm(fx.rows, fx.labels, fx.params, kLinear);
    std::vector<std::vector<double>> scaled{{3.0}, {-3.0}};
    SvmModel wide = train_svm(scaled, fx.labels, fx.params, kLinear);
    EXPECT_NEAR(svm_margin(wide), 3.0 * svm_margin(base), 1e-6);
}

TEST(Slack, SeparableFixtureHasZeroSlack) {
    PairFixture fx;
    SvmModel m = train_svm(fx.rows, fx.labels, fx.params, kLinear);
    for (double xi : slack_values(m, fx.rows, fx.labels)) EXPECT_NEAR(xi, 0.0, 1e-6);
}

TEST(Slack, MisclassifiedPointExceedsOne) {
    // a lone negative deep inside the positive cluster ends up on the wrong
    // side of the learned boundary
    std::vector<std::vector<double>> rows{{1.0}, {1.2}, {-1.0}, {-1.2}, {1.1}};
    std::vector<int> labels{1, 1, 0, 0, 0};
    SvmModel m = train_svm(rows, labels, SvmParams{1.0, 1e-4, 20}, kLinear);
    double d = m.decision_value(rows[4]);
    ASSERT_GT(d, 0.0);  // predicted malignant although labelled benign
    std::vector<double> xi = slack_values(m, rows, labels);
    EXPECT_GT(xi[4], 1.0);
}

TEST(Slack, PrimalDominatesDualWithSmallGap) {
    Dataset ds = testutil::synthetic_masses(150, 37);
    FeatureMatrix fm = encode(ds);
    SvmParams p{10.0, 1e-3, 20};
    KernelParams k{1.0, 0.1, 4};
    SvmModel m = train_svm(fm, p, k);
    ASSERT_TRUE(m.converged);
    double primal = svm_primal_objective(m, fm.rows, fm.labels, p);
    EXPECT_GE(primal + 1e-9, m.dual_objective);
    EXPECT_LE(primal - m.dual_objective, 1e-3 * (1.0 + std::fabs(primal)));
}

TEST(DecisionValue, InvariantUnderSupportVectorReordering) {
    Dataset ds = testutil::synthetic_masses(80, 39);
    FeatureMatrix fm = encode(ds);
    SvmModel m = train_svm(fm, SvmParams{5.0, 1e-3, 10}, KernelParams{1.0, 0.1, 2});
    SvmModel shuffled = m;
    std::reverse(shuffled.support_vectors.begin(), shuffled.support_vectors.end());
    std::reverse(shuffled.alpha.begin(), shuffled.alpha.end());
    std::reverse(shuffled.y.begin(), shuffled.y.end());
    std::reverse(shuffled.sv_index.begin(), shuffled.sv_index.end());
    for (int probe = 0; probe < 10; ++probe) {
        const auto& x = fm.rows[static_cast<std::size_t>(probe * 7) % fm.size()];
        EXPECT_NEAR(m.decision_value(x), shuffled.decision_value(x), 1e-12);
    }
}

TEST(DecisionValue, DimensionMismatchError) {
    PairFixture fx;
    SvmModel m = train_svm(fx.rows, fx.labels, fx.params, kLinear);
    EXPECT_THROW(m.decision_value(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST(SvmSerialization, RoundTripReproducesDecisionValues) {
    Dataset ds = testutil::synthetic_masses(100, 41);
    FeatureMatrix fm = encode(ds);
    SvmModel m = train_svm(fm, SvmParams{10.0, 1e-3, 10}, KernelParams{1.0, 0.1, 4});
    SvmModel back = svm_from_json(svm_to_json(m));
    for (const auto& row : fm.rows) {
        EXPECT_NEAR(back.decision_value(row), m.decision_value(row), 1e-12);
    }
    EXPECT_EQ(svm_to_json(back), svm_to_json(m));
}

TEST(SvmSerialization, RejectsMalformedFiles) {
    EXPECT_THROW(svm_from_json(nlohmann::json{{"format", "other"}}), std::runtime_error);
}

TEST(MarginErrors, EmptyModelHasNoMargin) {
    SvmModel m;
    m.kernel = kLinear;
    EXPECT_THROW(svm_margin(m), std::runtime_error);
}

}  // namespace
