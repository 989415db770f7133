#include <gtest/gtest.h>

#include "sdr/standardize.hpp"
#include "support.hpp"

using namespace sdr;

TEST(SampleMoments, TwoPointCase) {
    Eigen::MatrixXd X(2, 2);
    X << 0, 0, 2, 0;
    const auto m = sample_moments(X);
    EXPECT_DOUBLE_EQ(m.mean(0), 1.0);
    EXPECT_DOUBLE_EQ(m.mean(1), 0.0);
    EXPECT_DOUBLE_EQ(m.cov(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.cov(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(m.cov(1, 1), 0.0);
}

TEST(SampleMoments, MatchesTwoPassLoops) {
    RandomStream rng(3, 0);
    const Eigen::MatrixXd X = fixture::random_matrix(rng, 50, 3).array() * 3.0 + 7.0;
    const auto m = sample_moments(X);
    for (int a = 0; a < 3; ++a) {
        double mean_a = 0.0;
        for (int i = 0; i < 50; ++i) mean_a += X(i, a);
        mean_a /= 50.0;
        EXPECT_NEAR(m.mean(a), mean_a, 1e-12);
        for (int b = 0; b < 3; ++b) {
            double mean_b = 0.0;
            for (int i = 0; i < 50; ++i) mean_b += X(i, b);
            mean_b /= 50.0;
            double s = 0.0;
            for (int i = 0; i < 50; ++i) s += (X(i, a) - mean_a) * (X(i, b) - mean_b);
            EXPECT_NEAR(m.cov(a, b), s / 50.0, 1e-12);
        }
    }
}

TEST(SymInvSqrt, IdentityAndDiagonal) {
    EXPECT_TRUE(sym_inv_sqrt(Eigen::MatrixXd::Identity(4, 4)).isApprox(Eigen::MatrixXd::Identity(4, 4)));
    Eigen::MatrixXd D = Eigen::Vector2d(4, 9).asDiagonal();
    const auto R = sym_inv_sqrt(D);
    EXPECT_NEAR(R(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(R(1, 1), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(R(0, 1), 0.0, 1e-15);
}

TEST(SymInvSqrt, MultiplyBackAndCommute) {
    RandomStream rng(4, 0);
    for (int k = 0; k < 10; ++k) {
        const Eigen::MatrixXd B = fixture::random_matrix(rng, 4, 4);
        const Eigen::MatrixXd S = B * B.transpose() + 0.1 * Eigen::MatrixXd::Identity(4, 4);
        const auto R = sym_inv_sqrt(S);
        EXPECT_LT(((R * R * S) - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((R - R.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((R * S - S * R).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_GT(sym_eigenvalues(R).minCoeff(), 0.0);
    }
}

TEST(SymInvSqrt, NearSingularReportsCondition) {
    Eigen::MatrixXd S = Eigen::Vector2d(1.0, 1e-12).asDiagonal();
    try {
        sym_inv_sqrt(S);
        FAIL();
    } catch (const SingularError& e) {
        EXPECT_GT(e.condition(), 1e10);
    }
}

TEST(SymEigen, DescendingWithSignConvention) {
    RandomStream rng(5, 0);
    const Eigen::MatrixXd B = fixture::random_matrix(rng, 5, 5);
    const auto e = sym_eigen(B * B.transpose());
    for (int j = 0; j + 1 < 5; ++j) EXPECT_GE(e.values(j), e.values(j + 1));
    for (int j = 0; j < 5; ++j) {
        Eigen::Index at;
        e.vectors.col(j).cwiseAbs().maxCoeff(&at);
        EXPECT_GT(e.vectors(at, j), 0.0);
    }
}

TEST(Standardize, IdentityWhenAlreadyWhite) {
    Eigen::MatrixXd X(4, 2);
    X << 1, 1, 1, -1, -1, 1, -1, -1;
    Eigen::VectorXd y(4);
    y << 1, 2, 3, 4;
    const Dataset d(X, y, {"a", "b"});
    const auto s = standardize(d);
    EXPECT_LT((s.Z - X).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Standardize, WhiteningInvariants) {
    RandomStream rng(6, 0);
    for (int k = 0; k < 10; ++k) {
        const auto d = fixture::random_regression(rng, 200, 5);
        const auto s = standardize(d);
        const double scale = d.X().cwiseAbs().maxCoeff();
        EXPECT_LT(s.Z.colwise().mean().cwiseAbs().maxCoeff(), 1e-10 * scale);
        const Eigen::MatrixXd C = s.Z.transpose() * s.Z / 200.0;
        EXPECT_LT((C - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((s.cov_inv_sqrt * s.cov * s.cov_inv_sqrt - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(),
                  1e-8);
    }
}

TEST(Standardize, CollinearPredictorsNamed) {
    RandomStream rng(7, 0);
    Eigen::MatrixXd X = fixture::random_matrix(rng, 30, 3);
    X.col(2) = X.col(0) - 2.0 * X.col(1);
    const Dataset d(X, X.col(0), {"a", "b", "c"});
    try {
        standardize(d);
        FAIL();
    } catch (const SingularError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("a"), std::string::npos);
        EXPECT_NE(msg.find("c"), std::string::npos);
    }
    Eigen::MatrixXd Y = fixture::random_matrix(rng, 30, 2);
    Y.col(1).setConstant(4.0);
    try {
        standardize(Dataset(Y, Y.col(0), {"u", "konst"}));
        FAIL();
    } catch (const SingularError& e) {
        EXPECT_NE(std::string(e.what()).find("konst"), std::string::npos);
    }
}
