#include <cmath>

#include <gtest/gtest.h>

#include "slsid/generators.hpp"
#include "slsid/truncation.hpp"

using namespace slsid;

namespace {

double max_markov_gap(const SlsModel& a, const SlsModel& b, int max_len) {
    double worst = 0.0;
    for (const auto& seq : all_sequences(a.s(), max_len))
        worst = std::max(worst, (markov_parameter(a, seq) - markov_parameter(b, seq)).norm());
    return worst;
}

// Classical Ho-Kalman on the square LTI Hankel [C A^{i+j} B]_{i,j < K}.
SlsModel ho_kalman(const SlsModel& lti, int K, int r) {
    const int p = lti.p(), m = lti.m();
    Eigen::MatrixXd H(p * K, m * K), Hs(p * K, m * K);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            H.block(p * i, m * j, p, m) = markov_parameter(lti, SwitchSequence(std::vector<int>(i + j, 1)));
            Hs.block(p * i, m * j, p, m) = markov_parameter(lti, SwitchSequence(std::vector<int>(i + j + 1, 1)));
        }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sq = svd.singularValues().head(r).cwiseSqrt();
    const Eigen::MatrixXd O = svd.matrixU().leftCols(r) * sq.asDiagonal();
    const Eigen::MatrixXd R = sq.asDiagonal() * svd.matrixV().leftCols(r).transpose();
    const Eigen::MatrixXd Opinv = O.completeOrthogonalDecomposition().pseudoInverse();
    const Eigen::MatrixXd Rpinv = R.completeOrthogonalDecomposition().pseudoInverse();
    return make_model(O.topRows(p), {Opinv * Hs * Rpinv}, {1.0}, R.leftCols(m));
}

}  // namespace

TEST(EffectiveRank, Examples) {
    EXPECT_EQ(effective_rank(Eigen::Vector3d(1.0, 1e-3, 1e-12), 1e-10), 2);
    EXPECT_EQ(effective_rank(Eigen::Vector3d::Zero(), 1e-10), 0);
    EXPECT_EQ(effective_rank(Eigen::VectorXd(), 1e-10), 0);
}

TEST(EffectiveRank, Example1ExactHankel) {
    const auto model = example1(10, 0.5, 0.0);
    // the size-1 matrix is [[1, 0, r], [r, 0, 0], [0, 0, 0]] with r = sqrt(1/2) gamma
    const auto H1 = exact_hankel(model, 1);
    EXPECT_EQ(hankel_svd(H1.data).effective_rank, 2);
    // the Gramians see a rank-one system
    EXPECT_EQ(balance_transform(gramians(model)).effective_rank, 1);
}

TEST(LearnParameters, ExactHankelRecoversMarkovParameters) {
    const auto model = test_model();
    // rho^7 < 1e-8 for rho ~ 0.06
    ASSERT_LT(std::pow(ms_spectral_radius(model), 7), 1e-8);
    const auto H = exact_hankel(model, 7);
    const auto learned = learn_parameters(H, model.probabilities(), 2);
    EXPECT_EQ(learned.n(), 2);
    EXPECT_LT(max_markov_gap(model, learned, 4), 1e-6);
}

TEST(LearnParameters, RandomModelsThreeModes) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto model = random_stable({2, 3, 1, 1, 0.02, seed, false});
        const auto learned = learn_parameters(exact_hankel(model, 5), model.probabilities(), 2);
        EXPECT_LT(max_markov_gap(model, learned, 4), 1e-6) << seed;
    }
}

TEST(LearnParameters, LtiMatchesHoKalman) {
    const auto model = random_stable({3, 1, 1, 1, 0.01, 5, true});
    const auto H = exact_hankel(model, 16);
    const auto learned = learn_parameters(H, {1.0}, 3);
    const auto hk = ho_kalman(model, 9, 3);
    EXPECT_LT(max_markov_gap(model, learned, 8), 1e-8);
    EXPECT_LT(max_markov_gap(hk, learned, 8), 1e-8);
}

TEST(LearnParameters, LiteralPaddingIsEquivalent) {
    const auto model = test_model();
    const auto H = exact_hankel(model, 5);
    LearnOptions lit;
    lit.literal_padding = true;
    const auto a = learn_parameters(H, model.probabilities(), 2);
    const auto b = learn_parameters(H, model.probabilities(), 2, lit);
    EXPECT_LT(max_markov_gap(a, b, 4), 1e-10);
}

TEST(LearnParameters, LowerOrdersAreLeadingBlocks) {
    const auto model = random_stable({3, 2, 1, 1, 0.05, 9, true});
    const auto H = exact_hankel(model, 4);
    const auto svd = hankel_svd(H.data);
    const auto r3 = parameters_from_svd(H.data, svd, 1, 1, 2, model.probabilities(), 3);
    const auto r2 = parameters_from_svd(H.data, svd, 1, 1, 2, model.probabilities(), 2);
    EXPECT_LT((r3.A(1).topLeftCorner(2, 2) - r2.A(1)).norm(), 1e-14);
    EXPECT_LT((r3.C.leftCols(2) - r2.C).norm(), 1e-14);
    EXPECT_LT((r3.B.topRows(2) - r2.B).norm(), 1e-14);
}

TEST(LearnParameters, ZeroHankelHasNoOrder) {
    BlockHankel H(2, 1, 1, 2);
    EXPECT_EQ(hankel_svd(H.data).effective_rank, 0);
    try {
        learn_parameters(H, {0.5, 0.5}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::OrderTooLarge);
    }
}

TEST(LearnParameters, ErrorCases) {
    const auto model = test_model();
    const auto H = exact_hankel(model, 3);
    try {
        learn_parameters(H, {1.0, 0.0}, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DegenerateProbability);
    }
    EXPECT_THROW(learn_parameters(H, {1.0}, 1), Error);
    EXPECT_THROW(learn_parameters(H, {0.5, 0.5}, 0), Error);
    try {
        learn_parameters(H, {0.5, 0.5}, 100);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::OrderTooLarge);
    }
}

TEST(GapGamma, SingleValue) {
    const auto rep = gap_gamma(Eigen::VectorXd::Constant(1, 4.0), 0.7);
    ASSERT_EQ(rep.blocks.size(), 1u);
    EXPECT_EQ(rep.blocks[0].zeta, 4.0);
    EXPECT_NEAR(rep.gamma, 0.5, 1e-15);
}

TEST(GapGamma, DistinctValuesHandEvaluation) {
    const Eigen::Vector4d sigma(4.0, 3.0, 1.5, 1.0);
    const auto rep = gap_gamma(sigma, 0.0);
    ASSERT_EQ(rep.blocks.size(), 4u);
    // zeta = (1, min(1, 1.5), min(1.5, 0.5), min(0.5, 1))
    EXPECT_EQ(rep.blocks[0].zeta, 1.0);
    EXPECT_EQ(rep.blocks[1].zeta, 1.0);
    EXPECT_EQ(rep.blocks[2].zeta, 0.5);
    EXPECT_EQ(rep.blocks[3].zeta, 0.5);
    EXPECT_NEAR(rep.gamma, std::sqrt(4.0 + 3.0 + 6.0 + 4.0), 1e-14);
}

TEST(GapGamma, HugeEpsilonIsOneBlock) {
    const Eigen::Vector3d sigma(5.0, 2.0, 0.5);
    const auto rep = gap_gamma(sigma, 1e6);
    ASSERT_EQ(rep.blocks.size(), 1u);
    EXPECT_EQ(rep.blocks[0].zeta, 0.5);
    EXPECT_NEAR(rep.gamma, std::sqrt(5.0) / 0.5, 1e-14);
}

TEST(GapGamma, ClustersWithinTolerance) {
    const Eigen::Vector4d sigma(4.0, 3.9, 2.0, 1.95);
    const auto rep = gap_gamma(sigma, 0.1, 2.0);
    ASSERT_EQ(rep.blocks.size(), 2u);
    EXPECT_EQ(rep.blocks[0].sigma_min, 3.9);
    EXPECT_NEAR(rep.blocks[0].zeta, 1.9, 1e-15);
    EXPECT_NEAR(rep.blocks[1].zeta, 1.9, 1e-15);
    EXPECT_THROW(gap_gamma(Eigen::Vector2d(1.0, 2.0), 0.1), Error);
}

TEST(CompareModels, IdenticalAndEquivalent) {
    const auto model = test_model();
    const auto same = compare_models(model, model, 4);
    EXPECT_EQ(same.markov_err, 0.0);
    EXPECT_EQ(same.l2_distance, 0.0);
    Eigen::MatrixXd S(2, 2);
    S << 2, 1, -1, 3;
    const auto moved = compare_models(similarity_transform(model, S), model, 4);
    EXPECT_LT(moved.markov_err, 1e-14);
    const auto full = compare_models(balanced_truncate_exact(model, 2), model, 4);
    EXPECT_LT(full.markov_err, 1e-8);
    EXPECT_LT(full.l2_distance, 1e-8);
}

TEST(CompareModels, ReducedOrderWithinBound) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto model = seed == 0 ? test_model() : random_stable({3, 2, 1, 1, 0.7, seed, false});
        const auto cmp = compare_models(balanced_truncate_exact(model, 1), model, 6);
        EXPECT_LE(cmp.l2_distance, bt_error_bound(model, 1) + 1e-12);
        EXPECT_GT(cmp.markov_err, 0.0);
    }
}

TEST(CompareModels, ReweightsEstimateWithOracleProbabilities) {
    auto model = test_model();
    auto est = model;
    est.modes[0].prob = 0.45;
    est.modes[1].prob = 0.55;
    EXPECT_EQ(compare_models(est, model, 4).l2_distance, 0.0);
}

TEST(Procrustes, RecoversRotation) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 2);
    const double t = 0.3;
    Eigen::Matrix2d Q;
    Q << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    EXPECT_LT((procrustes(X, X * Q) - Q).norm(), 1e-12);
}
