#include <cmath>

#include <gtest/gtest.h>

#include "slsid/estimation.hpp"
#include "slsid/generators.hpp"
#include "slsid/model_selection.hpp"

using namespace slsid;

namespace {

Dataset simulate_with(const SlsModel& model, int ns, int N, std::uint64_t seed, double noise = 0.0) {
    SimConfig c;
    c.num_rollouts = ns;
    c.rollout_length = N;
    c.seed = seed;
    c.process_noise_std = noise;
    c.output_noise_std = noise;
    return simulate(model, c);
}

SelectionConstants constants_for(const SlsModel& model) {
    SelectionConstants k;
    k.m = model.m();
    k.p = model.p();
    k.s = model.s();
    k.beta = energy_bound(model, 12);
    return k;
}

std::vector<HankelEstimate> estimates_up_to(const SequenceStats& st, int L) {
    std::vector<HankelEstimate> out;
    for (int l = 1; l <= L; ++l) out.push_back(assemble_hankel_estimate(st, l, {2.0, 0.05, L}));
    return out;
}

// sum over combined lengths > N of (k+1) p_seq ||C A_seq B||^2, enumerated up to length 16
double brute_tail(const SlsModel& model, int N) {
    const auto t = sequence_table(model, 16);
    double tail = 0.0;
    for (SeqIndex i = 0; i < t.size(); ++i)
        if (t.length[i] > N)
            tail += (t.length[i] + 1) * t.prob[i] * (model.C * t.product[i] * model.B).squaredNorm();
    return tail;
}

}  // namespace

TEST(Alpha, HandEvaluation) {
    SelectionConstants k;
    k.s = 1;
    k.p = 1;
    k.m = 1;
    k.beta = 1.0;
    k.delta = 0.5;
    // mu(1) = log 6 + log 5 + 1, s_1 = 2, alpha = mu sqrt(2 * 2 / N_S)
    EXPECT_NEAR(mu_of(1, k), 4.4011973816621555, 1e-13);
    EXPECT_NEAR(alpha_of(1, 1.0, k), 8.802394763324311, 1e-12);
    EXPECT_NEAR(alpha_of(1, 100.0, k), 0.8802394763324311, 1e-13);
}

TEST(Alpha, ScalesAsInverseRootOfRollouts) {
    const auto k = constants_for(test_model());
    for (int d = 1; d <= 6; ++d)
        EXPECT_NEAR(alpha_of(d, 1e3, k) * std::sqrt(1e3), alpha_of(d, 1e5, k) * std::sqrt(1e5),
                    1e-12 * alpha_of(d, 1.0, k));
}

TEST(Alpha, IncreasingInSize) {
    for (int s : {1, 2, 3}) {
        SelectionConstants k;
        k.s = s;
        k.beta = 0.3;
        k.delta = 0.9;
        for (int d = 1; d < 20; ++d) EXPECT_GT(alpha_of(d + 1, 1e4, k), alpha_of(d, 1e4, k));
    }
    EXPECT_THROW(alpha_of(0, 1e4, SelectionConstants{}), Error);
}

TEST(SD, CountsSequences) {
    EXPECT_EQ(s_d(1, 4), 5.0);
    EXPECT_EQ(s_d(2, 3), 15.0);
    EXPECT_EQ(s_d(3, 2), 13.0);
}

TEST(DeltaS, Examples) {
    EXPECT_DOUBLE_EQ(delta_s(0.3, 1), 1.0);
    EXPECT_DOUBLE_EQ(delta_s(0.9, 1), 1.0);
    EXPECT_NEAR(delta_s(0.5, 2), 0.5, 1e-15);
    EXPECT_NEAR(delta_s(0.25, 4), 0.5, 1e-15);
    EXPECT_THROW(delta_s(1.0, 2), Error);
    EXPECT_THROW(delta_s(0.0, 2), Error);
}

TEST(NUp, AllCountsZeroGivesZero) {
    SequenceStats st;
    st.s = 2;
    st.max_len = 3;
    st.counts.assign(sequence_count(2, 3), 0);
    st.counts[0] = 1000;
    const auto r = compute_n_up(st, SelectionConstants{.s = 2});
    EXPECT_EQ(r.n_up, 0);
    EXPECT_FALSE(r.censored);
}

TEST(NUp, SingleModeIsCensored) {
    const auto model = test_model_lti();
    const auto st = count_occurrences(simulate_with(model, 5000, 10, 1), 8);
    const auto r = compute_n_up(st, constants_for(model));
    EXPECT_EQ(r.n_up, 8);
    EXPECT_TRUE(r.censored);
}

TEST(NUp, StopsAtFirstScarceLength) {
    const auto model = test_model();
    auto k = constants_for(model);
    const auto st = count_occurrences(simulate_with(model, 300, 12, 2), 10);
    const auto r = compute_n_up(st, k);
    ASSERT_FALSE(r.censored);
    // some length-N_up sequence is plentiful, every length-(N_up + 1) sequence is scarce
    auto plentiful = [&](int l) {
        for (SeqIndex i = sequence_count(2, l - 1); i < sequence_count(2, l); ++i)
            if (static_cast<double>(st.counts[i]) >= n_up_threshold(l, k)) return true;
        return false;
    };
    if (r.n_up >= 1) {
        EXPECT_TRUE(plentiful(r.n_up));
    }
    EXPECT_FALSE(plentiful(r.n_up + 1));
    EXPECT_NEAR(n_up_threshold(3, k), 2.0 * (1.0 + std::log(2.0 * 15.0 / 0.05)), 1e-12);
}

TEST(NUp, GrowthRightSide) {
    SelectionConstants k;
    k.m = 1;
    k.delta = 0.05;
    const double rhs = n_up_growth_rhs(1e4, 0.5, k);
    EXPECT_NEAR(rhs, (std::log(2.0) + std::log(1e4) + std::log(std::log(20.0))) / std::log(2.0), 1e-12);
    EXPECT_FALSE(n_up_growth_holds(1, 1e4, 0.5, k));
    EXPECT_TRUE(n_up_growth_holds(100, 1e4, 0.5, k));
    EXPECT_FALSE(n_up_growth_holds(8, 1e4, 0.5, k));
    EXPECT_THROW(n_up_growth_rhs(1e4, 1.0, k), Error);
}

TEST(SelectNHat, IdenticalEstimatesPickOne) {
    auto model = test_model();
    model.B.setZero();
    const auto st = count_occurrences(simulate_with(model, 500, 8, 1), 5);
    const auto ests = estimates_up_to(st, 5);
    const auto r = select_n_hat(ests, 500, constants_for(test_model()));
    EXPECT_EQ(r.n_hat, 1);
    for (const auto& row : r.diff)
        for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(SelectNHat, SingleEstimateIsVacuous) {
    const auto st = count_occurrences(simulate_with(test_model(), 50, 5, 3, 0.5), 1);
    const auto r = select_n_hat(estimates_up_to(st, 1), 50, constants_for(test_model()));
    EXPECT_EQ(r.n_hat, 1);
    EXPECT_EQ(r.alpha.size(), 1u);
}

TEST(SelectNHat, LargestSizeAlwaysQualifies) {
    const auto model = test_model();
    auto k = constants_for(model);
    k.beta = 1e-9;
    const auto st = count_occurrences(simulate_with(model, 200, 7, 3, 0.1), 4);
    const auto r = select_n_hat(estimates_up_to(st, 4), 200, k);
    EXPECT_EQ(r.n_hat, 4);
}

TEST(SelectNHat, RuleMatchesDirectEvaluation) {
    const auto model = random_stable({2, 2, 1, 1, 0.9, 3, true});
    auto k = constants_for(model);
    k.beta = 0.005;  // small enough that the rule bites
    const auto st = count_occurrences(simulate_with(model, 20000, 8, 5, 0.1), 6);
    const auto ests = estimates_up_to(st, 6);
    const auto r = select_n_hat(ests, 20000, k);
    auto ok = [&](int l) {
        for (int d = l; d <= 6; ++d)
            if (padded_frobenius_distance(ests[d - 1].hankel, ests[l - 1].hankel) >
                k.beta * (alpha_of(d, 20000, k) + 2.0 * alpha_of(l, 20000, k)))
                return false;
        return true;
    };
    int expect = 6;
    for (int l = 6; l >= 1; --l)
        if (ok(l)) expect = l;
    EXPECT_EQ(r.n_hat, expect);
}

TEST(SelectNHat, RejectsMisorderedEstimates) {
    const auto st = count_occurrences(simulate_with(test_model(), 50, 6, 3), 3);
    auto ests = estimates_up_to(st, 3);
    std::swap(ests[0], ests[1]);
    EXPECT_THROW(select_n_hat(ests, 50, constants_for(test_model())), Error);
}

TEST(SelectNHat, NotAboveOracleNStar) {
    const auto model = test_model();
    const auto k = constants_for(model);
    const int n_star = oracle_n_star(model, 1e5, k);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto st = count_occurrences(simulate_with(model, 100000, 8, seed, 0.1), 4);
        EXPECT_LE(select_n_hat(estimates_up_to(st, 4), 1e5, k).n_hat, n_star);
    }
}

TEST(OracleNStar, NearZeroDynamicsGivesOne) {
    auto model = test_model();
    for (auto& md : model.modes) md.A *= 1e-6;
    EXPECT_EQ(oracle_n_star(model, 1e4, constants_for(model)), 1);
}

TEST(OracleNStar, NondecreasingInRollouts) {
    const auto model = random_stable({3, 2, 1, 1, 0.9, 2, true});
    const auto k = constants_for(model);
    int prev = 0;
    for (double ns : {1e2, 1e4, 1e6, 1e8, 1e10}) {
        const int n = oracle_n_star(model, ns, k);
        EXPECT_GE(n, prev);
        prev = n;
    }
    EXPECT_GT(prev, 1);
}

TEST(OracleNStar, MatchesBruteForceScan) {
    const auto model = test_model();
    const auto k = constants_for(model);
    for (double ns : {1e5, 1e9}) {
        int scan = -1;
        for (int N = 1; N <= 12 && scan < 0; ++N)
            if (k.beta * alpha_of(N, ns, k) >= std::sqrt(brute_tail(model, N))) scan = N;
        EXPECT_EQ(oracle_n_star(model, ns, k), scan);
        EXPECT_NEAR(truncation_error_sq(model, 2), brute_tail(model, 2), 1e-12);
    }
}

TEST(SelectionReport, JsonShape) {
    const auto st = count_occurrences(simulate_with(test_model(), 100, 6, 3), 3);
    SelectionReport rep;
    rep.n_up = {3, false};
    rep.selection = select_n_hat(estimates_up_to(st, 3), 100, constants_for(test_model()));
    const auto j = selection_report_to_json(rep);
    EXPECT_EQ(j["N_up"], 3);
    EXPECT_TRUE(j["delta_s"].is_null());
    EXPECT_EQ(j["differences"].size(), 3u);
}
