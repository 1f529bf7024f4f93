#include <algorithm>
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "slsid/estimate_io.hpp"
#include "slsid/estimation.hpp"
#include "slsid/generators.hpp"

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

Dataset labelled(int s, const std::vector<int>& theta) {
    Dataset ds;
    ds.s = s;
    ds.config.rollout_length = static_cast<int>(theta.size());
    ds.config.num_rollouts = 1;
    Rollout r;
    r.theta = theta;
    r.u = Eigen::MatrixXd::Ones(1, static_cast<Eigen::Index>(theta.size()));
    r.y = r.u;
    ds.rollouts.push_back(std::move(r));
    return ds;
}

// y_{k+1} = u_{k-1} exactly: only the length-1 Markov parameter is nonzero.
SlsModel delay_model() {
    Eigen::MatrixXd A(2, 2), B(2, 1), C(1, 2);
    A << 0, 1, 0, 0;
    B << 0, 1;
    C << 1, 0;
    return make_model(C, {A}, {1.0}, B);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST(CountOccurrences, HandEnumeration) {
    const auto st = count_occurrences(labelled(2, {1, 1, 1, 1, 1}), 3);
    // starts k with 2 <= k and k + l <= 5
    EXPECT_EQ(st.count({}), 4u);
    EXPECT_EQ(st.count({1}), 3u);
    EXPECT_EQ(st.count({1, 1}), 2u);
    EXPECT_EQ(st.count({1, 1, 1}), 1u);
    EXPECT_EQ(st.count({2}), 0u);
    EXPECT_EQ(st.count({1, 2}), 0u);
    EXPECT_EQ(admissible_positions(5, 2), 2);
    EXPECT_EQ(admissible_positions(5, 0), 4);
    EXPECT_EQ(admissible_positions(3, 4), 0);
}

TEST(CountOccurrences, OrderOfLabels) {
    // theta_2 = 2, theta_3 = 1: the window starting at k = 2 of length 2 is {theta_3, theta_2} = {1, 2}
    const auto st = count_occurrences(labelled(2, {1, 2, 1, 1}), 2, {true, 1});
    EXPECT_EQ(st.count({1, 2}), 1u);
    EXPECT_EQ(st.count({2, 1}), 0u);
    EXPECT_EQ(st.count({1, 1}), 0u);
    const auto& occ = st.occurrences[sequence_index({1, 2}, 2)];
    ASSERT_EQ(occ.size(), 1u);
    EXPECT_EQ(occ[0].start, 2);
}

TEST(CountOccurrences, RejectsBadArguments) {
    const auto ds = labelled(2, {1, 1, 1, 1});
    EXPECT_THROW(count_occurrences(ds, 3), Error);
    auto bad = labelled(2, {1, 3, 1, 1});
    try {
        count_occurrences(bad, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::LabelOutOfRange);
    }
}

TEST(CountOccurrences, FrequencyMatchesProbability) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto ds = simulate_with(test_model(), 10000, 6, seed);
        const auto st = count_occurrences(ds, 2);
        EXPECT_NEAR(static_cast<double>(st.count({1})) / (10000.0 * admissible_positions(6, 1)), 0.5, 0.02);
    }
}

TEST(CountOccurrences, IndependentOfThreadCount) {
    const auto ds = simulate_with(test_model(), 5000, 7, 3, 0.1);
    const auto a = count_occurrences(ds, 4, {false, 1});
    const auto b = count_occurrences(ds, 4, {false, 8});
    EXPECT_EQ(a.counts, b.counts);
    for (SeqIndex i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.yu[i], b.yu[i]);
        EXPECT_EQ(a.uu[i], b.uu[i]);
    }
}

TEST(SequenceProbability, Examples) {
    const auto st = count_occurrences(labelled(2, {1, 1, 1, 1, 1}), 2);
    EXPECT_EQ(estimate_sequence_probability(st, SwitchSequence{}), 1.0);
    EXPECT_EQ(estimate_sequence_probability(st, SwitchSequence{2}), 0.0);
    EXPECT_EQ(estimate_sequence_probability(st, SwitchSequence{1, 1}), 1.0);
}

TEST(SequenceProbability, MonteCarloUnbiased) {
    auto model = test_model();
    model.modes[0].prob = 0.3;
    model.modes[1].prob = 0.7;
    std::vector<double> v;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto st = count_occurrences(simulate_with(model, 40, 6, 1000 + seed), 2);
        v.push_back(estimate_sequence_probability(st, SwitchSequence{1, 2}));
    }
    double mean = 0.0, var = 0.0;
    for (double x : v) mean += x / v.size();
    for (double x : v) var += (x - mean) * (x - mean) / (v.size() - 1);
    EXPECT_LT(std::abs(mean - 0.21), 3.0 * std::sqrt(var / v.size()));
}

TEST(Ols, ExactWhenNoOtherInputReachesTheOutput) {
    const auto model = delay_model();
    const auto ds = simulate_with(model, 20, 6, 4);
    const auto st = count_occurrences(ds, 3);
    EXPECT_NEAR(ols_markov_estimate(st, sequence_index({1}, 1))(0, 0), 1.0, 1e-12);
}

TEST(Ols, MomentsMatchOccurrenceListAndDirectSolve) {
    const auto model = random_stable({3, 2, 2, 2, 0.5, 6, true});
    const auto ds = simulate_with(model, 200, 6, 8, 0.1);
    const auto st = count_occurrences(ds, 3, {true, 2});
    const SwitchSequence seq{2, 1};
    const Eigen::MatrixXd a = ols_markov_estimate(st, sequence_index(seq, 2));
    const Eigen::MatrixXd b = ols_markov_estimate(ds, st, seq);
    EXPECT_LT((a - b).norm(), 1e-10);
    // independent least squares over the stacked occurrences
    const auto& occ = st.occurrences[sequence_index(seq, 2)];
    Eigen::MatrixXd U(2, occ.size()), Y(2, occ.size());
    for (std::size_t i = 0; i < occ.size(); ++i) {
        U.col(i) = ds.rollouts[occ[i].rollout].u.col(occ[i].start - 2);
        Y.col(i) = ds.rollouts[occ[i].rollout].y.col(occ[i].start + 1);
    }
    const Eigen::MatrixXd ls = U.transpose().colPivHouseholderQr().solve(Y.transpose()).transpose();
    EXPECT_LT((a - ls).norm(), 1e-10);
}

TEST(Ols, ZeroInputMatrixGivesZero) {
    auto model = test_model();
    model.B.setZero();
    const auto st = count_occurrences(simulate_with(model, 50, 5, 1), 2);
    for (SeqIndex i = 0; i < st.size(); ++i)
        if (st.counts[i] > 0) {
            EXPECT_EQ(ols_markov_estimate(st, i).norm(), 0.0);
        }
}

TEST(Ols, UnseenSequenceThrows) {
    const auto st = count_occurrences(labelled(2, {1, 1, 1, 1}), 2);
    try {
        ols_markov_estimate(st, sequence_index({2}, 2));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NoOccurrences);
    }
}

TEST(Ols, ErrorDecaysLikeInverseRootCount) {
    const auto model = test_model();
    const Eigen::MatrixXd truth = markov_parameter(model, {1});
    std::vector<double> lx, ly;
    for (int ns : {100, 1000, 10000}) {
        double sq = 0.0, cnt = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto st = count_occurrences(simulate_with(model, ns, 4, 50 + seed, 0.1), 2);
            const SeqIndex idx = sequence_index({1}, 2);
            sq += (ols_markov_estimate(st, idx) - truth).squaredNorm() / 20.0;
            cnt += static_cast<double>(st.counts[idx]) / 20.0;
        }
        lx.push_back(std::log(cnt));
        ly.push_back(0.5 * std::log(sq));
    }
    const double slope = (ly[2] - ly[0]) / (lx[2] - lx[0]);
    EXPECT_GE(slope, -0.65);
    EXPECT_LE(slope, -0.35);
}

TEST(PsdPinv, SingularAndRegular) {
    Eigen::MatrixXd G(2, 2);
    G << 2, 0, 0, 0;
    const auto P = psd_pinv(G);
    EXPECT_NEAR(P(0, 0), 0.5, 1e-15);
    EXPECT_EQ(P(1, 1), 0.0);
    Eigen::MatrixXd R(2, 2);
    R << 2, 1, 1, 3;
    EXPECT_LT((psd_pinv(R) * R - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-13);
    EXPECT_EQ(psd_pinv(Eigen::MatrixXd::Zero(2, 2)).norm(), 0.0);
}

TEST(Threshold, Formula) {
    ThresholdRule r{2.0, 0.05, -1};
    EXPECT_NEAR(r.value(1, 2, 3), 2.0 * (1 + 3 * std::log(80.0)), 1e-12);
    r.n_ref = 5;
    EXPECT_NEAR(r.value(2, 3, 1), 2.0 * (2 + 5 * std::log(120.0)), 1e-12);
}

TEST(AssembleHankel, NoiselessErrorShrinksLikeInverseRoot) {
    const auto model = test_model();
    const auto H = exact_hankel(model, 2);
    std::vector<double> rel;
    for (int ns : {1000, 100000}) {
        const auto est = assemble_hankel_estimate(simulate_with(model, ns, 6, 1), 2);
        EXPECT_EQ(est.zeroed_count(), 0u);
        rel.push_back((est.hankel.data - H.data).norm() / H.data.norm());
    }
    // two decades of N_S: one decade of error, with slack for sampling
    EXPECT_LT(rel[1], rel[0] / 4.0);
    EXPECT_LT(rel[1], 1e-2);
}

TEST(AssembleHankel, NeverObservedModeIsZeroed) {
    auto lti = test_model_lti();
    auto ds = simulate_with(lti, 200, 6, 2);
    ds.s = 2;
    const auto est = assemble_hankel_estimate(ds, 3);
    for (SeqIndex i = 0; i < est.counts.size(); ++i) {
        const auto seq = sequence_from_index(2, i);
        const bool has2 = std::count(seq.labels.begin(), seq.labels.end(), 2) > 0;
        EXPECT_EQ(est.zeroed[i] != 0, has2) << to_string(seq);
    }
    const auto& H = est.hankel;
    for (SeqIndex r = 0; r < static_cast<SeqIndex>(H.blocks()); ++r)
        for (SeqIndex c = 0; c < static_cast<SeqIndex>(H.blocks()); ++c) {
            const auto seq = concat(sequence_from_index(2, r), sequence_from_index(2, c));
            if (std::count(seq.labels.begin(), seq.labels.end(), 2) > 0) {
                EXPECT_EQ(H.block(r, c).norm(), 0.0);
            }
        }
}

TEST(AssembleHankel, EmptySequenceNeverZeroed) {
    const auto est = assemble_hankel_estimate(labelled(2, {1, 1, 1, 1}), 1, ThresholdRule{1e6, 0.05, -1});
    EXPECT_EQ(est.zeroed[0], 0);
    EXPECT_EQ(est.zeroed[1], 1);
}

TEST(AssembleHankel, ErrorDecreasesWithRollouts) {
    const auto model = test_model();
    const auto H = exact_hankel(model, 3);
    std::vector<double> med;
    for (int ns : {1000, 10000, 100000}) {
        std::vector<double> e;
        for (std::uint64_t seed = 0; seed < 3; ++seed)
            e.push_back((assemble_hankel_estimate(simulate_with(model, ns, 6, seed, 0.1), 3).hankel.data - H.data)
                            .squaredNorm());
        med.push_back(median(e));
    }
    EXPECT_GT(med[0], med[1]);
    EXPECT_GT(med[1], med[2]);
}

TEST(AssembleHankel, RejectsRangeBeyondCounts) {
    const auto st = count_occurrences(labelled(2, {1, 1, 1, 1, 1}), 2);
    EXPECT_THROW(assemble_hankel_estimate(st, 3), Error);
    EXPECT_THROW(assemble_hankel_estimate(st, 2, ThresholdRule{2.0, 0.0, -1}), Error);
}

TEST(EstimateIo, JsonRoundTripRebuildsMatrix) {
    const auto est = assemble_hankel_estimate(simulate_with(test_model(), 300, 6, 5, 0.1), 3);
    const auto back = estimate_from_json(detail::parse_json(estimate_to_json(est).dump(), "test"));
    EXPECT_EQ(back.N, 3);
    EXPECT_EQ(back.num_rollouts, 300);
    EXPECT_EQ(back.counts, est.counts);
    EXPECT_EQ(back.zeroed, est.zeroed);
    EXPECT_EQ(back.hankel.data, est.hankel.data);
    const auto path = (std::filesystem::temp_directory_path() / "slsid_est_rt.json").string();
    save_estimate(est, path);
    EXPECT_EQ(load_estimate(path).hankel.data, est.hankel.data);
    std::filesystem::remove(path);
}

TEST(EstimateIo, BinaryRoundTripAndCorruption) {
    const auto est = assemble_hankel_estimate(simulate_with(test_model(), 100, 5, 6), 2);
    const auto bytes = hankel_to_binary(est);
    const auto H = hankel_from_binary(bytes);
    EXPECT_EQ(H.data, est.hankel.data);
    EXPECT_EQ(H.mask, est.hankel.mask);
    for (std::string bad : {bytes.substr(0, 20), bytes.substr(0, bytes.size() - 8), std::string(bytes.size(), '\0')}) {
        try {
            hankel_from_binary(bad);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::FormatError);
        }
    }
}

TEST(EstimateIo, MalformedJsonIsFormatError) {
    auto j = estimate_to_json(assemble_hankel_estimate(labelled(2, {1, 1, 1, 1}), 1));
    j["sequences"].erase(0);
    try {
        estimate_from_json(j);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::FormatError);
    }
}
