#pragma once

// Hankel estimation from rollouts.
//
// An occurrence (t, k) of a length-l sequence (theta_{k+l-1}, ..., theta_k) in
// rollout t pairs the regressor u_{k-1} with the response y_{k+l}; it requires
// 2 <= k and k + l <= N, which leaves N - l - 1 admissible starts per rollout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "slsid/errors.hpp"
#include "slsid/hankel.hpp"
#include "slsid/sequence.hpp"
#include "slsid/simulator.hpp"

namespace slsid {

struct Occurrence {
    std::int32_t rollout;  // 0-based
    std::int32_t start;    // k, 1-based time index
};

struct CountOptions {
    bool keep_occurrences = false;
    int threads = 1;
};

// Per-sequence counts and the sufficient statistics of the per-sequence
// least-squares problem, indexed by L(seq) for every length 0..max_len.
struct SequenceStats {
    int s = 1;
    int p = 1;
    int m = 1;
    int max_len = 0;
    int rollout_length = 0;
    int num_rollouts = 0;
    std::vector<std::uint64_t> counts;
    std::vector<Eigen::MatrixXd> yu;  // sum y_{k+l} u_{k-1}^T, p x m
    std::vector<Eigen::MatrixXd> uu;  // sum u_{k-1} u_{k-1}^T, m x m
    std::vector<std::vector<Occurrence>> occurrences;  // empty unless kept

    [[nodiscard]] SeqIndex size() const noexcept { return counts.size(); }
    [[nodiscard]] bool has_occurrences() const noexcept { return !occurrences.empty(); }
    [[nodiscard]] std::uint64_t count(const SwitchSequence& seq) const {
        const SeqIndex idx = sequence_index(seq, s);
        require(seq.length() <= max_len, Errc::InvalidArgument, "sequence longer than the counted range");
        return counts[idx];
    }
};

inline int admissible_positions(int rollout_length, int len) { return std::max(0, rollout_length - len - 1); }

namespace detail {

// Chunking is fixed so floating-point accumulation order does not depend on
// the thread count.
inline constexpr int kCountChunk = 1024;

inline SequenceStats empty_stats(const Dataset& ds, int max_len, bool keep) {
    SequenceStats st;
    st.s = ds.s;
    st.p = ds.p;
    st.m = ds.m;
    st.max_len = max_len;
    st.rollout_length = ds.rollout_length();
    st.num_rollouts = ds.num_rollouts();
    const auto total = static_cast<std::size_t>(sequence_count(ds.s, max_len));
    st.counts.assign(total, 0);
    st.yu.assign(total, Eigen::MatrixXd::Zero(ds.p, ds.m));
    st.uu.assign(total, Eigen::MatrixXd::Zero(ds.m, ds.m));
    if (keep) st.occurrences.assign(total, {});
    return st;
}

inline void count_range(const Dataset& ds, int first, int last, SequenceStats& st) {
    const int N = ds.rollout_length();
    const auto s = static_cast<SeqIndex>(ds.s);
    for (int t = first; t < last; ++t) {
        const Rollout& r = ds.rollouts[static_cast<std::size_t>(t)];
        for (int k = 2; k <= N; ++k) {
            const auto u = r.u.col(k - 2);
            const Eigen::MatrixXd uut = u * u.transpose();
            SeqIndex idx = 0;
            SeqIndex weight = 1;
            for (int l = 0; l <= st.max_len && k + l <= N; ++l) {
                if (l > 0) {
                    // prepend the newest switch theta_{k+l-1} as the leading digit
                    const int label = r.theta[static_cast<std::size_t>(k + l - 2)];
                    idx += static_cast<SeqIndex>(label) * weight;
                    weight *= s;
                }
                st.counts[idx] += 1;
                st.yu[idx].noalias() += r.y.col(k + l - 1) * u.transpose();
                st.uu[idx] += uut;
                if (!st.occurrences.empty()) st.occurrences[idx].push_back({t, k});
            }
        }
    }
}

inline void merge_into(SequenceStats& dst, SequenceStats&& src) {
    for (std::size_t i = 0; i < dst.counts.size(); ++i) {
        dst.counts[i] += src.counts[i];
        dst.yu[i] += src.yu[i];
        dst.uu[i] += src.uu[i];
        if (!dst.occurrences.empty())
            dst.occurrences[i].insert(dst.occurrences[i].end(), src.occurrences[i].begin(), src.occurrences[i].end());
    }
}

}  // namespace detail

inline SequenceStats count_occurrences(const Dataset& ds, int max_len, const CountOptions& opt = {}) {
    require(max_len >= 0, Errc::InvalidArgument, "max_len must be >= 0");
    require(max_len <= ds.rollout_length() - 2, Errc::InvalidArgument,
            "max_len " + std::to_string(max_len) + " exceeds rollout length - 2");
    require(opt.threads >= 1, Errc::InvalidArgument, "threads must be >= 1");
    for (const auto& r : ds.rollouts)
        for (int label : r.theta)
            require(label >= 1 && label <= ds.s, Errc::LabelOutOfRange, "switch label outside 1..s");

    const int chunks = (ds.num_rollouts() + detail::kCountChunk - 1) / detail::kCountChunk;
    std::vector<SequenceStats> parts(static_cast<std::size_t>(std::max(chunks, 1)));
    auto work = [&](int c) {
        parts[static_cast<std::size_t>(c)] = detail::empty_stats(ds, max_len, opt.keep_occurrences);
        const int first = c * detail::kCountChunk;
        detail::count_range(ds, first, std::min(ds.num_rollouts(), first + detail::kCountChunk),
                            parts[static_cast<std::size_t>(c)]);
    };
    const int workers = std::min(opt.threads, std::max(chunks, 1));
    if (workers <= 1) {
        for (int c = 0; c < std::max(chunks, 1); ++c) work(c);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int c = w; c < chunks; c += workers) work(c);
            });
    }

    SequenceStats out = std::move(parts[0]);
    for (std::size_t c = 1; c < parts.size(); ++c) detail::merge_into(out, std::move(parts[c]));
    return out;
}

// count / (N_S * admissible starts); the empty sequence is certain.
inline double estimate_sequence_probability(const SequenceStats& st, SeqIndex idx) {
    require(idx < st.size(), Errc::InvalidArgument, "sequence outside the counted range");
    if (idx == 0) return 1.0;
    const int len = sequence_length_of_index(st.s, idx);
    const double slots = static_cast<double>(st.num_rollouts) * admissible_positions(st.rollout_length, len);
    return slots > 0.0 ? static_cast<double>(st.counts[idx]) / slots : 0.0;
}

inline double estimate_sequence_probability(const SequenceStats& st, const SwitchSequence& seq) {
    require(seq.length() <= st.max_len, Errc::InvalidArgument, "sequence longer than the counted range");
    return estimate_sequence_probability(st, sequence_index(seq, st.s));
}

// Moore-Penrose inverse of a symmetric PSD matrix, dropping eigenvalues
// at or below 1e-10 of the largest.
inline Eigen::MatrixXd psd_pinv(const Eigen::MatrixXd& G) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (G + G.transpose()));
    const Eigen::VectorXd lam = es.eigenvalues();
    const double top = lam.size() > 0 ? lam.maxCoeff() : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (top > 0.0 && lam(i) > 1e-10 * top) inv(i) = 1.0 / lam(i);
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// Theta_hat = (sum y u^T)(sum u u^T)^+ from the accumulated moments.
inline Eigen::MatrixXd ols_markov_estimate(const SequenceStats& st, SeqIndex idx) {
    require(idx < st.size(), Errc::InvalidArgument, "sequence outside the counted range");
    if (st.counts[idx] == 0)
        throw Error(Errc::NoOccurrences, "sequence " + to_string(sequence_from_index(st.s, idx)) + " never occurs");
    return st.yu[idx] * psd_pinv(st.uu[idx]);
}

// Same estimator recomputed from the raw occurrence list against the data.
inline Eigen::MatrixXd ols_markov_estimate(const Dataset& ds, const SequenceStats& st, const SwitchSequence& seq) {
    require(seq.length() <= st.max_len, Errc::InvalidArgument, "sequence longer than the counted range");
    const SeqIndex idx = sequence_index(seq, st.s);
    if (!st.has_occurrences()) return ols_markov_estimate(st, idx);
    if (st.counts[idx] == 0) throw Error(Errc::NoOccurrences, "sequence " + to_string(seq) + " never occurs");
    const int l = seq.length();
    Eigen::MatrixXd yu = Eigen::MatrixXd::Zero(ds.p, ds.m);
    Eigen::MatrixXd uu = Eigen::MatrixXd::Zero(ds.m, ds.m);
    for (const Occurrence& o : st.occurrences[idx]) {
        const Rollout& r = ds.rollouts[static_cast<std::size_t>(o.rollout)];
        const auto u = r.u.col(o.start - 2);
        yu.noalias() += r.y.col(o.start + l - 1) * u.transpose();
        uu.noalias() += u * u.transpose();
    }
    return yu * psd_pinv(uu);
}

// Scarcity threshold c * (m + n_ref * log(2s / delta)); n_ref < 0 means "use N".
struct ThresholdRule {
    double c = 2.0;
    double delta = 0.05;
    int n_ref = -1;

    [[nodiscard]] double value(int m, int s, int N) const {
        const int n = n_ref < 0 ? N : n_ref;
        return c * (m + n * std::log(2.0 * s / delta));
    }
};

struct HankelEstimate {
    BlockHankel hankel;
    int N = 0;
    int p = 1;
    int m = 1;
    int s = 1;
    int num_rollouts = 0;
    double threshold = 0.0;
    // indexed by L(seq) over all sequences of length <= N
    std::vector<std::uint64_t> counts;
    std::vector<Eigen::MatrixXd> theta_hat;  // zero when never observed
    std::vector<double> p_hat;
    std::vector<std::uint8_t> zeroed;

    [[nodiscard]] std::vector<double> mode_probabilities() const {
        std::vector<double> out;
        for (int i = 1; i <= s; ++i) out.push_back(p_hat[static_cast<std::size_t>(i)]);
        return out;
    }
    [[nodiscard]] std::size_t zeroed_count() const {
        return static_cast<std::size_t>(std::count(zeroed.begin(), zeroed.end(), std::uint8_t{1}));
    }
};

// Block (row, col) with len(row) + len(col) <= N is sqrt(p_hat) Theta_hat of
// the concatenation, or zero when that sequence is zeroed.
inline void fill_hankel_from_tables(HankelEstimate& est) {
    est.hankel = BlockHankel(est.N, est.p, est.m, est.s);
    const auto nb = static_cast<SeqIndex>(est.hankel.blocks());
    std::vector<int> len(nb);
    for (SeqIndex i = 0; i < nb; ++i) len[i] = sequence_length_of_index(est.s, i);
    for (SeqIndex r = 0; r < nb; ++r) {
        for (SeqIndex c = 0; c < nb; ++c) {
            if (len[r] + len[c] > est.N) continue;
            est.hankel.set_filled(r, c, true);
            const SeqIndex comb = concat_index(r, c, len[c], est.s);
            if (est.zeroed[comb]) continue;
            est.hankel.block(r, c) = std::sqrt(est.p_hat[comb]) * est.theta_hat[comb];
        }
    }
}

inline HankelEstimate assemble_hankel_estimate(const SequenceStats& st, int N, const ThresholdRule& rule = {}) {
    require(N >= 0, Errc::InvalidArgument, "Hankel size N must be >= 0");
    require(N <= st.max_len, Errc::InvalidArgument, "Hankel size exceeds the counted sequence range");
    require(rule.delta > 0.0 && rule.delta < 1.0, Errc::InvalidArgument, "delta must lie in (0, 1)");
    HankelEstimate est;
    est.N = N;
    est.p = st.p;
    est.m = st.m;
    est.s = st.s;
    est.num_rollouts = st.num_rollouts;
    est.threshold = rule.value(st.m, st.s, N);
    const auto total = static_cast<std::size_t>(sequence_count(st.s, N));
    est.counts.assign(st.counts.begin(), st.counts.begin() + static_cast<std::ptrdiff_t>(total));
    est.theta_hat.assign(total, Eigen::MatrixXd::Zero(st.p, st.m));
    est.p_hat.assign(total, 0.0);
    est.zeroed.assign(total, 0);
    for (SeqIndex i = 0; i < total; ++i) {
        est.p_hat[i] = estimate_sequence_probability(st, i);
        if (st.counts[i] > 0) est.theta_hat[i] = ols_markov_estimate(st, i);
        // the empty sequence is never zeroed
        if (i > 0 && static_cast<double>(st.counts[i]) < est.threshold) est.zeroed[i] = 1;
    }
    fill_hankel_from_tables(est);
    return est;
}

inline HankelEstimate assemble_hankel_estimate(const Dataset& ds, int N, const ThresholdRule& rule = {}) {
    return assemble_hankel_estimate(count_occurrences(ds, N), N, rule);
}

}  // namespace slsid
