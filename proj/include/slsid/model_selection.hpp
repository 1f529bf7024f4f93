#pragma once

// Data-driven choice of the usable rollout length N_up and of the Hankel
// size N_hat, plus the constants they are built from.

#include <cmath>
#include <limits>
#include <vector>

#include "slsid/detail/json_util.hpp"
#include "slsid/estimation.hpp"
#include "slsid/gramians.hpp"
#include "slsid/hankel.hpp"
#include "slsid/model.hpp"

namespace slsid {

struct SelectionConstants {
    double delta = 0.05;
    double beta = 1.0;
    int m = 1;
    int p = 1;
    int s = 1;
    double c_threshold = 2.0;
    double c1 = 1.0;  // multiplies alpha(d)
    double c2 = 2.0;  // multiplies alpha(l)

    void validate() const {
        require(delta > 0.0 && delta < 1.0, Errc::ConfigError, "delta must lie in (0, 1)");
        require(beta > 0.0, Errc::ConfigError, "beta must be > 0");
        require(m >= 1 && p >= 1 && s >= 1, Errc::ConfigError, "dimensions must be >= 1");
        require(c_threshold > 0.0 && c1 >= 0.0 && c2 >= 0.0, Errc::ConfigError, "constants must be positive");
    }
};

// Number of sequences of length 0..d, as a real.
inline double s_d(int s, int d) {
    if (s == 1) return d + 1.0;
    return (std::pow(static_cast<double>(s), d + 1) - 1.0) / (s - 1.0);
}

inline double mu_of(int d, const SelectionConstants& k) {
    require(d >= 1, Errc::InvalidArgument, "d must be >= 1");
    return std::sqrt(static_cast<double>(d)) *
           (d * std::log(3.0 * k.s / k.delta) + k.p * std::log(5.0 * k.beta * d) + k.m);
}

inline double alpha_of(int d, double num_rollouts, const SelectionConstants& k) {
    require(d >= 1, Errc::InvalidArgument, "d must be >= 1");
    require(num_rollouts >= 1.0, Errc::InvalidArgument, "N_S must be >= 1");
    return mu_of(d, k) * std::sqrt(2.0 * s_d(k.s, d) * d * d / num_rollouts);
}

inline double delta_s(double rho_max, int s) {
    require(rho_max > 0.0 && rho_max < 1.0, Errc::InvalidArgument, "rho_max must lie in (0, 1)");
    require(s >= 1, Errc::InvalidArgument, "s must be >= 1");
    return std::log(1.0 / rho_max) / std::log(s / rho_max);
}

// Per-length scarcity threshold c (m + log(2 s_l / delta)).
inline double n_up_threshold(int l, const SelectionConstants& k) {
    return k.c_threshold * (k.m + std::log(2.0 * s_d(k.s, l) / k.delta));
}

struct NUpResult {
    int n_up = 0;
    bool censored = false;
};

// Least l whose every length-l sequence is scarce, minus one; censored at the
// counted range when no such l exists.
inline NUpResult compute_n_up(const SequenceStats& st, const SelectionConstants& k) {
    for (int l = 1; l <= st.max_len; ++l) {
        const double thr = n_up_threshold(l, k);
        const SeqIndex first = sequence_count(st.s, l - 1);
        const SeqIndex last = sequence_count(st.s, l);
        bool all_scarce = true;
        for (SeqIndex i = first; i < last && all_scarce; ++i)
            if (static_cast<double>(st.counts[i]) >= thr) all_scarce = false;
        if (all_scarce) return {l - 1, false};
    }
    return {st.max_len, true};
}

// Right side of the logarithmic growth statement for N_up:
//   (log 2m + log N_S + log log(1/delta)) / log(1/p_max).
inline double n_up_growth_rhs(double num_rollouts, double p_max, const SelectionConstants& k) {
    require(p_max > 0.0 && p_max < 1.0, Errc::InvalidArgument, "p_max must lie in (0, 1)");
    return (std::log(2.0 * k.m) + std::log(num_rollouts) + std::log(std::log(1.0 / k.delta))) /
           std::log(1.0 / p_max);
}

// N_up / log N_up >= rhs; false for N_up <= 1 where the left side is undefined.
inline bool n_up_growth_holds(int n_up, double num_rollouts, double p_max, const SelectionConstants& k) {
    if (n_up <= 1) return false;
    return n_up / std::log(static_cast<double>(n_up)) >= n_up_growth_rhs(num_rollouts, p_max, k);
}

struct SelectionResult {
    int n_hat = 1;
    std::vector<double> alpha;             // alpha(l), l = 1..L
    std::vector<std::vector<double>> diff;  // diff[l-1][d-1] = ||H^(d) - H^(l)||_F for d >= l
};

// estimates[i] is the Hankel estimate of size i + 1. Returns the least l with
//   ||H^(d) - H^(l)||_F <= beta (c1 alpha(d) + c2 alpha(l))   for all l <= d <= L.
// l = L always qualifies, so the result is at most L.
inline SelectionResult select_n_hat(const std::vector<HankelEstimate>& estimates, double num_rollouts,
                                    const SelectionConstants& k) {
    require(!estimates.empty(), Errc::InvalidArgument, "need at least one Hankel estimate");
    const int L = static_cast<int>(estimates.size());
    for (int i = 0; i < L; ++i) {
        const auto& e = estimates[static_cast<std::size_t>(i)];
        require(e.N == i + 1, Errc::InvalidArgument, "estimates must have sizes 1..L in order");
        require(e.p == estimates[0].p && e.m == estimates[0].m && e.s == estimates[0].s, Errc::InvalidArgument,
                "estimates must share (p, m, s)");
    }
    SelectionResult out;
    for (int l = 1; l <= L; ++l) out.alpha.push_back(alpha_of(l, num_rollouts, k));
    out.diff.assign(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(L), 0.0));
    for (int l = 1; l <= L; ++l)
        for (int d = l + 1; d <= L; ++d)
            out.diff[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(d - 1)] =
                padded_frobenius_distance(estimates[static_cast<std::size_t>(d - 1)].hankel,
                                          estimates[static_cast<std::size_t>(l - 1)].hankel);
    for (int l = 1; l < L; ++l) {
        bool ok = true;
        for (int d = l; d <= L && ok; ++d) {
            const double bound =
                k.beta * (k.c1 * out.alpha[static_cast<std::size_t>(d - 1)] + k.c2 * out.alpha[static_cast<std::size_t>(l - 1)]);
            if (out.diff[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(d - 1)] > bound) ok = false;
        }
        if (ok) {
            out.n_hat = l;
            return out;
        }
    }
    out.n_hat = L;
    return out;
}

inline constexpr int kMaxOracleN = 200;

// Least N with beta alpha(N) >= sqrt(||H^(N) - H^(inf)||_F^2), the tail
// evaluated exactly from the true model.
inline int oracle_n_star(const SlsModel& model, double num_rollouts, const SelectionConstants& k) {
    if (!is_ms_stable(model)) throw Error(Errc::NotStable, "oracle N* needs a mean-square stable model");
    for (int N = 1; N <= kMaxOracleN; ++N)
        if (k.beta * alpha_of(N, num_rollouts, k) >= std::sqrt(truncation_error_sq(model, N))) return N;
    throw Error(Errc::InvalidArgument, "oracle N* exceeds the scan limit");
}

struct SelectionReport {
    NUpResult n_up;
    SelectionResult selection;
    double delta_s = std::numeric_limits<double>::quiet_NaN();  // NaN when unknown
    std::vector<double> thresholds;  // n_up_threshold(l), l = 1..max_len
    double hankel_threshold = 0.0;
};

inline detail::json selection_report_to_json(const SelectionReport& r) {
    using detail::json;
    json diff = json::array();
    const auto& d = r.selection.diff;
    for (std::size_t l = 0; l < d.size(); ++l)
        for (std::size_t j = l + 1; j < d.size(); ++j) diff.push_back({{"l", l + 1}, {"d", j + 1}, {"frobenius", d[l][j]}});
    json j{{"N_up", r.n_up.n_up},
           {"censored", r.n_up.censored},
           {"N_hat", r.selection.n_hat},
           {"alpha", r.selection.alpha},
           {"differences", std::move(diff)},
           {"thresholds", {{"n_up", r.thresholds}, {"hankel", r.hankel_threshold}}}};
    j["delta_s"] = std::isnan(r.delta_s) ? json(nullptr) : json(r.delta_s);
    return j;
}

}  // namespace slsid
