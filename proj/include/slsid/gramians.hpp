#pragma once

// Reachability/observability Gramians of a mean-square stable SLS and the
// balanced truncation built from them.
//
//   P = B B^T + sum_i p_i A_i P A_i^T,   Q = C^T C + sum_i p_i A_i^T Q A_i.
//
// These are R R^T and O^T O for the factorization H^(inf) = O R, so the
// Hankel singular values are sqrt(eig(P Q)).

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "slsid/errors.hpp"
#include "slsid/model.hpp"

namespace slsid {

inline constexpr double kRankCutoff = 1e-10;

struct GramianPair {
    Eigen::MatrixXd P;  // reachability
    Eigen::MatrixXd Q;  // observability
};

namespace detail {

inline Eigen::VectorXd vec(const Eigen::MatrixXd& X) {
    return Eigen::Map<const Eigen::VectorXd>(X.data(), X.size());
}

inline Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index n) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), n, n);
}

// X -> sum_i p_i A_i X A_i^T (transpose = true applies A_i^T X A_i)
inline Eigen::MatrixXd lyapunov_map(const SlsModel& model, const Eigen::MatrixXd& X, bool transpose) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), X.cols());
    for (const auto& md : model.modes) {
        if (transpose)
            out.noalias() += md.prob * md.A.transpose() * X * md.A;
        else
            out.noalias() += md.prob * md.A * X * md.A.transpose();
    }
    return out;
}

inline double relative_residual(const SlsModel& model, const Eigen::MatrixXd& X, const Eigen::MatrixXd& rhs,
                                bool transpose) {
    const double scale = std::max(X.norm(), rhs.norm());
    if (scale == 0.0) return 0.0;
    return (X - rhs - lyapunov_map(model, X, transpose)).norm() / scale;
}

inline Eigen::MatrixXd solve_stationary(const SlsModel& model, const Eigen::MatrixXd& rhs, bool transpose) {
    const Eigen::Index n = rhs.rows();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
    for (const auto& md : model.modes)
        K += md.prob * (transpose ? kron(md.A.transpose(), md.A.transpose()) : kron(md.A, md.A));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n * n, n * n);
    Eigen::MatrixXd X = unvec(Eigen::FullPivLU<Eigen::MatrixXd>(I - K).solve(vec(rhs)), n);
    X = 0.5 * (X + X.transpose());
    if (X.allFinite() && relative_residual(model, X, rhs, transpose) < 1e-10) return X;

    // fallback: fixed-point iteration
    X = rhs;
    for (int it = 0; it < 100000; ++it) {
        Eigen::MatrixXd next = rhs + lyapunov_map(model, X, transpose);
        const double change = (next - X).norm() / std::max(next.norm(), 1e-300);
        X = std::move(next);
        if (!X.allFinite()) break;
        if (change < 1e-12) return 0.5 * (X + X.transpose());
    }
    throw Error(Errc::NotStable, "stationary Gramian equation did not converge");
}

}  // namespace detail

inline GramianPair gramians(const SlsModel& model) {
    const double rho = ms_spectral_radius(model);
    if (rho >= 1.0)
        throw Error(Errc::NotStable, "mean-square spectral radius " + std::to_string(rho) + " >= 1");
    return {detail::solve_stationary(model, model.B * model.B.transpose(), false),
            detail::solve_stationary(model, model.C.transpose() * model.C, true)};
}

// Square-root balancing. With P = Lp Lp^T, Q = Lq Lq^T and Lq^T Lp = W S Z^T:
//   S_bal = Lq W_r S_r^{-1/2}  satisfies  S_bal^T P S_bal = diag(sigma_r)
//   T     = Lp Z_r S_r^{-1/2}  is the state map x = T x_bal, T_left T = I_r.
// When P or Q is rank deficient only the first effective_rank directions
// are balanced and `rank_deficient` is set.
struct BalanceResult {
    Eigen::MatrixXd S;          // n x r, balancing transform (= T^{-T} when r = n)
    Eigen::MatrixXd T;          // n x r
    Eigen::MatrixXd T_left;     // r x n
    Eigen::VectorXd sigma;      // all n Hankel singular values, descending
    int effective_rank = 0;
    bool rank_deficient = false;
};

namespace detail {

inline Eigen::MatrixXd psd_sqrt_factor(const Eigen::MatrixXd& X) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (X + X.transpose()));
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal();
}

inline int effective_rank_of(const Eigen::VectorXd& sigma, double cutoff_rel) {
    if (sigma.size() == 0 || sigma(0) <= 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > cutoff_rel * sigma(0)) ++r;
    return r;
}

}  // namespace detail

inline BalanceResult balance_transform(const GramianPair& g, double cutoff_rel = kRankCutoff) {
    require(g.P.rows() == g.P.cols() && g.Q.rows() == g.Q.cols() && g.P.rows() == g.Q.rows(),
            Errc::InvalidArgument, "Gramians must be square and of equal size");
    const Eigen::MatrixXd Lp = detail::psd_sqrt_factor(g.P);
    const Eigen::MatrixXd Lq = detail::psd_sqrt_factor(g.Q);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lq.transpose() * Lp, Eigen::ComputeFullU | Eigen::ComputeFullV);

    BalanceResult out;
    out.sigma = svd.singularValues();
    const int n = static_cast<int>(g.P.rows());
    const int r = detail::effective_rank_of(out.sigma, cutoff_rel);
    out.effective_rank = r;
    out.rank_deficient = r < n;
    const Eigen::VectorXd inv_sqrt = out.sigma.head(r).cwiseSqrt().cwiseInverse();
    out.S = Lq * svd.matrixU().leftCols(r) * inv_sqrt.asDiagonal();
    out.T = Lp * svd.matrixV().leftCols(r) * inv_sqrt.asDiagonal();
    out.T_left = inv_sqrt.asDiagonal() * svd.matrixU().leftCols(r).transpose() * Lq.transpose();
    return out;
}

// r-order balanced truncation via the Gramians; orders above the effective
// rank clamp to it. Modes keep their original probabilities.
inline SlsModel balanced_truncate_exact(const SlsModel& model, int r) {
    require(r >= 1, Errc::InvalidArgument, "truncation order must be >= 1");
    const BalanceResult bal = balance_transform(gramians(model));
    const int k = std::min({r, model.n(), bal.effective_rank});
    const Eigen::MatrixXd T = bal.T.leftCols(k);
    const Eigen::MatrixXd Tl = bal.T_left.topRows(k);
    SlsModel out;
    out.C = model.C * T;
    out.B = Tl * model.B;
    for (const auto& md : model.modes) out.modes.push_back({Tl * md.A * T, md.prob});
    return out;
}

inline Eigen::VectorXd hankel_singular_values(const SlsModel& model) {
    return balance_transform(gramians(model)).sigma;
}

enum class BoundConstant {
    TwoSqrtS,  // 2 sqrt(s), the constant with a complete derivation
    TwoS,      // 2 s, the looser variant
};

// Stochastic L2 bound between a model and its r-order balanced truncation.
inline double bt_error_bound(const SlsModel& model, int r, BoundConstant constant = BoundConstant::TwoSqrtS) {
    require(r >= 0, Errc::InvalidArgument, "truncation order must be >= 0");
    const Eigen::VectorXd sigma = hankel_singular_values(model);
    double tail = 0.0;
    for (Eigen::Index l = r; l < sigma.size(); ++l) tail += sigma(l);
    const double s = model.s();
    return (constant == BoundConstant::TwoSqrtS ? 2.0 * std::sqrt(s) : 2.0 * s) * tail;
}

// ||H^(inf)||_F^2 restricted to combined lengths >= from_len:
//   sum_{k >= from_len} (k+1) sum_{|seq| = k} p_seq ||C A_seq B||_F^2,
// evaluated in closed form through the second-moment operator.
inline double hankel_tail_energy(const SlsModel& model, int from_len) {
    require(from_len >= 0, Errc::InvalidArgument, "from_len must be >= 0");
    const double rho = ms_spectral_radius(model);
    if (rho >= 1.0) throw Error(Errc::NotStable, "Hankel energy is infinite for rho >= 1");
    const int n = model.n();
    const Eigen::MatrixXd K = second_moment_operator(model);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n * n, n * n);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(I - K);
    const Eigen::VectorXd b = detail::vec(model.B * model.B.transpose());
    // sum_{j>=0} (j + f + 1) K^{f+j} b = K^f [ (I-K)^{-2} + f (I-K)^{-1} ] b
    Eigen::VectorXd kf = b;
    for (int i = 0; i < from_len; ++i) kf = K * kf;
    const Eigen::VectorXd once = lu.solve(kf);
    const Eigen::VectorXd twice = lu.solve(once);
    const Eigen::MatrixXd X = detail::unvec(twice + static_cast<double>(from_len) * once, n);
    return std::max(0.0, (model.C * X * model.C.transpose()).trace());
}

inline double hankel_infinite_energy(const SlsModel& model) { return hankel_tail_energy(model, 0); }

// ||H^(N) - H^(inf)||_F^2: the blocks with combined length > N.
inline double truncation_error_sq(const SlsModel& model, int N) { return hankel_tail_energy(model, N + 1); }

}  // namespace slsid
