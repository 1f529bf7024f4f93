#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "slsid/errors.hpp"
#include "slsid/model.hpp"

namespace slsid {

inline constexpr double kMaxL2Enumeration = 2e5;

namespace detail {

inline void require_same_probabilities(const SlsModel& a, const SlsModel& b) {
    require(a.s() == b.s(), Errc::InvalidArgument, "models must have the same mode count");
    for (int i = 1; i <= a.s(); ++i)
        if (std::abs(a.prob(i) - b.prob(i)) > 1e-12)
            throw Error(Errc::ProbMismatch, "mode probability " + std::to_string(i) + " differs");
}

// Noiseless input-to-output map over t = 1..T for one switch path, x_1 = 0:
// block (t, j) = C A_{theta_{t-1}} ... A_{theta_{j+1}} B for j < t.
// path[k] holds theta_k for k = 2..T-1 (indices 0, 1 unused).
inline Eigen::MatrixXd io_map(const SlsModel& model, const std::vector<int>& path, int T) {
    const int p = model.p(), m = model.m();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p * T, m * T);
    for (int j = 1; j < T; ++j) {
        Eigen::MatrixXd x = model.B;  // response of x_{j+1} to u_j
        for (int t = j + 1; t <= T; ++t) {
            G.block(p * (t - 1), m * (j - 1), p, m) = model.C * x;
            if (t < T) x = model.A(path[t]) * x;
        }
    }
    return G;
}

}  // namespace detail

// Finite-horizon stochastic L2 distance
//   sqrt( sup_{||u||_2 <= 1} E_theta ||y_1 - y_2||^2 )  over t = 1..T,
// with the expectation taken exactly over every switch path.
inline double finite_l2_distance(const SlsModel& m1, const SlsModel& m2, int T) {
    require(T >= 1, Errc::InvalidArgument, "horizon must be >= 1");
    require(m1.p() == m2.p() && m1.m() == m2.m(), Errc::InvalidArgument, "models must share p and m");
    detail::require_same_probabilities(m1, m2);
    const int s = m1.s();
    const int free_steps = std::max(0, T - 2);
    if (std::pow(static_cast<double>(s), free_steps) > kMaxL2Enumeration)
        throw Error(Errc::HorizonTooLong, "exact expectation over s^(T-2) paths is too large");

    const int mT = m1.m() * T;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(mT, mT);
    std::vector<int> path(static_cast<std::size_t>(T) + 1, 1);
    while (true) {
        double prob = 1.0;
        for (int k = 2; k <= T - 1; ++k) prob *= m1.prob(path[k]);
        const Eigen::MatrixXd D = detail::io_map(m1, path, T) - detail::io_map(m2, path, T);
        M.noalias() += prob * D.transpose() * D;
        // odometer over theta_2..theta_{T-1}
        int k = 2;
        while (k <= T - 1 && path[k] == s) path[k++] = 1;
        if (k > T - 1) break;
        ++path[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace slsid
