#pragma once

// Built-in models: the shift/decay family with a low effective order, random
// mean-square stable models, and the small fixed models used by tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "slsid/errors.hpp"
#include "slsid/model.hpp"

namespace slsid {

// s = 2, p_i = 1/2, B = e_n, C = e_n^T. A_1 = gamma e_n e_n^T; A_2 is the
// upper shift with a in its bottom-left corner.
inline SlsModel example1(int n, double gamma, double a) {
    require(n >= 2, Errc::InvalidArgument, "example1 needs n >= 2");
    require(std::abs(gamma) < 1.0, Errc::InvalidArgument, "example1 needs |gamma| < 1");
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 1);
    B(n - 1, 0) = 1.0;
    Eigen::MatrixXd A1 = Eigen::MatrixXd::Zero(n, n);
    A1(n - 1, n - 1) = gamma;
    Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) A2(i, i + 1) = 1.0;
    A2(n - 1, 0) = a;
    return make_model(B.transpose(), {A1, A2}, {0.5, 0.5}, B);
}

struct RandomModelSpec {
    int n = 2;
    int s = 2;
    int p = 1;
    int m = 1;
    double target_rho = 0.5;  // mean-square spectral radius after scaling
    std::uint64_t seed = 0;
    bool uniform_probabilities = true;  // otherwise drawn from a flat Dirichlet
};

// Gaussian A_i, B, C. ms_spectral_radius is homogeneous of degree 2 in a
// common scale of the A_i, so one rescale hits the target exactly.
inline SlsModel random_stable(const RandomModelSpec& spec) {
    require(spec.n >= 1 && spec.s >= 1 && spec.p >= 1 && spec.m >= 1, Errc::InvalidArgument,
            "random model dimensions must be >= 1");
    require(spec.target_rho > 0.0 && spec.target_rho < 1.0, Errc::InvalidArgument, "target_rho must lie in (0, 1)");
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32), 0x4d4f444cu};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](int r, int c) {
        Eigen::MatrixXd M(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) M(i, j) = gauss(rng);
        return M;
    };

    std::vector<double> probs(static_cast<std::size_t>(spec.s), 1.0 / spec.s);
    if (!spec.uniform_probabilities) {
        std::exponential_distribution<double> expo(1.0);
        double total = 0.0;
        for (auto& q : probs) total += (q = 0.05 + expo(rng));
        for (auto& q : probs) q /= total;
        double rest = 1.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) rest -= probs[i];
        probs.back() = rest;
    }

    std::vector<Eigen::MatrixXd> As;
    for (int i = 0; i < spec.s; ++i) As.push_back(draw(spec.n, spec.n) / std::sqrt(static_cast<double>(spec.n)));
    const Eigen::MatrixXd B = draw(spec.n, spec.m);
    const Eigen::MatrixXd C = draw(spec.p, spec.n);
    SlsModel model = make_model(C, As, probs, B);
    const double rho0 = ms_spectral_radius(model);
    require(rho0 > 0.0, Errc::InvalidArgument, "degenerate random draw");
    const double scale = std::sqrt(spec.target_rho / rho0);
    for (auto& md : model.modes) md.A *= scale;
    return model;
}

// Two-mode, second-order single-input single-output model with fast decay.
inline SlsModel test_model() {
    Eigen::MatrixXd A1(2, 2), A2(2, 2), B(2, 1), C(1, 2);
    A1 << 0.3, 0.1, 0.0, 0.2;
    A2 << -0.2, 0.0, 0.1, 0.25;
    B << 1.0, 0.5;
    C << 1.0, -1.0;
    return make_model(C, {A1, A2}, {0.5, 0.5}, B);
}

// Single-mode counterpart of test_model (an LTI system).
inline SlsModel test_model_lti() {
    Eigen::MatrixXd A(2, 2), B(2, 1), C(1, 2);
    A << 0.3, 0.1, 0.0, 0.2;
    B << 1.0, 0.5;
    C << 1.0, -1.0;
    return make_model(C, {A}, {1.0}, B);
}

}  // namespace slsid
