#pragma once

// Rollout generation. Each rollout t draws from its own generator seeded by
// (seed, t), so the dataset does not depend on how rollouts are scheduled.
//
// Per rollout, with x_1 = eta_1 (x_0 = 0):
//   y_k = C x_k + w_k,   x_{k+1} = A_{theta_k} x_k + B u_k + eta_{k+1},   k = 1..N.

#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "slsid/errors.hpp"
#include "slsid/model.hpp"

namespace slsid {

struct SimConfig {
    int num_rollouts = 1;    // N_S
    int rollout_length = 1;  // N
    double input_std = 1.0;  // fixed: inputs are N(0, I)
    double process_noise_std = 0.0;
    double output_noise_std = 0.0;
    std::uint64_t seed = 0;
    bool keep_states = false;
    int threads = 1;

    void validate() const {
        require(num_rollouts >= 1, Errc::ConfigError, "N_S must be >= 1");
        require(rollout_length >= 1, Errc::ConfigError, "rollout length must be >= 1");
        require(input_std == 1.0, Errc::ConfigError, "inputs must be isotropic with unit variance");
        require(process_noise_std >= 0.0 && output_noise_std >= 0.0, Errc::ConfigError,
                "noise standard deviations must be >= 0");
        require(threads >= 1, Errc::ConfigError, "threads must be >= 1");
    }

    // Variance proxies above 1 leave the subg(1) regime the error bounds assume.
    [[nodiscard]] bool noise_above_unit_proxy() const {
        return process_noise_std > 1.0 || output_noise_std > 1.0;
    }
};

struct Rollout {
    Eigen::MatrixXd u;       // m x N, column k-1 is u_k
    Eigen::MatrixXd y;       // p x N
    std::vector<int> theta;  // N labels in 1..s
    Eigen::MatrixXd x;       // n x N, only with keep_states
};

struct Dataset {
    SimConfig config;
    int p = 1;
    int m = 1;
    int s = 1;
    std::vector<Rollout> rollouts;

    [[nodiscard]] int num_rollouts() const noexcept { return static_cast<int>(rollouts.size()); }
    [[nodiscard]] int rollout_length() const noexcept { return config.rollout_length; }
};

inline std::mt19937_64 rollout_engine(std::uint64_t seed, std::uint64_t rollout) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(rollout), static_cast<std::uint32_t>(rollout >> 32),
                      0x534c5331u};
    return std::mt19937_64(seq);
}

inline Rollout simulate_rollout(const SlsModel& model, const SimConfig& cfg, std::uint64_t index) {
    const int N = cfg.rollout_length, n = model.n(), p = model.p(), m = model.m();
    auto rng = rollout_engine(cfg.seed, index);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto probs = model.probabilities();
    std::discrete_distribution<int> pick(probs.begin(), probs.end());

    Rollout r;
    r.u.resize(m, N);
    r.y.resize(p, N);
    r.theta.resize(static_cast<std::size_t>(N));
    if (cfg.keep_states) r.x.resize(n, N);

    auto noise = [&](int rows, double sd) {
        Eigen::VectorXd v(rows);
        for (int i = 0; i < rows; ++i) v(i) = gauss(rng);
        return Eigen::VectorXd(sd * v);
    };

    Eigen::VectorXd x = noise(n, cfg.process_noise_std);
    for (int k = 0; k < N; ++k) {
        const int label = pick(rng) + 1;
        const Eigen::VectorXd u = noise(m, 1.0);
        const Eigen::VectorXd w = noise(p, cfg.output_noise_std);
        const Eigen::VectorXd eta = noise(n, cfg.process_noise_std);
        r.theta[static_cast<std::size_t>(k)] = label;
        r.u.col(k) = u;
        r.y.col(k) = model.C * x + w;
        if (cfg.keep_states) r.x.col(k) = x;
        x = model.A(label) * x + model.B * u + eta;
    }
    return r;
}

inline Dataset simulate(const SlsModel& model, const SimConfig& cfg) {
    model.validate();
    cfg.validate();
    Dataset ds;
    ds.config = cfg;
    ds.p = model.p();
    ds.m = model.m();
    ds.s = model.s();
    ds.rollouts.resize(static_cast<std::size_t>(cfg.num_rollouts));

    const int workers = std::min(cfg.threads, cfg.num_rollouts);
    auto run = [&](int w) {
        for (int t = w; t < cfg.num_rollouts; t += workers)
            ds.rollouts[static_cast<std::size_t>(t)] = simulate_rollout(model, cfg, static_cast<std::uint64_t>(t));
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    }
    return ds;
}

inline std::vector<double> empirical_switch_frequencies(const Dataset& ds) {
    require(!ds.rollouts.empty(), Errc::InvalidArgument, "dataset has no rollouts");
    std::vector<double> freq(static_cast<std::size_t>(ds.s), 0.0);
    std::size_t total = 0;
    for (const auto& r : ds.rollouts) {
        for (int label : r.theta) {
            require(label >= 1 && label <= ds.s, Errc::LabelOutOfRange, "switch label outside 1..s");
            freq[static_cast<std::size_t>(label - 1)] += 1.0;
            ++total;
        }
    }
    for (auto& f : freq) f /= static_cast<double>(total);
    return freq;
}

}  // namespace slsid
