#pragma once

// Switched linear system M = (C, {A_i, p_i}, B):
//
//   x_{k+1} = A_{theta_k} x_k + B u_k + eta_{k+1},   y_k = C x_k + w_k,
//
// with theta_k i.i.d. over {1..s}, P(theta_k = i) = p_i.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "slsid/errors.hpp"
#include "slsid/sequence.hpp"

namespace slsid {

struct Mode {
    Eigen::MatrixXd A;
    double prob = 0.0;
};

struct SlsModel {
    Eigen::MatrixXd C;  // p x n
    Eigen::MatrixXd B;  // n x m
    std::vector<Mode> modes;

    [[nodiscard]] int n() const noexcept { return static_cast<int>(B.rows()); }
    [[nodiscard]] int p() const noexcept { return static_cast<int>(C.rows()); }
    [[nodiscard]] int m() const noexcept { return static_cast<int>(B.cols()); }
    [[nodiscard]] int s() const noexcept { return static_cast<int>(modes.size()); }

    [[nodiscard]] const Eigen::MatrixXd& A(int label) const { return modes.at(label - 1).A; }
    [[nodiscard]] double prob(int label) const { return modes.at(label - 1).prob; }

    [[nodiscard]] std::vector<double> probabilities() const {
        std::vector<double> out;
        out.reserve(modes.size());
        for (const auto& md : modes) out.push_back(md.prob);
        return out;
    }

    void validate() const {
        require(s() >= 1, Errc::InvalidArgument, "model needs at least one mode");
        require(C.cols() == B.rows(), Errc::InvalidArgument, "C is p x n and B is n x m");
        double total = 0.0;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            const auto& md = modes[i];
            require(md.A.rows() == n() && md.A.cols() == n(), Errc::InvalidArgument,
                    "A_" + std::to_string(i + 1) + " must be n x n");
            require(md.prob > 0.0, Errc::InvalidArgument,
                    "p_" + std::to_string(i + 1) + " must be positive");
            total += md.prob;
        }
        require(std::abs(total - 1.0) <= 1e-12, Errc::InvalidArgument,
                "mode probabilities must sum to 1");
    }
};

inline SlsModel make_model(Eigen::MatrixXd C, std::vector<Eigen::MatrixXd> As, std::vector<double> probs,
                           Eigen::MatrixXd B) {
    require(As.size() == probs.size(), Errc::InvalidArgument, "one probability per mode");
    SlsModel model{std::move(C), std::move(B), {}};
    for (std::size_t i = 0; i < As.size(); ++i) model.modes.push_back({std::move(As[i]), probs[i]});
    model.validate();
    return model;
}

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// sum_i p_i A_i (x) A_i; acts on vec(X) as X -> sum_i p_i A_i X A_i^T.
inline Eigen::MatrixXd second_moment_operator(const SlsModel& model) {
    const int n = model.n();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
    for (const auto& md : model.modes) K += md.prob * kron(md.A, md.A);
    return K;
}

inline double spectral_radius(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double ms_spectral_radius(const SlsModel& model) {
    model.validate();
    return spectral_radius(second_moment_operator(model));
}

inline bool is_ms_stable(const SlsModel& model) { return ms_spectral_radius(model) < 1.0; }

inline void check_labels(const SlsModel& model, const SwitchSequence& seq) {
    for (int label : seq.labels)
        if (label < 1 || label > model.s())
            throw Error(Errc::LabelOutOfRange,
                        "label " + std::to_string(label) + " outside 1.." + std::to_string(model.s()));
}

// A_seq = A_{labels[0]} * ... * A_{labels.back()}; later switches act on the left.
inline Eigen::MatrixXd mode_product(const SlsModel& model, const SwitchSequence& seq) {
    check_labels(model, seq);
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(model.n(), model.n());
    for (int label : seq.labels) out = out * model.A(label);
    return out;
}

inline Eigen::MatrixXd markov_parameter(const SlsModel& model, const SwitchSequence& seq) {
    return model.C * mode_product(model, seq) * model.B;
}

inline double sequence_probability(const SlsModel& model, const SwitchSequence& seq) {
    check_labels(model, seq);
    double p = 1.0;
    for (int label : seq.labels) p *= model.prob(label);
    return p;
}

// Probability and mode product of every sequence of length 0..max_len, in
// index order, built by extending each prefix with one earlier switch.
struct SequenceTable {
    int s = 1;
    int max_len = 0;
    std::vector<int> length;
    std::vector<double> prob;
    std::vector<Eigen::MatrixXd> product;

    [[nodiscard]] std::size_t size() const noexcept { return prob.size(); }
};

inline SequenceTable sequence_table(const SlsModel& model, int max_len) {
    require(max_len >= 0, Errc::InvalidArgument, "max_len must be >= 0");
    const int s = model.s();
    const auto count = sequence_count(s, max_len);
    SequenceTable t;
    t.s = s;
    t.max_len = max_len;
    t.length.resize(count);
    t.prob.resize(count);
    t.product.resize(count);
    t.length[0] = 0;
    t.prob[0] = 1.0;
    t.product[0] = Eigen::MatrixXd::Identity(model.n(), model.n());
    for (SeqIndex idx = 1; idx < count; ++idx) {
        const auto [prefix, last] = split_last(idx, s);
        t.length[idx] = t.length[prefix] + 1;
        t.prob[idx] = t.prob[prefix] * model.prob(last);
        t.product[idx] = t.product[prefix] * model.A(last);
    }
    return t;
}

// sup over sequences up to max_len of max(||C A_seq B||_F, ||C A_seq||_F).
inline double energy_bound(const SlsModel& model, int max_len = 12) {
    const int s = model.s();
    double best = 0.0;
    // depth-first over sequences so memory stays O(max_len n^2)
    std::vector<Eigen::MatrixXd> stack(max_len + 1);
    stack[0] = model.C;
    std::vector<int> label(max_len + 1, 0);
    int depth = 0;
    best = std::max({best, model.C.norm(), (model.C * model.B).norm()});
    while (depth >= 0) {
        if (depth == max_len || label[depth] == s) {
            label[depth] = 0;
            --depth;
            continue;
        }
        const int next = ++label[depth];
        stack[depth + 1] = stack[depth] * model.A(next);
        best = std::max({best, stack[depth + 1].norm(), (stack[depth + 1] * model.B).norm()});
        ++depth;
    }
    return best;
}

inline SlsModel similarity_transform(const SlsModel& model, const Eigen::MatrixXd& S) {
    const Eigen::MatrixXd Sinv = S.inverse();
    SlsModel out = model;
    out.C = model.C * Sinv;
    out.B = S * model.B;
    for (auto& md : out.modes) md.A = S * md.A * Sinv;
    return out;
}

}  // namespace slsid
