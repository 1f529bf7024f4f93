#pragma once

// Reduced-order parameters from the top singular triplets of a Hankel-like
// matrix, the singular-gap diagnostic Gamma, and similarity-invariant model
// comparison.
//
// With H = U S V^T and r retained directions:
//   C_r = [U S^{1/2}]_{top p rows, :r}     B_r = [S^{1/2} V^T]_{:r, first m cols}
//   A_i = p_i^{-1/2} S_r^{-1/2} U_r^T H_i V_r S_r^{-1/2}
// where H_i is the mode-i row shift of H (block row r reads block row r:{i}).

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "slsid/errors.hpp"
#include "slsid/estimation.hpp"
#include "slsid/gramians.hpp"
#include "slsid/hankel.hpp"
#include "slsid/l2_distance.hpp"
#include "slsid/model.hpp"

namespace slsid {

struct SvdTruncation {
    Eigen::MatrixXd U;      // rows x effective_rank
    Eigen::VectorXd sigma;  // effective_rank values, descending, all above the cutoff
    Eigen::MatrixXd V;      // cols x effective_rank
    int effective_rank = 0;
};

inline int effective_rank(const Eigen::VectorXd& sigma, double cutoff_rel = kRankCutoff) {
    return detail::effective_rank_of(sigma, cutoff_rel);
}

inline SvdTruncation hankel_svd(const Eigen::MatrixXd& H, double cutoff_rel = kRankCutoff) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdTruncation out;
    out.effective_rank = effective_rank(svd.singularValues(), cutoff_rel);
    out.sigma = svd.singularValues().head(out.effective_rank);
    out.U = svd.matrixU().leftCols(out.effective_rank);
    out.V = svd.matrixV().leftCols(out.effective_rank);
    return out;
}

struct LearnOptions {
    // Embed the estimate in a 4x larger zero matrix before the SVD and take
    // the shifted row range of that padded matrix. Numerically equivalent to
    // the default, only slower.
    bool literal_padding = false;
    double cutoff_rel = kRankCutoff;
};

namespace detail {

// Block row r of the result is block row r*s + k of H, zero past the end.
inline Eigen::MatrixXd shift_rows(const Eigen::MatrixXd& H, int p, int s, int k, Eigen::Index out_blocks) {
    const Eigen::Index in_blocks = H.rows() / p;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p * out_blocks, H.cols());
    for (Eigen::Index r = 0; r < out_blocks; ++r) {
        const Eigen::Index src = r * s + k;
        if (src < in_blocks) out.middleRows(p * r, p) = H.middleRows(p * src, p);
    }
    return out;
}

}  // namespace detail

// Parameters of order r from a precomputed SVD of H; every order r' < r is a
// leading sub-block of the order-r result.
inline SlsModel parameters_from_svd(const Eigen::MatrixXd& H, const SvdTruncation& svd, int p, int m, int s,
                                    const std::vector<double>& probs, int r) {
    require(r >= 1, Errc::InvalidArgument, "order must be >= 1");
    if (r > svd.effective_rank)
        throw Error(Errc::OrderTooLarge, "order " + std::to_string(r) + " exceeds effective rank " +
                                             std::to_string(svd.effective_rank));
    require(static_cast<int>(probs.size()) == s, Errc::InvalidArgument, "need one probability per mode");
    for (int i = 0; i < s; ++i)
        if (!(probs[static_cast<std::size_t>(i)] > 0.0))
            throw Error(Errc::DegenerateProbability, "mode " + std::to_string(i + 1) + " has zero probability");

    const Eigen::MatrixXd Ur = svd.U.leftCols(r);
    const Eigen::MatrixXd Vr = svd.V.leftCols(r);
    const Eigen::VectorXd sq = svd.sigma.head(r).cwiseSqrt();
    const Eigen::VectorXd isq = sq.cwiseInverse();
    const Eigen::Index out_blocks = Ur.rows() / p;

    SlsModel model;
    model.C = (Ur * sq.asDiagonal()).topRows(p);
    model.B = (sq.asDiagonal() * Vr.transpose()).leftCols(m);
    for (int i = 1; i <= s; ++i) {
        const Eigen::MatrixXd Hi = detail::shift_rows(H, p, s, i, out_blocks);
        const double w = 1.0 / std::sqrt(probs[static_cast<std::size_t>(i - 1)]);
        model.modes.push_back({w * isq.asDiagonal() * (Ur.transpose() * Hi * Vr) * isq.asDiagonal(),
                               probs[static_cast<std::size_t>(i - 1)]});
    }
    return model;
}

inline SlsModel learn_parameters(const BlockHankel& H, const std::vector<double>& probs, int r,
                                 const LearnOptions& opt = {}) {
    if (!opt.literal_padding) return parameters_from_svd(H.data, hankel_svd(H.data, opt.cutoff_rel), H.p, H.m, H.s, probs, r);
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(4 * H.data.rows(), 4 * H.data.cols());
    padded.topLeftCorner(H.data.rows(), H.data.cols()) = H.data;
    SvdTruncation svd = hankel_svd(padded, opt.cutoff_rel);
    // drop the last block row of the padded factor
    svd.U = svd.U.topRows(svd.U.rows() - H.p).eval();
    return parameters_from_svd(padded, svd, H.p, H.m, H.s, probs, r);
}

inline SlsModel learn_parameters(const HankelEstimate& est, const std::vector<double>& probs, int r,
                                 const LearnOptions& opt = {}) {
    return learn_parameters(est.hankel, probs, r, opt);
}

struct GapBlock {
    double sigma_max = 0.0;
    double sigma_min = 0.0;
    double zeta = 0.0;
};

struct GapReport {
    double epsilon = 0.0;
    double chi = 2.0;
    std::vector<GapBlock> blocks;
    double gamma = 0.0;
};

// Greedy left-to-right blocking: a value joins the current block while its
// gap to the previous value is <= chi * epsilon.
inline GapReport gap_gamma(const Eigen::VectorXd& sigma, double epsilon, double chi = 2.0) {
    require(epsilon >= 0.0 && chi > 0.0, Errc::InvalidArgument, "epsilon must be >= 0 and chi > 0");
    for (Eigen::Index i = 1; i < sigma.size(); ++i)
        require(sigma(i) <= sigma(i - 1), Errc::InvalidArgument, "singular values must be descending");
    GapReport rep;
    rep.epsilon = epsilon;
    rep.chi = chi;
    if (sigma.size() == 0) return rep;
    rep.blocks.push_back({sigma(0), sigma(0), 0.0});
    for (Eigen::Index i = 1; i < sigma.size(); ++i) {
        if (sigma(i - 1) - sigma(i) <= chi * epsilon)
            rep.blocks.back().sigma_min = sigma(i);
        else
            rep.blocks.push_back({sigma(i), sigma(i), 0.0});
    }
    auto& b = rep.blocks;
    const std::size_t l = b.size();
    for (std::size_t i = 0; i < l; ++i) {
        const double down = i + 1 < l ? b[i].sigma_min - b[i + 1].sigma_max : b[i].sigma_min;
        b[i].zeta = i == 0 ? down : std::min(b[i - 1].sigma_min - b[i].sigma_max, down);
    }
    double sum = 0.0;
    for (const auto& blk : b) sum += blk.sigma_max / (blk.zeta * blk.zeta);
    rep.gamma = std::sqrt(sum);
    return rep;
}

struct ModelComparison {
    double markov_err = 0.0;  // max_seq sqrt(p_seq) ||C A_seq B - C' A'_seq B'||_F
    double l2_distance = 0.0;  // finite_l2_distance at the same horizon
};

// Both metrics are similarity invariant. The stochastic distance weights
// paths by the oracle's mode probabilities on both sides.
inline ModelComparison compare_models(const SlsModel& estimated, const SlsModel& oracle, int max_len) {
    require(estimated.p() == oracle.p() && estimated.m() == oracle.m() && estimated.s() == oracle.s(),
            Errc::InvalidArgument, "models must share (p, m, s)");
    require(max_len >= 1, Errc::InvalidArgument, "max_len must be >= 1");
    const SequenceTable te = sequence_table(estimated, max_len);
    const SequenceTable to = sequence_table(oracle, max_len);
    ModelComparison out;
    for (std::size_t i = 0; i < to.prob.size(); ++i) {
        const Eigen::MatrixXd diff = estimated.C * te.product[i] * estimated.B - oracle.C * to.product[i] * oracle.B;
        out.markov_err = std::max(out.markov_err, std::sqrt(to.prob[i]) * diff.norm());
    }
    SlsModel reweighted = estimated;
    for (int i = 0; i < reweighted.s(); ++i)
        reweighted.modes[static_cast<std::size_t>(i)].prob = oracle.modes[static_cast<std::size_t>(i)].prob;
    out.l2_distance = finite_l2_distance(reweighted, oracle, max_len);
    return out;
}

// Orthogonal Q minimizing ||reference Q - target||_F.
inline Eigen::MatrixXd procrustes(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& target) {
    require(reference.rows() == target.rows() && reference.cols() == target.cols(), Errc::InvalidArgument,
            "Procrustes factors must have equal shape");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(reference.transpose() * target, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace slsid
