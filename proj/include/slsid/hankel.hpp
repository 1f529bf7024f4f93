#pragma once

// Block Hankel-like matrices indexed by pairs of switch sequences.
//
// Block (row_seq, col_seq) sits at rows p*L(row_seq).. and cols m*L(col_seq)..
// and, for the exact matrix, equals sqrt(p_{row:col}) C A_row A_col B. Only
// pairs with len(row) + len(col) <= N are filled; the rest are structural zeros.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "slsid/errors.hpp"
#include "slsid/model.hpp"
#include "slsid/sequence.hpp"

namespace slsid {

struct BlockHankel {
    Eigen::MatrixXd data;
    int N = 0;
    int p = 1;
    int m = 1;
    int s = 1;
    std::vector<std::uint8_t> mask;  // blocks() x blocks(), row-major; 1 = filled

    BlockHankel() = default;
    BlockHankel(int N_, int p_, int m_, int s_) : N(N_), p(p_), m(m_), s(s_) {
        require(N >= 0, Errc::InvalidArgument, "Hankel size N must be >= 0");
        const auto nb = static_cast<Eigen::Index>(sequence_count(s, N));
        data = Eigen::MatrixXd::Zero(p * nb, m * nb);
        mask.assign(static_cast<std::size_t>(nb * nb), 0);
    }

    [[nodiscard]] Eigen::Index blocks() const noexcept { return data.rows() / p; }

    [[nodiscard]] bool filled(SeqIndex row, SeqIndex col) const {
        return mask[row * static_cast<std::size_t>(blocks()) + col] != 0;
    }
    void set_filled(SeqIndex row, SeqIndex col, bool f) {
        mask[row * static_cast<std::size_t>(blocks()) + col] = f ? 1 : 0;
    }

    auto block(SeqIndex row, SeqIndex col) {
        return data.block(p * static_cast<Eigen::Index>(row), m * static_cast<Eigen::Index>(col), p, m);
    }
    [[nodiscard]] auto block(SeqIndex row, SeqIndex col) const {
        return data.block(p * static_cast<Eigen::Index>(row), m * static_cast<Eigen::Index>(col), p, m);
    }
};

// Mask for the standard anti-triangular fill: len(row) + len(col) <= N.
inline void fill_standard_mask(BlockHankel& H) {
    const auto nb = static_cast<SeqIndex>(H.blocks());
    std::vector<int> len(nb);
    for (SeqIndex i = 0; i < nb; ++i) len[i] = sequence_length_of_index(H.s, i);
    for (SeqIndex r = 0; r < nb; ++r)
        for (SeqIndex c = 0; c < nb; ++c) H.set_filled(r, c, len[r] + len[c] <= H.N);
}

inline BlockHankel exact_hankel(const SlsModel& model, int N) {
    require(N >= 0, Errc::InvalidArgument, "Hankel size N must be >= 0");
    model.validate();
    const SequenceTable table = sequence_table(model, N);
    BlockHankel H(N, model.p(), model.m(), model.s());
    const auto nb = static_cast<SeqIndex>(H.blocks());

    // H = O R on the filled pattern, O_row = sqrt(p_row) C A_row, R_col = sqrt(p_col) A_col B
    std::vector<Eigen::MatrixXd> obs(nb), reach(nb);
    for (SeqIndex i = 0; i < nb; ++i) {
        const double w = std::sqrt(table.prob[i]);
        obs[i] = w * model.C * table.product[i];
        reach[i] = w * table.product[i] * model.B;
    }
    for (SeqIndex r = 0; r < nb; ++r) {
        for (SeqIndex c = 0; c < nb; ++c) {
            if (table.length[r] + table.length[c] > N) continue;
            H.block(r, c) = obs[r] * reach[c];
            H.set_filled(r, c, true);
        }
    }
    return H;
}

// Output block (row, col) = input block (row:{k}, col), on the grid of size N-1.
inline BlockHankel hankel_mode_submatrix(const BlockHankel& H, int k) {
    require(k >= 1 && k <= H.s, Errc::LabelOutOfRange, "mode label outside 1..s");
    require(H.N >= 1, Errc::InvalidArgument, "mode submatrix needs N >= 1");
    BlockHankel out(H.N - 1, H.p, H.m, H.s);
    const auto nb = static_cast<SeqIndex>(out.blocks());
    const auto s = static_cast<SeqIndex>(H.s);
    for (SeqIndex r = 0; r < nb; ++r) {
        const SeqIndex src = r * s + static_cast<SeqIndex>(k);
        for (SeqIndex c = 0; c < nb; ++c) {
            out.block(r, c) = H.block(src, c);
            out.set_filled(r, c, H.filled(src, c));
        }
    }
    return out;
}

// Same shift, kept on the input's own grid: rows whose shifted index falls
// outside the grid read as structural zeros (the zero-padded estimate).
inline BlockHankel padded_mode_submatrix(const BlockHankel& H, int k) {
    require(k >= 1 && k <= H.s, Errc::LabelOutOfRange, "mode label outside 1..s");
    BlockHankel out(H.N, H.p, H.m, H.s);
    const auto nb = static_cast<SeqIndex>(out.blocks());
    const auto s = static_cast<SeqIndex>(H.s);
    for (SeqIndex r = 0; r < nb; ++r) {
        const SeqIndex src = r * s + static_cast<SeqIndex>(k);
        if (src >= nb) continue;
        for (SeqIndex c = 0; c < nb; ++c) {
            out.block(r, c) = H.block(src, c);
            out.set_filled(r, c, H.filled(src, c));
        }
    }
    return out;
}

// Embed H into the grid of size N >= H.N; the L() indexing makes this a
// top-left placement.
inline Eigen::MatrixXd zero_pad(const BlockHankel& H, int N) {
    require(N >= H.N, Errc::InvalidArgument, "cannot pad to a smaller grid");
    const auto nb = static_cast<Eigen::Index>(sequence_count(H.s, N));
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(H.p * nb, H.m * nb);
    out.topLeftCorner(H.data.rows(), H.data.cols()) = H.data;
    return out;
}

// ||A - B||_F after zero-padding the smaller one.
inline double padded_frobenius_distance(const BlockHankel& a, const BlockHankel& b) {
    const BlockHankel& small = a.N <= b.N ? a : b;
    const BlockHankel& big = a.N <= b.N ? b : a;
    const auto r = small.data.rows();
    const auto c = small.data.cols();
    const double inner = (big.data.topLeftCorner(r, c) - small.data).squaredNorm();
    const double outer = big.data.rightCols(big.data.cols() - c).squaredNorm() +
                         big.data.bottomLeftCorner(big.data.rows() - r, c).squaredNorm();
    return std::sqrt(inner + outer);
}

}  // namespace slsid
