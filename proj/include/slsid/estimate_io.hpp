#pragma once

// HankelEstimate persistence.
//
// JSON: {"p","m","s","N","N_S","threshold","zeroed":[indices],
//        "sequences":[{"index","labels","count","p_hat","theta"}]}
// The matrix itself is rebuilt from the tables on load. The optional binary
// holds the assembled matrix as little-endian f64: an 8-value header
// (magic, version, rows, cols, p, m, s, N) then the row-major entries.

#include <bit>
#include <cstring>
#include <string>

#include "slsid/detail/json_util.hpp"
#include "slsid/estimation.hpp"

namespace slsid {

inline constexpr double kHankelBinaryMagic = 1397509961.0;  // "SLSI" as an integer
inline constexpr int kHankelBinaryVersion = 1;

inline detail::json estimate_to_json(const HankelEstimate& est) {
    using detail::json;
    json j{{"p", est.p},          {"m", est.m},
            {"s", est.s},          {"N", est.N},
            {"N_S", est.num_rollouts}, {"threshold", est.threshold}};
    json zeroed = json::array();
    json seqs = json::array();
    for (SeqIndex i = 0; i < est.p_hat.size(); ++i) {
        if (est.zeroed[i]) zeroed.push_back(i);
        seqs.push_back({{"index", i},
                        {"labels", sequence_from_index(est.s, i).labels},
                        {"count", est.counts[i]},
                        {"p_hat", est.p_hat[i]},
                        {"theta", detail::matrix_to_json(est.theta_hat[i])}});
    }
    j["zeroed"] = std::move(zeroed);
    j["sequences"] = std::move(seqs);
    return j;
}

inline HankelEstimate estimate_from_json(const detail::json& j) try {
    const std::string what = "hankel estimate";
    HankelEstimate est;
    est.p = detail::get_field<int>(j, "p", what);
    est.m = detail::get_field<int>(j, "m", what);
    est.s = detail::get_field<int>(j, "s", what);
    est.N = detail::get_field<int>(j, "N", what);
    est.num_rollouts = detail::get_field<int>(j, "N_S", what);
    est.threshold = detail::get_field<double>(j, "threshold", what);
    if (est.p < 1 || est.m < 1 || est.s < 1 || est.N < 0) throw Error(Errc::FormatError, what + ": invalid dims");
    const auto total = static_cast<std::size_t>(sequence_count(est.s, est.N));
    const auto& seqs = j.at("sequences");
    if (!seqs.is_array() || seqs.size() != total)
        throw Error(Errc::FormatError, what + ": expected " + std::to_string(total) + " sequences");
    est.counts.assign(total, 0);
    est.p_hat.assign(total, 0.0);
    est.theta_hat.assign(total, Eigen::MatrixXd::Zero(est.p, est.m));
    est.zeroed.assign(total, 0);
    for (const auto& e : seqs) {
        const auto idx = detail::get_field<SeqIndex>(e, "index", what);
        if (idx >= total) throw Error(Errc::FormatError, what + ": sequence index out of range");
        est.counts[idx] = detail::get_field<std::uint64_t>(e, "count", what);
        est.p_hat[idx] = detail::get_field<double>(e, "p_hat", what);
        est.theta_hat[idx] = detail::matrix_from_json(e.at("theta"), est.p, est.m, what + " theta");
    }
    for (const auto& z : j.at("zeroed")) {
        const auto idx = z.get<SeqIndex>();
        if (idx >= total) throw Error(Errc::FormatError, what + ": zeroed index out of range");
        est.zeroed[idx] = 1;
    }
    fill_hankel_from_tables(est);
    return est;
} catch (const detail::json::exception& e) {
    throw Error(Errc::FormatError, std::string("hankel estimate: ") + e.what());
}

inline void save_estimate(const HankelEstimate& est, const std::string& path) {
    detail::write_file(path, estimate_to_json(est).dump(1) + "\n");
}

inline HankelEstimate load_estimate(const std::string& path) {
    return estimate_from_json(detail::parse_json(detail::read_file(path), path));
}

namespace detail {

inline void put_f64(std::string& out, double v) {
    static_assert(std::endian::native == std::endian::little, "binary Hankel format assumes little-endian");
    char buf[sizeof(double)];
    std::memcpy(buf, &v, sizeof(double));
    out.append(buf, sizeof(double));
}

}  // namespace detail

inline std::string hankel_to_binary(const HankelEstimate& est) {
    const Eigen::MatrixXd& H = est.hankel.data;
    std::string out;
    out.reserve(sizeof(double) * static_cast<std::size_t>(8 + H.size()));
    for (double v : {kHankelBinaryMagic, static_cast<double>(kHankelBinaryVersion), static_cast<double>(H.rows()),
                     static_cast<double>(H.cols()), static_cast<double>(est.p), static_cast<double>(est.m),
                     static_cast<double>(est.s), static_cast<double>(est.N)})
        detail::put_f64(out, v);
    for (Eigen::Index i = 0; i < H.rows(); ++i)
        for (Eigen::Index c = 0; c < H.cols(); ++c) detail::put_f64(out, H(i, c));
    return out;
}

// Returns the matrix; header fields are validated against each other.
inline BlockHankel hankel_from_binary(const std::string& bytes) {
    auto get = [&](std::size_t i) {
        double v;
        std::memcpy(&v, bytes.data() + i * sizeof(double), sizeof(double));
        return v;
    };
    if (bytes.size() < 8 * sizeof(double) || get(0) != kHankelBinaryMagic)
        throw Error(Errc::FormatError, "hankel binary: bad magic");
    if (get(1) != kHankelBinaryVersion) throw Error(Errc::FormatError, "hankel binary: unsupported version");
    const auto rows = static_cast<Eigen::Index>(get(2)), cols = static_cast<Eigen::Index>(get(3));
    const int p = static_cast<int>(get(4)), m = static_cast<int>(get(5)), s = static_cast<int>(get(6));
    const int N = static_cast<int>(get(7));
    if (p < 1 || m < 1 || s < 1 || N < 0) throw Error(Errc::FormatError, "hankel binary: invalid dims");
    BlockHankel H(N, p, m, s);
    if (H.data.rows() != rows || H.data.cols() != cols ||
        bytes.size() != sizeof(double) * static_cast<std::size_t>(8 + rows * cols))
        throw Error(Errc::FormatError, "hankel binary: size mismatch");
    fill_standard_mask(H);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) H.data(i, c) = get(static_cast<std::size_t>(8 + i * cols + c));
    return H;
}

inline void save_hankel_binary(const HankelEstimate& est, const std::string& path) {
    detail::write_file(path, hankel_to_binary(est));
}

inline BlockHankel load_hankel_binary(const std::string& path) { return hankel_from_binary(detail::read_file(path)); }

}  // namespace slsid
