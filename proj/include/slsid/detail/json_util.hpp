#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "json.hpp"
#include "slsid/errors.hpp"

namespace slsid::detail {

using json = nlohmann::json;

// Row-major nested arrays.
inline json matrix_to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                                        const std::string& what) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw Error(Errc::FormatError, what + ": expected " + std::to_string(rows) + " rows");
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw Error(Errc::FormatError, what + ": expected " + std::to_string(cols) + " columns");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw Error(Errc::FormatError, what + ": non-numeric entry");
            M(i, c) = v.get<double>();
        }
    }
    return M;
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key))
        throw Error(Errc::FormatError, what + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::FormatError, what + ": bad field '" + key + "': " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    out << content;
    if (!out) throw Error(Errc::IoError, "write failed for " + path);
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::FormatError, what + ": " + e.what());
    }
}

// FNV-1a, used for content-addressed artifact names.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return out;
}

}  // namespace slsid::detail
