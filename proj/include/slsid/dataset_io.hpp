#pragma once

// JSON-lines dataset file. Line 1 is the header
//   {"version":1,"p","m","s","N","N_S","seed","noise":{"process","output"}}
// and line t+1 holds rollout t: {"t","theta":[...],"u":[[...]],"y":[[...]]}
// with u and y stored as row-major nested arrays (m x N and p x N).

#include <fstream>
#include <sstream>
#include <string>

#include "slsid/detail/json_util.hpp"
#include "slsid/simulator.hpp"

namespace slsid {

inline constexpr int kDatasetVersion = 1;

inline detail::json dataset_header(const Dataset& ds) {
    using detail::json;
    return json{{"version", kDatasetVersion},
                {"p", ds.p},
                {"m", ds.m},
                {"s", ds.s},
                {"N", ds.config.rollout_length},
                {"N_S", ds.num_rollouts()},
                {"seed", ds.config.seed},
                {"noise", {{"process", ds.config.process_noise_std}, {"output", ds.config.output_noise_std}}}};
}

inline std::string dataset_to_string(const Dataset& ds) {
    std::string out = dataset_header(ds).dump() + "\n";
    for (int t = 0; t < ds.num_rollouts(); ++t) {
        const Rollout& r = ds.rollouts[static_cast<std::size_t>(t)];
        detail::json line{{"t", t + 1},
                          {"theta", r.theta},
                          {"u", detail::matrix_to_json(r.u)},
                          {"y", detail::matrix_to_json(r.y)}};
        out += line.dump();
        out += '\n';
    }
    return out;
}

inline Dataset dataset_from_string(const std::string& text, const std::string& what = "dataset") try {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::FormatError, what + ": empty file");
    const auto header = detail::parse_json(line, what + " header");
    const auto version = detail::get_field<int>(header, "version", what);
    if (version != kDatasetVersion)
        throw Error(Errc::FormatError, what + ": unsupported version " + std::to_string(version));

    Dataset ds;
    ds.p = detail::get_field<int>(header, "p", what);
    ds.m = detail::get_field<int>(header, "m", what);
    ds.s = detail::get_field<int>(header, "s", what);
    ds.config.rollout_length = detail::get_field<int>(header, "N", what);
    ds.config.num_rollouts = detail::get_field<int>(header, "N_S", what);
    ds.config.seed = detail::get_field<std::uint64_t>(header, "seed", what);
    if (header.contains("noise")) {
        const auto& noise = header.at("noise");
        ds.config.process_noise_std = detail::get_field<double>(noise, "process", what);
        ds.config.output_noise_std = detail::get_field<double>(noise, "output", what);
    }
    if (ds.p < 1 || ds.m < 1 || ds.s < 1 || ds.config.rollout_length < 1 || ds.config.num_rollouts < 0)
        throw Error(Errc::FormatError, what + ": invalid header dimensions");

    const int N = ds.config.rollout_length;
    ds.rollouts.reserve(static_cast<std::size_t>(ds.config.num_rollouts));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = detail::parse_json(line, what + " rollout");
        const auto t = detail::get_field<int>(j, "t", what);
        if (t != ds.num_rollouts() + 1)
            throw Error(Errc::FormatError, what + ": rollout " + std::to_string(t) + " out of order");
        Rollout r;
        r.theta = detail::get_field<std::vector<int>>(j, "theta", what);
        if (static_cast<int>(r.theta.size()) != N)
            throw Error(Errc::FormatError, what + ": rollout " + std::to_string(t) + " has wrong length");
        for (int label : r.theta)
            require(label >= 1 && label <= ds.s, Errc::LabelOutOfRange, what + ": switch label outside 1..s");
        r.u = detail::matrix_from_json(j.at("u"), ds.m, N, what + " u");
        r.y = detail::matrix_from_json(j.at("y"), ds.p, N, what + " y");
        ds.rollouts.push_back(std::move(r));
    }
    if (ds.num_rollouts() != ds.config.num_rollouts)
        throw Error(Errc::FormatError, what + ": header announces " + std::to_string(ds.config.num_rollouts) +
                                           " rollouts, found " + std::to_string(ds.num_rollouts()));
    return ds;
} catch (const detail::json::exception& e) {
    throw Error(Errc::FormatError, what + ": " + e.what());
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    detail::write_file(path, dataset_to_string(ds));
}

inline Dataset load_dataset(const std::string& path) {
    return dataset_from_string(detail::read_file(path), path);
}

}  // namespace slsid
