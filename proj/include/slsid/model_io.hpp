#pragma once

// Model file: {"p", "m", "n", "s", "C", "B", "modes": [{"p_i", "A"}, ...]}
// with matrices as row-major nested arrays. An optional "provenance" object
// is carried through untouched.

#include <string>

#include "slsid/detail/json_util.hpp"
#include "slsid/model.hpp"

namespace slsid {

inline detail::json model_to_json(const SlsModel& model) {
    using detail::json;
    json j;
    j["p"] = model.p();
    j["m"] = model.m();
    j["n"] = model.n();
    j["s"] = model.s();
    j["C"] = detail::matrix_to_json(model.C);
    j["B"] = detail::matrix_to_json(model.B);
    json modes = json::array();
    for (const auto& md : model.modes) modes.push_back({{"p_i", md.prob}, {"A", detail::matrix_to_json(md.A)}});
    j["modes"] = std::move(modes);
    return j;
}

inline SlsModel model_from_json(const detail::json& j) try {
    const std::string what = "model";
    const auto p = detail::get_field<int>(j, "p", what);
    const auto m = detail::get_field<int>(j, "m", what);
    const auto n = detail::get_field<int>(j, "n", what);
    const auto s = detail::get_field<int>(j, "s", what);
    if (p < 1 || m < 1 || n < 0 || s < 1) throw Error(Errc::FormatError, "model: invalid dimensions");
    SlsModel model;
    model.C = detail::matrix_from_json(j.at("C"), p, n, "model C");
    model.B = detail::matrix_from_json(j.at("B"), n, m, "model B");
    const auto& modes = j.contains("modes") ? j.at("modes") : detail::json();
    if (!modes.is_array() || static_cast<int>(modes.size()) != s)
        throw Error(Errc::FormatError, "model: expected " + std::to_string(s) + " modes");
    for (const auto& md : modes)
        model.modes.push_back({detail::matrix_from_json(md.at("A"), n, n, "model A"),
                               detail::get_field<double>(md, "p_i", what)});
    model.validate();
    return model;
} catch (const detail::json::exception& e) {
    throw Error(Errc::FormatError, std::string("model: ") + e.what());
}

inline void save_model(const SlsModel& model, const std::string& path, const detail::json& provenance = {}) {
    auto j = model_to_json(model);
    if (!provenance.is_null()) j["provenance"] = provenance;
    detail::write_file(path, j.dump(2) + "\n");
}

inline SlsModel load_model(const std::string& path) {
    return model_from_json(detail::parse_json(detail::read_file(path), path));
}

}  // namespace slsid
