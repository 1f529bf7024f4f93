#pragma once

// ExperimentConfig and its JSON form. Unknown keys are rejected.
//
// {
//   "model": {"generator": "test-model" | "test-model-lti" | "fast-decay" | "fast-decay-lti"}
//          | {"generator": "example1", "n", "gamma", "a"}
//          | {"generator": "random-stable", "n", "s", "p", "m", "target_rho", "seed"}
//          | {"path": "model.json"},
//   "simulation": {"N", "N_S", "process_noise_std", "output_noise_std", "input_std", "threads"},
//   "selection": {"delta", "beta", "c_threshold", "c_balance": [c1, c2]},
//   "truncation": {"order", "literal_padding", "chi", "rank_cutoff", "bound_constant"},
//   "evaluation": {"max_len"},
//   "sweep": {"N_S": [...], "seeds": [...], "threads"},
//   "seed", "artifacts": "all" | "summary" | "none", "out"
// }

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "slsid/detail/json_util.hpp"
#include "slsid/generators.hpp"
#include "slsid/gramians.hpp"
#include "slsid/model_io.hpp"

namespace slsid {

struct ModelSource {
    std::string generator = "test-model";  // empty when loading from path
    std::string path;
    int n = 2;
    int s = 2;
    int p = 1;
    int m = 1;
    double gamma = 0.5;
    double a = 0.0;
    double target_rho = 0.5;
    std::uint64_t seed = 0;
};

enum class ArtifactLevel { All, Summary, None };

struct ExperimentConfig {
    ModelSource model;
    int rollout_length = 10;
    int num_rollouts = 1000;
    double process_noise_std = 0.0;
    double output_noise_std = 0.0;
    double input_std = 1.0;
    int threads = 1;

    double delta = 0.05;
    std::optional<double> beta;  // taken from the generated model when absent
    double c_threshold = 2.0;
    double c1 = 1.0;
    double c2 = 2.0;

    int order = 0;  // 0 = effective rank of the selected estimate
    bool literal_padding = false;
    double chi = 2.0;
    double rank_cutoff = kRankCutoff;
    BoundConstant bound_constant = BoundConstant::TwoSqrtS;

    int eval_max_len = 4;

    std::vector<double> sweep_grid;
    std::vector<std::uint64_t> sweep_seeds;
    int sweep_threads = 1;

    std::uint64_t seed = 0;
    ArtifactLevel artifacts = ArtifactLevel::All;
    std::string out;  // empty = no persistence

    void validate() const {
        require(rollout_length >= 3, Errc::ConfigError, "rollout length N must be >= 3");
        require(num_rollouts >= 1, Errc::ConfigError, "N_S must be >= 1");
        require(input_std == 1.0, Errc::ConfigError, "input_std is fixed at 1 (isotropic unit inputs)");
        require(process_noise_std >= 0.0 && output_noise_std >= 0.0, Errc::ConfigError, "noise std must be >= 0");
        require(threads >= 1 && sweep_threads >= 1, Errc::ConfigError, "threads must be >= 1");
        require(delta > 0.0 && delta < 1.0, Errc::ConfigError, "delta must lie in (0, 1)");
        require(!beta || *beta > 0.0, Errc::ConfigError, "beta must be > 0");
        require(c_threshold > 0.0 && c1 >= 0.0 && c2 >= 0.0, Errc::ConfigError, "constants must be positive");
        require(order >= 0, Errc::ConfigError, "order must be >= 0");
        require(chi > 0.0, Errc::ConfigError, "chi must be > 0");
        require(rank_cutoff > 0.0 && rank_cutoff < 1.0, Errc::ConfigError, "rank_cutoff must lie in (0, 1)");
        require(eval_max_len >= 1, Errc::ConfigError, "evaluation max_len must be >= 1");
        require(model.generator.empty() != model.path.empty(), Errc::ConfigError,
                "model needs exactly one of generator or path");
    }

    void validate_sweep() const {
        require(sweep_grid.size() >= 3, Errc::ConfigError, "sweep grid needs at least 3 points");
        for (std::size_t i = 1; i < sweep_grid.size(); ++i)
            require(sweep_grid[i] > sweep_grid[i - 1], Errc::ConfigError, "sweep grid must be strictly increasing");
        for (double v : sweep_grid)
            require(v >= 1.0 && v == static_cast<double>(static_cast<long long>(v)), Errc::ConfigError,
                    "sweep grid entries must be positive integers");
        require(!sweep_seeds.empty(), Errc::ConfigError, "sweep needs at least one seed");
    }
};

// test_model with every A_i scaled by 0.03: the truncation tail at N = 1
// drops from about 3e-2 to about 2e-8.
inline SlsModel fast_decay_model(bool lti) {
    SlsModel model = lti ? test_model_lti() : test_model();
    for (auto& md : model.modes) md.A *= 0.03;
    return model;
}

inline SlsModel build_model(const ModelSource& src) {
    if (!src.path.empty()) return load_model(src.path);
    if (src.generator == "test-model") return test_model();
    if (src.generator == "test-model-lti") return test_model_lti();
    if (src.generator == "fast-decay") return fast_decay_model(false);
    if (src.generator == "fast-decay-lti") return fast_decay_model(true);
    if (src.generator == "example1") return example1(src.n, src.gamma, src.a);
    if (src.generator == "random-stable")
        return random_stable({src.n, src.s, src.p, src.m, src.target_rho, src.seed, true});
    throw Error(Errc::ConfigError, "unknown model generator '" + src.generator + "'");
}

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw Error(Errc::ConfigError, where + ": expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw Error(Errc::ConfigError, where + ": unknown key '" + key + "'");
}

template <typename T>
void read_opt(const json& j, const char* key, T& dst, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, where + ": bad value for '" + key + "': " + e.what());
    }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const detail::json& j) {
    using detail::read_opt;
    ExperimentConfig cfg;
    detail::reject_unknown(j, {"model", "simulation", "selection", "truncation", "evaluation", "sweep", "seed", "artifacts", "out"},
                           "config");
    if (j.contains("model")) {
        const auto& mj = j.at("model");
        detail::reject_unknown(mj, {"generator", "path", "n", "s", "p", "m", "gamma", "a", "target_rho", "seed"}, "model");
        cfg.model.generator.clear();
        read_opt(mj, "generator", cfg.model.generator, "model");
        read_opt(mj, "path", cfg.model.path, "model");
        read_opt(mj, "n", cfg.model.n, "model");
        read_opt(mj, "s", cfg.model.s, "model");
        read_opt(mj, "p", cfg.model.p, "model");
        read_opt(mj, "m", cfg.model.m, "model");
        read_opt(mj, "gamma", cfg.model.gamma, "model");
        read_opt(mj, "a", cfg.model.a, "model");
        read_opt(mj, "target_rho", cfg.model.target_rho, "model");
        read_opt(mj, "seed", cfg.model.seed, "model");
    }
    if (j.contains("simulation")) {
        const auto& sj = j.at("simulation");
        detail::reject_unknown(sj, {"N", "N_S", "process_noise_std", "output_noise_std", "input_std", "threads"}, "simulation");
        read_opt(sj, "N", cfg.rollout_length, "simulation");
        read_opt(sj, "N_S", cfg.num_rollouts, "simulation");
        read_opt(sj, "process_noise_std", cfg.process_noise_std, "simulation");
        read_opt(sj, "output_noise_std", cfg.output_noise_std, "simulation");
        read_opt(sj, "input_std", cfg.input_std, "simulation");
        read_opt(sj, "threads", cfg.threads, "simulation");
    }
    if (j.contains("selection")) {
        const auto& sj = j.at("selection");
        detail::reject_unknown(sj, {"delta", "beta", "c_threshold", "c_balance"}, "selection");
        read_opt(sj, "delta", cfg.delta, "selection");
        if (sj.contains("beta") && !sj.at("beta").is_null()) {
            double b = 0.0;
            read_opt(sj, "beta", b, "selection");
            cfg.beta = b;
        }
        read_opt(sj, "c_threshold", cfg.c_threshold, "selection");
        if (sj.contains("c_balance")) {
            std::vector<double> cb;
            read_opt(sj, "c_balance", cb, "selection");
            require(cb.size() == 2, Errc::ConfigError, "selection: c_balance needs two values");
            cfg.c1 = cb[0];
            cfg.c2 = cb[1];
        }
    }
    if (j.contains("truncation")) {
        const auto& tj = j.at("truncation");
        detail::reject_unknown(tj, {"order", "literal_padding", "chi", "rank_cutoff", "bound_constant"}, "truncation");
        read_opt(tj, "order", cfg.order, "truncation");
        read_opt(tj, "literal_padding", cfg.literal_padding, "truncation");
        read_opt(tj, "chi", cfg.chi, "truncation");
        read_opt(tj, "rank_cutoff", cfg.rank_cutoff, "truncation");
        std::string bc = "2sqrt(s)";
        read_opt(tj, "bound_constant", bc, "truncation");
        if (bc == "2sqrt(s)")
            cfg.bound_constant = BoundConstant::TwoSqrtS;
        else if (bc == "2s")
            cfg.bound_constant = BoundConstant::TwoS;
        else
            throw Error(Errc::ConfigError, "truncation: bound_constant must be \"2sqrt(s)\" or \"2s\"");
    }
    if (j.contains("evaluation")) {
        const auto& ej = j.at("evaluation");
        detail::reject_unknown(ej, {"max_len"}, "evaluation");
        read_opt(ej, "max_len", cfg.eval_max_len, "evaluation");
    }
    if (j.contains("sweep")) {
        const auto& wj = j.at("sweep");
        detail::reject_unknown(wj, {"N_S", "seeds", "threads"}, "sweep");
        read_opt(wj, "N_S", cfg.sweep_grid, "sweep");
        read_opt(wj, "seeds", cfg.sweep_seeds, "sweep");
        read_opt(wj, "threads", cfg.sweep_threads, "sweep");
    }
    read_opt(j, "seed", cfg.seed, "config");
    std::string level = "all";
    read_opt(j, "artifacts", level, "config");
    if (level == "all")
        cfg.artifacts = ArtifactLevel::All;
    else if (level == "summary")
        cfg.artifacts = ArtifactLevel::Summary;
    else if (level == "none")
        cfg.artifacts = ArtifactLevel::None;
    else
        throw Error(Errc::ConfigError, "artifacts must be all, summary or none");
    read_opt(j, "out", cfg.out, "config");
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    const std::string text = detail::read_file(path);
    try {
        return config_from_json(detail::json::parse(text));
    } catch (const detail::json::parse_error& e) {
        throw Error(Errc::ConfigError, path + ": " + e.what());
    }
}

inline detail::json model_source_to_json(const ModelSource& src) {
    if (!src.path.empty()) return {{"path", src.path}};
    detail::json j{{"generator", src.generator}};
    if (src.generator == "example1") {
        j["n"] = src.n;
        j["gamma"] = src.gamma;
        j["a"] = src.a;
    } else if (src.generator == "random-stable") {
        j["n"] = src.n;
        j["s"] = src.s;
        j["p"] = src.p;
        j["m"] = src.m;
        j["target_rho"] = src.target_rho;
        j["seed"] = src.seed;
    }
    return j;
}

}  // namespace slsid
