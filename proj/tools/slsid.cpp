// slsid: command-line front end for simulation, estimation, selection,
// truncation, evaluation, sweeps and exact-model oracles.
//
// Exit codes: 0 success, 1 validation error (bad flags, config, arguments),
// 2 runtime failure (numerics, I/O, file formats).

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slsid/slsid.hpp"

namespace {

using slsid::detail::json;

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "json";
};

slsid::ExperimentConfig load_or_default(const Globals& g) {
    slsid::ExperimentConfig cfg = g.config.empty() ? slsid::ExperimentConfig{} : slsid::load_config(g.config);
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out.empty()) cfg.out = g.out;
    return cfg;
}

std::string out_dir(const Globals& g, const slsid::ExperimentConfig& cfg) {
    const std::string dir = !g.out.empty() ? g.out : (!cfg.out.empty() ? cfg.out : std::string("."));
    slsid::detail::ensure_dir(dir);
    return dir;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

json matrix_json(const Eigen::MatrixXd& M) { return slsid::detail::matrix_to_json(M); }

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// beta from the config, or from a model file given for that purpose
double resolve_beta(const slsid::ExperimentConfig& cfg, const std::string& truth) {
    if (cfg.beta) return *cfg.beta;
    if (!truth.empty()) return slsid::energy_bound(slsid::load_model(truth), 12);
    return slsid::energy_bound(slsid::build_model(cfg.model), 12);
}

int cmd_simulate(const Globals& g, const std::string& model_path) {
    slsid::ExperimentConfig cfg = load_or_default(g);
    if (!model_path.empty()) {
        cfg.model = {};
        cfg.model.generator.clear();
        cfg.model.path = model_path;
    }
    cfg.validate();
    const slsid::SlsModel model = slsid::build_model(cfg.model);
    slsid::SimConfig sim;
    sim.num_rollouts = cfg.num_rollouts;
    sim.rollout_length = cfg.rollout_length;
    sim.input_std = cfg.input_std;
    sim.process_noise_std = cfg.process_noise_std;
    sim.output_noise_std = cfg.output_noise_std;
    sim.seed = cfg.seed;
    sim.threads = cfg.threads;
    const slsid::Dataset ds = slsid::simulate(model, sim);
    const std::string dir = out_dir(g, cfg);
    const std::string name = slsid::detail::persist(dir, "dataset", "jsonl", slsid::dataset_to_string(ds));
    json j{{"dataset", (std::filesystem::path(dir) / name).string()},
           {"N_S", ds.num_rollouts()},
           {"N", ds.rollout_length()},
           {"switch_frequencies", slsid::empirical_switch_frequencies(ds)}};
    if (sim.noise_above_unit_proxy()) j["warning"] = "noise std above 1 exceeds the unit variance proxy";
    emit(j);
    return 0;
}

int cmd_estimate(const Globals& g, const std::string& dataset, const std::string& truth, bool binary) {
    slsid::ExperimentConfig cfg = load_or_default(g);
    const std::string text = slsid::detail::read_file(dataset);
    const slsid::Dataset ds = slsid::dataset_from_string(text, dataset);
    const std::string source = slsid::detail::hex64(slsid::detail::fnv1a(text));
    const auto k = slsid::selection_constants(cfg, ds.p, ds.m, ds.s, resolve_beta(cfg, truth));
    const slsid::EstimationOutput est = slsid::estimation_stage(ds, k, cfg.threads);
    const std::string dir = out_dir(g, cfg);
    json files = json::array();
    for (const auto& e : est.estimates) {
        json ej = slsid::estimate_to_json(e);
        ej["source_dataset"] = source;
        const std::string name =
            slsid::detail::persist(dir, "estimate-l" + std::to_string(e.N), "json", ej.dump(1));
        json entry{{"N", e.N}, {"json", (std::filesystem::path(dir) / name).string()}, {"zeroed", e.zeroed_count()}};
        if (binary) {
            const std::string bin = slsid::detail::persist(dir, "hankel-l" + std::to_string(e.N), "bin",
                                                           slsid::hankel_to_binary(e));
            entry["binary"] = (std::filesystem::path(dir) / bin).string();
        }
        files.push_back(std::move(entry));
    }
    emit({{"N_up", est.n_up.n_up}, {"censored", est.n_up.censored}, {"threshold", est.threshold}, {"estimates", files}});
    return 0;
}

int cmd_select(const Globals& g, const std::vector<std::string>& paths, const std::string& truth) {
    slsid::ExperimentConfig cfg = load_or_default(g);
    std::vector<slsid::HankelEstimate> ests;
    for (const auto& p : paths) ests.push_back(slsid::load_estimate(p));
    std::sort(ests.begin(), ests.end(), [](const auto& a, const auto& b) { return a.N < b.N; });
    if (ests.empty()) throw slsid::Error(slsid::Errc::InvalidArgument, "select needs at least one estimate");
    const auto& e0 = ests.front();
    const auto k = slsid::selection_constants(cfg, e0.p, e0.m, e0.s, resolve_beta(cfg, truth));
    slsid::SelectionReport rep;
    rep.n_up = {static_cast<int>(ests.size()), false};
    rep.hankel_threshold = e0.threshold;
    rep.selection = slsid::select_n_hat(ests, e0.num_rollouts, k);
    if (!truth.empty()) {
        const double rho = slsid::ms_spectral_radius(slsid::load_model(truth));
        if (rho > 0.0 && rho < 1.0) rep.delta_s = slsid::delta_s(rho, e0.s);
    }
    emit(slsid::selection_report_to_json(rep));
    return 0;
}

int cmd_truncate(const Globals& g, const std::string& estimate, int order, bool literal) {
    slsid::ExperimentConfig cfg = load_or_default(g);
    const json raw = slsid::detail::parse_json(slsid::detail::read_file(estimate), estimate);
    const slsid::HankelEstimate est = slsid::estimate_from_json(raw);
    slsid::LearnOptions lo;
    lo.literal_padding = literal || cfg.literal_padding;
    lo.cutoff_rel = cfg.rank_cutoff;
    const auto tr = slsid::truncation_stage(est, order >= 0 ? order : cfg.order, lo);
    json mj = slsid::model_to_json(tr.model);
    mj["provenance"] = {{"source_dataset", raw.value("source_dataset", std::string())},
                        {"source_estimate", slsid::detail::hex64(slsid::detail::fnv1a(raw.dump(1)))},
                        {"N_hat", est.N},
                        {"r", tr.order},
                        {"sigma", vector_json(tr.svd.sigma)},
                        {"zeroed_sequences", est.zeroed_count()}};
    const std::string dir = out_dir(g, cfg);
    const std::string name = slsid::detail::persist(dir, "model", "json", mj.dump(2) + "\n");
    emit({{"model", (std::filesystem::path(dir) / name).string()},
          {"order", tr.order},
          {"effective_rank", tr.svd.effective_rank},
          {"sigma", vector_json(tr.svd.sigma)}});
    return 0;
}

int cmd_evaluate(const Globals& g, const std::string& learned, const std::string& truth, int max_len) {
    slsid::ExperimentConfig cfg = load_or_default(g);
    const int len = max_len > 0 ? max_len : cfg.eval_max_len;
    const slsid::SlsModel est = slsid::load_model(learned);
    const slsid::SlsModel oracle = slsid::load_model(truth);
    const auto cmp = slsid::compare_models(est, oracle, len);
    json j{{"markov_err", cmp.markov_err}, {"l2_distance", cmp.l2_distance}, {"max_len", len}};
    if (slsid::is_ms_stable(oracle) && est.n() <= oracle.n()) {
        j["bt_error_bound"] = slsid::bt_error_bound(oracle, est.n(), cfg.bound_constant);
        const auto bt = slsid::balanced_truncate_exact(oracle, est.n());
        j["markov_err_vs_truncation"] = slsid::compare_models(est, bt, len).markov_err;
    }
    emit(j);
    return 0;
}

int cmd_run(const Globals& g, bool timing) {
    const slsid::RunReport rep = slsid::run_pipeline(load_or_default(g));
    emit(slsid::run_report_to_json(rep, timing));
    return 0;
}

int cmd_sweep(const Globals& g, bool timing) {
    const slsid::SweepReport rep = slsid::sweep(load_or_default(g));
    if (g.format == "csv")
        std::cout << slsid::sweep_csv(rep);
    else
        emit(slsid::sweep_report_to_json(rep, timing));
    return 0;
}

int cmd_oracle(const Globals& g, const std::string& model_path, const std::string& op, int N, int order, int horizon) {
    slsid::ExperimentConfig cfg = load_or_default(g);
    const slsid::SlsModel model = model_path.empty() ? slsid::build_model(cfg.model) : slsid::load_model(model_path);
    json j{{"op", op}, {"ms_spectral_radius", slsid::ms_spectral_radius(model)}};
    if (op == "gramians") {
        const auto gp = slsid::gramians(model);
        const Eigen::MatrixXd bb = model.B * model.B.transpose();
        const Eigen::MatrixXd cc = model.C.transpose() * model.C;
        j["P"] = matrix_json(gp.P);
        j["Q"] = matrix_json(gp.Q);
        j["relative_residual_P"] = slsid::detail::relative_residual(model, gp.P, bb, false);
        j["relative_residual_Q"] = slsid::detail::relative_residual(model, gp.Q, cc, true);
        j["hankel_singular_values"] = vector_json(slsid::balance_transform(gp).sigma);
    } else if (op == "hankel") {
        const auto H = slsid::exact_hankel(model, N);
        j["N"] = N;
        j["hankel"] = matrix_json(H.data);
        j["truncation_error_sq"] = slsid::truncation_error_sq(model, N);
    } else if (op == "truncate") {
        const int r = order > 0 ? order : model.n();
        const auto bt = slsid::balanced_truncate_exact(model, r);
        j["order"] = bt.n();
        j["model"] = slsid::model_to_json(bt);
        j["bt_error_bound"] = slsid::bt_error_bound(model, bt.n(), cfg.bound_constant);
        j["l2_distance"] = slsid::finite_l2_distance(model, bt, horizon);
        j["horizon"] = horizon;
    } else if (op == "n-star") {
        const double beta = cfg.beta ? *cfg.beta : slsid::energy_bound(model, 12);
        const auto k = slsid::selection_constants(cfg, model.p(), model.m(), model.s(), beta);
        j["N_S"] = cfg.num_rollouts;
        j["beta"] = beta;
        j["N_star"] = slsid::oracle_n_star(model, cfg.num_rollouts, k);
        j["delta_s"] = slsid::delta_s(slsid::ms_spectral_radius(model), model.s());
    } else {
        throw slsid::Error(slsid::Errc::InvalidArgument, "unknown oracle op '" + op + "'");
    }
    emit(j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Switched linear system identification toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "Experiment config (JSON)");
    app.add_option("--seed", g.seed, "Override the config seed");
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

    std::string model, dataset, truth, estimate, op = "gramians";
    std::vector<std::string> estimates;
    int order = -1, max_len = 0, N = 4, horizon = 8;
    bool binary = false, literal = false, timing = false;

    auto* sim = app.add_subcommand("simulate", "Generate rollouts and write a dataset file");
    sim->add_option("--model", model, "Model file (overrides the config model)");

    auto* est = app.add_subcommand("estimate", "Count sequences, compute N_up and the Hankel estimates");
    est->add_option("--dataset", dataset, "Dataset file")->required();
    est->add_option("--truth", truth, "Model file used only to derive beta when the config has none");
    est->add_flag("--binary", binary, "Also write the assembled matrices as binary");

    auto* sel = app.add_subcommand("select", "Choose N_hat from saved Hankel estimates");
    sel->add_option("--estimates", estimates, "Estimate files of sizes 1..L")->required();
    sel->add_option("--truth", truth, "Model file used only to derive beta and delta_s");

    auto* tru = app.add_subcommand("truncate", "Recover a reduced-order model from an estimate");
    tru->add_option("--estimate", estimate, "Estimate file")->required();
    tru->add_option("--order", order, "Model order (0 = effective rank)");
    tru->add_flag("--literal-padding", literal, "Use the 4x padded SVD");

    auto* eva = app.add_subcommand("evaluate", "Compare a recovered model with a reference model");
    eva->add_option("--model", model, "Recovered model file")->required();
    eva->add_option("--truth", truth, "Reference model file")->required();
    eva->add_option("--max-len", max_len, "Longest sequence / horizon compared");

    auto* run = app.add_subcommand("run", "Run the full pipeline for one configuration");
    run->add_flag("--timing", timing, "Include wall times in the report");

    auto* swp = app.add_subcommand("sweep", "Run the pipeline over the N_S grid and seeds");
    swp->add_flag("--timing", timing, "Include wall times in the report");

    auto* ora = app.add_subcommand("oracle", "Exact quantities of a model");
    ora->add_option("--model", model, "Model file (defaults to the config model)");
    ora->add_option("--op", op, "Oracle operation")->check(CLI::IsMember({"gramians", "hankel", "truncate", "n-star"}));
    ora->add_option("--N", N, "Hankel size for --op hankel");
    ora->add_option("--order", order, "Order for --op truncate");
    ora->add_option("--horizon", horizon, "Horizon of the L2 distance for --op truncate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*sim) return cmd_simulate(g, model);
        if (*est) return cmd_estimate(g, dataset, truth, binary);
        if (*sel) return cmd_select(g, estimates, truth);
        if (*tru) return cmd_truncate(g, estimate, order, literal);
        if (*eva) return cmd_evaluate(g, model, truth, max_len);
        if (*run) return cmd_run(g, timing);
        if (*swp) return cmd_sweep(g, timing);
        if (*ora) return cmd_oracle(g, model, op, N, order, horizon);
    } catch (const slsid::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return slsid::is_validation_error(e.code()) ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
