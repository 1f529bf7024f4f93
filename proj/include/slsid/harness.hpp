#pragma once

// End-to-end experiment orchestration:
//   simulate -> count -> n_up -> estimate -> select -> truncate -> evaluate.
// Only the evaluate stage (and beta, when the config omits it) reads the
// true model.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "slsid/config.hpp"
#include "slsid/dataset_io.hpp"
#include "slsid/detail/json_util.hpp"
#include "slsid/estimate_io.hpp"
#include "slsid/estimation.hpp"
#include "slsid/gramians.hpp"
#include "slsid/model_io.hpp"
#include "slsid/model_selection.hpp"
#include "slsid/simulator.hpp"
#include "slsid/truncation.hpp"

namespace slsid {

class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.code(), "stage '" + stage + "': " + cause.detail()), stage_(std::move(stage)) {}
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

namespace detail {

template <typename F>
auto run_stage(const char* name, std::map<std::string, double>& times, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    auto record = [&] {
        times[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            record();
        } else {
            auto out = f();
            record();
            return out;
        }
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Shortest round-trip text of a double, matching the JSON writer.
inline std::string num_text(double v) { return std::isfinite(v) ? json(v).dump() : std::string("nan"); }

}  // namespace detail

inline SelectionConstants selection_constants(const ExperimentConfig& cfg, int p, int m, int s, double beta) {
    SelectionConstants k;
    k.delta = cfg.delta;
    k.beta = beta;
    k.p = p;
    k.m = m;
    k.s = s;
    k.c_threshold = cfg.c_threshold;
    k.c1 = cfg.c1;
    k.c2 = cfg.c2;
    k.validate();
    return k;
}

struct EstimationOutput {
    NUpResult n_up;
    std::vector<HankelEstimate> estimates;  // sizes 1..max(1, N_up)
    double threshold = 0.0;                 // Hankel zeroing threshold
    std::vector<double> n_up_thresholds;
};

// Counts once over the admissible range, then builds the nested family of
// estimates. Zeroing uses n_ref = N_up for every member, so each smaller
// estimate is the top-left corner of the larger ones.
inline EstimationOutput estimation_stage(const Dataset& ds, const SelectionConstants& k, int threads = 1) {
    const int max_len = ds.rollout_length() - 2;
    require(max_len >= 1, Errc::ConfigError, "rollout length must be >= 3");
    const SequenceStats st = count_occurrences(ds, max_len, {false, threads});
    EstimationOutput out;
    out.n_up = compute_n_up(st, k);
    for (int l = 1; l <= max_len; ++l) out.n_up_thresholds.push_back(n_up_threshold(l, k));
    ThresholdRule rule;
    rule.c = k.c_threshold;
    rule.delta = k.delta;
    rule.n_ref = out.n_up.n_up;
    out.threshold = rule.value(k.m, k.s, out.n_up.n_up);
    for (int l = 1; l <= std::max(1, out.n_up.n_up); ++l) out.estimates.push_back(assemble_hankel_estimate(st, l, rule));
    return out;
}

struct TruncationOutput {
    SvdTruncation svd;
    int order = 0;
    SlsModel model;
};

inline TruncationOutput truncation_stage(const HankelEstimate& est, int order, const LearnOptions& opt) {
    TruncationOutput out;
    out.svd = hankel_svd(est.hankel.data, opt.cutoff_rel);
    out.order = order == 0 ? out.svd.effective_rank : order;
    if (out.order < 1) throw Error(Errc::OrderTooLarge, "selected Hankel estimate has effective rank 0");
    if (opt.literal_padding)
        out.model = learn_parameters(est, est.mode_probabilities(), out.order, opt);
    else
        out.model = parameters_from_svd(est.hankel.data, out.svd, est.p, est.m, est.s, est.mode_probabilities(), out.order);
    return out;
}

inline double plugin_beta(const HankelEstimate& est) {
    double b = 0.0;
    for (std::size_t i = 0; i < est.theta_hat.size(); ++i)
        if (!est.zeroed[i]) b = std::max(b, est.theta_hat[i].norm());
    return b;
}

struct RunReport {
    detail::json model_source;
    int num_rollouts = 0;
    std::uint64_t seed = 0;
    int rollout_length = 0;
    double beta = 0.0;
    std::string beta_source;
    double beta_plugin = 0.0;
    int n_up = 0;
    bool n_up_censored = false;
    int n_hat = 0;
    int effective_rank = 0;
    int order = 0;
    std::size_t zeroed = 0;
    std::vector<double> sigma;  // of the selected estimate

    // oracle evaluation
    double hankel_err_sq = detail::nan();         // ||H_hat^(N_hat) - H^(inf)||_F^2
    double hankel_err_sq_finite = detail::nan();  // ||H_hat^(N_hat) - H^(N_hat)||_F^2
    double markov_err = detail::nan();
    double l2_proxy = detail::nan();
    double markov_err_vs_truncation = detail::nan();
    int eval_max_len = 0;
    int n_star = 0;
    double delta_s = detail::nan();
    double ms_radius = detail::nan();
    double n_up_growth_rhs = detail::nan();
    bool n_up_growth_holds = false;
    std::vector<double> true_hsv;
    double gap_gamma = detail::nan();  // Gamma(true HSVs, eps = sqrt(hankel_err_sq))

    std::vector<std::string> warnings;
    std::map<std::string, std::string> artifacts;
    std::map<std::string, double> wall_times;  // seconds per stage
};

inline detail::json run_report_to_json(const RunReport& r, bool include_timing = false) {
    using detail::json;
    using detail::num_or_null;
    json j{{"model", r.model_source},
           {"N_S", r.num_rollouts},
           {"seed", r.seed},
           {"N", r.rollout_length},
           {"beta", r.beta},
           {"beta_source", r.beta_source},
           {"beta_plugin", r.beta_plugin},
           {"N_up", r.n_up},
           {"N_up_censored", r.n_up_censored},
           {"N_hat", r.n_hat},
           {"effective_rank", r.effective_rank},
           {"order", r.order},
           {"zeroed", r.zeroed},
           {"sigma", r.sigma},
           {"warnings", r.warnings},
           {"artifacts", r.artifacts}};
    j["oracle"] = json{{"hankel_err_sq", num_or_null(r.hankel_err_sq)},
                       {"hankel_err_sq_finite", num_or_null(r.hankel_err_sq_finite)},
                       {"markov_err", num_or_null(r.markov_err)},
                       {"l2_proxy", num_or_null(r.l2_proxy)},
                       {"markov_err_vs_truncation", num_or_null(r.markov_err_vs_truncation)},
                       {"eval_max_len", r.eval_max_len},
                       {"N_star", r.n_star},
                       {"delta_s", num_or_null(r.delta_s)},
                       {"ms_radius", num_or_null(r.ms_radius)},
                       {"N_up_growth_rhs", num_or_null(r.n_up_growth_rhs)},
                       {"N_up_growth_holds", r.n_up_growth_holds},
                       {"hankel_singular_values", r.true_hsv},
                       {"gap_gamma", num_or_null(r.gap_gamma)}};
    if (include_timing) j["wall_times"] = r.wall_times;
    return j;
}

namespace detail {

// Writes <kind>-<hash>.<ext> under dir and returns the file name.
inline std::string persist(const std::string& dir, const std::string& kind, const std::string& ext,
                           const std::string& content) {
    const std::string name = kind + "-" + hex64(fnv1a(content)) + "." + ext;
    write_file((std::filesystem::path(dir) / name).string(), content);
    return name;
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + dir + ": " + ec.message());
}

}  // namespace detail

inline RunReport run_pipeline(const ExperimentConfig& cfg) {
    cfg.validate();
    RunReport rep;
    auto& times = rep.wall_times;
    const bool keep = !cfg.out.empty() && cfg.artifacts != ArtifactLevel::None;
    const bool keep_all = keep && cfg.artifacts == ArtifactLevel::All;
    if (keep) detail::run_stage("artifacts", times, [&] { detail::ensure_dir(cfg.out); });

    rep.model_source = model_source_to_json(cfg.model);
    rep.num_rollouts = cfg.num_rollouts;
    rep.seed = cfg.seed;
    rep.rollout_length = cfg.rollout_length;
    rep.eval_max_len = cfg.eval_max_len;

    const SlsModel truth = detail::run_stage("model", times, [&] { return build_model(cfg.model); });

    SimConfig sim;
    sim.num_rollouts = cfg.num_rollouts;
    sim.rollout_length = cfg.rollout_length;
    sim.input_std = cfg.input_std;
    sim.process_noise_std = cfg.process_noise_std;
    sim.output_noise_std = cfg.output_noise_std;
    sim.seed = cfg.seed;
    sim.threads = cfg.threads;
    if (sim.noise_above_unit_proxy()) rep.warnings.emplace_back("noise std above 1 exceeds the unit variance proxy");
    const Dataset ds = detail::run_stage("simulate", times, [&] { return simulate(truth, sim); });
    const std::string ds_text = keep ? dataset_to_string(ds) : std::string();
    const std::string ds_hash = detail::hex64(detail::fnv1a(ds_text));
    if (keep_all) rep.artifacts["dataset"] = detail::persist(cfg.out, "dataset", "jsonl", ds_text);

    // beta is assumed known; without a configured value it comes from the
    // generating model, which is the only pre-evaluation use of the truth
    rep.beta = cfg.beta ? *cfg.beta : energy_bound(truth, 12);
    rep.beta_source = cfg.beta ? "config" : "model";
    const SelectionConstants k = selection_constants(cfg, ds.p, ds.m, ds.s, rep.beta);

    const EstimationOutput est =
        detail::run_stage("estimate", times, [&] { return estimation_stage(ds, k, cfg.threads); });
    rep.n_up = est.n_up.n_up;
    rep.n_up_censored = est.n_up.censored;
    if (est.n_up.censored) rep.warnings.emplace_back("N_up censored at the counted range");
    if (est.n_up.n_up == 0) rep.warnings.emplace_back("N_up = 0; selection ran on the size-1 estimate alone");
    if (keep_all)
        for (const auto& e : est.estimates) {
            auto ej = estimate_to_json(e);
            ej["source_dataset"] = ds_hash;
            rep.artifacts["estimate_" + std::to_string(e.N)] =
                detail::persist(cfg.out, "estimate-l" + std::to_string(e.N), "json", ej.dump(1));
        }

    SelectionReport sel;
    sel.n_up = est.n_up;
    sel.thresholds = est.n_up_thresholds;
    sel.hankel_threshold = est.threshold;
    sel.selection = detail::run_stage("select", times, [&] { return select_n_hat(est.estimates, cfg.num_rollouts, k); });
    rep.n_hat = sel.selection.n_hat;
    const HankelEstimate& chosen = est.estimates[static_cast<std::size_t>(rep.n_hat - 1)];
    rep.zeroed = chosen.zeroed_count();
    rep.beta_plugin = plugin_beta(chosen);
    if (keep) rep.artifacts["selection"] = detail::persist(cfg.out, "selection", "json", selection_report_to_json(sel).dump(1));

    LearnOptions lo;
    lo.literal_padding = cfg.literal_padding;
    lo.cutoff_rel = cfg.rank_cutoff;
    const TruncationOutput tr =
        detail::run_stage("truncate", times, [&] { return truncation_stage(chosen, cfg.order, lo); });
    rep.effective_rank = tr.svd.effective_rank;
    rep.order = tr.order;
    rep.sigma.assign(tr.svd.sigma.data(), tr.svd.sigma.data() + tr.svd.sigma.size());
    if (keep) {
        detail::json prov{{"N_hat", rep.n_hat},
                          {"r", rep.order},
                          {"sigma", rep.sigma},
                          {"zeroed_sequences", rep.zeroed},
                          {"source_dataset", ds_hash}};
        auto mj = model_to_json(tr.model);
        mj["provenance"] = prov;
        rep.artifacts["model"] = detail::persist(cfg.out, "model", "json", mj.dump(2) + "\n");
    }

    detail::run_stage("evaluate", times, [&] {
        rep.ms_radius = ms_spectral_radius(truth);
        const ModelComparison cmp = compare_models(tr.model, truth, cfg.eval_max_len);
        rep.markov_err = cmp.markov_err;
        rep.l2_proxy = cmp.l2_distance;
        if (rep.ms_radius < 1.0) {
            const BlockHankel exact = exact_hankel(truth, chosen.N);
            rep.hankel_err_sq_finite = (chosen.hankel.data - exact.data).squaredNorm();
            rep.hankel_err_sq = rep.hankel_err_sq_finite + truncation_error_sq(truth, chosen.N);
            const SlsModel bt = balanced_truncate_exact(truth, rep.order);
            rep.markov_err_vs_truncation = compare_models(tr.model, bt, cfg.eval_max_len).markov_err;
            rep.n_star = oracle_n_star(truth, cfg.num_rollouts, k);
            const Eigen::VectorXd hsv = hankel_singular_values(truth);
            rep.true_hsv.assign(hsv.data(), hsv.data() + hsv.size());
            const int keep_hsv = detail::effective_rank_of(hsv, cfg.rank_cutoff);
            if (keep_hsv > 0)
                rep.gap_gamma = gap_gamma(hsv.head(keep_hsv), std::sqrt(rep.hankel_err_sq), cfg.chi).gamma;
            if (rep.ms_radius > 0.0) rep.delta_s = delta_s(rep.ms_radius, truth.s());
        } else {
            rep.warnings.emplace_back("true model is not mean-square stable; Hankel oracle skipped");
        }
        const auto probs = truth.probabilities();
        const double p_max = *std::max_element(probs.begin(), probs.end());
        if (p_max < 1.0) {
            rep.n_up_growth_rhs = n_up_growth_rhs(cfg.num_rollouts, p_max, k);
            rep.n_up_growth_holds = n_up_growth_holds(rep.n_up, cfg.num_rollouts, p_max, k);
        }
    });

    if (keep) rep.artifacts["report"] = "report.json";
    if (keep) detail::write_file((std::filesystem::path(cfg.out) / "report.json").string(),
                                 run_report_to_json(rep).dump(2) + "\n");
    return rep;
}

struct SlopeFit {
    double slope = detail::nan();
    double intercept = detail::nan();
    double stderr_slope = detail::nan();
    double ci_low = detail::nan();
    double ci_high = detail::nan();
};

// Least-squares line through (log x, log y) with a 95% t-interval on the slope.
inline SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, Errc::InvalidArgument, "slope fit needs >= 2 points");
    const auto n = static_cast<double>(x.size());
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, Errc::InvalidArgument, "log-log fit needs positive values");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i] / n;
        my += ly[i] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2) {
        double sse = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            const double r = ly[i] - f.intercept - f.slope * lx[i];
            sse += r * r;
        }
        f.stderr_slope = std::sqrt(sse / (n - 2.0) / sxx);
        const boost::math::students_t dist(n - 2.0);
        const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
        f.ci_low = f.slope - t * f.stderr_slope;
        f.ci_high = f.slope + t * f.stderr_slope;
    }
    return f;
}

inline double median(std::vector<double> v) {
    require(!v.empty(), Errc::InvalidArgument, "median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct SweepPoint {
    double num_rollouts = 0.0;
    double median_hankel_err_sq = 0.0;
    double median_markov_err = 0.0;
    double median_n_hat = 0.0;
};

struct SweepReport {
    std::vector<RunReport> runs;  // grid-major, then seed
    std::vector<SweepPoint> points;
    SlopeFit fit;
    double reference_slope = detail::nan();  // -Delta_s
    bool strictly_decreasing = false;
};

inline SweepReport sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    cfg.validate_sweep();
    SweepReport out;
    std::vector<ExperimentConfig> jobs;
    for (double ns : cfg.sweep_grid) {
        for (auto seed : cfg.sweep_seeds) {
            ExperimentConfig c = cfg;
            c.num_rollouts = static_cast<int>(ns);
            c.seed = seed;
            if (!cfg.out.empty())
                c.out = (std::filesystem::path(cfg.out) / ("NS" + std::to_string(c.num_rollouts) + "_seed" +
                                                           std::to_string(seed)))
                            .string();
            jobs.push_back(std::move(c));
        }
    }
    out.runs.resize(jobs.size());
    std::vector<std::exception_ptr> failures(jobs.size());
    const int workers = std::min<int>(cfg.sweep_threads, static_cast<int>(jobs.size()));
    auto work = [&](int w) {
        for (std::size_t i = static_cast<std::size_t>(w); i < jobs.size(); i += static_cast<std::size_t>(workers)) {
            try {
                out.runs[i] = run_pipeline(jobs[i]);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    const std::size_t per = cfg.sweep_seeds.size();
    std::vector<double> xs, ys;
    for (std::size_t g = 0; g < cfg.sweep_grid.size(); ++g) {
        std::vector<double> err, mk, nh;
        for (std::size_t i = g * per; i < (g + 1) * per; ++i) {
            err.push_back(out.runs[i].hankel_err_sq);
            mk.push_back(out.runs[i].markov_err);
            nh.push_back(out.runs[i].n_hat);
        }
        out.points.push_back({cfg.sweep_grid[g], median(err), median(mk), median(nh)});
        xs.push_back(cfg.sweep_grid[g]);
        ys.push_back(out.points.back().median_hankel_err_sq);
    }
    out.strictly_decreasing = true;
    for (std::size_t g = 1; g < ys.size(); ++g)
        if (!(ys[g] < ys[g - 1])) out.strictly_decreasing = false;
    if (std::all_of(ys.begin(), ys.end(), [](double v) { return std::isfinite(v) && v > 0.0; }))
        out.fit = loglog_slope(xs, ys);
    if (!out.runs.empty() && std::isfinite(out.runs[0].delta_s)) out.reference_slope = -out.runs[0].delta_s;
    return out;
}

inline detail::json sweep_report_to_json(const SweepReport& r, bool include_timing = false) {
    using detail::json;
    using detail::num_or_null;
    json runs = json::array();
    for (const auto& run : r.runs) runs.push_back(run_report_to_json(run, include_timing));
    json points = json::array();
    for (const auto& p : r.points)
        points.push_back({{"N_S", p.num_rollouts},
                          {"median_hankel_err_sq", num_or_null(p.median_hankel_err_sq)},
                          {"median_markov_err", num_or_null(p.median_markov_err)},
                          {"median_n_hat", p.median_n_hat}});
    return json{{"runs", std::move(runs)},
                {"points", std::move(points)},
                {"slope", num_or_null(r.fit.slope)},
                {"slope_stderr", num_or_null(r.fit.stderr_slope)},
                {"slope_ci95", {num_or_null(r.fit.ci_low), num_or_null(r.fit.ci_high)}},
                {"reference_slope", num_or_null(r.reference_slope)},
                {"strictly_decreasing", r.strictly_decreasing}};
}

inline constexpr const char* kSweepCsvHeader = "N_S,seed,hankel_err_sq,n_hat,n_up,markov_err,l2_proxy";

inline std::string sweep_csv(const SweepReport& r) {
    std::string out = std::string(kSweepCsvHeader) + "\n";
    for (const auto& run : r.runs) {
        out += std::to_string(run.num_rollouts) + "," + std::to_string(run.seed) + "," +
               detail::num_text(run.hankel_err_sq) + "," + std::to_string(run.n_hat) + "," +
               std::to_string(run.n_up) + "," + detail::num_text(run.markov_err) + "," +
               detail::num_text(run.l2_proxy) + "\n";
    }
    return out;
}

}  // namespace slsid
