#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "latwalk/error.hpp"
#include "latwalk/expansion.hpp"
#include "latwalk/experiment.hpp"
#include "latwalk/lattice.hpp"
#include "latwalk/parallel.hpp"

namespace latwalk {

using json = nlohmann::json;

bool ResultBundle::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

std::string fmt(double x) {
    std::ostringstream out;
    out << std::setprecision(6) << x;
    return out.str();
}

void check_at_most(ResultBundle& b, const std::string& name, double value, double limit) {
    b.checks.push_back({name, value, "<= " + fmt(limit), value <= limit});
}

void check_at_least(ResultBundle& b, const std::string& name, double value, double limit) {
    b.checks.push_back({name, value, ">= " + fmt(limit), value >= limit});
}

void check_within(ResultBundle& b, const std::string& name, double value, double target, double tol) {
    b.checks.push_back({name, value, fmt(target) + " +- " + fmt(tol), std::abs(value - target) <= tol});
}

std::vector<double> doubles(const json& j, const char* key, std::vector<double> fallback) {
    return j.contains(key) ? j[key].get<std::vector<double>>() : fallback;
}

json chi_json(const ChiSquareResult& c) {
    return json{{"statistic", c.statistic}, {"dof", c.dof}, {"p_value", c.p_value}};
}

// ---------------------------------------------------------------------------

ResultBundle run_lyapunov(const ExperimentConfig& cfg) {
    const auto& obs = cfg.observables;
    const auto& th = cfg.thresholds;
    const auto rep = Representation::parse(obs.value("representation", "standard"));
    const bool direct = obs.value("direct_check", false);
    const auto report = lyapunov_spectrum(*cfg.chain, rep, cfg.steps, cfg.replicas, cfg.seed, direct);
    ResultBundle b;
    b.results["representation"] = rep.name();
    b.results["exponents"] = report.exponent_estimates;
    b.results["std_errors"] = report.std_errors;
    if (direct) {
        json sums = json::array();
        for (std::size_t k = 1; k < report.direct_partial_sums.size(); ++k) {
            if (std::isnan(report.direct_partial_sums[k])) continue;
            double qr = 0.0;
            for (std::size_t i = 0; i < k; ++i) qr += report.exponent_estimates[i];
            sums.push_back({{"k", k},
                            {"direct", report.direct_partial_sums[k]},
                            {"direct_se", report.direct_partial_sums_se[k]},
                            {"qr", qr}});
        }
        b.results["direct_partial_sums"] = sums;
    }
    std::vector<GrowthRate> rates;
    if (obs.contains("vectors")) {
        json out = json::array();
        for (const auto& v : obs["vectors"]) {
            const auto entries = v.get<std::vector<double>>();
            const Vec vec = Eigen::Map<const Vec>(entries.data(), static_cast<Eigen::Index>(entries.size()));
            rates.push_back(vector_growth_rate(*cfg.chain, rep, vec, cfg.steps, cfg.replicas, cfg.seed));
            out.push_back({{"vector", entries}, {"rate", rates.back().rate}, {"std_error", rates.back().std_error}});
        }
        b.results["vector_rates"] = out;
    }
    const double tol = th.value("tolerance", 1e-6);
    if (th.contains("exponents")) {
        const auto want = th["exponents"].get<std::vector<double>>();
        for (std::size_t i = 0; i < want.size(); ++i)
            check_within(b, "exponent[" + std::to_string(i) + "]",
                         i < report.exponent_estimates.size() ? report.exponent_estimates[i] : NAN, want[i], tol);
    }
    if (th.contains("vector_rates")) {
        const auto want = th["vector_rates"].get<std::vector<double>>();
        for (std::size_t i = 0; i < want.size(); ++i)
            check_within(b, "vector_rate[" + std::to_string(i) + "]", i < rates.size() ? rates[i].rate : NAN, want[i],
                         tol);
    }
    return b;
}

ResultBundle run_expansion(const ExperimentConfig& cfg) {
    const auto& obs = cfg.observables;
    const auto& th = cfg.thresholds;
    const auto rep = Representation::parse(obs.value("representation", "adjoint"));
    const int big_d = rep.dim(cfg.chain->dim());
    std::vector<int> grades;
    if (obs.contains("grades")) {
        grades = obs["grades"].get<std::vector<int>>();
    } else {
        for (int k = 1; k < big_d; ++k) grades.push_back(k);
    }
    ExpansionOptions opt;
    opt.n_steps = cfg.steps;
    opt.n_samples = obs.value("samples", opt.n_samples);
    ResultBundle b;
    b.results["representation"] = rep.name();
    json verdicts = json::array();
    std::vector<ExpansionVerdict> all(grades.size());
    parallel_for(grades.size(), [&](std::size_t i) {
        all[i] = grassmannian_expansion_check(*cfg.chain, rep, grades[i], opt, cfg.seed + static_cast<std::uint64_t>(i));
    });
    for (const auto& v : all)
        verdicts.push_back({{"grade", v.grade},
                            {"verdict", v.counterexample ? "counterexample" : "no_counterexample_found"},
                            {"min_sampled_rate", v.min_sampled_rate},
                            {"min_rate_se", v.min_rate_se},
                            {"witness_rate", v.witness_rate},
                            {"witness_rate_se", v.witness_rate_se},
                            {"mc_criterion", v.mc_criterion_value},
                            {"mc_criterion_se", v.mc_criterion_se},
                            {"candidates", v.candidates}});
    b.results["grades"] = verdicts;
    if (th.contains("expect_counterexample")) {
        const bool want = th["expect_counterexample"].get<bool>();
        for (const auto& v : all)
            b.checks.push_back({"counterexample[k=" + std::to_string(v.grade) + "]", v.counterexample ? 1.0 : 0.0,
                                want ? "== 1" : "== 0", v.counterexample == want});
    }
    if (th.contains("min_rate"))
        for (const auto& v : all)
            check_at_least(b, "min_rate[k=" + std::to_string(v.grade) + "]", v.min_sampled_rate,
                           th["min_rate"].get<double>());
    return b;
}

ResultBundle run_walk_kind(const ExperimentConfig& cfg) {
    const auto& obs = cfg.observables;
    const auto& th = cfg.thresholds;
    WalkObservables wo;
    wo.eps_list = doubles(obs, "eps_list", wo.eps_list);
    wo.radii = doubles(obs, "radii", wo.radii);
    wo.joint_stride = obs.value("joint_stride", wo.joint_stride);
    wo.batch_length = obs.value("batch_length", wo.batch_length);
    const std::size_t trace_stride = obs.value("trace_stride", std::size_t{1000});
    std::vector<std::string> errors;
    const LatticePoint x0 = obs.contains("x0") ? LatticePoint(matrix_from_json(obs["x0"], "observables.x0", errors))
                                               : LatticePoint::standard(cfg.chain->dim());
    const auto walk =
        run_walk_replicas(*cfg.chain, x0, cfg.steps, wo, cfg.seed, cfg.replicas, trace_stride, cfg.replica_offset);
    const auto rep = equidistribution_report(walk.merged);
    ResultBundle b;
    b.results["step_count"] = rep.step_count;
    json escape = json::array();
    for (std::size_t i = 0; i < rep.eps.size(); ++i)
        escape.push_back({{"eps", rep.eps[i]}, {"fraction", rep.escape_fractions[i]}});
    b.results["escape"] = escape;
    json siegel = json::array();
    for (const auto& s : rep.siegel)
        siegel.push_back({{"radius", s.radius},
                          {"average", s.average},
                          {"std_error", s.std_error},
                          {"target", s.target},
                          {"relative_error", s.relative_error}});
    b.results["siegel"] = siegel;
    b.results["independence"] = chi_json(rep.independence);
    b.results["occupied_bins"] = rep.occupied_bins;
    b.results["accumulator"] = walk.merged;
    if (trace_stride > 0 && !walk.traces.empty()) {
        auto& rows = b.series["walk_shortest"];
        for (const auto& p : walk.traces.front()) rows.emplace_back(static_cast<double>(p.step), p.shortest);
    }
    if (th.contains("escape"))
        for (const auto& e : th["escape"]) {
            const double eps = e.at("eps").get<double>();
            const auto it = std::find_if(rep.eps.begin(), rep.eps.end(), [&](double x) { return std::abs(x - eps) < 1e-12; });
            const double frac = it == rep.eps.end() ? NAN : rep.escape_fractions[static_cast<std::size_t>(it - rep.eps.begin())];
            check_at_most(b, "escape_fraction[eps=" + fmt(eps) + "]", frac, e.at("max_fraction").get<double>());
        }
    if (th.contains("siegel_rel_tol"))
        for (const auto& s : rep.siegel)
            check_at_most(b, "siegel_rel_error[R=" + fmt(s.radius) + "]", std::abs(s.relative_error),
                          th["siegel_rel_tol"].get<double>());
    if (th.contains("independence_alpha"))
        check_at_least(b, "independence_p_value", rep.independence.p_value, th["independence_alpha"].get<double>());
    return b;
}

ResultBundle run_renewal(const ExperimentConfig& cfg) {
    const auto& obs = cfg.observables;
    const auto& th = cfg.thresholds;
    const auto& chain = *cfg.chain;
    const std::string anchor_name = obs.contains("anchor") ? obs["anchor"].get<std::string>() : chain.labels.front();
    const int anchor = chain.index_of(anchor_name);
    const int m_dim = obs.value("m_dim", 1);
    const int n_dim = obs.value("n_dim", chain.dim() - m_dim);
    Rng rng(cfg.seed, cfg.replica_offset);
    Rng word_rng = rng.split();
    const auto id = renewal_t_identity(chain, anchor, cfg.steps, rng, m_dim, n_dim);
    ResultBundle b;
    b.results["anchor"] = anchor_name;
    b.results["excursions"] = cfg.steps;
    b.results["lhs"] = id.lhs;
    b.results["lhs_se"] = id.lhs_se;
    b.results["rhs"] = id.rhs;
    b.results["drift"] = id.drift;
    b.results["z_score"] = id.z_score;
    if (obs.value("word_test", true)) {
        const auto wt = excursion_word_test(chain, anchor, cfg.steps, word_rng, obs.value("word_mass", 0.999));
        b.results["word_test"] = chi_json(wt);
        if (th.contains("word_test_alpha"))
            check_at_least(b, "word_test_p_value", wt.p_value, th["word_test_alpha"].get<double>());
    }
    if (th.contains("max_abs_z")) check_at_most(b, "abs_z_score", std::abs(id.z_score), th["max_abs_z"].get<double>());
    if (th.contains("rhs")) check_within(b, "rhs", id.rhs, th["rhs"].get<double>(), th.value("rhs_tol", 1e-9));
    return b;
}

// Edges needed so that the contraction product falls below `tol` relative to
// the projection's scale.
std::size_t path_length_for(const GDIFS& g, double log_tol) {
    double max_b = 0.0;
    for (const auto& e : g.edges) max_b = std::max(max_b, e.map.translation.cwiseAbs().maxCoeff());
    const double r = g.max_ratio();
    const double scale = 1.0 + max_b / (1.0 - r);
    return static_cast<std::size_t>(std::ceil((log_tol - std::log(scale)) / std::log(r))) + 8;
}

struct AlphaSpec {
    std::string label;
    MatR value;
};

AlphaSpec parse_alpha(const json& a, std::size_t index) {
    const json v = a.is_object() ? a.at("value") : a;
    AlphaSpec out;
    out.label = a.is_object() && a.contains("label") ? a["label"].get<std::string>()
                                                     : (v.is_string() ? v.get<std::string>() : "alpha" + std::to_string(index));
    out.value = MatR(1, 1);
    out.value(0, 0) = v.is_string() ? parse_real(v.get<std::string>()) : Real(v.get<double>());
    return out;
}

json dioph_json(const DiophReport& r) {
    json curve = json::array();
    for (std::size_t i = 0; i < r.direct_search_curve.q_max.size(); ++i)
        curve.push_back({{"q_max", r.direct_search_curve.q_max[i]},
                         {"cumulative", r.direct_search_curve.cumulative[i]},
                         {"shell", r.direct_search_curve.shell[i]}});
    json escape = json::array();
    for (const auto& e : r.escape)
        escape.push_back(
            {{"lambda", e.lambda}, {"outside_at_end", e.outside_at_end}, {"last_exit_time", e.last_exit_time}});
    return json{{"horizon", r.horizon},
                {"dt", r.dt},
                {"samples", r.samples},
                {"trajectory_min_shortest", r.trajectory_min_shortest},
                {"trajectory_min_shortest_euclidean", r.trajectory_min_shortest_euclidean},
                {"escape", escape},
                {"direct_search", curve},
                {"radii", r.radii},
                {"siegel_time_average", r.siegel_time_average},
                {"siegel_targets", r.siegel_targets},
                {"badly_approximable_evidence", r.badly_approx_evidence},
                {"dirichlet_improvable_evidence", r.dirichlet_improvable_evidence},
                {"generic_type_evidence", r.generic_type_evidence}};
}

ResultBundle run_fractal(const ExperimentConfig& cfg) {
    const auto& obs = cfg.observables;
    const auto& th = cfg.thresholds;
    ResultBundle b;
    TrajectoryOptions topt;
    topt.horizon = obs.value("horizon", topt.horizon);
    topt.dt = obs.value("dt", topt.dt);
    topt.eps_list = doubles(obs, "eps_list", topt.eps_list);
    topt.radii = doubles(obs, "radii", topt.radii);
    topt.direct_q_max = obs.value("direct_q_max", 0L);
    if (th.contains("badly_approx_min")) topt.thresholds.badly_approx_min = th["badly_approx_min"].get<double>();
    if (th.contains("dirichlet_lambda")) topt.thresholds.dirichlet_lambda = th["dirichlet_lambda"].get<double>();
    if (th.contains("generic_rel_tol")) topt.thresholds.generic_rel_tol = th["generic_rel_tol"].get<double>();

    if (cfg.gdifs) {
        const GDIFS& g = *cfg.gdifs;
        const double dim = hausdorff_dimension(g);
        b.results["hausdorff_dimension"] = dim;
        if (th.contains("dimension"))
            check_within(b, "hausdorff_dimension", dim, th["dimension"].get<double>(), th.value("dimension_tol", 1e-9));

        const std::size_t points = obs.value("points", std::size_t{200});
        const std::size_t n_digits = obs.value("digits", std::size_t{200});
        const std::size_t traj_points = obs.value("trajectory_points", std::size_t{0});
        const bool one_dim = g.m_dim == 1 && g.n_dim == 1;
        // n partial quotients of a typical number need about 1.03 n decimal
        // digits (Levy); 1.3 n leaves margin.
        const double log_tol = -std::log(10.0) * std::min(260.0, 1.3 * static_cast<double>(n_digits));
        const std::size_t length = path_length_for(g, log_tol);
        const ChainSpec wang = wang_measure(g);
        std::vector<ProjectionR> projected(points);
        parallel_for(points, [&](std::size_t i) {
            Rng rng(cfg.seed, cfg.replica_offset + i);
            const auto w = sample_path(wang, length, rng);
            projected[i] = natural_project_mp(g, eventually_periodic(w, {}), boost::multiprecision::exp(Real(log_tol)));
        });
        if (one_dim && points > 0) {
            std::vector<std::vector<int>> expansions;
            std::size_t exhausted = 0, skipped = 0;
            for (const auto& p : projected) {
                const Real lo = p.point(0, 0) - p.error_bound;
                const Real hi = p.point(0, 0) + p.error_bound;
                if (lo <= 0 || hi >= 1) {
                    ++skipped;
                    continue;
                }
                auto cf = cf_digits(lo, hi, n_digits);
                exhausted += cf.precision_exhausted;
                expansions.push_back(std::move(cf.digits));
            }
            b.results["points"] = points;
            b.results["points_outside_unit_interval"] = skipped;
            b.results["precision_exhausted"] = exhausted;
            if (expansions.size() >= 100) {
                const auto gs = gauss_statistics(expansions);
                json freq = json::array();
                for (std::size_t k = 0; k < gs.frequencies.size(); ++k)
                    freq.push_back({{"digit", k + 1 == gs.frequencies.size() ? json(std::to_string(k + 1) + "+") : json(k + 1)},
                                    {"frequency", gs.frequencies[k]},
                                    {"predicted", gs.predicted[k]},
                                    {"deviation", gs.deviations[k]}});
                b.results["gauss"] = {{"digits", gs.digits},
                                      {"digit1_frequency", gs.digit1_frequency},
                                      {"digit1_predicted", gauss_probability(1)},
                                      {"frequencies", freq},
                                      {"chi_square", chi_json(gs.chi_square)},
                                      {"non_generic", gs.non_generic}};
                if (th.contains("digit1_range")) {
                    const auto r = th["digit1_range"].get<std::vector<double>>();
                    b.checks.push_back({"digit1_frequency", gs.digit1_frequency, "[" + fmt(r.at(0)) + ", " + fmt(r.at(1)) + "]",
                                        gs.digit1_frequency >= r.at(0) && gs.digit1_frequency <= r.at(1)});
                }
                if (th.contains("gauss_alpha"))
                    check_at_least(b, "gauss_chi_square_p_value", gs.chi_square.p_value, th["gauss_alpha"].get<double>());
            } else if (th.contains("digit1_range") || th.contains("gauss_alpha")) {
                b.checks.push_back({"gauss_points", static_cast<double>(expansions.size()), ">= 100", false});
            }
        }
        if (traj_points > 0) {
            const std::size_t n = std::min(traj_points, points);
            std::vector<DiophReport> reports(n);
            parallel_for(n, [&](std::size_t i) { reports[i] = trajectory_report(projected[i].point, topt); });
            std::vector<RunningStats> siegel(topt.radii.size());
            RunningStats min_shortest;
            std::size_t generic = 0;
            for (const auto& r : reports) {
                for (std::size_t k = 0; k < siegel.size(); ++k) siegel[k].push(r.siegel_time_average[k]);
                min_shortest.push(r.trajectory_min_shortest);
                generic += r.generic_type_evidence;
            }
            json avg = json::array();
            for (std::size_t k = 0; k < siegel.size(); ++k) {
                const double target = ball_volume(g.m_dim + g.n_dim, topt.radii[k]);
                avg.push_back({{"radius", topt.radii[k]},
                               {"mean", siegel[k].mean()},
                               {"std_error", siegel[k].std_error()},
                               {"target", target},
                               {"relative_error", (siegel[k].mean() - target) / target}});
                if (th.contains("siegel_rel_tol"))
                    check_at_most(b, "fractal_siegel_rel_error[R=" + fmt(topt.radii[k]) + "]",
                                  std::abs(siegel[k].mean() - target) / target, th["siegel_rel_tol"].get<double>());
            }
            b.results["fractal_trajectories"] = {{"points", n},
                                                 {"horizon", topt.horizon},
                                                 {"siegel", avg},
                                                 {"mean_min_shortest", min_shortest.mean()},
                                                 {"generic_type_fraction", static_cast<double>(generic) / static_cast<double>(n)}};
            auto& rows = b.series["fractal_trajectory_0"];
            for (const auto& [t, s] : reports.front().trace) rows.emplace_back(t, s);
        }
    }

    if (obs.contains("alphas")) {
        const auto& alphas = obs["alphas"];
        std::vector<AlphaSpec> specs;
        for (std::size_t i = 0; i < alphas.size(); ++i) specs.push_back(parse_alpha(alphas[i], i));
        std::vector<DiophReport> reports(specs.size());
        parallel_for(specs.size(), [&](std::size_t i) { reports[i] = trajectory_report(specs[i].value, topt); });
        json out = json::object();
        const json expect = th.value("alphas", json::object());
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const auto& r = reports[i];
            const auto& label = specs[i].label;
            out[label] = dioph_json(r);
            auto& rows = b.series["trajectory_" + label];
            for (const auto& [t, s] : r.trace) rows.emplace_back(t, s);
            if (!expect.contains(label)) continue;
            const auto& e = expect[label];
            if (e.contains("min_shortest_at_least"))
                check_at_least(b, label + ".trajectory_min_shortest", r.trajectory_min_shortest,
                               e["min_shortest_at_least"].get<double>());
            if (e.contains("min_shortest_at_most"))
                check_at_most(b, label + ".trajectory_min_shortest", r.trajectory_min_shortest,
                              e["min_shortest_at_most"].get<double>());
            const auto& curve = r.direct_search_curve;
            if (e.contains("direct_value") && !curve.shell.empty())
                check_within(b, label + ".direct_search_shell", curve.shell.back(), e["direct_value"].get<double>(),
                             e.value("direct_tol", 1e-3));
            if (e.contains("direct_at_most") && !curve.cumulative.empty())
                check_at_most(b, label + ".direct_search_cumulative", curve.cumulative.back(),
                              e["direct_at_most"].get<double>());
        }
        b.results["alphas"] = out;
    }
    return b;
}

ResultBundle run_magic(const ExperimentConfig& cfg) {
    const auto& obs = cfg.observables;
    const auto& th = cfg.thresholds;
    const GDIFS& g = *cfg.gdifs;
    const std::size_t cases = obs.value("cases", std::size_t{100});
    const std::size_t max_n = obs.value("max_n", std::size_t{50});
    const double tol = obs.value("tol", 1e-10);
    const std::size_t extra = path_length_for(g, std::log(tol));
    const ChainSpec wang = wang_measure(g);
    std::vector<MagicFormulaResult> results(cases);
    std::vector<std::size_t> ns(cases);
    parallel_for(cases, [&](std::size_t i) {
        Rng rng(cfg.seed, cfg.replica_offset + i);
        ns[i] = 1 + static_cast<std::size_t>(rng.next_u64() % max_n);
        const auto w = sample_path(wang, ns[i] + extra, rng);
        results[i] = magic_formula_check(g, w, ns[i], tol);
    });
    ResultBundle b;
    double worst = 0.0;
    auto& rows = b.series["magic_residual"];
    for (std::size_t i = 0; i < cases; ++i) {
        worst = std::max(worst, results[i].residual);
        rows.emplace_back(static_cast<double>(ns[i]), results[i].residual);
    }
    b.results["cases"] = cases;
    b.results["max_residual"] = worst;
    if (th.contains("max_residual")) check_at_most(b, "max_residual", worst, th["max_residual"].get<double>());
    return b;
}

}  // namespace

ResultBundle run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::Lyapunov: return run_lyapunov(cfg);
        case ExperimentKind::ExpansionCheck: return run_expansion(cfg);
        case ExperimentKind::WalkEquidistribution: return run_walk_kind(cfg);
        case ExperimentKind::RenewalIdentity: return run_renewal(cfg);
        case ExperimentKind::FractalDioph: return run_fractal(cfg);
        case ExperimentKind::MagicFormula: return run_magic(cfg);
    }
    throw Error(ErrorKind::Validation, "run_experiment: unknown kind");
}

// ---------------------------------------------------------------------------
// output

json round_significant(const json& j, int digits) {
    if (j.is_number_float()) {
        const double x = j.get<double>();
        if (!std::isfinite(x)) return x > 0 ? json("inf") : x < 0 ? json("-inf") : json("nan");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*g", digits, x);
        return std::strtod(buf, nullptr);
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& x : j) out.push_back(round_significant(x, digits));
        return out;
    }
    if (j.is_object()) {
        json out = json::object();
        for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = round_significant(it.value(), digits);
        return out;
    }
    return j;
}

namespace {

json header(const ExperimentConfig& cfg) {
    json j{{"schema", kResultsSchema},
           {"kind", to_string(cfg.kind)},
           {"seed", cfg.seed},
           {"replicas", cfg.replicas},
           {"replica_offset", cfg.replica_offset},
           {"steps", cfg.steps}};
    if (!cfg.preset.empty()) j["preset"] = cfg.preset;
    return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Validation, path.string() + ": cannot write");
    out << text;
}

std::string format_value(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

}  // namespace

void write_bundle(const ExperimentConfig& cfg, const ResultBundle& bundle, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    json j = header(cfg);
    j["results"] = bundle.results;
    json checks = json::array();
    for (const auto& c : bundle.checks)
        checks.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"pass", c.pass}});
    j["checks"] = checks;
    j["pass"] = bundle.pass();
    json series = json::array();
    for (const auto& [stem, rows] : bundle.series) series.push_back(stem + ".csv");
    j["series"] = series;
    write_text(out_dir / "results.json", round_significant(j).dump(2) + "\n");
    for (const auto& [stem, rows] : bundle.series) {
        std::string text = "step,value\n";
        for (const auto& [step, value] : rows) text += format_value(step) + "," + format_value(value) + "\n";
        write_text(out_dir / (stem + ".csv"), text);
    }
}

void write_alarm(const ExperimentConfig& cfg, const std::string& kind, const std::string& message,
                 const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    json j = header(cfg);
    j["error"] = {{"kind", kind}, {"message", message}};
    j["pass"] = false;
    write_text(out_dir / "results.json", j.dump(2) + "\n");
}

std::string render_report(const std::filesystem::path& out_dir) {
    std::ifstream in(out_dir / "results.json");
    if (!in) throw Error(ErrorKind::Validation, (out_dir / "results.json").string() + ": cannot open");
    const json j = json::parse(in);
    std::ostringstream out;
    out << "kind " << j.value("kind", "?") << "  seed " << j.value("seed", json()).dump() << "  replicas "
        << j.value("replicas", json()).dump() << "  steps " << j.value("steps", json()).dump() << "\n";
    if (j.contains("error")) {
        out << "ALARM " << j["error"].value("kind", "") << ": " << j["error"].value("message", "") << "\n";
        return out.str();
    }
    if (j.contains("checks") && !j["checks"].empty()) {
        out << "\n" << std::left << std::setw(44) << "check" << std::setw(18) << "value" << std::setw(22) << "limit"
            << "verdict\n";
        for (const auto& c : j["checks"])
            out << std::left << std::setw(44) << c.value("name", "") << std::setw(18) << c["value"].dump()
                << std::setw(22) << c.value("limit", "") << (c.value("pass", false) ? "pass" : "FAIL") << "\n";
    }
    out << "\noverall " << (j.value("pass", false) ? "pass" : "FAIL") << "\n";
    for (const auto& name : j.value("series", json::array())) {
        std::ifstream csv(out_dir / name.get<std::string>());
        std::string line;
        std::getline(csv, line);
        std::size_t rows = 0;
        double first_step = NAN, last_step = NAN, lo = INFINITY, hi = -INFINITY, sum = 0.0;
        while (std::getline(csv, line)) {
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            const double step = std::strtod(line.c_str(), nullptr);
            const double v = std::strtod(line.c_str() + comma + 1, nullptr);
            if (rows == 0) first_step = step;
            last_step = step;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
            ++rows;
        }
        out << "\nseries " << name.get<std::string>() << ": " << rows << " rows";
        if (rows)
            out << ", step " << format_value(first_step) << ".." << format_value(last_step) << ", min "
                << format_value(lo) << ", mean " << format_value(sum / static_cast<double>(rows)) << ", max "
                << format_value(hi);
        out << "\n";
    }
    return out.str();
}

}  // namespace latwalk
