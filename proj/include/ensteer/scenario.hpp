#pragma once

// Scenario files: versioned JSON describing one experiment (steering run,
// rank test, or reduction convergence study). Validation is strict: unknown
// keys are rejected, defaults are filled in, and every report embeds the
// fully resolved scenario so runs replay from their own output.

#include <set>

#include "ensteer/field_expr.hpp"
#include "ensteer/io.hpp"

namespace ensteer {

inline constexpr const char* kScenarioSchema = "ensteer-scenario-v1";

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
    if (!obj.is_object()) throw SchemaError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw SchemaError(where + ": unknown key '" + key + "'");
    }
}

inline double require_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw SchemaError(where + ": missing numeric '" + key + "'");
    return obj[key].get<double>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline FieldFamily build_system(const json& spec) {
    detail::check_keys(spec, {"builtin", "fields"}, "system");
    if (spec.contains("builtin")) {
        const std::string id = spec["builtin"].get<std::string>();
        if (id == "gauss2d") return gauss2d_family();
        if (id == "shear2d") return shear2d_family();
        throw SchemaError("system: unknown builtin '" + id + "'");
    }
    if (!spec.contains("fields") || !spec["fields"].is_array() || spec["fields"].empty())
        throw SchemaError("system: need 'builtin' or a nonempty 'fields' array");
    std::vector<SmoothField> members;
    int index = 1;
    for (const auto& fj : spec["fields"]) {
        if (!fj.is_array()) throw SchemaError("system.fields: each field is an expression list");
        std::vector<std::string> exprs;
        for (const auto& e : fj) exprs.push_back(e.get<std::string>());
        try {
            members.push_back(parse_field(exprs, "f" + std::to_string(index)));
        } catch (const StructuralError& err) {
            throw SchemaError(std::string("system.fields: ") + err.what());
        }
        ++index;
    }
    return FieldFamily(std::move(members));
}

inline Ensemble build_ensemble(const json& spec, int n_theta, int dim) {
    detail::check_keys(spec, {"coords", "csv"}, "ensemble");
    if (spec.contains("csv")) return io::read_ensemble_csv(spec["csv"].get<std::string>());
    if (!spec.contains("coords"))
        throw SchemaError("ensemble: need 'coords' expressions or a 'csv' path");
    const auto& coords = spec["coords"];
    if (!coords.is_array() || static_cast<int>(coords.size()) != dim)
        throw SchemaError("ensemble.coords: need one expression per coordinate");
    std::vector<GaussPoly> profile;
    for (const auto& e : coords) {
        try {
            profile.push_back(parse_expression(e.get<std::string>(), {"theta"}));
        } catch (const StructuralError& err) {
            throw SchemaError(std::string("ensemble.coords: ") + err.what());
        }
    }
    std::vector<double> grid(n_theta);
    std::vector<Point> pts(n_theta, Point(dim));
    for (int i = 0; i < n_theta; ++i) {
        grid[i] = static_cast<double>(i) / (n_theta - 1);
        for (int c = 0; c < dim; ++c) pts[i][c] = profile[c].eval(&grid[i]);
    }
    return Ensemble(std::move(grid), std::move(pts));
}

inline BracketDictionary build_dictionary(const json& spec, const FieldFamily& family) {
    if (spec.is_string()) {
        const std::string s = spec.get<std::string>();
        if (s.rfind("hermite:", 0) == 0) {
            const int m = std::stoi(s.substr(8));
            if (m < 1 || m > 64) throw SchemaError("dictionary: hermite order out of range");
            return BracketDictionary::hermite_tower(family, m);
        }
        throw SchemaError("dictionary: unknown shorthand '" + s + "'");
    }
    detail::check_keys(spec, {"words"}, "dictionary");
    if (!spec.contains("words") || !spec["words"].is_array())
        throw SchemaError("dictionary: need 'words' or the hermite:M shorthand");
    std::vector<BracketWord> words;
    int max_depth = 1;
    for (const auto& w : spec["words"]) {
        try {
            words.push_back(BracketWord::parse(w.get<std::string>()));
        } catch (const StructuralError& err) {
            throw SchemaError(std::string("dictionary.words: ") + err.what());
        }
        max_depth = std::max(max_depth, words.back().depth());
    }
    return BracketDictionary(family, std::move(words),
                             std::max(kDefaultBracketDepthCap, max_depth));
}

inline CompactBox build_box(const json& spec, int dim) {
    detail::check_keys(spec, {"min", "max", "resolution"}, "box");
    if (!spec.contains("min") || !spec.contains("max"))
        throw SchemaError("box: need 'min' and 'max' arrays");
    auto lo = spec["min"].get<std::vector<double>>();
    auto hi = spec["max"].get<std::vector<double>>();
    std::vector<int> res(dim, 5);
    if (spec.contains("resolution")) {
        if (spec["resolution"].is_number())
            res.assign(dim, spec["resolution"].get<int>());
        else
            res = spec["resolution"].get<std::vector<int>>();
    }
    if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim ||
        static_cast<int>(res.size()) != dim)
        throw SchemaError("box: axis count mismatch");
    try {
        return CompactBox(std::move(lo), std::move(hi), std::move(res));
    } catch (const StructuralError& err) {
        throw SchemaError(std::string("box: ") + err.what());
    }
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct Scenario {
    std::string name;
    std::string task;  // steer | rank | convergence
    json resolved;     // defaults filled; embedded into every report
};

inline Scenario parse_scenario(const json& raw) {
    detail::check_keys(raw,
                       {"schema", "name", "task", "system", "ensemble", "diffeotopy",
                        "dictionary", "settings", "rank", "convergence", "output"},
                       "scenario");
    if (!raw.contains("schema") || raw["schema"] != kScenarioSchema)
        throw SchemaError(std::string("scenario: 'schema' must be \"") + kScenarioSchema + "\"");
    if (!raw.contains("task") || !raw["task"].is_string())
        throw SchemaError("scenario: missing 'task'");
    Scenario sc;
    sc.task = raw["task"].get<std::string>();
    if (sc.task != "steer" && sc.task != "rank" && sc.task != "convergence")
        throw SchemaError("scenario: task must be steer, rank or convergence");
    sc.name = raw.value("name", std::string("unnamed"));

    json resolved = raw;
    json& settings = resolved["settings"];
    if (!settings.is_object()) settings = json::object();
    detail::check_keys(settings,
                       {"n_theta", "lambda", "eps", "time_nodes", "control_grid",
                        "checkpoints", "h_max", "samples_per_period", "tolerance",
                        "ladder_ratio", "rho", "max_frequency", "box", "comparison_box",
                        "seed", "threads"},
                       "settings");
    auto fill = [&settings](const char* key, json v) {
        if (!settings.contains(key)) settings[key] = std::move(v);
    };
    fill("n_theta", 101);
    fill("lambda", 10.0);
    fill("eps", json::array({0.05}));
    fill("time_nodes", 33);
    fill("control_grid", 257);
    fill("checkpoints", 16);
    fill("h_max", 0.01);
    fill("samples_per_period", 40.0);
    fill("ladder_ratio", 0.0);
    fill("rho", 10.0);
    fill("max_frequency", 2e6);
    fill("seed", 1);
    if (settings["eps"].is_number()) settings["eps"] = json::array({settings["eps"]});

    if (!resolved.contains("output")) resolved["output"] = json::object();
    detail::check_keys(resolved["output"], {"dir", "formats"}, "output");
    if (!resolved["output"].contains("dir")) resolved["output"]["dir"] = "out";
    if (!resolved["output"].contains("formats"))
        resolved["output"]["formats"] = json::array({"json", "csv"});

    if (!resolved.contains("system")) throw SchemaError("scenario: missing 'system'");
    sc.resolved = std::move(resolved);
    return sc;
}

// ---------------------------------------------------------------------------
// Task runners
// ---------------------------------------------------------------------------

struct RunOutput {
    std::filesystem::path dir;
    std::vector<std::string> files;
    std::string summary;
};

namespace detail {

inline FlowSettings flow_settings_from(const json& settings) {
    FlowSettings f;
    f.h_max = settings["h_max"].get<double>();
    f.samples_per_period = settings["samples_per_period"].get<double>();
    return f;
}

inline bool wants_format(const json& output, const std::string& fmt) {
    for (const auto& f : output["formats"])
        if (f.get<std::string>() == fmt) return true;
    return false;
}

}  // namespace detail

inline RunOutput run_steer_task(const Scenario& sc, const std::filesystem::path& out_dir) {
    const json& r = sc.resolved;
    const json& settings = r["settings"];
    FieldFamily family = build_system(r["system"]);
    const int dim = family.dim();
    const int n_theta = settings["n_theta"].get<int>();

    if (!r.contains("ensemble") || !r["ensemble"].is_object())
        throw SchemaError("steer: missing 'ensemble'");
    detail::check_keys(r["ensemble"], {"alpha", "omega"}, "ensemble");
    if (!r["ensemble"].contains("alpha")) throw SchemaError("steer: missing ensemble.alpha");
    Ensemble alpha = build_ensemble(r["ensemble"]["alpha"], n_theta, dim);

    if (!r.contains("diffeotopy")) throw SchemaError("steer: missing 'diffeotopy'");
    detail::check_keys(r["diffeotopy"], {"generator", "horizon"}, "diffeotopy");
    if (!r["diffeotopy"].contains("generator"))
        throw SchemaError("diffeotopy: missing 'generator'");
    std::vector<std::string> gen_exprs;
    for (const auto& e : r["diffeotopy"]["generator"]) gen_exprs.push_back(e.get<std::string>());
    if (static_cast<int>(gen_exprs.size()) != dim)
        throw SchemaError("diffeotopy.generator: one expression per coordinate");
    SmoothField generator = [&] {
        try {
            return parse_field(gen_exprs, "Y");
        } catch (const StructuralError& err) {
            throw SchemaError(std::string("diffeotopy.generator: ") + err.what());
        }
    }();
    const double horizon = detail::require_number(r["diffeotopy"], "horizon", "diffeotopy");
    Diffeotopy d(ControlledRHS::autonomous(generator), alpha, horizon);

    if (!r.contains("dictionary")) throw SchemaError("steer: missing 'dictionary'");
    BracketDictionary dict = build_dictionary(r["dictionary"], family);

    SteeringSettings ss;
    ss.time_nodes = settings["time_nodes"].get<int>();
    ss.control_grid = settings["control_grid"].get<int>();
    ss.checkpoints = settings["checkpoints"].get<int>();
    if (settings.contains("tolerance")) ss.tolerance = settings["tolerance"].get<double>();
    ss.ladder_ratio = settings["ladder_ratio"].get<double>();
    ss.rho_min = settings["rho"].get<double>();
    ss.max_frequency = settings["max_frequency"].get<double>();
    if (!settings.contains("box")) throw SchemaError("steer: settings.box is required");
    ss.certificate_box = build_box(settings["box"], dim);
    if (settings.contains("comparison_box"))
        ss.comparison_box = build_box(settings["comparison_box"], dim);
    ss.flow = detail::flow_settings_from(settings);

    const double lambda = settings["lambda"].get<double>();
    const double eps = settings["eps"][0].get<double>();

    SteeringResult res = steer(family, d, dict, lambda, eps, ss);
    auto gron = verify_gronwall(res.report);

    RunOutput out;
    out.dir = out_dir;
    json report;
    report["scenario"] = sc.resolved;
    report["report"] = io::steering_report_to_json(res.report);
    report["gronwall"] = {{"pass", gron.pass}, {"worst_ratio", gron.worst_ratio}};
    io::write_json(out_dir / "steering_report.json", report);
    out.files.push_back("steering_report.json");

    io::write_json(out_dir / "control.json", io::oscillating_control_to_json(res.control));
    out.files.push_back("control.json");

    // projection-route companion for hermite:M dictionaries: the identity
    // profile expanded in the weighted Hermite system
    if (r["dictionary"].is_string()) {
        const std::string ds = r["dictionary"].get<std::string>();
        if (ds.rfind("hermite:", 0) == 0) {
            const int order = std::stoi(ds.substr(8));
            auto pe = expand_identity_profile(order);
            double sup = 0.0;
            for (int i = 0; i <= 1000; ++i) {
                const double th = i / 1000.0;
                sup = std::max(sup, std::abs(th - pe.expansion.eval(th)));
            }
            io::write_json(out_dir / "hermite_report.json",
                           io::hermite_report_to_json(
                               pe, sup, profile_derivative_bound(pe.expansion, 0.0, 1.0)));
            out.files.push_back("hermite_report.json");
        }
    }

    if (detail::wants_format(r["output"], "csv")) {
        io::write_extended_control_csv(out_dir / "extended_control.csv", res.extended);
        io::write_ensemble_csv(out_dir / "alpha.csv", alpha);
        io::write_ensemble_csv(out_dir / "omega.csv", res.diffeotopy_checkpoints.back());
        io::write_ensemble_csv(out_dir / "final.csv", res.reduced_checkpoints.back());
        io::write_ensemble_trajectory_csv(out_dir / "reduced_trajectory.csv",
                                          res.report.checkpoint_times, res.reduced_checkpoints);
        out.files.insert(out.files.end(),
                         {"extended_control.csv", "alpha.csv", "omega.csv", "final.csv",
                          "reduced_trajectory.csv"});
    }

    std::ostringstream sum;
    sum << "steer '" << sc.name << "': achieved_c0_error = " << res.report.achieved_c0_error
        << ", gronwall " << (gron.pass ? "pass" : "FAIL")
        << " (ratio " << gron.worst_ratio << ")"
        << ", runtime " << res.report.runtime_seconds << " s";
    out.summary = sum.str();
    return out;
}

inline RunOutput run_rank_task(const Scenario& sc, const std::filesystem::path& out_dir) {
    const json& r = sc.resolved;
    if (!r.contains("rank")) throw SchemaError("rank task: missing 'rank' section");
    detail::check_keys(r["rank"], {"points", "thetas", "depth", "tol", "probe"}, "rank");
    FieldFamily family = build_system(r["system"]);
    const int dim = family.dim();
    const int depth = r["rank"].value("depth", 4);

    std::vector<Point> points;
    if (r["rank"].contains("points")) {
        for (const auto& p : r["rank"]["points"]) points.push_back(p.get<Point>());
    } else if (r["rank"].contains("thetas") && r.contains("ensemble") &&
               r["ensemble"].contains("alpha")) {
        Ensemble alpha = build_ensemble(r["ensemble"]["alpha"], 101, dim);
        // evaluate the profile at the requested parameters
        const json& alpha_spec = r["ensemble"]["alpha"];
        if (!alpha_spec.contains("coords"))
            throw SchemaError("rank.thetas needs ensemble.alpha.coords");
        std::vector<GaussPoly> profile;
        for (const auto& e : alpha_spec["coords"])
            profile.push_back(parse_expression(e.get<std::string>(), {"theta"}));
        for (const auto& tj : r["rank"]["thetas"]) {
            double th = tj.get<double>();
            Point p(dim);
            for (int c = 0; c < dim; ++c) p[c] = profile[c].eval(&th);
            points.push_back(std::move(p));
        }
    } else {
        throw SchemaError("rank task: need 'points' or 'thetas' with ensemble.alpha");
    }

    json report;
    report["scenario"] = sc.resolved;
    auto matrix = build_bracket_matrix(family, points, depth);
    RankDecision decision = r["rank"].contains("tol")
                                ? is_bracket_generating(matrix, r["rank"]["tol"].get<double>())
                                : is_bracket_generating(matrix);
    report["rank"] = {{"decision", decision.generating},
                      {"rank", decision.rank},
                      {"required", static_cast<int>(points.size()) * dim},
                      {"smallest_retained_sv", decision.smallest_retained_sv},
                      {"distinctness_margin", matrix.distinctness_margin},
                      {"words", matrix.words.size()}};

    std::ostringstream sum;
    sum << "rank '" << sc.name << "': decision " << (decision.generating ? "yes" : "no")
        << ", rank " << decision.rank << "/" << points.size() * dim;

    if (r["rank"].contains("probe")) {
        const json& pj = r["rank"]["probe"];
        detail::check_keys(pj, {"trials", "delta", "n_points", "depth"}, "rank.probe");
        const std::uint64_t seed = r["settings"]["seed"].get<std::uint64_t>();
        ProbeReport probe =
            genericity_probe(family, pj.value("n_points", 2), pj.value("depth", 4),
                             pj.value("trials", 50), pj.value("delta", 0.1), seed);
        report["probe"] = io::probe_report_to_json(probe);
        sum << ", probe fraction " << probe.fraction;
    }

    RunOutput out;
    out.dir = out_dir;
    io::write_json(out_dir / "rank_report.json", report);
    out.files.push_back("rank_report.json");
    out.summary = sum.str();
    return out;
}

inline RunOutput run_convergence_task(const Scenario& sc, const std::filesystem::path& out_dir) {
    const json& r = sc.resolved;
    if (!r.contains("convergence")) throw SchemaError("convergence task: missing section");
    detail::check_keys(r["convergence"],
                       {"coefficients", "horizon", "time_samples", "eps_list"}, "convergence");
    FieldFamily family = build_system(r["system"]);
    if (!r.contains("dictionary")) throw SchemaError("convergence: missing 'dictionary'");
    BracketDictionary dict = build_dictionary(r["dictionary"], family);

    const double horizon = detail::require_number(r["convergence"], "horizon", "convergence");
    const int samples = r["convergence"].value("time_samples", 33);
    std::vector<double> grid;
    for (int i = 0; i < samples; ++i) grid.push_back(horizon * i / (samples - 1));

    std::vector<std::vector<double>> rows(dict.size(), std::vector<double>(grid.size(), 0.0));
    if (!r["convergence"].contains("coefficients"))
        throw SchemaError("convergence: missing 'coefficients'");
    for (const auto& cj : r["convergence"]["coefficients"]) {
        detail::check_keys(cj, {"word", "expr"}, "convergence.coefficients");
        BracketWord word = BracketWord::parse(cj["word"].get<std::string>());
        const int idx = dict.index_of(word);
        if (idx < 0)
            throw SchemaError("convergence: word '" + word.spelled() +
                              "' is not in the dictionary");
        GaussPoly expr = parse_expression(cj["expr"].get<std::string>(), {"t"});
        for (std::size_t g = 0; g < grid.size(); ++g) rows[idx][g] = expr.eval(&grid[g]);
    }
    ExtendedControl extended(dict, grid, rows);

    if (!r["convergence"].contains("eps_list"))
        throw SchemaError("convergence: missing 'eps_list'");
    auto eps_list = r["convergence"]["eps_list"].get<std::vector<double>>();

    const json& settings = r["settings"];
    if (!settings.contains("box")) throw SchemaError("convergence: settings.box is required");
    CompactBox box = build_box(settings["box"], family.dim());
    PlanOptions plan_opt;
    plan_opt.ladder_ratio = settings["ladder_ratio"].get<double>();
    plan_opt.rho_min = settings["rho"].get<double>();
    plan_opt.max_frequency = settings["max_frequency"].get<double>();

    ConvergenceTable table =
        convergence_study(extended, eps_list, box, plan_opt, detail::flow_settings_from(settings));

    RunOutput out;
    out.dir = out_dir;
    io::write_convergence_csv(out_dir / "convergence.csv", table);
    out.files.push_back("convergence.csv");
    json report;
    report["scenario"] = sc.resolved;
    report["slope"] = table.slope;
    json rows_json = json::array();
    for (const auto& row : table.rows)
        rows_json.push_back({{"eps", row.eps}, {"sup_c0_distance", row.sup_c0_distance}});
    report["rows"] = std::move(rows_json);
    io::write_json(out_dir / "convergence_report.json", report);
    out.files.push_back("convergence_report.json");

    std::ostringstream sum;
    sum << "convergence '" << sc.name << "': slope = " << table.slope;
    out.summary = sum.str();
    return out;
}

inline RunOutput run_scenario(const json& raw, const std::filesystem::path& out_dir_override,
                              std::optional<std::uint64_t> seed_override = {}) {
    Scenario sc = parse_scenario(raw);
    if (seed_override) sc.resolved["settings"]["seed"] = *seed_override;
    std::filesystem::path out_dir = out_dir_override.empty()
                                        ? std::filesystem::path(
                                              sc.resolved["output"]["dir"].get<std::string>())
                                        : out_dir_override;
    if (sc.task == "steer") return run_steer_task(sc, out_dir);
    if (sc.task == "rank") return run_rank_task(sc, out_dir);
    return run_convergence_task(sc, out_dir);
}

}  // namespace ensteer
