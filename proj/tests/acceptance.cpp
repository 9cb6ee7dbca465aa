// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Numeric thresholds are pinned here, not configurable.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ensteer/scenario.hpp"

using namespace ensteer;
namespace fs = std::filesystem;

namespace {

struct CriterionResult {
    std::string name;
    bool pass = true;
    double seconds = 0.0;
    std::vector<std::string> notes;
};

std::vector<CriterionResult> g_results;

class Criterion {
public:
    Criterion(std::string name, double runtime_limit)
        : runtime_limit_(runtime_limit), start_(std::chrono::steady_clock::now()) {
        result_.name = std::move(name);
    }

    void require(bool ok, const std::string& what) {
        result_.notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
        result_.pass = result_.pass && ok;
    }

    template <typename T>
    void require_le(T measured, T limit, const std::string& what) {
        std::ostringstream os;
        os << what << ": " << measured << " <= " << limit;
        require(measured <= limit, os.str());
    }

    template <typename T>
    void require_ge(T measured, T limit, const std::string& what) {
        std::ostringstream os;
        os << what << ": " << measured << " >= " << limit;
        require(measured >= limit, os.str());
    }

    ~Criterion() {
        result_.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        if (result_.seconds > runtime_limit_) {
            result_.pass = false;
            std::ostringstream os;
            os << "FAIL runtime " << result_.seconds << " s exceeds " << runtime_limit_ << " s";
            result_.notes.push_back(os.str());
        }
        std::printf("[%s] %s  (%.1f s)\n", result_.pass ? "PASS" : "FAIL",
                    result_.name.c_str(), result_.seconds);
        for (const auto& n : result_.notes) std::printf("        %s\n", n.c_str());
        std::fflush(stdout);
        g_results.push_back(result_);
    }

private:
    CriterionResult result_;
    double runtime_limit_;
    std::chrono::steady_clock::time_point start_;
};

double hermite_ref(int m, double x) {
    double h0 = 1.0, h1 = 2.0 * x;
    if (m == 0) return h0;
    if (m == 1) return h1;
    for (int k = 1; k < m; ++k) {
        const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

fs::path scenario_dir() { return fs::path(ENSTEER_SCENARIO_DIR); }

fs::path work_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() / ("ensteer_acceptance_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json load_scenario(const std::string& file) {
    std::ifstream in(scenario_dir() / file);
    if (!in) throw StructuralError("missing bundled scenario " + file);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool same_bytes(const fs::path& a, const fs::path& b) { return slurp(a) == slurp(b); }

// ---------------------------------------------------------------------------

void criterion_1_bracket_oracle() {
    Criterion c("criterion 1: iterated-bracket oracle for the gaussian tower", 1.0);
    auto fam = gauss2d_family();
    double worst = 0.0;
    for (int k = 0; k <= 6; ++k) {
        std::vector<int> idx(k, 1);
        idx.push_back(2);
        auto field = iterated_bracket(fam, BracketWord(idx));
        for (double x1 : {-1.0, 0.0, 0.5, 1.0}) {
            Point v = field.eval({x1, 0.25});
            const double expect = ((k % 2) ? -1.0 : 1.0) * hermite_ref(k, x1) *
                                  std::exp(-x1 * x1);
            worst = std::max({worst, std::abs(v[0]), std::abs(v[1] - expect)});
        }
    }
    c.require_le(worst, 1e-8, "max deviation from (0, (-1)^k H_k e^{-x^2})");
}

void criterion_2_bracket_algebra() {
    Criterion c("criterion 2: bracket algebra property suite", 5.0);
    Rng rng(20240801);
    auto rand_field = [&](int deg) { return random_polynomial_field(2, deg, 1.0, rng); };

    auto x_f = rand_field(3), y_f = rand_field(3), xp_f = rand_field(3);
    auto ab = bracket(x_f, y_f);
    auto ba = bracket(y_f, x_f);
    double anti = 0.0;
    for (int i = 0; i < 100; ++i) {
        Point x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Point u = ab.eval(x), v = ba.eval(x);
        for (int k = 0; k < 2; ++k) anti = std::max(anti, std::abs(u[k] + v[k]));
    }
    c.require_le(anti, 1e-9, "antisymmetry");

    const double a = 0.6, b = -1.1;
    std::vector<GaussPoly> comb;
    for (int i = 0; i < 2; ++i) comb.push_back(a * x_f.component(i) + b * xp_f.component(i));
    auto lhs = bracket(SmoothField(comb, "mix"), y_f);
    auto r1 = bracket(x_f, y_f);
    auto r2 = bracket(xp_f, y_f);
    double bil = 0.0;
    for (int i = 0; i < 100; ++i) {
        Point x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Point l = lhs.eval(x), u = r1.eval(x), v = r2.eval(x);
        for (int k = 0; k < 2; ++k) bil = std::max(bil, std::abs(l[k] - a * u[k] - b * v[k]));
    }
    c.require_le(bil, 1e-9, "bilinearity");

    auto x2 = rand_field(2), y2 = rand_field(2), z2 = rand_field(2);
    auto j1 = bracket(x2, bracket(y2, z2));
    auto j2 = bracket(y2, bracket(z2, x2));
    auto j3 = bracket(z2, bracket(x2, y2));
    double jac = 0.0;
    for (int i = 0; i < 100; ++i) {
        Point x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Point p = j1.eval(x), q = j2.eval(x), r = j3.eval(x);
        for (int k = 0; k < 2; ++k) jac = std::max(jac, std::abs(p[k] + q[k] + r[k]));
    }
    c.require_le(jac, 1e-7, "jacobi identity");
}

void criterion_3_variational_formula() {
    Criterion c("criterion 3: variational formula residual", 30.0);
    auto fam = gauss2d_family();
    CompactBox box = CompactBox::cube(2, -1.0, 1.0, 5);
    auto f_rhs = std::make_shared<ControlledRHS>(
        std::vector<SmoothField>{fam[1]},
        std::vector<ScalarFunction>{ScalarFunction::baseline(Curve::polynomial({0.9, -0.5}))});
    auto u = ScalarFunction::sine(2.0 * FlowSettings::kPi, Curve::constant(0.4));
    FlowSettings s;
    s.h_max = 1e-3;
    auto res = check_variational_formula(f_rhs, fam[0], u, box, 1.0, s);
    c.require_le(res.residual, 1e-5, "composition residual at step 1e-3");
}

void criterion_4_pushforward_slopes() {
    Criterion c("criterion 4: pushforward expansion orders", 30.0);
    auto fam = gauss2d_family();
    auto grid = CompactBox::cube(2, -1.0, 1.0, 5).grid();
    std::vector<double> us = {0.2, 0.1, 0.05}, r1, r2;
    for (double u : us) {
        r1.push_back(pushforward_remainder(fam[0], fam[1], u, 1, grid));
        r2.push_back(pushforward_remainder(fam[0], fam[1], u, 2, grid));
    }
    c.require_ge(loglog_slope(us, r1), 0.9, "first-order remainder slope");
    c.require_ge(loglog_slope(us, r2), 1.8, "second-order remainder slope");
}

void criterion_5_oscillation_nullity() {
    Criterion c("criterion 5: fast-oscillation nullity", 60.0);
    auto fam = gauss2d_family();
    CompactBox box = CompactBox::cube(2, -1.0, 1.0, 5);
    const double horizon = 1.15;
    auto zero_rhs = ControlledRHS::autonomous(zero_field(2));
    std::vector<double> eps_list = {0.2, 0.1, 0.05}, dists;
    for (double eps : eps_list) {
        const double omega = 2.0 * FlowSettings::kPi / (eps * eps);
        auto u = ScalarFunction::cosine(omega,
                                        Curve::constant(2.0 * FlowSettings::kPi / eps));
        auto rhs = std::make_shared<ControlledRHS>(
            std::vector<SmoothField>{fam[0], fam[1]},
            std::vector<ScalarFunction>{ScalarFunction::zero(), u});
        FlowSettings s;
        dists.push_back(flow_c0_distance_checkpoints(*rhs, *zero_rhs, horizon, box, s, s));
    }
    c.require_ge(loglog_slope(eps_list, dists), 0.9, "identity-flow distance slope");
}

void criterion_6_reduction(fs::path& single_out, fs::path& nested_out) {
    Criterion c("criterion 6: reduction convergence (single and nested)", 300.0);
    single_out = work_dir("crit6_single");
    auto single = run_scenario(load_scenario("single_bracket_convergence.json"), single_out);
    json sr = json::parse(slurp(single_out / "convergence_report.json"));
    c.require_ge(sr["slope"].get<double>(), 0.8, "single-bracket slope");

    nested_out = work_dir("crit6_nested");
    auto nested = run_scenario(load_scenario("nested_bracket_convergence.json"), nested_out);
    json nr = json::parse(slurp(nested_out / "convergence_report.json"));
    c.require_ge(nr["slope"].get<double>(), 0.7, "nested depth-3 slope");
    (void)single;
    (void)nested;
}

void criterion_7_hermite() {
    Criterion c("criterion 7: identity-profile approximation", 10.0);
    const double lambda = 3.0;
    for (int m : {10, 20, 40}) {
        auto pe = expand_identity_profile(m);
        const double bound = profile_derivative_bound(pe.expansion, 0.0, 1.0);
        c.require_le(bound, lambda, "|h| + |h'| bound at M = " + std::to_string(m));
        if (m == 40) {
            double sup = 0.0;
            for (int i = 0; i <= 2000; ++i) {
                const double th = i / 2000.0;
                sup = std::max(sup, std::abs(th - pe.expansion.eval(th)));
            }
            c.require_le(sup, 1e-2, "sup |theta - h(theta)| at M = 40");
        }
    }
}

void criterion_8_flagship(fs::path& out_dir) {
    Criterion c("criterion 8: flagship steering run", 300.0);
    out_dir = work_dir("crit8");
    auto out = run_scenario(load_scenario("gauss_steering.json"), out_dir);
    (void)out;
    json report = json::parse(slurp(out_dir / "steering_report.json"));
    c.require_le(report["report"]["achieved_c0_error"].get<double>(), 0.1,
                 "achieved sup error");
    c.require(report["gronwall"]["pass"].get<bool>(), "gronwall certificate passes");
    c.require_le(report["gronwall"]["worst_ratio"].get<double>(), 1.05,
                 "gronwall observed/bound ratio");
}

void criterion_9_rank(fs::path& out_dir) {
    Criterion c("criterion 9: finite-ensemble rank test and probe", 60.0);
    auto fam = gauss2d_family();

    out_dir = work_dir("crit9");
    auto out = run_scenario(load_scenario("gauss_rank.json"), out_dir);
    (void)out;
    json report = json::parse(slurp(out_dir / "rank_report.json"));
    c.require(report["rank"]["decision"].get<bool>(),
              "three-node gaussian ensemble decision yes");
    {
        std::ostringstream os;
        os << "three-node gaussian ensemble rank: " << report["rank"]["rank"].get<int>()
           << " == 6";
        c.require(report["rank"]["rank"].get<int>() == 6, os.str());
    }

    auto one = build_bracket_matrix(fam, {{0.3, 0.0}}, 4);
    BracketMatrix doubled = one;
    doubled.matrix.conservativeResize(4, one.matrix.cols());
    doubled.matrix.bottomRows(2) = one.matrix.topRows(2);
    c.require(!is_bracket_generating(doubled).generating, "injected duplicate decision no");

    c.require(report["probe"]["fraction"].get<double>() >= 0.9,
              "perturbed probe fraction >= 0.9");
    FieldFamily abelian({coordinate_field(2, 0), coordinate_field(2, 1)});
    auto unperturbed = genericity_probe(abelian, 2, 4, 10, 0.0, 1);
    c.require(unperturbed.fraction == 0.0, "abelian frame with delta = 0 fraction 0.0");
}

void criterion_10_determinism(const fs::path& single6, const fs::path& nested6,
                              const fs::path& flagship8, const fs::path& rank9) {
    Criterion c("criterion 10: bit-identical reports under fixed seeds", 600.0);

    auto single2 = work_dir("crit10_single");
    run_scenario(load_scenario("single_bracket_convergence.json"), single2);
    c.require(same_bytes(single6 / "convergence.csv", single2 / "convergence.csv") &&
                  same_bytes(single6 / "convergence_report.json",
                             single2 / "convergence_report.json"),
              "criterion 6 single-bracket reports");

    auto nested2 = work_dir("crit10_nested");
    run_scenario(load_scenario("nested_bracket_convergence.json"), nested2);
    c.require(same_bytes(nested6 / "convergence.csv", nested2 / "convergence.csv") &&
                  same_bytes(nested6 / "convergence_report.json",
                             nested2 / "convergence_report.json"),
              "criterion 6 nested reports");

    auto flag2 = work_dir("crit10_flagship");
    run_scenario(load_scenario("gauss_steering.json"), flag2);
    c.require(same_bytes(flagship8 / "steering_report.json", flag2 / "steering_report.json") &&
                  same_bytes(flagship8 / "control.json", flag2 / "control.json") &&
                  same_bytes(flagship8 / "final.csv", flag2 / "final.csv"),
              "criterion 8 steering reports");

    auto rank2 = work_dir("crit10_rank");
    run_scenario(load_scenario("gauss_rank.json"), rank2);
    c.require(same_bytes(rank9 / "rank_report.json", rank2 / "rank_report.json"),
              "criterion 9 rank reports");
}

}  // namespace

template <typename Fn>
void guarded(const std::string& name, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        std::printf("[FAIL] %s\n        aborted: %s\n", name.c_str(), e.what());
        CriterionResult r;
        r.name = name;
        r.pass = false;
        g_results.push_back(r);
    }
}

int main() {
    std::printf("acceptance suite\n");
    fs::path single6, nested6, flagship8, rank9;

    guarded("criterion 1", [] { criterion_1_bracket_oracle(); });
    guarded("criterion 2", [] { criterion_2_bracket_algebra(); });
    guarded("criterion 3", [] { criterion_3_variational_formula(); });
    guarded("criterion 4", [] { criterion_4_pushforward_slopes(); });
    guarded("criterion 5", [] { criterion_5_oscillation_nullity(); });
    guarded("criterion 6", [&] { criterion_6_reduction(single6, nested6); });
    guarded("criterion 7", [] { criterion_7_hermite(); });
    guarded("criterion 8", [&] { criterion_8_flagship(flagship8); });
    guarded("criterion 9", [&] { criterion_9_rank(rank9); });
    guarded("criterion 10",
            [&] { criterion_10_determinism(single6, nested6, flagship8, rank9); });

    int failures = 0;
    for (const auto& r : g_results)
        if (!r.pass) ++failures;
    std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failures,
                g_results.size());
    return failures == 0 ? 0 : 1;
}
