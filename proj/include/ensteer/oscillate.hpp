#pragma once

// Reduction of an extended control over a bracket dictionary to an ordinary
// s-channel fast-oscillating control. One elimination level realizes one
// bracket word [f_j, tail] through the carrier pair
//   u_j += eps d/dt[2 sin(t/eps^2) w(t)],  v_tail += eps^{-1} sin(t/eps^2),
// assembled symbolically; levels run deepest-first on a separated frequency
// ladder.

#include <map>
#include <optional>

#include "ensteer/approximator.hpp"

namespace ensteer {

struct ReductionLevel {
    BracketWord word;
    double eps = 0.0;
    double omega = 0.0;  // 1/eps^2
};

struct ReductionPlan {
    std::vector<ReductionLevel> levels;  // deepest first
    double horizon = 1.0;
    double rho_min = 10.0;
    bool phase_closed = true;

    double max_frequency() const {
        double m = 0.0;
        for (const auto& l : levels) m = std::max(m, l.omega);
        return m;
    }
};

struct PlanOptions {
    /// 0 = squared ladder eps_{i+1} = eps_i^2; otherwise eps_{i+1} = ratio * eps_i.
    double ladder_ratio = 0.0;
    double rho_min = 10.0;
    double max_frequency = 1e7;
    /// Round each eps so an integer number of carrier periods fits in the
    /// horizon; the carrier primitives then vanish at t = T.
    bool phase_close = true;
};

/// The plan would need a carrier frequency above the configured ceiling;
/// recoverable by shrinking the dictionary, unlike other plan errors.
struct FrequencyCapError : PlanError {
    using PlanError::PlanError;
};

namespace detail {

inline double close_phase(double eps, double horizon) {
    const double m = std::max(1.0, std::round(horizon / (2.0 * FlowSettings::kPi * eps * eps)));
    return std::sqrt(horizon / (2.0 * FlowSettings::kPi * m));
}

}  // namespace detail

/// Deepest-first elimination schedule for every non-plain dictionary word
/// (closure-completed: a missing tail of depth >= 2 is scheduled too).
inline ReductionPlan make_plan(const BracketDictionary& dict, double eps, double horizon,
                               const PlanOptions& opt = {}) {
    if (!(eps > 0.0) || eps > 0.5)
        throw PlanError("make_plan: eps must lie in (0, 0.5]");
    if (!(horizon > 0.0)) throw PlanError("make_plan: bad horizon");

    std::vector<BracketWord> pending;
    for (const auto& w : dict.words())
        if (w.depth() >= 2) pending.push_back(w);
    // closure under tails
    for (std::size_t i = 0; i < pending.size(); ++i) {
        if (pending[i].depth() < 3) continue;
        BracketWord tail = pending[i].tail();
        if (std::find(pending.begin(), pending.end(), tail) == pending.end())
            pending.push_back(tail);
    }
    std::sort(pending.begin(), pending.end(), [](const BracketWord& a, const BracketWord& b) {
        if (a.depth() != b.depth()) return a.depth() > b.depth();
        return a < b;
    });

    ReductionPlan plan;
    plan.horizon = horizon;
    plan.rho_min = opt.rho_min;
    plan.phase_closed = opt.phase_close;

    double cur = eps;
    for (const auto& word : pending) {
        double e = opt.phase_close ? detail::close_phase(cur, horizon) : cur;
        ReductionLevel level{word, e, 1.0 / (e * e)};
        if (level.omega > opt.max_frequency)
            throw FrequencyCapError("make_plan: level for word '" + word.spelled() +
                                    "' needs frequency " + std::to_string(level.omega) +
                                    " above the cap " + std::to_string(opt.max_frequency));
        if (!plan.levels.empty()) {
            const double ratio = level.omega / plan.levels.back().omega;
            if (ratio < opt.rho_min)
                throw PlanError("make_plan: frequency separation " + std::to_string(ratio) +
                                " below rho = " + std::to_string(opt.rho_min) +
                                " between consecutive levels");
            if (level.omega == plan.levels.back().omega)
                throw PlanError("make_plan: frequency collision between levels");
        }
        plan.levels.push_back(level);
        cur = (opt.ladder_ratio > 0.0) ? cur * opt.ladder_ratio : cur * cur;
    }
    return plan;
}

// ---------------------------------------------------------------------------
// OscillatingControl
// ---------------------------------------------------------------------------

struct OscillatingControl {
    std::vector<ScalarFunction> channels;  // one per family member
    double horizon = 1.0;
    std::vector<ReductionLevel> levels;    // schedule metadata
    double predicted_error = 0.0;          // heuristic sum of per-level eps

    double max_frequency() const {
        double m = 0.0;
        for (const auto& c : channels) m = std::max(m, c.max_frequency());
        return m;
    }

    std::shared_ptr<ControlledRHS> to_rhs(const FieldFamily& family) const {
        if (family.size() != static_cast<int>(channels.size()))
            throw StructuralError("OscillatingControl: channel count mismatch");
        return std::make_shared<ControlledRHS>(family.members, channels);
    }

    /// Integrator settings honoring the declared top frequency.
    FlowSettings flow_settings(const FlowSettings& base = {}) const {
        FlowSettings s = base;
        s.h_max = std::min(s.h_max, s.step_for_frequency(max_frequency()));
        return s;
    }
};

// ---------------------------------------------------------------------------
// single_bracket_reduce
// ---------------------------------------------------------------------------

struct SingleBracketReduction {
    OscillatingControl control;   // two channels: u then v
    ScalarFunction u_primitive;   // U_eps(t) = 2 sin(t/eps^2) w(t)
    ScalarFunction v_carrier;     // vhat(t) = sin(t/eps^2)
};

/// Channels realizing u^e X + v^e Y + w^e [X, Y] through X and Y only.
inline SingleBracketReduction single_bracket_reduce(const ScalarFunction& u_e,
                                                    const ScalarFunction& v_e,
                                                    const ScalarFunction& w_e, double eps,
                                                    double horizon) {
    if (!(eps > 0.0) || eps > 0.5)
        throw PlanError("single_bracket_reduce: eps must lie in (0, 0.5]");
    const double omega = 1.0 / (eps * eps);
    const double half_pi = 1.5707963267948966;

    SingleBracketReduction out;
    out.u_primitive = w_e.modulated(omega, -half_pi, 2.0);  // 2 sin w
    out.v_carrier = ScalarFunction::sine(omega);

    // u = u^e + eps d/dt U = u^e + 2 eps^{-1} cos(wt) w + 2 eps sin(wt) wdot
    ScalarFunction u = u_e;
    u += w_e.modulated(omega, 0.0, 2.0 / eps);
    u += w_e.derivative().modulated(omega, -half_pi, 2.0 * eps);
    ScalarFunction v = v_e;
    v += ScalarFunction::sine(omega, Curve::constant(1.0 / eps));

    out.control.channels = {std::move(u), std::move(v)};
    out.control.horizon = horizon;
    out.control.levels = {{BracketWord({1, 2}), eps, omega}};
    out.control.predicted_error = eps;
    return out;
}

// ---------------------------------------------------------------------------
// reduce
// ---------------------------------------------------------------------------

/// Rewrites the extended control as an s-channel fast-oscillating control by
/// eliminating bracket words per the plan. Levels whose accumulated
/// coefficient is identically zero are skipped, so plain-only controls come
/// back unchanged.
inline OscillatingControl reduce(const ExtendedControl& extended, const ReductionPlan& plan) {
    const BracketDictionary& dict = extended.dictionary();
    const int s = dict.family().size();
    const double half_pi = 1.5707963267948966;

    std::map<BracketWord, ScalarFunction> channels;
    for (int i = 0; i < dict.size(); ++i) {
        const ScalarFunction c = extended.channel(i);
        if (dict.words()[i].depth() >= 2 && extended.sup_channel(i) == 0.0) continue;
        channels[dict.words()[i]] = c;
    }

    OscillatingControl out;
    out.horizon = extended.horizon();

    for (const auto& level : plan.levels) {
        auto it = channels.find(level.word);
        if (it == channels.end()) continue;  // nothing demanded this word
        ScalarFunction w = it->second;
        channels.erase(it);
        if (w.is_zero()) continue;

        out.levels.push_back(level);
        out.predicted_error += level.eps;

        const int head = level.word.head();
        BracketWord tail = level.word.tail();

        ScalarFunction u_add = w.modulated(level.omega, 0.0, 2.0 / level.eps);
        u_add += w.derivative().modulated(level.omega, -half_pi, 2.0 * level.eps);
        BracketWord head_word({head});
        auto [hit, inserted] = channels.try_emplace(head_word, ScalarFunction::zero());
        (void)inserted;
        hit->second += u_add;

        auto [tit, created] = channels.try_emplace(tail, ScalarFunction::zero());
        (void)created;
        tit->second += ScalarFunction::sine(level.omega, Curve::constant(1.0 / level.eps));
    }

    out.channels.assign(s, ScalarFunction::zero());
    for (const auto& [word, fn] : channels) {
        if (word.depth() == 1) {
            out.channels[word.head() - 1] = fn;
        } else if (!fn.is_zero()) {
            throw PlanError("reduce: word '" + word.spelled() +
                            "' is not reducible with the given plan");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// convergence_study
// ---------------------------------------------------------------------------

struct ConvergenceRow {
    double eps = 0.0;
    double sup_c0_distance = 0.0;
    std::vector<double> checkpoint_distances;
    std::vector<ReductionLevel> levels;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;
};

/// C^0 flow distance between the extended flow and its reduction, per eps,
/// sup over 16 checkpoints and the K grid, with the fitted log-log slope.
inline ConvergenceTable convergence_study(const ExtendedControl& extended,
                                          const std::vector<double>& eps_list,
                                          const CompactBox& k_box, const PlanOptions& plan_opt = {},
                                          const FlowSettings& base = {}) {
    if (eps_list.size() < 3)
        throw StructuralError("convergence_study: need at least three eps values");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw StructuralError("convergence_study: eps values must strictly decrease");

    const double horizon = extended.horizon();
    auto ext_rhs = extended.to_rhs();

    ConvergenceTable table;
    std::vector<double> eps_used, dists;
    for (double eps : eps_list) {
        ReductionPlan plan = make_plan(extended.dictionary(), eps, horizon, plan_opt);
        OscillatingControl reduced = reduce(extended, plan);
        auto red_rhs = reduced.to_rhs(extended.dictionary().family());
        FlowSettings red_settings = reduced.flow_settings(base);
        ConvergenceRow row;
        row.eps = eps;
        row.levels = reduced.levels;
        try {
            row.sup_c0_distance =
                flow_c0_distance_checkpoints(*ext_rhs, *red_rhs, horizon, k_box, base,
                                             red_settings, 16, &row.checkpoint_distances);
        } catch (const DomainError& e) {
            throw DomainError(std::string(e.what()) +
                              " during the reduced-flow study at eps = " + std::to_string(eps) +
                              "; the step policy for the top frequency may be violated");
        }
        eps_used.push_back(eps);
        dists.push_back(std::max(row.sup_c0_distance, 1e-300));
        table.rows.push_back(std::move(row));
    }
    table.slope = loglog_slope(eps_used, dists);
    return table;
}

}  // namespace ensteer
