#pragma once

// End-to-end steering pipeline: approximate the diffeotopy generator over a
// bracket dictionary, drive the extended system, certify the tracking error
// with a Gronwall bound, reduce to a fast-oscillating ordinary control, and
// report every error source separately.

#include <chrono>

#include "ensteer/oscillate.hpp"
#include "ensteer/rank.hpp"

namespace ensteer {

struct SteeringSettings {
    int time_nodes = 33;
    int control_grid = 257;
    int checkpoints = 16;
    double tolerance = std::numeric_limits<double>::infinity();
    double ladder_ratio = 0.0;   // 0 = squared ladder
    double rho_min = 10.0;
    double max_frequency = 2e6;  // honest integration ceiling for this machine
    CompactBox certificate_box;  // neighborhood of the diffeotopy tube
    // box for the extended-vs-reduced comparison; derived when empty
    std::optional<CompactBox> comparison_box;
    FlowSettings flow;
    double decomposition_slack = 1e-6;
    double gronwall_grid_slack = 0.05;
};

struct SteeringReport {
    // error sources
    double achieved_c0_error = 0.0;       // reduced endpoint vs omega
    double extended_c0_error = 0.0;       // extended endpoint vs omega
    double generator_residual = 0.0;      // max node residual eps_gen
    double eps_certificate = 0.0;         // node residual + blend moduli
    double lambda_certificate = 0.0;      // measured sup_t ||X_t||_{1,box}
    double gronwall_bound = 0.0;          // eps_cert (e^{lambda T}-1)/lambda at T
    double reduction_error = 0.0;         // extended vs reduced, C0 on K
    double reduction_error_ensemble = 0.0;
    double predicted_reduction_error = 0.0;
    double decomposition_slack = 1e-6;

    // run parameters
    double lambda_requested = 0.0;
    double horizon = 0.0;
    int n_theta = 0;
    std::vector<double> eps_schedule;
    int dictionary_depth_requested = 0;
    int dictionary_depth_used = 0;
    int time_nodes = 0;

    // extended-flow tracking against the diffeotopy
    std::vector<double> checkpoint_times;
    std::vector<double> observed_deviation;
    std::vector<double> gronwall_bound_at;

    // timing lives outside the deterministic report payload
    double runtime_seconds = 0.0;
};

struct SteeringResult {
    OscillatingControl control;
    SteeringReport report;
    ExtendedControl extended;
    std::vector<Ensemble> extended_checkpoints;
    std::vector<Ensemble> reduced_checkpoints;
    std::vector<Ensemble> diffeotopy_checkpoints;
};

struct GronwallCheck {
    bool pass = false;
    double worst_ratio = 0.0;
};

/// observed(t) <= eps (e^{lambda t} - 1)/lambda at every checkpoint, with the
/// stated grid slack.
inline GronwallCheck verify_gronwall(const std::vector<double>& times,
                                     const std::vector<double>& observed, double eps_cert,
                                     double lambda_cert, double slack = 0.05) {
    if (times.size() != observed.size())
        throw StructuralError("verify_gronwall: times/observations mismatch");
    GronwallCheck out;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] <= 0.0) continue;
        const double bound =
            lambda_cert > 0.0
                ? eps_cert * (std::exp(lambda_cert * times[k]) - 1.0) / lambda_cert
                : eps_cert * times[k];
        if (bound == 0.0) {
            if (observed[k] > 0.0) out.worst_ratio = std::numeric_limits<double>::infinity();
            continue;
        }
        out.worst_ratio = std::max(out.worst_ratio, observed[k] / bound);
    }
    out.pass = out.worst_ratio <= 1.0 + slack;
    return out;
}

inline GronwallCheck verify_gronwall(const SteeringReport& report, double slack = 0.05) {
    return verify_gronwall(report.checkpoint_times, report.observed_deviation,
                           report.eps_certificate, report.lambda_certificate, slack);
}

namespace detail {

inline double ensemble_set_c0(const std::vector<Ensemble>& a, const std::vector<Ensemble>& b) {
    double sup = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sup = std::max(sup, c0_distance(a[k], b[k]));
    return sup;
}

inline std::vector<Ensemble> checkpoint_ensembles(const TimeVaryingField& rhs,
                                                  const Ensemble& start,
                                                  const std::vector<double>& times,
                                                  const FlowSettings& settings) {
    auto bt = integrate_batch(rhs, start.flat(), 0.0, times.back(), settings, times);
    std::vector<Ensemble> out;
    out.reserve(times.size());
    for (const auto& s : bt.states)
        out.push_back(Ensemble::from_flat(start.theta_grid(), s, start.dim()));
    return out;
}

}  // namespace detail

/// The full pipeline. The dictionary is truncated to the deepest depth whose
/// reduction plan stays below settings.max_frequency; the truncation is
/// reported, and every error term downstream is measured, not estimated.
inline SteeringResult steer(const FieldFamily& family, const Diffeotopy& d,
                            const BracketDictionary& dict, double lambda, double eps,
                            const SteeringSettings& settings) {
    const auto t_start = std::chrono::steady_clock::now();
    if (dict.dim() != family.dim())
        throw StructuralError("steer: dictionary/family dimension mismatch");
    const double horizon = d.horizon;

    PlanOptions plan_opt;
    plan_opt.ladder_ratio = settings.ladder_ratio;
    plan_opt.rho_min = settings.rho_min;
    plan_opt.max_frequency = settings.max_frequency;

    // feasibility: deepest dictionary whose ladder fits under the frequency
    // cap; other plan defects (separation violations, bad eps) propagate
    BracketDictionary used = dict;
    ReductionPlan plan;
    int depth = dict.max_depth();
    while (true) {
        used = dict.truncated(depth);
        try {
            plan = make_plan(used, eps, horizon, plan_opt);
            break;
        } catch (const FrequencyCapError&) {
            if (depth <= 1) throw;
            --depth;
        }
    }

    ApproximatorOptions approx_opt;
    approx_opt.time_nodes = settings.time_nodes;
    approx_opt.control_grid = settings.control_grid;
    approx_opt.tolerance = settings.tolerance;
    approx_opt.flow = settings.flow;
    GeneratorApproximation approx =
        approximate_generator(d, used, lambda, settings.certificate_box, approx_opt);

    SteeringResult result;
    result.extended = approx.control;
    SteeringReport& report = result.report;
    report.lambda_requested = lambda;
    report.horizon = horizon;
    report.n_theta = d.start.size();
    report.time_nodes = settings.time_nodes;
    report.dictionary_depth_requested = dict.max_depth();
    report.dictionary_depth_used = used.max_depth();
    report.generator_residual = approx.max_node_residual;
    report.lambda_certificate = approx.lambda_bound;
    report.eps_certificate = approx.max_node_residual + approx.generator_modulus +
                             approx.lambda_bound * approx.ensemble_modulus;
    report.decomposition_slack = settings.decomposition_slack;

    std::vector<double> times;
    for (int k = 1; k <= settings.checkpoints; ++k)
        times.push_back(horizon * k / settings.checkpoints);
    report.checkpoint_times = times;

    // diffeotopy reference and the extended flow along the ensemble
    DiffeotopySampler gamma(d, times, settings.flow);
    for (int k = 0; k < gamma.count(); ++k)
        result.diffeotopy_checkpoints.push_back(gamma.sample(k).ensemble);
    const Ensemble& omega = result.diffeotopy_checkpoints.back();

    auto ext_rhs = approx.control.to_rhs();
    result.extended_checkpoints =
        detail::checkpoint_ensembles(*ext_rhs, d.start, times, settings.flow);
    report.extended_c0_error = c0_distance(result.extended_checkpoints.back(), omega);
    for (std::size_t k = 0; k < times.size(); ++k)
        report.observed_deviation.push_back(
            c0_distance(result.extended_checkpoints[k], result.diffeotopy_checkpoints[k]));
    for (double t : times)
        report.gronwall_bound_at.push_back(
            report.lambda_certificate > 0.0
                ? report.eps_certificate *
                      (std::exp(report.lambda_certificate * t) - 1.0) /
                      report.lambda_certificate
                : report.eps_certificate * t);
    report.gronwall_bound = report.gronwall_bound_at.back();

    // reduction
    result.control = reduce(approx.control, plan);
    result.control.horizon = horizon;
    report.predicted_reduction_error = result.control.predicted_error;
    for (const auto& level : result.control.levels) report.eps_schedule.push_back(level.eps);

    CompactBox k_box = settings.comparison_box ? *settings.comparison_box
                                               : settings.certificate_box.padded(2.0);
    FlowSettings red_settings = result.control.flow_settings(settings.flow);
    red_settings.guard = std::make_shared<CompactBox>(k_box.padded(2.0));

    auto red_rhs = result.control.to_rhs(family);
    try {
        result.reduced_checkpoints =
            detail::checkpoint_ensembles(*red_rhs, d.start, times, red_settings);
    } catch (const DomainError& e) {
        throw DomainError(std::string(e.what()) +
                          " during the fast-oscillating integration (base eps = " +
                          std::to_string(eps) + ")");
    }
    report.achieved_c0_error = c0_distance(result.reduced_checkpoints.back(), omega);
    report.reduction_error_ensemble =
        detail::ensemble_set_c0(result.reduced_checkpoints, result.extended_checkpoints);

    FlowSettings ext_settings = settings.flow;
    try {
        report.reduction_error = flow_c0_distance_checkpoints(
            *ext_rhs, *red_rhs, horizon, k_box, ext_settings, red_settings,
            settings.checkpoints);
    } catch (const DomainError& e) {
        throw DomainError(std::string(e.what()) +
                          " while comparing extended and reduced flows (base eps = " +
                          std::to_string(eps) + ")");
    }

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace ensteer
