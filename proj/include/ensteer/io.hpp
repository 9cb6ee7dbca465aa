#pragma once

// CSV and JSON serialization. All numeric formatting round-trips doubles
// (17 significant digits), so identical runs produce byte-identical files.

#include <filesystem>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "ensteer/oscillate.hpp"
#include "ensteer/rank.hpp"
#include "ensteer/steering.hpp"

namespace ensteer {

using nlohmann::json;

namespace io {

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw StructuralError("cannot open output file " + path.string());
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                                 int dim) {
    auto out = open_out(path);
    out << "t";
    for (int c = 1; c <= dim; ++c) out << ",x" << c;
    out << "\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        out << format_double(traj.times[k]);
        for (int c = 0; c < dim; ++c) out << "," << format_double(traj.points[k][c]);
        out << "\n";
    }
}

inline void write_ensemble_csv(const std::filesystem::path& path, const Ensemble& e) {
    auto out = open_out(path);
    out << "theta";
    for (int c = 1; c <= e.dim(); ++c) out << ",x" << c;
    out << "\n";
    for (int i = 0; i < e.size(); ++i) {
        out << format_double(e.theta_grid()[i]);
        for (int c = 0; c < e.dim(); ++c) out << "," << format_double(e.point(i)[c]);
        out << "\n";
    }
}

/// Wide format: one row per time, all ensemble nodes side by side.
inline void write_ensemble_trajectory_csv(const std::filesystem::path& path,
                                          const std::vector<double>& times,
                                          const std::vector<Ensemble>& snapshots) {
    if (times.size() != snapshots.size())
        throw StructuralError("ensemble trajectory: time/snapshot mismatch");
    auto out = open_out(path);
    const Ensemble& first = snapshots.front();
    out << "t";
    for (int i = 0; i < first.size(); ++i)
        for (int c = 1; c <= first.dim(); ++c)
            out << ",node" << i << "_x" << c;
    out << "\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        out << format_double(times[k]);
        for (int i = 0; i < snapshots[k].size(); ++i)
            for (int c = 0; c < snapshots[k].dim(); ++c)
                out << "," << format_double(snapshots[k].point(i)[c]);
        out << "\n";
    }
}

inline Ensemble read_ensemble_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot read ensemble CSV " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw StructuralError("ensemble CSV is empty");
    std::vector<double> theta;
    std::vector<Point> pts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            const std::string cell =
                line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw StructuralError("bad number '" + cell + "' in " + path.string());
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (row.size() < 2) throw StructuralError("ensemble CSV row too short");
        theta.push_back(row[0]);
        pts.emplace_back(row.begin() + 1, row.end());
    }
    return Ensemble(std::move(theta), std::move(pts));
}

inline void write_extended_control_csv(const std::filesystem::path& path,
                                       const ExtendedControl& ec) {
    auto out = open_out(path);
    out << "t";
    for (const auto& w : ec.dictionary().words()) out << ",v_" << w.spelled();
    out << "\n";
    for (std::size_t k = 0; k < ec.time_grid().size(); ++k) {
        out << format_double(ec.time_grid()[k]);
        for (int w = 0; w < ec.dictionary().size(); ++w)
            out << "," << format_double(ec.samples()[w][k]);
        out << "\n";
    }
}

inline void write_convergence_csv(const std::filesystem::path& path,
                                  const ConvergenceTable& table) {
    auto out = open_out(path);
    out << "epsilon,sup_c0_distance";
    if (!table.rows.empty())
        for (std::size_t k = 1; k <= table.rows.front().checkpoint_distances.size(); ++k)
            out << ",checkpoint" << k;
    out << "\n";
    for (const auto& row : table.rows) {
        out << format_double(row.eps) << "," << format_double(row.sup_c0_distance);
        for (double d : row.checkpoint_distances) out << "," << format_double(d);
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json curve_to_json(const Curve& c) {
    json j;
    j["breaks"] = c.breakpoints();
    j["coefficients"] = c.coefficients();
    return j;
}

inline json scalar_function_to_json(const ScalarFunction& f) {
    json terms = json::array();
    for (const auto& t : f.terms()) {
        json jt;
        jt["amplitude"] = curve_to_json(t.amp);
        jt["omega"] = t.omega;
        jt["phase"] = t.phase;
        jt["harmonic"] = (t.omega == 0.0) ? "none" : "cos";
        terms.push_back(std::move(jt));
    }
    return terms;
}

inline json oscillating_control_to_json(const OscillatingControl& c) {
    json j;
    j["horizon"] = c.horizon;
    j["max_frequency"] = c.max_frequency();
    j["predicted_error"] = c.predicted_error;
    json levels = json::array();
    for (const auto& l : c.levels)
        levels.push_back({{"word", l.word.spelled()}, {"eps", l.eps}, {"omega", l.omega}});
    j["levels"] = std::move(levels);
    json chans = json::array();
    for (const auto& ch : c.channels) chans.push_back(scalar_function_to_json(ch));
    j["channels"] = std::move(chans);
    return j;
}

inline json probe_report_to_json(const ProbeReport& r) {
    json j;
    j["N"] = r.n_points;
    j["depth"] = r.max_depth;
    j["delta"] = r.delta;
    j["trials"] = r.trials;
    j["fraction"] = r.fraction;
    json per = json::array();
    for (const auto& t : r.per_trial)
        per.push_back({{"seed", t.seed}, {"rank", t.rank}, {"decision", t.generating}});
    j["per_trial"] = std::move(per);
    return j;
}

inline json hermite_report_to_json(const ProfileExpansion& pe, double sup_error,
                                   double lambda_bound) {
    json j;
    j["M"] = pe.expansion.order();
    j["coeffs"] = pe.expansion.coeffs();
    j["sup_error"] = sup_error;
    j["lambda_bound"] = lambda_bound;
    j["quadrature_converged"] = pe.quadrature_converged;
    j["quadrature_drift"] = pe.quadrature_drift;
    return j;
}

/// Deterministic payload: no timing fields (those go to the run log).
inline json steering_report_to_json(const SteeringReport& r) {
    json j;
    j["achieved_c0_error"] = r.achieved_c0_error;
    j["extended_c0_error"] = r.extended_c0_error;
    j["generator_residual"] = r.generator_residual;
    j["eps_certificate"] = r.eps_certificate;
    j["lambda_certificate"] = r.lambda_certificate;
    j["gronwall_bound"] = r.gronwall_bound;
    j["reduction_error"] = r.reduction_error;
    j["reduction_error_ensemble"] = r.reduction_error_ensemble;
    j["predicted_reduction_error"] = r.predicted_reduction_error;
    j["decomposition_slack"] = r.decomposition_slack;
    j["lambda_requested"] = r.lambda_requested;
    j["horizon"] = r.horizon;
    j["n_theta"] = r.n_theta;
    j["time_nodes"] = r.time_nodes;
    j["eps_schedule"] = r.eps_schedule;
    j["dictionary_depth_requested"] = r.dictionary_depth_requested;
    j["dictionary_depth_used"] = r.dictionary_depth_used;
    j["checkpoint_times"] = r.checkpoint_times;
    j["observed_deviation"] = r.observed_deviation;
    j["gronwall_bound_at"] = r.gronwall_bound_at;
    return j;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

}  // namespace io
}  // namespace ensteer
