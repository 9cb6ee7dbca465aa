#pragma once

// Bracket-generating test for N-point ensembles: evaluations of iterated
// brackets at N pairwise-distinct points are stacked into a matrix whose
// numerical rank decides exact controllability of the N-fold system, plus a
// randomized probe of how generic that property is under perturbations.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "ensteer/bracket.hpp"
#include "ensteer/flow.hpp"

namespace ensteer {

inline constexpr double kDistinctnessMargin = 1e-6;

struct BracketMatrix {
    std::vector<Point> points;       // N pairwise-distinct points
    std::vector<BracketWord> words;  // column order
    Eigen::MatrixXd matrix;          // (N*dim) x |words|
    double distinctness_margin = 0.0;
    int dim = 0;
};

/// All words over {1..s} of depth <= max_depth, enumerated deterministically
/// (by depth, then lexicographically).
inline std::vector<BracketWord> all_words(int channels, int max_depth) {
    std::vector<BracketWord> words;
    std::vector<std::vector<int>> level;
    for (int j = 1; j <= channels; ++j) level.push_back({j});
    for (int d = 1; d <= max_depth; ++d) {
        for (const auto& idx : level) words.push_back(BracketWord(idx));
        if (d == max_depth) break;
        std::vector<std::vector<int>> next;
        for (int j = 1; j <= channels; ++j)
            for (const auto& idx : level) {
                std::vector<int> w = {j};
                w.insert(w.end(), idx.begin(), idx.end());
                next.push_back(std::move(w));
            }
        level = std::move(next);
        std::sort(level.begin(), level.end());
    }
    return words;
}

inline BracketMatrix build_bracket_matrix(const FieldFamily& family,
                                          const std::vector<Point>& points, int max_depth,
                                          int depth_cap_override = 0) {
    if (points.empty()) throw StructuralError("build_bracket_matrix: no points");
    const int dim = family.dim();
    for (const auto& p : points)
        if (static_cast<int>(p.size()) != dim)
            throw StructuralError("build_bracket_matrix: point dimension mismatch");

    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            margin = std::min(margin,
                              euclidean_distance(points[i].data(), points[j].data(), dim));
    if (points.size() > 1 && margin <= kDistinctnessMargin)
        throw StructuralError(
            "build_bracket_matrix: degenerate input, two points closer than the "
            "distinctness margin (min pairwise distance " +
            std::to_string(margin) + ")");

    const int cap = std::max({kDefaultBracketDepthCap, max_depth, depth_cap_override});
    std::vector<BracketWord> words = all_words(family.size(), max_depth);

    BracketMatrix out;
    out.points = points;
    out.words = words;
    out.dim = dim;
    out.distinctness_margin = (points.size() > 1) ? margin : 0.0;
    out.matrix.resize(static_cast<Eigen::Index>(points.size()) * dim,
                      static_cast<Eigen::Index>(words.size()));
    double val[kMaxDim];
    for (std::size_t w = 0; w < words.size(); ++w) {
        SmoothField f = iterated_bracket(family, words[w], cap);
        for (std::size_t p = 0; p < points.size(); ++p) {
            f.eval(points[p].data(), val);
            for (int c = 0; c < dim; ++c)
                out.matrix(static_cast<Eigen::Index>(p) * dim + c,
                           static_cast<Eigen::Index>(w)) = val[c];
        }
    }
    return out;
}

struct RankDecision {
    bool generating = false;
    int rank = 0;
    double smallest_retained_sv = 0.0;
    double threshold = 0.0;
};

/// Numerical rank through singular values: retained iff sigma_k > tol * sigma_1,
/// default tol = 1e-8 sqrt(rows * cols); generating iff rank == N * dim.
inline RankDecision is_bracket_generating(const BracketMatrix& m, double rel_tol = 0.0) {
    RankDecision out;
    const auto rows = m.matrix.rows();
    const auto cols = m.matrix.cols();
    if (rows == 0 || cols == 0) return out;
    if (rel_tol <= 0.0)
        rel_tol = 1e-8 * std::sqrt(static_cast<double>(rows) * static_cast<double>(cols));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.matrix);
    const auto& sv = svd.singularValues();
    out.threshold = rel_tol * sv(0);
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (sv(k) > out.threshold) {
            out.rank = static_cast<int>(k) + 1;
            out.smallest_retained_sv = sv(k);
        }
    }
    out.generating = (out.rank == static_cast<int>(rows));
    return out;
}

// ---------------------------------------------------------------------------
// genericity probe
// ---------------------------------------------------------------------------

struct ProbeTrial {
    std::uint64_t seed = 0;
    int rank = 0;
    bool generating = false;
};

struct ProbeReport {
    int n_points = 0;
    int max_depth = 0;
    double delta = 0.0;
    int trials = 0;
    double fraction = 0.0;
    std::vector<ProbeTrial> per_trial;
};

/// Fraction of delta-perturbed families (random degree <= 3 polynomial
/// fields) that are bracket generating at random pairwise-distinct tuples in
/// the box. Per-trial RNG streams derive from (seed, trial).
inline ProbeReport genericity_probe(const FieldFamily& family, int n_points, int max_depth,
                                    int trials, double delta, std::uint64_t seed,
                                    const CompactBox* sample_box = nullptr) {
    if (trials < 1) throw StructuralError("genericity_probe: trials must be >= 1");
    if (delta < 0.0) throw StructuralError("genericity_probe: delta must be >= 0");
    const int dim = family.dim();
    CompactBox box = sample_box ? *sample_box : CompactBox::cube(dim, -1.0, 1.0, 2);

    ProbeReport report;
    report.n_points = n_points;
    report.max_depth = max_depth;
    report.delta = delta;
    report.trials = trials;

    int hits = 0;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(trial));

        std::vector<SmoothField> perturbed;
        for (int j = 0; j < family.size(); ++j) {
            if (delta == 0.0) {
                perturbed.push_back(family[j]);
                continue;
            }
            SmoothField noise = random_polynomial_field(dim, 3, delta, rng);
            std::vector<GaussPoly> comps;
            for (int c = 0; c < dim; ++c)
                comps.push_back(family[j].component(c) + noise.component(c));
            perturbed.push_back(SmoothField(std::move(comps), family[j].label() + "+delta"));
        }

        std::vector<Point> pts;
        while (static_cast<int>(pts.size()) < n_points) {
            Point p(dim);
            for (int c = 0; c < dim; ++c) p[c] = rng.uniform(box.lo[c], box.hi[c]);
            bool ok = true;
            for (const auto& q : pts)
                if (euclidean_distance(p.data(), q.data(), dim) <= kDistinctnessMargin)
                    ok = false;
            if (ok) pts.push_back(std::move(p));
        }

        auto matrix = build_bracket_matrix(FieldFamily(perturbed), pts, max_depth);
        auto decision = is_bracket_generating(matrix);
        if (decision.generating) ++hits;
        report.per_trial.push_back(
            {seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(trial) + 1)),
             decision.rank, decision.generating});
    }
    report.fraction = static_cast<double>(hits) / trials;
    return report;
}

}  // namespace ensteer
