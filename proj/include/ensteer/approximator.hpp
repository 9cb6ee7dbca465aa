#pragma once

// Builds extended controls: per-time-node least squares for coefficients of
// dictionary bracket fields matching the diffeotopy generator along the
// moving ensemble, blended in time by a normalized partition of unity.

#include <Eigen/Dense>

#include "ensteer/ensemble.hpp"
#include "ensteer/hermite.hpp"

namespace ensteer {

// ---------------------------------------------------------------------------
// BracketDictionary
// ---------------------------------------------------------------------------

class BracketDictionary {
public:
    BracketDictionary() = default;

    /// Realizes the bracket fields for `words` over the family. The plain
    /// words (1)..(s) are always included, whether listed or not.
    BracketDictionary(const FieldFamily& family, std::vector<BracketWord> words,
                      int depth_cap = kDefaultBracketDepthCap)
        : family_(family) {
        for (int j = 1; j <= family.size(); ++j) {
            BracketWord plain({j});
            if (std::find(words.begin(), words.end(), plain) == words.end())
                words.push_back(plain);
        }
        std::sort(words.begin(), words.end(), [](const BracketWord& a, const BracketWord& b) {
            if (a.depth() != b.depth()) return a.depth() < b.depth();
            return a < b;
        });
        words.erase(std::unique(words.begin(), words.end()), words.end());
        for (const BracketWord& w : words) {
            words_.push_back(w);
            fields_.push_back(iterated_bracket(family, w, depth_cap));
        }
    }

    /// Dictionary {(1), (2)} plus the nested words (1^k 2), k = 1..order.
    static BracketDictionary hermite_tower(const FieldFamily& family, int order) {
        if (family.size() < 2)
            throw StructuralError("hermite_tower: needs at least two channels");
        std::vector<BracketWord> words;
        for (int k = 1; k <= order; ++k) {
            std::vector<int> idx(k, 1);
            idx.push_back(2);
            words.push_back(BracketWord(idx));
        }
        return BracketDictionary(family, std::move(words), std::max(kDefaultBracketDepthCap,
                                                                    order + 1));
    }

    int size() const { return static_cast<int>(words_.size()); }
    const std::vector<BracketWord>& words() const { return words_; }
    const std::vector<SmoothField>& fields() const { return fields_; }
    const FieldFamily& family() const { return family_; }
    int dim() const { return family_.dim(); }

    int max_depth() const {
        int d = 0;
        for (const auto& w : words_) d = std::max(d, w.depth());
        return d;
    }

    /// Words of depth <= cap (plain words always survive).
    BracketDictionary truncated(int depth_cap) const {
        std::vector<BracketWord> kept;
        for (const auto& w : words_)
            if (w.depth() <= depth_cap) kept.push_back(w);
        return BracketDictionary(family_, std::move(kept),
                                 std::max(kDefaultBracketDepthCap, depth_cap));
    }

    int index_of(const BracketWord& w) const {
        for (int i = 0; i < size(); ++i)
            if (words_[i] == w) return i;
        return -1;
    }

private:
    FieldFamily family_;
    std::vector<BracketWord> words_;
    std::vector<SmoothField> fields_;
};

// ---------------------------------------------------------------------------
// ExtendedControl
// ---------------------------------------------------------------------------

/// Sampled coefficient functions v_beta(t) on a shared uniform grid over
/// [0, T], interpolated by C^1 cubics.
class ExtendedControl {
public:
    ExtendedControl() = default;
    ExtendedControl(BracketDictionary dict, std::vector<double> time_grid,
                    std::vector<std::vector<double>> samples)
        : dict_(std::move(dict)), times_(std::move(time_grid)), samples_(std::move(samples)) {
        if (static_cast<int>(samples_.size()) != dict_.size())
            throw StructuralError("ExtendedControl: one sample row per word required");
        for (const auto& row : samples_)
            if (row.size() != times_.size())
                throw StructuralError("ExtendedControl: sample row length mismatch");
    }

    const BracketDictionary& dictionary() const { return dict_; }
    const std::vector<double>& time_grid() const { return times_; }
    const std::vector<std::vector<double>>& samples() const { return samples_; }
    double horizon() const { return times_.back(); }

    ScalarFunction channel(int i) const {
        if (times_.size() == 1) return ScalarFunction::constant(samples_.at(i).front());
        return ScalarFunction::baseline(Curve::cubic_spline(times_, samples_.at(i)));
    }

    /// The extended system right-hand side sum_beta v_beta(t) X^beta.
    std::shared_ptr<ControlledRHS> to_rhs() const {
        std::vector<ScalarFunction> chans;
        for (int i = 0; i < dict_.size(); ++i) chans.push_back(channel(i));
        return std::make_shared<ControlledRHS>(dict_.fields(), std::move(chans));
    }

    double sup_channel(int i) const {
        double m = 0.0;
        for (double v : samples_.at(i)) m = std::max(m, std::abs(v));
        return m;
    }

private:
    BracketDictionary dict_;
    std::vector<double> times_;
    std::vector<std::vector<double>> samples_;
};

// ---------------------------------------------------------------------------
// Partition of unity
// ---------------------------------------------------------------------------

/// Cosine-taper windows centered at uniform nodes, normalized so the sum is
/// exactly one at every t.
class PartitionOfUnity {
public:
    PartitionOfUnity(double horizon, int nodes) : horizon_(horizon), nodes_(nodes) {
        if (nodes < 1) throw StructuralError("PartitionOfUnity: need at least one node");
        if (!(horizon > 0.0)) throw StructuralError("PartitionOfUnity: bad horizon");
    }

    int count() const { return nodes_; }
    double node(int i) const {
        return nodes_ == 1 ? 0.0 : horizon_ * i / (nodes_ - 1);
    }

    double weight(int i, double t) const {
        if (nodes_ == 1) return 1.0;
        double total = 0.0, wi = 0.0;
        for (int k = 0; k < nodes_; ++k) {
            const double w = raw(k, t);
            total += w;
            if (k == i) wi = w;
        }
        return wi / total;
    }

private:
    double raw(int i, double t) const {
        const double spacing = horizon_ / (nodes_ - 1);
        const double width = 2.0 * spacing;  // window half-width = node spacing x 2
        const double d = std::abs(t - node(i)) / width;
        if (d >= 1.0) return 0.0;
        return 0.5 * (1.0 + std::cos(3.141592653589793 * d));
    }

    double horizon_;
    int nodes_;
};

// ---------------------------------------------------------------------------
// approximate_generator
// ---------------------------------------------------------------------------

struct GeneratorApproximation {
    ExtendedControl control;
    std::vector<double> node_residuals;   // sup_theta |Y - X| per time node
    double max_node_residual = 0.0;
    double lambda_bound = 0.0;            // sup over nodes of ||X_t||_{1,box}
    double generator_modulus = 0.0;       // max adjacent-node variation of Y along gamma
    double ensemble_modulus = 0.0;        // max adjacent-node motion of gamma
    std::vector<bool> shrunk;             // lambda-ball rescaling applied at node
};

struct ApproximatorOptions {
    int time_nodes = 33;
    int control_grid = 257;          // output sample count for v_beta
    double tikhonov = 1e-8;
    double tolerance = std::numeric_limits<double>::infinity();  // per-node residual gate
    FlowSettings flow;
};

/// ||X||_{1,box}: grid sup of |X(x)| + sum_j |d_j X(x)| (Euclidean norms).
inline double c1_seminorm(const SmoothField& field, const CompactBox& box) {
    double sup = 0.0;
    double v[kMaxDim], jac[kMaxDim * kMaxDim];
    const int n = field.dim();
    for (const Point& x : box.grid()) {
        field.eval(x.data(), v);
        field.jacobian(x.data(), jac);
        double s = euclidean_norm(v, n);
        for (int j = 0; j < n; ++j) {
            double col = 0.0;
            for (int i = 0; i < n; ++i) col += sqr(jac[i * n + j]);
            s += std::sqrt(col);
        }
        sup = std::max(sup, s);
    }
    return sup;
}

inline SmoothField combine_dictionary(const BracketDictionary& dict,
                                      const std::vector<double>& coeffs,
                                      const std::string& label = "X_t") {
    const int n = dict.dim();
    std::vector<GaussPoly> comps(n, GaussPoly(n));
    for (int w = 0; w < dict.size(); ++w) {
        if (coeffs[w] == 0.0) continue;
        for (int i = 0; i < n; ++i)
            comps[i] += coeffs[w] * dict.fields()[w].component(i);
    }
    return SmoothField(std::move(comps), label);
}

/// Per-node regularized least squares with a uniform shrink onto the
/// lambda-ball of the C^1 box seminorm, blended by the partition of unity.
inline GeneratorApproximation approximate_generator(const Diffeotopy& d,
                                                    const BracketDictionary& dict,
                                                    double lambda, const CompactBox& box,
                                                    const ApproximatorOptions& opt = {}) {
    if (dict.dim() != d.start.dim())
        throw StructuralError("approximate_generator: dictionary/ensemble dimension mismatch");
    if (!(lambda > 0.0)) throw StructuralError("approximate_generator: lambda must be positive");

    const int n_nodes = opt.time_nodes;
    const int dim = dict.dim();
    const int n_words = dict.size();
    const int n_theta = d.start.size();

    std::vector<double> node_times;
    for (int i = 0; i < n_nodes; ++i)
        node_times.push_back(n_nodes == 1 ? 0.0 : d.horizon * i / (n_nodes - 1));
    DiffeotopySampler sampler(d, node_times, opt.flow);

    GeneratorApproximation out;
    std::vector<std::vector<double>> node_coeffs(n_nodes);
    std::vector<DiffeotopySample> node_samples;
    node_samples.reserve(n_nodes);

    Eigen::MatrixXd a(n_theta * dim, n_words);
    Eigen::VectorXd y(n_theta * dim);
    double val[kMaxDim];

    for (int k = 0; k < n_nodes; ++k) {
        node_samples.push_back(sampler.sample(k));
        const auto& sample = node_samples.back();
        for (int i = 0; i < n_theta; ++i) {
            const Point& x = sample.ensemble.point(i);
            for (int w = 0; w < n_words; ++w) {
                dict.fields()[w].eval(x.data(), val);
                for (int c = 0; c < dim; ++c) a(i * dim + c, w) = val[c];
            }
            for (int c = 0; c < dim; ++c) y(i * dim + c) = sample.generator_values[i][c];
        }
        Eigen::MatrixXd normal = a.transpose() * a;
        normal.diagonal().array() += opt.tikhonov;
        Eigen::VectorXd coef = normal.ldlt().solve(a.transpose() * y);

        std::vector<double> cvec(coef.data(), coef.data() + n_words);
        double seminorm = c1_seminorm(combine_dictionary(dict, cvec), box);
        bool shrunk = false;
        if (seminorm > lambda) {
            const double scale = lambda / seminorm * (1.0 - 1e-9);
            for (double& c : cvec) c *= scale;
            coef *= scale;
            seminorm = lambda;
            shrunk = true;
        }

        double resid = 0.0;
        Eigen::VectorXd r = y - a * coef;
        for (int i = 0; i < n_theta; ++i) {
            double s = 0.0;
            for (int c = 0; c < dim; ++c) s += sqr(r(i * dim + c));
            resid = std::max(resid, std::sqrt(s));
        }

        if (resid > opt.tolerance)
            throw InfeasibilityError(
                "generator approximation misses tolerance at node t = " +
                std::to_string(node_times[k]) + " (residual " + std::to_string(resid) +
                " > " + std::to_string(opt.tolerance) +
                "): the bracket approximating condition fails numerically for this "
                "dictionary and lambda");

        node_coeffs[k] = std::move(cvec);
        out.node_residuals.push_back(resid);
        out.max_node_residual = std::max(out.max_node_residual, resid);
        out.lambda_bound = std::max(out.lambda_bound, seminorm);
        out.shrunk.push_back(shrunk);
    }

    // moduli of continuity between adjacent nodes, reported with the blend
    for (int k = 0; k + 1 < n_nodes; ++k) {
        double dy = 0.0, dg = 0.0;
        for (int i = 0; i < n_theta; ++i) {
            dy = std::max(dy, euclidean_distance(node_samples[k].generator_values[i].data(),
                                                 node_samples[k + 1].generator_values[i].data(),
                                                 dim));
            dg = std::max(dg, euclidean_distance(node_samples[k].ensemble.point(i).data(),
                                                 node_samples[k + 1].ensemble.point(i).data(),
                                                 dim));
        }
        out.generator_modulus = std::max(out.generator_modulus, dy);
        out.ensemble_modulus = std::max(out.ensemble_modulus, dg);
    }

    // blend: v_beta(t) = sum_i mu_i(t) c_{i beta}, sampled on the output grid
    PartitionOfUnity pou(d.horizon, n_nodes);
    std::vector<double> out_grid;
    for (int i = 0; i < opt.control_grid; ++i)
        out_grid.push_back(d.horizon * i / (opt.control_grid - 1));
    std::vector<std::vector<double>> samples(n_words,
                                             std::vector<double>(out_grid.size(), 0.0));
    for (std::size_t g = 0; g < out_grid.size(); ++g) {
        for (int k = 0; k < n_nodes; ++k) {
            const double mu = pou.weight(k, out_grid[g]);
            if (mu == 0.0) continue;
            for (int w = 0; w < n_words; ++w) samples[w][g] += mu * node_coeffs[k][w];
        }
    }
    out.control = ExtendedControl(dict, std::move(out_grid), std::move(samples));
    return out;
}

}  // namespace ensteer
