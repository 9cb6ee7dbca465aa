#pragma once

// Parameterized point ensembles, their C^0 / L_p distances, flow action and
// diffeotopies (reference flows on ensembles generated by a time-variant
// field).

#include <functional>

#include "ensteer/flow.hpp"

namespace ensteer {

class Ensemble {
public:
    Ensemble() = default;
    Ensemble(std::vector<double> theta_grid, std::vector<Point> points)
        : theta_(std::move(theta_grid)), points_(std::move(points)) {
        if (theta_.empty() || theta_.size() != points_.size())
            throw StructuralError("Ensemble: grid/point count mismatch");
        dim_ = static_cast<int>(points_.front().size());
        for (const auto& p : points_)
            if (static_cast<int>(p.size()) != dim_)
                throw StructuralError("Ensemble: mixed point dimensions");
        for (std::size_t i = 1; i < theta_.size(); ++i)
            if (!(theta_[i] > theta_[i - 1]))
                throw StructuralError("Ensemble: theta grid must strictly increase");
    }

    /// Uniform grid on [0, 1] with coordinates given as functions of theta.
    static Ensemble from_profile(int n_theta,
                                 const std::vector<std::function<double(double)>>& coords) {
        if (n_theta < 2) throw StructuralError("Ensemble: need at least 2 nodes");
        std::vector<double> grid(n_theta);
        std::vector<Point> pts(n_theta, Point(coords.size()));
        for (int i = 0; i < n_theta; ++i) {
            grid[i] = static_cast<double>(i) / (n_theta - 1);
            for (std::size_t c = 0; c < coords.size(); ++c) pts[i][c] = coords[c](grid[i]);
        }
        return Ensemble(std::move(grid), std::move(pts));
    }

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(theta_.size()); }
    const std::vector<double>& theta_grid() const { return theta_; }
    const std::vector<Point>& points() const { return points_; }
    const Point& point(int i) const { return points_.at(i); }

    std::vector<double> flat() const { return detail::flatten(points_, dim_); }

    static Ensemble from_flat(const std::vector<double>& theta, const std::vector<double>& xs,
                              int dim) {
        std::vector<Point> pts;
        for (std::size_t i = 0; i < theta.size(); ++i)
            pts.emplace_back(xs.begin() + i * dim, xs.begin() + (i + 1) * dim);
        return Ensemble(theta, std::move(pts));
    }

private:
    std::vector<double> theta_;
    std::vector<Point> points_;
    int dim_ = 0;
};

inline void check_same_grid(const Ensemble& a, const Ensemble& b) {
    if (a.dim() != b.dim()) throw StructuralError("ensembles have different dimensions");
    if (a.theta_grid() != b.theta_grid())
        throw StructuralError("ensembles are not on the same theta grid");
}

/// sup over nodes of the Euclidean distance.
inline double c0_distance(const Ensemble& a, const Ensemble& b) {
    check_same_grid(a, b);
    double sup = 0.0;
    for (int i = 0; i < a.size(); ++i)
        sup = std::max(sup, euclidean_distance(a.point(i).data(), b.point(i).data(), a.dim()));
    return sup;
}

/// (integral over theta of d(.,.)^p)^{1/p}, trapezoidal on the grid.
inline double lp_distance(const Ensemble& a, const Ensemble& b, double p) {
    check_same_grid(a, b);
    if (p < 1.0) throw StructuralError("lp_distance: p must be >= 1");
    if (a.size() < 2) throw StructuralError("lp_distance: continual grid required");
    const auto& th = a.theta_grid();
    double integral = 0.0;
    double prev = std::pow(euclidean_distance(a.point(0).data(), b.point(0).data(), a.dim()), p);
    for (int i = 1; i < a.size(); ++i) {
        const double cur =
            std::pow(euclidean_distance(a.point(i).data(), b.point(i).data(), a.dim()), p);
        integral += 0.5 * (prev + cur) * (th[i] - th[i - 1]);
        prev = cur;
    }
    return std::pow(integral, 1.0 / p);
}

/// Map every ensemble point through the flow (one batched integration).
inline Ensemble apply_flow(const FlowMap& flow, const Ensemble& e) {
    if (flow.rhs->dim() != e.dim()) throw StructuralError("apply_flow: dimension mismatch");
    try {
        auto bt = integrate_batch(*flow.rhs, e.flat(), flow.t0, flow.t1, flow.settings,
                                  {flow.t1});
        return Ensemble::from_flat(e.theta_grid(), bt.states.back(), e.dim());
    } catch (const DomainError& err) {
        throw DomainError(std::string(err.what()) + " while transporting an ensemble");
    }
}

// ---------------------------------------------------------------------------
// Diffeotopy
// ---------------------------------------------------------------------------

/// A reference flow gamma_t = R_t(alpha) generated by a time-variant field.
struct Diffeotopy {
    std::shared_ptr<const TimeVaryingField> generator;
    Ensemble start;
    double horizon = 1.0;

    Diffeotopy() = default;
    Diffeotopy(std::shared_ptr<const TimeVaryingField> gen, Ensemble alpha, double T)
        : generator(std::move(gen)), start(std::move(alpha)), horizon(T) {
        if (generator->dim() != start.dim())
            throw StructuralError("Diffeotopy: generator/ensemble dimension mismatch");
        if (!(horizon > 0.0)) throw StructuralError("Diffeotopy: horizon must be positive");
    }
};

struct DiffeotopySample {
    Ensemble ensemble;                    // gamma_t
    std::vector<Point> generator_values;  // Y_t(gamma_t(theta)) per node
};

/// Integrates the diffeotopy once and caches gamma_t at the requested times.
class DiffeotopySampler {
public:
    DiffeotopySampler(const Diffeotopy& d, std::vector<double> times, FlowSettings settings = {})
        : diffeotopy_(d), times_(std::move(times)) {
        for (double t : times_)
            if (t < 0.0 || t > d.horizon + 1e-12)
                throw StructuralError("DiffeotopySampler: time outside [0, T]");
        std::vector<double> ts = times_;
        auto bt = integrate_batch(*d.generator, d.start.flat(), 0.0, d.horizon, settings, ts);
        states_ = std::move(bt.states);
    }

    int count() const { return static_cast<int>(times_.size()); }
    double time(int k) const { return times_.at(k); }

    DiffeotopySample sample(int k) const {
        const auto& flat = states_.at(k);
        Ensemble gamma = Ensemble::from_flat(diffeotopy_.start.theta_grid(), flat,
                                             diffeotopy_.start.dim());
        const int dim = gamma.dim();
        const int n = gamma.size();
        std::vector<double> vals(static_cast<std::size_t>(n) * dim);
        diffeotopy_.generator->eval_batch(times_.at(k), flat.data(), vals.data(), n);
        std::vector<Point> gen;
        gen.reserve(n);
        for (int i = 0; i < n; ++i)
            gen.emplace_back(vals.begin() + static_cast<std::ptrdiff_t>(i) * dim,
                             vals.begin() + static_cast<std::ptrdiff_t>(i + 1) * dim);
        return {std::move(gamma), std::move(gen)};
    }

private:
    Diffeotopy diffeotopy_;
    std::vector<double> times_;
    std::vector<std::vector<double>> states_;
};

/// One-off sample of gamma_t and the generator along it.
inline DiffeotopySample diffeotopy_sample(const Diffeotopy& d, double t,
                                          FlowSettings settings = {}) {
    DiffeotopySampler sampler(d, {t}, std::move(settings));
    return sampler.sample(0);
}

}  // namespace ensteer
