#pragma once

// Fixed-step RK4 integration of time-variant control-linear dynamics, with
// an oscillation-aware step policy, guard boxes, joint variational equation
// for C^1 flow seminorms, and the composition check for the
// variation-of-constants (chronological) formula.

#include <memory>

#include "ensteer/bracket.hpp"
#include "ensteer/scalarfun.hpp"

namespace ensteer {

// ---------------------------------------------------------------------------
// CompactBox
// ---------------------------------------------------------------------------

struct CompactBox {
    std::vector<double> lo, hi;
    std::vector<int> resolution;  // grid nodes per axis, >= 2

    CompactBox() = default;
    CompactBox(std::vector<double> lo_, std::vector<double> hi_, std::vector<int> res)
        : lo(std::move(lo_)), hi(std::move(hi_)), resolution(std::move(res)) {
        if (lo.empty() || lo.size() != hi.size() || lo.size() != resolution.size())
            throw StructuralError("CompactBox: inconsistent axis data");
        for (std::size_t i = 0; i < lo.size(); ++i) {
            if (!(lo[i] < hi[i])) throw StructuralError("CompactBox: empty axis interval");
            if (resolution[i] < 2) throw StructuralError("CompactBox: resolution must be >= 2");
        }
    }

    static CompactBox cube(int dim, double lo, double hi, int res) {
        return CompactBox(std::vector<double>(dim, lo), std::vector<double>(dim, hi),
                          std::vector<int>(dim, res));
    }

    int dim() const { return static_cast<int>(lo.size()); }

    std::vector<Point> grid() const {
        std::vector<Point> pts;
        Point cur(dim());
        auto rec = [&](auto&& self, int axis) -> void {
            if (axis == dim()) {
                pts.push_back(cur);
                return;
            }
            for (int k = 0; k < resolution[axis]; ++k) {
                cur[axis] = lo[axis] + (hi[axis] - lo[axis]) * k / (resolution[axis] - 1);
                self(self, axis + 1);
            }
        };
        rec(rec, 0);
        return pts;
    }

    bool contains(const double* x) const {
        for (int i = 0; i < dim(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }

    /// Box scaled about its center (factor 2 = the default guard padding).
    CompactBox padded(double factor) const {
        CompactBox b = *this;
        for (int i = 0; i < dim(); ++i) {
            const double c = 0.5 * (lo[i] + hi[i]);
            const double h = 0.5 * (hi[i] - lo[i]) * factor;
            b.lo[i] = c - h;
            b.hi[i] = c + h;
        }
        return b;
    }

    CompactBox with_margin(double margin) const {
        CompactBox b = *this;
        for (int i = 0; i < dim(); ++i) {
            b.lo[i] -= margin;
            b.hi[i] += margin;
        }
        return b;
    }
};

// ---------------------------------------------------------------------------
// Right-hand sides
// ---------------------------------------------------------------------------

class TimeVaryingField {
public:
    virtual ~TimeVaryingField() = default;
    virtual int dim() const = 0;
    /// Evaluate the field for a batch of points (x, out: npts * dim).
    virtual void eval_batch(double t, const double* x, double* out, int npts) const = 0;
    /// Spatial Jacobian at one point, row-major dim x dim.
    virtual void jacobian(double t, const double* x, double* out) const = 0;
    /// Largest oscillation angular frequency the field declares, 0 if none.
    virtual double declared_frequency() const { return 0.0; }
};

/// sum_j u_j(t) f_j(x); covers autonomous fields, control-linear systems,
/// extended systems and diffeotopy generators alike.
class ControlledRHS : public TimeVaryingField {
public:
    ControlledRHS(std::vector<SmoothField> fields, std::vector<ScalarFunction> channels)
        : fields_(std::move(fields)), channels_(std::move(channels)) {
        if (fields_.empty() || fields_.size() != channels_.size())
            throw StructuralError("ControlledRHS: need one channel per field");
        dim_ = fields_.front().dim();
        for (const auto& f : fields_)
            if (f.dim() != dim_) throw StructuralError("ControlledRHS: mixed dimensions");
        for (const auto& c : channels_)
            max_freq_ = std::max(max_freq_, c.max_frequency());
    }

    static std::shared_ptr<ControlledRHS> autonomous(const SmoothField& f) {
        return std::make_shared<ControlledRHS>(std::vector<SmoothField>{f},
                                               std::vector<ScalarFunction>{
                                                   ScalarFunction::constant(1.0)});
    }

    int dim() const override { return dim_; }
    double declared_frequency() const override { return max_freq_; }
    const std::vector<SmoothField>& fields() const { return fields_; }
    const std::vector<ScalarFunction>& channels() const { return channels_; }

    void eval_batch(double t, const double* x, double* out, int npts) const override {
        double u[64];
        const int s = static_cast<int>(fields_.size());
        for (int j = 0; j < s; ++j) u[j] = channels_[j].eval(t);
        const std::size_t total = static_cast<std::size_t>(npts) * dim_;
        for (std::size_t k = 0; k < total; ++k) out[k] = 0.0;
        thread_local std::vector<double> tmp;
        tmp.resize(total);
        for (int j = 0; j < s; ++j) {
            if (u[j] == 0.0) continue;
            fields_[j].eval_batch(x, tmp.data(), npts);
            for (std::size_t k = 0; k < total; ++k) out[k] += u[j] * tmp[k];
        }
    }

    void jacobian(double t, const double* x, double* out) const override {
        double jf[kMaxDim * kMaxDim];
        for (int k = 0; k < dim_ * dim_; ++k) out[k] = 0.0;
        for (std::size_t j = 0; j < fields_.size(); ++j) {
            const double u = channels_[j].eval(t);
            if (u == 0.0) continue;
            fields_[j].jacobian(x, jf);
            for (int k = 0; k < dim_ * dim_; ++k) out[k] += u * jf[k];
        }
    }

private:
    std::vector<SmoothField> fields_;
    std::vector<ScalarFunction> channels_;
    int dim_ = 0;
    double max_freq_ = 0.0;
};

class SumRHS : public TimeVaryingField {
public:
    explicit SumRHS(std::vector<std::shared_ptr<const TimeVaryingField>> parts)
        : parts_(std::move(parts)) {
        if (parts_.empty()) throw StructuralError("SumRHS: empty");
        dim_ = parts_.front()->dim();
        for (const auto& p : parts_)
            if (p->dim() != dim_) throw StructuralError("SumRHS: mixed dimensions");
    }

    int dim() const override { return dim_; }

    double declared_frequency() const override {
        double m = 0.0;
        for (const auto& p : parts_) m = std::max(m, p->declared_frequency());
        return m;
    }

    void eval_batch(double t, const double* x, double* out, int npts) const override {
        std::vector<double> tmp(static_cast<std::size_t>(npts) * dim_);
        for (int k = 0; k < npts * dim_; ++k) out[k] = 0.0;
        for (const auto& p : parts_) {
            p->eval_batch(t, x, tmp.data(), npts);
            for (int k = 0; k < npts * dim_; ++k) out[k] += tmp[k];
        }
    }

    void jacobian(double t, const double* x, double* out) const override {
        double tmp[kMaxDim * kMaxDim];
        for (int k = 0; k < dim_ * dim_; ++k) out[k] = 0.0;
        for (const auto& p : parts_) {
            p->jacobian(t, x, tmp);
            for (int k = 0; k < dim_ * dim_; ++k) out[k] += tmp[k];
        }
    }

private:
    std::vector<std::shared_ptr<const TimeVaryingField>> parts_;
    int dim_ = 0;
};

// ---------------------------------------------------------------------------
// Integrator
// ---------------------------------------------------------------------------

struct FlowSettings {
    double h_max = 1e-2;
    double tolerance = 1e-9;       // nominal local accuracy target, reported
    double samples_per_period = 40.0;
    std::shared_ptr<const CompactBox> guard;  // escape is an error when set

    /// Step from the oscillation-aware policy for angular frequency omega.
    double step_for_frequency(double omega) const {
        double h = h_max;
        if (omega > 0.0) h = std::min(h, 2.0 * kPi / (samples_per_period * omega));
        if (h < 1e-12)
            throw StiffnessError("step policy underflow: h = " + std::to_string(h) +
                                 " for frequency " + std::to_string(omega));
        return h;
    }

    static constexpr double kPi = 3.141592653589793;
};

struct BatchTrajectory {
    std::vector<double> times;
    // states[k] is a flat (npts * dim) snapshot at times[k]
    std::vector<std::vector<double>> states;
    // optional per-point Jacobians, (npts * dim * dim) per snapshot
    std::vector<std::vector<double>> jacobians;
};

namespace detail {

inline void rk4_stage_jac(const TimeVaryingField& rhs, double t, const double* state,
                          double* deriv, int npts, int dim) {
    // state layout per point: x (dim) then row-major M (dim*dim)
    const int blk = dim + dim * dim;
    std::vector<double> xs(static_cast<std::size_t>(npts) * dim);
    for (int p = 0; p < npts; ++p)
        for (int i = 0; i < dim; ++i) xs[p * dim + i] = state[p * blk + i];
    std::vector<double> fx(static_cast<std::size_t>(npts) * dim);
    rhs.eval_batch(t, xs.data(), fx.data(), npts);
    double jac[kMaxDim * kMaxDim];
    for (int p = 0; p < npts; ++p) {
        for (int i = 0; i < dim; ++i) deriv[p * blk + i] = fx[p * dim + i];
        rhs.jacobian(t, xs.data() + static_cast<std::ptrdiff_t>(p) * dim, jac);
        const double* m = state + p * blk + dim;
        double* dm = deriv + p * blk + dim;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                double s = 0.0;
                for (int k = 0; k < dim; ++k) s += jac[i * dim + k] * m[k * dim + j];
                dm[i * dim + j] = s;
            }
    }
}

}  // namespace detail

/// RK4 over a batch of initial points with snapshots at the requested sample
/// times (strictly increasing, first >= t0 when integrating forward). Sample
/// times are hit exactly; the guard box is checked after every step.
inline BatchTrajectory integrate_batch(const TimeVaryingField& rhs, std::vector<double> x0,
                                       double t0, double t1, const FlowSettings& settings,
                                       std::vector<double> sample_times,
                                       bool with_jacobian = false) {
    const int dim = rhs.dim();
    if (dim < 1 || dim > kMaxDim) throw StructuralError("integrate_batch: bad dimension");
    const int npts = static_cast<int>(x0.size()) / dim;
    if (npts * dim != static_cast<int>(x0.size()))
        throw StructuralError("integrate_batch: batch size not a multiple of dim");
    if (sample_times.empty()) sample_times.push_back(t1);

    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    const double h_policy = settings.step_for_frequency(rhs.declared_frequency());

    const int blk = with_jacobian ? dim + dim * dim : dim;
    std::vector<double> state(static_cast<std::size_t>(npts) * blk);
    for (int p = 0; p < npts; ++p) {
        for (int i = 0; i < dim; ++i) state[p * blk + i] = x0[p * dim + i];
        if (with_jacobian)
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j)
                    state[p * blk + dim + i * dim + j] = (i == j) ? 1.0 : 0.0;
    }

    BatchTrajectory traj;
    const std::size_t total = state.size();
    std::vector<double> k1(total), k2(total), k3(total), k4(total), xt(total);

    auto deriv = [&](double t, const double* s, double* d) {
        if (with_jacobian) {
            detail::rk4_stage_jac(rhs, t, s, d, npts, dim);
        } else if (worker_cap() > 1 && npts >= 64) {
            parallel_chunks(npts, [&](int begin, int end) {
                rhs.eval_batch(t, s + static_cast<std::ptrdiff_t>(begin) * dim,
                               d + static_cast<std::ptrdiff_t>(begin) * dim, end - begin);
            });
        } else {
            rhs.eval_batch(t, s, d, npts);
        }
    };

    auto snapshot = [&]() {
        std::vector<double> xs(static_cast<std::size_t>(npts) * dim);
        for (int p = 0; p < npts; ++p)
            for (int i = 0; i < dim; ++i) xs[p * dim + i] = state[p * blk + i];
        traj.states.push_back(std::move(xs));
        if (with_jacobian) {
            std::vector<double> js(static_cast<std::size_t>(npts) * dim * dim);
            for (int p = 0; p < npts; ++p)
                for (int k = 0; k < dim * dim; ++k)
                    js[p * dim * dim + k] = state[p * blk + dim + k];
            traj.jacobians.push_back(std::move(js));
        }
    };

    double t_cur = t0;
    for (double t_target : sample_times) {
        if (dir * (t_target - t_cur) < -1e-12)
            throw StructuralError("integrate_batch: sample times must be ordered");
        const double span = t_target - t_cur;
        const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(std::abs(span) / h_policy)));
        const double h = span / static_cast<double>(nsteps);
        if (span != 0.0) {
            for (long s = 0; s < nsteps; ++s) {
                const double t = t_cur + s * h;
                deriv(t, state.data(), k1.data());
                for (std::size_t i = 0; i < total; ++i) xt[i] = state[i] + 0.5 * h * k1[i];
                deriv(t + 0.5 * h, xt.data(), k2.data());
                for (std::size_t i = 0; i < total; ++i) xt[i] = state[i] + 0.5 * h * k2[i];
                deriv(t + 0.5 * h, xt.data(), k3.data());
                for (std::size_t i = 0; i < total; ++i) xt[i] = state[i] + h * k3[i];
                deriv(t + h, xt.data(), k4.data());
                for (std::size_t i = 0; i < total; ++i)
                    state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                if (settings.guard) {
                    for (int p = 0; p < npts; ++p)
                        if (!settings.guard->contains(&state[static_cast<std::size_t>(p) * blk]))
                            throw DomainError(
                                "trajectory escaped the guard box at t = " +
                                std::to_string(t + h) + " (point " + std::to_string(p) + ")");
                }
            }
        }
        t_cur = t_target;
        traj.times.push_back(t_target);
        snapshot();
    }
    return traj;
}

// ---------------------------------------------------------------------------
// FlowMap and per-point API
// ---------------------------------------------------------------------------

struct FlowMap {
    std::shared_ptr<const TimeVaryingField> rhs;
    double t0 = 0.0;
    double t1 = 1.0;
    FlowSettings settings;

    FlowMap() = default;
    FlowMap(std::shared_ptr<const TimeVaryingField> r, double start, double end,
            FlowSettings s = {})
        : rhs(std::move(r)), t0(start), t1(end), settings(std::move(s)) {}

    static FlowMap of_field(const SmoothField& f, double time, FlowSettings s = {}) {
        return FlowMap(ControlledRHS::autonomous(f), 0.0, time, std::move(s));
    }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Point> points;
};

inline Trajectory integrate_point(const FlowMap& flow, const Point& x0,
                                  int output_samples = 33) {
    if (static_cast<int>(x0.size()) != flow.rhs->dim())
        throw StructuralError("integrate_point: dimension mismatch");
    std::vector<double> ts;
    for (int i = 0; i <= output_samples - 1; ++i)
        ts.push_back(flow.t0 + (flow.t1 - flow.t0) * i / std::max(1, output_samples - 1));
    if (flow.t1 == flow.t0) ts = {flow.t0};
    BatchTrajectory bt = integrate_batch(*flow.rhs, x0, flow.t0, flow.t1, flow.settings, ts);
    Trajectory out;
    out.times = bt.times;
    for (const auto& s : bt.states) out.points.push_back(Point(s.begin(), s.end()));
    return out;
}

inline Point flow_evaluate(const FlowMap& flow, const Point& x0) {
    BatchTrajectory bt =
        integrate_batch(*flow.rhs, x0, flow.t0, flow.t1, flow.settings, {flow.t1});
    return Point(bt.states.back().begin(), bt.states.back().end());
}

namespace detail {

inline std::vector<double> flatten(const std::vector<Point>& pts, int dim) {
    std::vector<double> flat;
    flat.reserve(pts.size() * dim);
    for (const auto& p : pts) {
        if (static_cast<int>(p.size()) != dim)
            throw StructuralError("flatten: point dimension mismatch");
        flat.insert(flat.end(), p.begin(), p.end());
    }
    return flat;
}

}  // namespace detail

/// Grid sup of |P(x) - Q(x)| at the shared end time.
inline double flow_c0_distance(const FlowMap& p, const FlowMap& q, const CompactBox& k_box) {
    if (p.rhs->dim() != q.rhs->dim() || p.rhs->dim() != k_box.dim())
        throw StructuralError("flow_c0_distance: dimension mismatch");
    if (p.t0 != q.t0 || p.t1 != q.t1)
        throw StructuralError("flow_c0_distance: flows must share the time interval");
    const int dim = k_box.dim();
    auto grid = k_box.grid();
    auto x0 = detail::flatten(grid, dim);
    auto tp = integrate_batch(*p.rhs, x0, p.t0, p.t1, p.settings, {p.t1});
    auto tq = integrate_batch(*q.rhs, x0, q.t0, q.t1, q.settings, {q.t1});
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        sup = std::max(sup, euclidean_distance(&tp.states[0][i * dim], &tq.states[0][i * dim], dim));
    return sup;
}

/// Grid sup of |P(x) - Q(x)| + Frobenius |DP(x) - DQ(x)|; Jacobians come
/// from the variational equation integrated jointly with the state.
inline double flow_c1_distance(const FlowMap& p, const FlowMap& q, const CompactBox& k_box) {
    if (p.rhs->dim() != q.rhs->dim() || p.rhs->dim() != k_box.dim())
        throw StructuralError("flow_c1_distance: dimension mismatch");
    if (p.t0 != q.t0 || p.t1 != q.t1)
        throw StructuralError("flow_c1_distance: flows must share the time interval");
    const int dim = k_box.dim();
    auto grid = k_box.grid();
    auto x0 = detail::flatten(grid, dim);
    auto tp = integrate_batch(*p.rhs, x0, p.t0, p.t1, p.settings, {p.t1}, true);
    auto tq = integrate_batch(*q.rhs, x0, q.t0, q.t1, q.settings, {q.t1}, true);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double d = euclidean_distance(&tp.states[0][i * dim], &tq.states[0][i * dim], dim);
        double fro = 0.0;
        for (int k = 0; k < dim * dim; ++k)
            fro += sqr(tp.jacobians[0][i * dim * dim + k] - tq.jacobians[0][i * dim * dim + k]);
        sup = std::max(sup, d + std::sqrt(fro));
    }
    return sup;
}

/// Dispatcher over the seminorm order; only r = 0 and r = 1 are supported,
/// higher orders are refused rather than approximated by differencing.
inline double flow_cr_distance(const FlowMap& p, const FlowMap& q, const CompactBox& k_box,
                               int r) {
    if (r == 0) return flow_c0_distance(p, q, k_box);
    if (r == 1) return flow_c1_distance(p, q, k_box);
    throw CapabilityError("flow distance: seminorm order r = " + std::to_string(r) +
                          " is unsupported (only r in {0, 1})");
}

/// Sup over `checkpoints` uniform times in (0, T] and the K grid of the
/// pointwise distance between two flows started from the grid.
inline double flow_c0_distance_checkpoints(const TimeVaryingField& p, const TimeVaryingField& q,
                                           double T, const CompactBox& k_box,
                                           const FlowSettings& sp, const FlowSettings& sq,
                                           int checkpoints = 16,
                                           std::vector<double>* per_checkpoint = nullptr) {
    const int dim = k_box.dim();
    auto grid = k_box.grid();
    auto x0 = detail::flatten(grid, dim);
    std::vector<double> ts;
    for (int i = 1; i <= checkpoints; ++i) ts.push_back(T * i / checkpoints);
    auto tp = integrate_batch(p, x0, 0.0, T, sp, ts);
    auto tq = integrate_batch(q, x0, 0.0, T, sq, ts);
    double sup = 0.0;
    if (per_checkpoint) per_checkpoint->assign(ts.size(), 0.0);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        double dk = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            dk = std::max(dk, euclidean_distance(&tp.states[k][i * dim], &tq.states[k][i * dim], dim));
        if (per_checkpoint) (*per_checkpoint)[k] = dk;
        sup = std::max(sup, dk);
    }
    return sup;
}

// ---------------------------------------------------------------------------
// Autonomous sub-flows and pushforwards
// ---------------------------------------------------------------------------

namespace detail {

/// Flow of an autonomous field for time `tau` from x, with the Jacobian of
/// the flow map (variational equation), fixed substeps.
inline void autonomous_flow_with_jacobian(const SmoothField& g, const double* x, double tau,
                                          double* y, double* jac, int substeps = 32) {
    const int dim = g.dim();
    const int blk = dim + dim * dim;
    double state[kMaxDim + kMaxDim * kMaxDim];
    for (int i = 0; i < dim; ++i) state[i] = x[i];
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) state[dim + i * dim + j] = (i == j) ? 1.0 : 0.0;

    double k1[kMaxDim + kMaxDim * kMaxDim], k2[kMaxDim + kMaxDim * kMaxDim],
        k3[kMaxDim + kMaxDim * kMaxDim], k4[kMaxDim + kMaxDim * kMaxDim],
        xt[kMaxDim + kMaxDim * kMaxDim];
    auto deriv = [&](const double* s, double* d) {
        double jf[kMaxDim * kMaxDim];
        g.eval(s, d);
        g.jacobian(s, jf);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                double acc = 0.0;
                for (int k = 0; k < dim; ++k) acc += jf[i * dim + k] * s[dim + k * dim + j];
                d[dim + i * dim + j] = acc;
            }
    };

    const double h = tau / substeps;
    for (int s = 0; s < substeps; ++s) {
        deriv(state, k1);
        for (int i = 0; i < blk; ++i) xt[i] = state[i] + 0.5 * h * k1[i];
        deriv(xt, k2);
        for (int i = 0; i < blk; ++i) xt[i] = state[i] + 0.5 * h * k2[i];
        deriv(xt, k3);
        for (int i = 0; i < blk; ++i) xt[i] = state[i] + h * k3[i];
        deriv(xt, k4);
        for (int i = 0; i < blk; ++i)
            state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    for (int i = 0; i < dim; ++i) y[i] = state[i];
    for (int k = 0; k < dim * dim; ++k) jac[k] = state[dim + k];
}

/// Solve (dim x dim) A z = b by Gaussian elimination with partial pivoting.
inline void solve_small(const double* a_in, const double* b_in, double* z, int dim) {
    double a[kMaxDim * kMaxDim], b[kMaxDim];
    for (int k = 0; k < dim * dim; ++k) a[k] = a_in[k];
    for (int i = 0; i < dim; ++i) b[i] = b_in[i];
    for (int col = 0; col < dim; ++col) {
        int piv = col;
        for (int r = col + 1; r < dim; ++r)
            if (std::abs(a[r * dim + col]) > std::abs(a[piv * dim + col])) piv = r;
        if (piv != col) {
            for (int c = 0; c < dim; ++c) std::swap(a[col * dim + c], a[piv * dim + c]);
            std::swap(b[col], b[piv]);
        }
        const double d = a[col * dim + col];
        if (d == 0.0) throw DomainError("singular flow Jacobian in pushforward");
        for (int r = col + 1; r < dim; ++r) {
            const double f = a[r * dim + col] / d;
            if (f == 0.0) continue;
            for (int c = col; c < dim; ++c) a[r * dim + c] -= f * a[col * dim + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = dim - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < dim; ++c) s -= a[r * dim + c] * z[c];
        z[r] = s / a[r * dim + r];
    }
}

}  // namespace detail

/// Pushforward (e^{-U g})_* Z evaluated at x:
/// with y = e^{U g}(x) and M = D(e^{U g})(x), the value is M^{-1} Z(y).
inline Point pushforward_eval(const SmoothField& g, const SmoothField& z_field, double u,
                              const Point& x, int substeps = 32) {
    if (g.dim() != z_field.dim() || g.dim() != static_cast<int>(x.size()))
        throw StructuralError("pushforward_eval: dimension mismatch");
    const int dim = g.dim();
    double y[kMaxDim], m[kMaxDim * kMaxDim], zy[kMaxDim];
    detail::autonomous_flow_with_jacobian(g, x.data(), u, y, m, substeps);
    z_field.eval(y, zy);
    Point out(dim);
    detail::solve_small(m, zy, out.data(), dim);
    return out;
}

/// Sup over `grid` of the remainder of the pushforward expansion truncated
/// after N terms (N = 1 drops ad terms entirely, N = 2 keeps U [g, Z]).
inline double pushforward_remainder(const SmoothField& g, const SmoothField& z_field, double u,
                                    int n_terms, const std::vector<Point>& grid,
                                    const CompactBox* domain = nullptr) {
    if (n_terms != 1 && n_terms != 2)
        throw StructuralError("pushforward_remainder: N must be 1 or 2");
    const int dim = g.dim();
    SmoothField ad1 = bracket(g, z_field);
    double sup = 0.0;
    for (const Point& x : grid) {
        if (domain && !domain->contains(x.data()))
            throw DomainError("pushforward_remainder: grid point outside the domain box");
        Point pf = pushforward_eval(g, z_field, u, x);
        double zx[kMaxDim], ax[kMaxDim];
        z_field.eval(x.data(), zx);
        ad1.eval(x.data(), ax);
        double r = 0.0;
        for (int i = 0; i < dim; ++i) {
            double approx = zx[i];
            if (n_terms == 2) approx += u * ax[i];
            r += sqr(pf[i] - approx);
        }
        sup = std::max(sup, std::sqrt(r));
    }
    return sup;
}

// ---------------------------------------------------------------------------
// Variational (chronological) formula check
// ---------------------------------------------------------------------------

/// RHS of the pushforward flow: h_t(x) = (e^{-U(t) g})_* f_t (x).
class PushforwardRHS : public TimeVaryingField {
public:
    PushforwardRHS(std::shared_ptr<const TimeVaryingField> base, SmoothField g, ScalarFunction u)
        : base_(std::move(base)), g_(std::move(g)), u_(std::move(u)) {
        if (base_->dim() != g_.dim()) throw StructuralError("PushforwardRHS: dimension mismatch");
    }

    int dim() const override { return g_.dim(); }
    double declared_frequency() const override { return base_->declared_frequency(); }

    void eval_batch(double t, const double* x, double* out, int npts) const override {
        const int dim = g_.dim();
        const double u = u_.eval(t);
        double y[kMaxDim], m[kMaxDim * kMaxDim], fy[kMaxDim];
        for (int p = 0; p < npts; ++p) {
            const double* xp = x + static_cast<std::ptrdiff_t>(p) * dim;
            detail::autonomous_flow_with_jacobian(g_, xp, u, y, m);
            base_->eval_batch(t, y, fy, 1);
            detail::solve_small(m, fy, out + static_cast<std::ptrdiff_t>(p) * dim, dim);
        }
    }

    void jacobian(double, const double*, double*) const override {
        throw CapabilityError("PushforwardRHS: spatial Jacobian not provided");
    }

private:
    std::shared_ptr<const TimeVaryingField> base_;
    SmoothField g_;
    ScalarFunction u_;
};

struct VariationalCheck {
    double residual = 0.0;         // sup over grid x checkpoint times
    double condition_factor = 1.0; // crude amplification proxy, reported
    std::vector<double> checkpoint_residuals;
};

/// Compares direct integration of xdot = f_t + g Udot(t) against the
/// composition (pushforward flow of f_t) followed by e^{U(t) g}, at the
/// quarter-horizon checkpoints, sup over the K grid.
inline VariationalCheck check_variational_formula(std::shared_ptr<const TimeVaryingField> f_rhs,
                                                  const SmoothField& g, const ScalarFunction& u,
                                                  const CompactBox& k_box, double horizon,
                                                  FlowSettings settings = {}) {
    if (std::abs(u.eval(0.0)) > 1e-12)
        throw StructuralError("check_variational_formula: U(0) must vanish");
    const int dim = g.dim();
    auto grid = k_box.grid();
    auto x0 = detail::flatten(grid, dim);
    std::vector<double> checkpoints;
    for (int i = 1; i <= 4; ++i) checkpoints.push_back(horizon * i / 4.0);

    auto g_udot = std::make_shared<ControlledRHS>(std::vector<SmoothField>{g},
                                                  std::vector<ScalarFunction>{u.derivative()});
    auto lhs = SumRHS({f_rhs, g_udot});
    auto lhs_traj = integrate_batch(lhs, x0, 0.0, horizon, settings, checkpoints);

    PushforwardRHS pf(f_rhs, g, u);
    auto rhs_traj = integrate_batch(pf, x0, 0.0, horizon, settings, checkpoints);

    VariationalCheck out;
    double y[kMaxDim], m[kMaxDim * kMaxDim];
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        const double ut = u.eval(checkpoints[k]);
        double dk = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            detail::autonomous_flow_with_jacobian(g, &rhs_traj.states[k][i * dim], ut, y, m);
            dk = std::max(dk, euclidean_distance(&lhs_traj.states[k][i * dim], y, dim));
        }
        out.checkpoint_residuals.push_back(dk);
        out.residual = std::max(out.residual, dk);
    }

    double sup_dg = 0.0, jac[kMaxDim * kMaxDim];
    for (const Point& x : grid) {
        g.jacobian(x.data(), jac);
        double fro = 0.0;
        for (int k = 0; k < dim * dim; ++k) fro += sqr(jac[k]);
        sup_dg = std::max(sup_dg, std::sqrt(fro));
    }
    out.condition_factor = std::exp(u.sup_abs(0.0, horizon, 256) * sup_dg);
    return out;
}

}  // namespace ensteer
