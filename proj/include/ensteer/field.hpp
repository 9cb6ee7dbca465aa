#pragma once

// Smooth vector fields on R^n with exact derivatives, plus the field
// families driving control-linear systems. Components live in the
// gaussian-polynomial algebra, so differentiation is symbolic and exact.

#include <Eigen/Core>
#include <limits>
#include <memory>

#include "ensteer/gausspoly.hpp"

namespace ensteer {

/// Jet order reported for closed-form library fields (effectively unlimited;
/// kept finite so capability checks and caps stay meaningful).
inline constexpr int kAnalyticJetOrder = 1000;

class SmoothField {
public:
    SmoothField() = default;

    SmoothField(std::vector<GaussPoly> components, std::string label,
                int max_jet_order = kAnalyticJetOrder)
        : components_(std::move(components)),
          label_(std::move(label)),
          max_jet_order_(max_jet_order) {
        if (components_.empty()) throw StructuralError("SmoothField: no components");
        dim_ = components_.front().dim();
        for (const auto& c : components_)
            if (c.dim() != dim_)
                throw StructuralError("SmoothField '" + label_ +
                                      "': component dimensions disagree");
        if (static_cast<int>(components_.size()) != dim_)
            throw StructuralError("SmoothField '" + label_ +
                                  "': need one component per coordinate");
        jacobian_.reserve(static_cast<std::size_t>(dim_) * dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                jacobian_.push_back(components_[i].derivative(j));
        for (const auto& c : components_)
            for (int i = 0; i < dim_; ++i)
                if (c.gauss_axes()[i]) gauss_axes_[i] = true;
    }

    int dim() const { return dim_; }
    const std::string& label() const { return label_; }
    int max_jet_order() const { return max_jet_order_; }
    const std::vector<GaussPoly>& components() const { return components_; }

    /// Same field with an artificially capped jet order (test hook and
    /// honest bookkeeping for derived fields).
    SmoothField with_max_jet_order(int order) const {
        SmoothField f = *this;
        f.max_jet_order_ = order;
        return f;
    }

    void eval(const double* x, double* out) const {
        double gcache[kMaxDim];
        for (int i = 0; i < dim_; ++i)
            gcache[i] = gauss_axes_[i] ? std::exp(-x[i] * x[i]) : 1.0;
        for (int i = 0; i < dim_; ++i) out[i] = components_[i].eval_cached(x, gcache);
    }

    /// Batched evaluation; the exponential caches are filled once per axis
    /// over the whole batch (vectorizable), then each point is a short
    /// term loop.
    void eval_batch(const double* xs, double* out, int npts) const {
        thread_local std::vector<double> gbuf;
        bool any_gauss = false;
        for (int i = 0; i < dim_; ++i) any_gauss = any_gauss || gauss_axes_[i];
        const double* gptr = nullptr;
        if (any_gauss) {
            gbuf.resize(static_cast<std::size_t>(npts) * dim_);
            for (int i = 0; i < dim_; ++i) {
                if (!gauss_axes_[i]) continue;
                double* col = gbuf.data() + static_cast<std::ptrdiff_t>(i) * npts;
                for (int p = 0; p < npts; ++p) {
                    const double xi = xs[static_cast<std::ptrdiff_t>(p) * dim_ + i];
                    col[p] = -(xi * xi);
                }
                Eigen::Map<Eigen::ArrayXd> m(col, npts);
                m = m.exp();
            }
            gptr = gbuf.data();
        }
        double gcache[kMaxDim];
        for (int i = 0; i < dim_; ++i) gcache[i] = 1.0;
        for (int p = 0; p < npts; ++p) {
            const double* xp = xs + static_cast<std::ptrdiff_t>(p) * dim_;
            if (gptr)
                for (int i = 0; i < dim_; ++i)
                    if (gauss_axes_[i]) gcache[i] = gptr[static_cast<std::ptrdiff_t>(i) * npts + p];
            double* op = out + static_cast<std::ptrdiff_t>(p) * dim_;
            for (int i = 0; i < dim_; ++i) op[i] = components_[i].eval_cached(xp, gcache);
        }
    }

    Point eval(const Point& x) const {
        check_point(x);
        Point out(dim_);
        eval(x.data(), out.data());
        return out;
    }

    /// Jacobian row-major into out[dim*dim].
    void jacobian(const double* x, double* out) const {
        for (int k = 0; k < dim_ * dim_; ++k) out[k] = jacobian_[k].eval(x);
    }

    const GaussPoly& component(int i) const { return components_.at(i); }
    const GaussPoly& jacobian_entry(int i, int j) const {
        return jacobian_.at(static_cast<std::size_t>(i) * dim_ + j);
    }

    bool is_zero() const {
        for (const auto& c : components_)
            if (!c.is_zero()) return false;
        return true;
    }

private:
    void check_point(const Point& x) const {
        if (static_cast<int>(x.size()) != dim_)
            throw StructuralError("SmoothField '" + label_ + "': point dimension mismatch");
    }

    int dim_ = 0;
    std::vector<GaussPoly> components_;
    std::vector<GaussPoly> jacobian_;
    std::string label_;
    int max_jet_order_ = kAnalyticJetOrder;
    std::array<bool, kMaxDim> gauss_axes_{};
};

// ---------------------------------------------------------------------------
// jet_eval
// ---------------------------------------------------------------------------

/// Truncated Taylor coefficients of every component of `field` around x.
inline std::vector<Jet> jet_eval(const SmoothField& field, const Point& x, int order) {
    if (order < 0) throw StructuralError("jet_eval: negative order");
    if (order > field.max_jet_order())
        throw CapabilityError("jet_eval: order " + std::to_string(order) +
                              " exceeds max_jet_order " +
                              std::to_string(field.max_jet_order()) + " of field '" +
                              field.label() + "'");
    if (static_cast<int>(x.size()) != field.dim())
        throw StructuralError("jet_eval: point dimension mismatch");
    std::vector<Jet> jets;
    jets.reserve(field.dim());
    for (int i = 0; i < field.dim(); ++i)
        jets.push_back(field.component(i).jet(x.data(), order));
    return jets;
}

// ---------------------------------------------------------------------------
// Built-in field constructors
// ---------------------------------------------------------------------------

inline SmoothField zero_field(int dim, std::string label = "0") {
    std::vector<GaussPoly> comps(dim, GaussPoly(dim));
    return SmoothField(std::move(comps), std::move(label));
}

inline SmoothField constant_field(const Point& c, std::string label = "const") {
    const int dim = static_cast<int>(c.size());
    std::vector<GaussPoly> comps;
    comps.reserve(dim);
    for (int i = 0; i < dim; ++i) comps.push_back(GaussPoly::constant(dim, c[i]));
    return SmoothField(std::move(comps), std::move(label));
}

/// x -> A x, A row-major dim x dim.
inline SmoothField linear_field(int dim, const std::vector<double>& a,
                                std::string label = "linear") {
    if (static_cast<int>(a.size()) != dim * dim)
        throw StructuralError("linear_field: matrix size mismatch");
    std::vector<GaussPoly> comps;
    comps.reserve(dim);
    for (int i = 0; i < dim; ++i) {
        GaussPoly p(dim);
        for (int j = 0; j < dim; ++j)
            p += a[static_cast<std::size_t>(i) * dim + j] * GaussPoly::variable(dim, j);
        comps.push_back(p);
    }
    return SmoothField(std::move(comps), std::move(label));
}

/// Coordinate direction d/dx_i.
inline SmoothField coordinate_field(int dim, int axis) {
    Point c(dim, 0.0);
    c.at(axis) = 1.0;
    return constant_field(c, "d/dx" + std::to_string(axis + 1));
}

struct FieldFamily {
    std::vector<SmoothField> members;

    FieldFamily() = default;
    explicit FieldFamily(std::vector<SmoothField> m) : members(std::move(m)) {
        if (members.empty()) throw StructuralError("FieldFamily: empty");
        const int d = members.front().dim();
        for (const auto& f : members)
            if (f.dim() != d) throw StructuralError("FieldFamily: mixed dimensions");
    }

    int dim() const { return members.front().dim(); }
    int size() const { return static_cast<int>(members.size()); }
    const SmoothField& operator[](int j) const { return members.at(j); }
};

/// The two-channel family on R^2: f1 = d/dx1, f2 = exp(-x1^2) d/dx2.
inline FieldFamily gauss2d_family() {
    GaussPoly zero(2);
    SmoothField f1({GaussPoly::constant(2, 1.0), zero}, "f1");
    SmoothField f2({zero, GaussPoly::gauss_factor(2, 0)}, "f2");
    return FieldFamily({f1, f2});
}

/// The shear pair on R^2: X = d/dx1, Y = x1 d/dx2 (so [X, Y] = d/dx2).
inline FieldFamily shear2d_family() {
    GaussPoly zero(2);
    SmoothField x_field({GaussPoly::constant(2, 1.0), zero}, "X");
    SmoothField y_field({zero, GaussPoly::variable(2, 0)}, "Y");
    return FieldFamily({x_field, y_field});
}

/// Random polynomial field of total degree <= deg with coefficients drawn
/// uniformly from [-scale, scale]; used by property tests and the
/// genericity probe.
inline SmoothField random_polynomial_field(int dim, int deg, double scale, Rng& rng,
                                           std::string label = "randpoly") {
    std::vector<GaussPoly> comps;
    comps.reserve(dim);
    // enumerate exponent tuples of total degree <= deg, deterministic order
    std::vector<Exponents> expos;
    Exponents cur{};
    auto rec = [&](auto&& self, int axis, int remaining) -> void {
        if (axis == dim) {
            expos.push_back(cur);
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            cur[axis] = static_cast<std::uint8_t>(k);
            self(self, axis + 1, remaining - k);
        }
        cur[axis] = 0;
    };
    rec(rec, 0, deg);
    for (int i = 0; i < dim; ++i) {
        GaussPoly p(dim);
        for (const Exponents& e : expos)
            p += GaussPoly::monomial(dim, rng.uniform(-scale, scale), e);
        comps.push_back(p);
    }
    return SmoothField(std::move(comps), std::move(label));
}

}  // namespace ensteer
