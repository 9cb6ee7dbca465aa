#pragma once

// Scalar function algebra used to represent vector-field components:
// finite sums of terms  c * prod_i x_i^{a_i} * prod_i exp(-b_i x_i^2).
// The class is closed under addition, multiplication and partial
// differentiation, so Lie brackets of such fields stay inside it and all
// derivatives are exact to rounding. A truncated Taylor (jet) evaluation is
// provided on top for the jet interface and its finite-difference oracle.

#include <algorithm>
#include <map>
#include <sstream>

#include "ensteer/core.hpp"

namespace ensteer {

using Exponents = std::array<std::uint8_t, kMaxDim>;

struct GaussTerm {
    double coef = 0.0;
    Exponents pow{};   // monomial exponents a_i
    Exponents gauss{}; // gaussian exponents b_i, factor exp(-b_i x_i^2)
};

// ---------------------------------------------------------------------------
// Jet: truncated multivariate Taylor expansion around a base point.
// Coefficients are Taylor coefficients (derivative / multi-factorial).
// ---------------------------------------------------------------------------

class Jet {
public:
    Jet() = default;
    Jet(int dim, int order) : dim_(dim), order_(order) {
        if (dim < 1 || dim > kMaxDim) throw StructuralError("Jet: bad dimension");
        if (order < 0) throw StructuralError("Jet: negative order");
    }

    static Jet constant(int dim, int order, double c) {
        Jet j(dim, order);
        if (c != 0.0) j.coeffs_[Exponents{}] = c;
        return j;
    }

    /// Seed jet for coordinate i around value x_i (identity + offset).
    static Jet variable(int dim, int order, int i, double xi) {
        Jet j = constant(dim, order, xi);
        if (order >= 1) {
            Exponents e{};
            e[i] = 1;
            j.coeffs_[e] += 1.0;
        }
        return j;
    }

    int dim() const { return dim_; }
    int order() const { return order_; }

    double coeff(const Exponents& e) const {
        auto it = coeffs_.find(e);
        return it == coeffs_.end() ? 0.0 : it->second;
    }

    double value() const { return coeff(Exponents{}); }

    /// First-order coefficient in direction i (the partial derivative).
    double partial(int i) const {
        Exponents e{};
        e[i] = 1;
        return coeff(e);
    }

    /// Derivative corresponding to multi-index e: coeff * e!.
    double derivative(const Exponents& e) const {
        double f = 1.0;
        for (int i = 0; i < dim_; ++i)
            for (int k = 2; k <= e[i]; ++k) f *= k;
        return coeff(e) * f;
    }

    Jet& operator+=(const Jet& o) {
        for (const auto& [e, c] : o.coeffs_) coeffs_[e] += c;
        prune();
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { a += b; return a; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r(a.dim_, a.order_);
        for (const auto& [ea, ca] : a.coeffs_) {
            for (const auto& [eb, cb] : b.coeffs_) {
                int total = 0;
                Exponents e{};
                for (int i = 0; i < a.dim_; ++i) {
                    e[i] = static_cast<std::uint8_t>(ea[i] + eb[i]);
                    total += e[i];
                }
                if (total <= a.order_) r.coeffs_[e] += ca * cb;
            }
        }
        r.prune();
        return r;
    }

    Jet& operator*=(double s) {
        for (auto& [e, c] : coeffs_) c *= s;
        prune();
        return *this;
    }

    /// exp of a jet: exp(c0) * sum_k (j - c0)^k / k!.
    static Jet exp(const Jet& j) {
        Jet centered = j;
        const double c0 = j.value();
        centered.coeffs_[Exponents{}] -= c0;
        centered.prune();
        Jet result = constant(j.dim_, j.order_, 1.0);
        Jet power = constant(j.dim_, j.order_, 1.0);
        double fact = 1.0;
        for (int k = 1; k <= j.order_; ++k) {
            power = power * centered;
            fact *= k;
            Jet term = power;
            term *= 1.0 / fact;
            result += term;
        }
        result *= std::exp(c0);
        return result;
    }

    const std::map<Exponents, double>& coeffs() const { return coeffs_; }

private:
    void prune() {
        for (auto it = coeffs_.begin(); it != coeffs_.end();)
            it = (it->second == 0.0) ? coeffs_.erase(it) : std::next(it);
    }

    int dim_ = 1;
    int order_ = 0;
    std::map<Exponents, double> coeffs_;
};

// ---------------------------------------------------------------------------
// GaussPoly
// ---------------------------------------------------------------------------

class GaussPoly {
public:
    GaussPoly() = default;
    explicit GaussPoly(int dim) : dim_(dim) {
        if (dim < 1 || dim > kMaxDim)
            throw StructuralError("GaussPoly: dimension must be in [1, " +
                                  std::to_string(kMaxDim) + "]");
    }

    static GaussPoly constant(int dim, double c) {
        GaussPoly p(dim);
        if (c != 0.0) p.terms_.push_back({c, {}, {}});
        p.refresh();
        return p;
    }

    static GaussPoly monomial(int dim, double c, const Exponents& pow,
                              const Exponents& gauss = {}) {
        GaussPoly p(dim);
        if (c != 0.0) p.terms_.push_back({c, pow, gauss});
        p.refresh();
        return p;
    }

    /// The coordinate function x_i.
    static GaussPoly variable(int dim, int i) {
        Exponents e{};
        e[i] = 1;
        return monomial(dim, 1.0, e);
    }

    /// exp(-x_i^2).
    static GaussPoly gauss_factor(int dim, int i) {
        Exponents g{};
        g[i] = 1;
        return monomial(dim, 1.0, {}, g);
    }

    int dim() const { return dim_; }
    bool is_zero() const { return terms_.empty(); }
    const std::vector<GaussTerm>& terms() const { return terms_; }

    double eval(const double* x) const {
        double gcache[kMaxDim];
        for (int i = 0; i < dim_; ++i)
            gcache[i] = uses_gauss_[i] ? std::exp(-x[i] * x[i]) : 1.0;
        return eval_cached(x, gcache);
    }

    /// Evaluation with precomputed gcache[i] = exp(-x_i^2) for every axis
    /// this polynomial uses (callers may share the cache across components).
    double eval_cached(const double* x, const double* gcache) const {
        double sum = 0.0;
        for (const GaussTerm& t : terms_) {
            double v = t.coef;
            for (int i = 0; i < dim_; ++i) {
                for (int k = 0; k < t.pow[i]; ++k) v *= x[i];
                for (int k = 0; k < t.gauss[i]; ++k) v *= gcache[i];
            }
            sum += v;
        }
        return sum;
    }

    const std::array<bool, kMaxDim>& gauss_axes() const { return uses_gauss_; }

    double eval(const Point& x) const {
        if (static_cast<int>(x.size()) != dim_)
            throw StructuralError("GaussPoly::eval: point dimension mismatch");
        return eval(x.data());
    }

    GaussPoly derivative(int i) const {
        check_axis(i);
        GaussPoly r(dim_);
        for (const GaussTerm& t : terms_) {
            if (t.pow[i] > 0) {
                GaussTerm d = t;
                d.coef *= t.pow[i];
                d.pow[i] -= 1;
                r.terms_.push_back(d);
            }
            if (t.gauss[i] > 0) {
                GaussTerm d = t;  // d/dx exp(-b x^2) = -2 b x exp(-b x^2)
                d.coef *= -2.0 * t.gauss[i];
                d.pow[i] += 1;
                r.terms_.push_back(d);
            }
        }
        r.normalize();
        return r;
    }

    GaussPoly& operator+=(const GaussPoly& o) {
        check_same(o);
        terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
        normalize();
        return *this;
    }

    GaussPoly& operator-=(const GaussPoly& o) {
        check_same(o);
        for (GaussTerm t : o.terms_) {
            t.coef = -t.coef;
            terms_.push_back(t);
        }
        normalize();
        return *this;
    }

    friend GaussPoly operator+(GaussPoly a, const GaussPoly& b) { a += b; return a; }
    friend GaussPoly operator-(GaussPoly a, const GaussPoly& b) { a -= b; return a; }

    friend GaussPoly operator*(const GaussPoly& a, const GaussPoly& b) {
        a.check_same(b);
        GaussPoly r(a.dim_);
        r.terms_.reserve(a.terms_.size() * b.terms_.size());
        for (const GaussTerm& ta : a.terms_) {
            for (const GaussTerm& tb : b.terms_) {
                GaussTerm t;
                t.coef = ta.coef * tb.coef;
                for (int i = 0; i < a.dim_; ++i) {
                    t.pow[i] = static_cast<std::uint8_t>(ta.pow[i] + tb.pow[i]);
                    t.gauss[i] = static_cast<std::uint8_t>(ta.gauss[i] + tb.gauss[i]);
                }
                r.terms_.push_back(t);
            }
        }
        r.normalize();
        return r;
    }

    friend GaussPoly operator*(double s, GaussPoly p) {
        for (GaussTerm& t : p.terms_) t.coef *= s;
        p.normalize();
        return p;
    }

    /// Truncated Taylor expansion around x, exact per term.
    Jet jet(const double* x, int order) const {
        Jet result = Jet::constant(dim_, order, 0.0);
        for (const GaussTerm& t : terms_) {
            Jet term = Jet::constant(dim_, order, t.coef);
            for (int i = 0; i < dim_; ++i) {
                if (t.pow[i] > 0) {
                    Jet xi = Jet::variable(dim_, order, i, x[i]);
                    for (int k = 0; k < t.pow[i]; ++k) term = term * xi;
                }
                if (t.gauss[i] > 0) {
                    Jet xi = Jet::variable(dim_, order, i, x[i]);
                    Jet expo = xi * xi;
                    expo *= -static_cast<double>(t.gauss[i]);
                    term = term * Jet::exp(expo);
                }
            }
            result += term;
        }
        return result;
    }

    /// Max total monomial degree; used for cost heuristics.
    int degree() const {
        int d = 0;
        for (const GaussTerm& t : terms_) {
            int s = 0;
            for (int i = 0; i < dim_; ++i) s += t.pow[i];
            d = std::max(d, s);
        }
        return d;
    }

    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const GaussTerm& t : terms_) {
            if (!first) os << " + ";
            first = false;
            os << t.coef;
            for (int i = 0; i < dim_; ++i) {
                if (t.pow[i] > 0) os << "*x" << (i + 1) << "^" << int(t.pow[i]);
                if (t.gauss[i] > 0) os << "*g" << (i + 1) << "^" << int(t.gauss[i]);
            }
        }
        return os.str();
    }

private:
    void check_axis(int i) const {
        if (i < 0 || i >= dim_) throw StructuralError("GaussPoly: axis out of range");
    }
    void check_same(const GaussPoly& o) const {
        if (dim_ != o.dim_) throw StructuralError("GaussPoly: dimension mismatch");
    }

    // Merge equal-key terms, drop exact zeros, sort for deterministic
    // evaluation order.
    void normalize() {
        std::map<std::pair<Exponents, Exponents>, double> merged;
        for (const GaussTerm& t : terms_) merged[{t.pow, t.gauss}] += t.coef;
        terms_.clear();
        for (const auto& [key, c] : merged)
            if (c != 0.0) terms_.push_back({c, key.first, key.second});
        refresh();
    }

    void refresh() {
        uses_gauss_.fill(false);
        for (const GaussTerm& t : terms_)
            for (int i = 0; i < dim_; ++i)
                if (t.gauss[i] > 0) uses_gauss_[i] = true;
    }

    int dim_ = 1;
    std::vector<GaussTerm> terms_;
    std::array<bool, kMaxDim> uses_gauss_{};
};

}  // namespace ensteer
