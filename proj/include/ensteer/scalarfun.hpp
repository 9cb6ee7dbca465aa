#pragma once

// Scalar functions of time: piecewise-polynomial baselines (cubic splines,
// piecewise constants) carrying modulated sinusoids. The family is closed
// under differentiation and products (product-to-sum), which lets the
// control synthesis assemble fast-oscillating channels symbolically instead
// of differencing them numerically.

#include <algorithm>
#include <cstddef>

#include "ensteer/core.hpp"

namespace ensteer {

// ---------------------------------------------------------------------------
// Curve: piecewise polynomial in local coordinates s = t - piece_start.
// An empty breakpoint list means one global polynomial in t.
// ---------------------------------------------------------------------------

class Curve {
public:
    Curve() : coefs_{{0.0}} {}

    static Curve constant(double c) {
        Curve k;
        k.coefs_ = {{c}};
        return k;
    }

    static Curve polynomial(std::vector<double> coeffs) {
        if (coeffs.empty()) coeffs.push_back(0.0);
        Curve k;
        k.coefs_ = {std::move(coeffs)};
        return k;
    }

    /// C^1 piecewise-cubic interpolant (Catmull-Rom slopes, one-sided at the
    /// ends). Deterministic and local.
    static Curve cubic_spline(const std::vector<double>& ts, const std::vector<double>& vs) {
        check_samples(ts, vs);
        const std::size_t n = ts.size();
        if (n == 1) return constant(vs[0]);
        bool flat = true;
        for (double v : vs) flat = flat && (v == vs[0]);
        if (flat) return constant(vs[0]);
        std::vector<double> slope(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == 0)
                slope[i] = (vs[1] - vs[0]) / (ts[1] - ts[0]);
            else if (i == n - 1)
                slope[i] = (vs[n - 1] - vs[n - 2]) / (ts[n - 1] - ts[n - 2]);
            else
                slope[i] = (vs[i + 1] - vs[i - 1]) / (ts[i + 1] - ts[i - 1]);
        }
        Curve k;
        k.breaks_ = ts;
        k.coefs_.resize(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double h = ts[i + 1] - ts[i];
            const double d = (vs[i + 1] - vs[i]) / h;
            // Hermite cubic in s/h
            const double c2 = (3 * d - 2 * slope[i] - slope[i + 1]) / h;
            const double c3 = (slope[i] + slope[i + 1] - 2 * d) / (h * h);
            k.coefs_[i] = {vs[i], slope[i], c2, c3};
        }
        return k;
    }

    /// Left-continuous step function: value vs[i] on [ts[i], ts[i+1]).
    static Curve piecewise_constant(const std::vector<double>& ts,
                                    const std::vector<double>& vs) {
        check_samples(ts, vs);
        if (ts.size() == 1) return constant(vs[0]);
        Curve k;
        k.breaks_ = ts;
        k.coefs_.resize(ts.size() - 1);
        for (std::size_t i = 0; i + 1 < ts.size(); ++i) k.coefs_[i] = {vs[i]};
        return k;
    }

    double eval(double t) const {
        const std::size_t p = piece_index(t);
        const double s = breaks_.empty() ? t : t - breaks_[p];
        const auto& c = coefs_[p];
        double v = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) v = v * s + c[k];
        return v;
    }

    Curve derivative() const {
        Curve d = *this;
        for (auto& c : d.coefs_) {
            std::vector<double> dc;
            for (std::size_t k = 1; k < c.size(); ++k) dc.push_back(c[k] * k);
            if (dc.empty()) dc.push_back(0.0);
            c = std::move(dc);
        }
        return d;
    }

    Curve& operator*=(double s) {
        for (auto& c : coefs_)
            for (double& x : c) x *= s;
        return *this;
    }

    friend Curve operator*(double s, Curve k) {
        k *= s;
        return k;
    }

    friend Curve operator+(const Curve& a, const Curve& b) {
        return combine(a, b, +1.0);
    }
    friend Curve operator-(const Curve& a, const Curve& b) {
        return combine(a, b, -1.0);
    }

    friend Curve operator*(const Curve& a, const Curve& b) {
        std::vector<double> breaks = merged_breaks(a, b);
        Curve r;
        if (breaks.empty()) {
            r.coefs_ = {poly_mul(a.coefs_[0], b.coefs_[0])};
            return r;
        }
        r.breaks_ = breaks;
        r.coefs_.resize(breaks.size() - 1);
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            r.coefs_[i] = poly_mul(a.local_poly(breaks[i]), b.local_poly(breaks[i]));
        return r;
    }

    bool is_constant() const {
        if (!breaks_.empty()) return false;
        for (std::size_t k = 1; k < coefs_[0].size(); ++k)
            if (coefs_[0][k] != 0.0) return false;
        return true;
    }

    /// Dense-grid bound of |curve| on [a, b].
    double sup_abs(double a, double b, int samples = 512) const {
        double m = 0.0;
        for (int i = 0; i <= samples; ++i)
            m = std::max(m, std::abs(eval(a + (b - a) * i / samples)));
        return m;
    }

    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<std::vector<double>>& coefficients() const { return coefs_; }

private:
    static void check_samples(const std::vector<double>& ts, const std::vector<double>& vs) {
        if (ts.size() != vs.size() || ts.empty())
            throw StructuralError("Curve: sample arrays empty or mismatched");
        for (std::size_t i = 1; i < ts.size(); ++i)
            if (!(ts[i] > ts[i - 1]))
                throw StructuralError("Curve: sample times must strictly increase");
    }

    std::size_t piece_index(double t) const {
        if (breaks_.empty()) return 0;
        const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
        const std::ptrdiff_t i = it - breaks_.begin() - 1;
        return static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(coefs_.size()) - 1));
    }

    /// Polynomial of the piece containing t0, re-centered to origin t0.
    std::vector<double> local_poly(double t0) const {
        const std::size_t p = piece_index(t0);
        const double delta = breaks_.empty() ? t0 : t0 - breaks_[p];
        return poly_shift(coefs_[p], delta);
    }

    /// Taylor shift: coefficients of p(s + delta).
    static std::vector<double> poly_shift(std::vector<double> c, double delta) {
        if (delta == 0.0) return c;
        const std::size_t n = c.size();
        for (std::size_t k = 0; k + 1 < n; ++k)
            for (std::size_t j = n - 1; j > k; --j) c[j - 1] += delta * c[j];
        return c;
    }

    static std::vector<double> poly_mul(const std::vector<double>& a,
                                        const std::vector<double>& b) {
        std::vector<double> r(a.size() + b.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
        return r;
    }

    static std::vector<double> merged_breaks(const Curve& a, const Curve& b) {
        std::vector<double> m;
        m.insert(m.end(), a.breaks_.begin(), a.breaks_.end());
        m.insert(m.end(), b.breaks_.begin(), b.breaks_.end());
        std::sort(m.begin(), m.end());
        m.erase(std::unique(m.begin(), m.end()), m.end());
        return m;
    }

    static Curve combine(const Curve& a, const Curve& b, double sign) {
        std::vector<double> breaks = merged_breaks(a, b);
        Curve r;
        if (breaks.empty()) {
            std::vector<double> c = a.coefs_[0];
            c.resize(std::max(c.size(), b.coefs_[0].size()), 0.0);
            for (std::size_t k = 0; k < b.coefs_[0].size(); ++k) c[k] += sign * b.coefs_[0][k];
            r.coefs_ = {std::move(c)};
            return r;
        }
        r.breaks_ = breaks;
        r.coefs_.resize(breaks.size() - 1);
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            std::vector<double> ca = a.local_poly(breaks[i]);
            std::vector<double> cb = b.local_poly(breaks[i]);
            ca.resize(std::max(ca.size(), cb.size()), 0.0);
            for (std::size_t k = 0; k < cb.size(); ++k) ca[k] += sign * cb[k];
            r.coefs_[i] = std::move(ca);
        }
        return r;
    }

    std::vector<double> breaks_;
    std::vector<std::vector<double>> coefs_;
};

// ---------------------------------------------------------------------------
// ScalarFunction: sum of amp_i(t) * cos(omega_i t + phase_i).
// ---------------------------------------------------------------------------

struct OscTerm {
    Curve amp;
    double omega = 0.0;
    double phase = 0.0;  // amp(t) * cos(omega t + phase)
};

class ScalarFunction {
public:
    ScalarFunction() = default;

    static ScalarFunction zero() { return ScalarFunction(); }

    static ScalarFunction constant(double c) { return baseline(Curve::constant(c)); }

    static ScalarFunction baseline(Curve c) {
        ScalarFunction f;
        f.terms_.push_back({std::move(c), 0.0, 0.0});
        return f;
    }

    /// amp(t) * sin(omega t).
    static ScalarFunction sine(double omega, Curve amp = Curve::constant(1.0)) {
        ScalarFunction f;
        f.terms_.push_back({std::move(amp), omega, -kHalfPi});
        return f;
    }

    /// amp(t) * cos(omega t).
    static ScalarFunction cosine(double omega, Curve amp = Curve::constant(1.0)) {
        ScalarFunction f;
        f.terms_.push_back({std::move(amp), omega, 0.0});
        return f;
    }

    double eval(double t) const {
        double v = 0.0;
        for (const OscTerm& term : terms_) {
            double c = term.omega == 0.0 && term.phase == 0.0
                           ? 1.0
                           : std::cos(term.omega * t + term.phase);
            v += term.amp.eval(t) * c;
        }
        return v;
    }

    ScalarFunction derivative() const {
        ScalarFunction d;
        for (const OscTerm& term : terms_) {
            Curve da = term.amp.derivative();
            if (!(da.is_constant() && da.eval(0.0) == 0.0))
                d.terms_.push_back({std::move(da), term.omega, term.phase});
            if (term.omega != 0.0) {
                // d/dt cos(wt+p) = -w sin(wt+p) = w cos(wt+p+pi/2)
                Curve a = term.omega * term.amp;
                d.terms_.push_back({std::move(a), term.omega, term.phase + kHalfPi});
            }
        }
        return d;
    }

    ScalarFunction& operator+=(const ScalarFunction& o) {
        terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
        return *this;
    }

    friend ScalarFunction operator+(ScalarFunction a, const ScalarFunction& b) {
        a += b;
        return a;
    }

    friend ScalarFunction operator*(double s, ScalarFunction f) {
        for (OscTerm& t : f.terms_) t.amp *= s;
        return f;
    }

    /// Multiply by scale * cos(omega t + phase), using product-to-sum so the
    /// representation stays closed.
    ScalarFunction modulated(double omega, double phase, double scale = 1.0) const {
        ScalarFunction r;
        for (const OscTerm& term : terms_) {
            if (term.omega == 0.0 && term.phase == 0.0) {
                r.terms_.push_back({scale * term.amp, omega, phase});
                continue;
            }
            // cos(a)cos(b) = (cos(a-b) + cos(a+b)) / 2
            Curve half = (0.5 * scale) * term.amp;
            r.terms_.push_back(
                {half, term.omega - omega, term.phase - phase});
            r.terms_.push_back({std::move(half), term.omega + omega, term.phase + phase});
        }
        r.canonicalize();
        return r;
    }

    friend ScalarFunction operator*(const ScalarFunction& a, const ScalarFunction& b) {
        ScalarFunction r;
        for (const OscTerm& ta : a.terms_) {
            for (const OscTerm& tb : b.terms_) {
                Curve amp = ta.amp * tb.amp;
                if (ta.omega == 0.0 && ta.phase == 0.0) {
                    r.terms_.push_back({std::move(amp), tb.omega, tb.phase});
                } else if (tb.omega == 0.0 && tb.phase == 0.0) {
                    r.terms_.push_back({std::move(amp), ta.omega, ta.phase});
                } else {
                    Curve half = 0.5 * amp;
                    r.terms_.push_back({half, ta.omega - tb.omega, ta.phase - tb.phase});
                    r.terms_.push_back(
                        {std::move(half), ta.omega + tb.omega, ta.phase + tb.phase});
                }
            }
        }
        r.canonicalize();
        return r;
    }

    double max_frequency() const {
        double m = 0.0;
        for (const OscTerm& t : terms_) m = std::max(m, std::abs(t.omega));
        return m;
    }

    double sup_abs(double a, double b, int samples = 2048) const {
        double m = 0.0;
        for (int i = 0; i <= samples; ++i)
            m = std::max(m, std::abs(eval(a + (b - a) * i / samples)));
        return m;
    }

    const std::vector<OscTerm>& terms() const { return terms_; }
    std::size_t term_count() const { return terms_.size(); }

    bool is_zero() const {
        for (const OscTerm& t : terms_) {
            if (!t.amp.is_constant()) return false;
            if (t.amp.eval(0.0) != 0.0) return false;
        }
        return true;
    }

private:
    // Normalize negative frequencies (cos is even) and drop zero amplitudes.
    void canonicalize() {
        for (OscTerm& t : terms_) {
            if (t.omega < 0.0) {
                t.omega = -t.omega;
                t.phase = -t.phase;
            }
        }
        std::erase_if(terms_, [](const OscTerm& t) {
            return t.amp.is_constant() && t.amp.eval(0.0) == 0.0;
        });
    }

    static constexpr double kHalfPi = 1.5707963267948966;

    std::vector<OscTerm> terms_;
};

}  // namespace ensteer
