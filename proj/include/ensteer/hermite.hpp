#pragma once

// Physicists' Hermite polynomials, Gauss-Hermite quadrature (Golub-Welsch),
// weighted expansions h(x) = sum c_m H_m(x) exp(-x^2), and the compactly
// supported extension used to approximate profiles on [0, 1].

#include <Eigen/Dense>
#include <functional>

#include "ensteer/core.hpp"

namespace ensteer {

inline constexpr int kHermiteOrderCap = 200;

/// H_m(x) by the three-term recurrence H_{m+1} = 2x H_m - 2m H_{m-1}.
inline double hermite_poly(int m, double x) {
    if (m < 0) throw StructuralError("hermite_poly: negative order");
    if (m > kHermiteOrderCap)
        throw CapabilityError("hermite_poly: order " + std::to_string(m) +
                              " exceeds cap " + std::to_string(kHermiteOrderCap));
    double h0 = 1.0;
    if (m == 0) return h0;
    double h1 = 2.0 * x;
    for (int k = 1; k < m; ++k) {
        const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;  // for integrals against exp(-x^2)
};

/// Gauss-Hermite rule: nodes from the symmetric tridiagonal Jacobi matrix,
/// weights from the Christoffel function evaluated with normalized Hermite
/// functions. The eigenvector-squared route loses the far-out weights to
/// absolute-error floor, which high-order H_m amplify; the Hermite-function
/// recurrence stays O(1) throughout.
inline QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw StructuralError("gauss_hermite: need at least one node");
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(k / 2.0);
        jac(k, k - 1) = b;
        jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac, Eigen::EigenvaluesOnly);

    // psi_m are the orthonormal Hermite functions; returns psi_n and the sum
    // of squares of psi_0..psi_{n-1} (Christoffel denominator before the
    // exp(-x^2) factor moves across).
    auto hermite_functions = [n](double x, double& psi_n, double& psi_n_prev, double& sumsq) {
        double p0 = std::pow(3.141592653589793, -0.25) * std::exp(-0.5 * x * x);
        double p1 = std::sqrt(2.0) * x * p0;
        sumsq = p0 * p0;
        for (int m = 1; m < n; ++m) {
            sumsq += p1 * p1;
            const double p2 = std::sqrt(2.0 / (m + 1)) * x * p1 - std::sqrt(m / (m + 1.0)) * p0;
            p0 = p1;
            p1 = p2;
        }
        psi_n = p1;
        psi_n_prev = p0;
    };

    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = es.eigenvalues()(i);
        double psi, psi_prev, sumsq;
        if (n > 1) {
            // Newton-polish the eigenvalue on psi_n (same zeros as H_n);
            // psi_n' = sqrt(2n) psi_{n-1} - x psi_n
            for (int it = 0; it < 3; ++it) {
                hermite_functions(x, psi, psi_prev, sumsq);
                const double dpsi = std::sqrt(2.0 * n) * psi_prev - x * psi;
                if (dpsi == 0.0) break;
                const double dx = psi / dpsi;
                x -= dx;
                if (std::abs(dx) < 1e-16 * (1.0 + std::abs(x))) break;
            }
        }
        hermite_functions(x, psi, psi_prev, sumsq);
        rule.nodes[i] = x;
        rule.weights[i] = std::exp(-x * x) / sumsq;
    }
    return rule;
}

// ---------------------------------------------------------------------------
// HermiteExpansion
// ---------------------------------------------------------------------------

class HermiteExpansion {
public:
    HermiteExpansion() = default;
    explicit HermiteExpansion(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        for (double c : coeffs_)
            if (!std::isfinite(c)) throw StructuralError("HermiteExpansion: bad coefficient");
    }

    int order() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double>& coeffs() const { return coeffs_; }

    /// h(x) = sum_m c_m H_m(x) exp(-x^2).
    double eval(double x) const {
        double acc = 0.0, h0 = 1.0, h1 = 2.0 * x;
        for (int m = 0; m < static_cast<int>(coeffs_.size()); ++m) {
            double hm;
            if (m == 0) hm = h0;
            else if (m == 1) hm = h1;
            else {
                const double h2 = 2.0 * x * h1 - 2.0 * (m - 1) * h0;
                h0 = h1;
                h1 = h2;
                hm = h2;
            }
            acc += coeffs_[m] * hm;
        }
        return acc * std::exp(-x * x);
    }

    /// h'(x), using H'_m = 2m H_{m-1} so the derivative route matches the
    /// polynomial identities rather than finite differencing.
    double eval_derivative(double x) const {
        double poly = 0.0, dpoly = 0.0, h0 = 1.0, h1 = 2.0 * x;
        for (int m = 0; m < static_cast<int>(coeffs_.size()); ++m) {
            double hm, hm1;  // H_m and H_{m-1}
            if (m == 0) {
                hm = h0;
                hm1 = 0.0;
            } else if (m == 1) {
                hm = h1;
                hm1 = h0;
            } else {
                const double h2 = 2.0 * x * h1 - 2.0 * (m - 1) * h0;
                hm1 = h1;
                h0 = h1;
                h1 = h2;
                hm = h2;
            }
            poly += coeffs_[m] * hm;
            dpoly += coeffs_[m] * 2.0 * m * hm1;
        }
        return (dpoly - 2.0 * x * poly) * std::exp(-x * x);
    }

private:
    std::vector<double> coeffs_;
};

struct ProfileExpansion {
    HermiteExpansion expansion;
    bool quadrature_converged = true;  // coefficient drift <= 1e-10 on node doubling
    double quadrature_drift = 0.0;
    int nodes_used = 0;
};

/// Projection coefficients c_m = (2^m m! sqrt(pi))^{-1} integral of
/// g(x) H_m(x) exp(-x^2); Gauss-Hermite with at least 2M + 16 nodes, checked
/// by doubling the node count.
inline ProfileExpansion expand_profile(const std::function<double(double)>& g, int order,
                                       int min_nodes = 0) {
    if (order < 0 || order > kHermiteOrderCap)
        throw CapabilityError("expand_profile: order out of range");
    const int n = std::max({2 * order + 16, min_nodes, 64});

    auto coefficients = [&](int nodes) {
        QuadratureRule rule = gauss_hermite(nodes);
        std::vector<double> gx(rule.nodes.size());
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) gx[i] = g(rule.nodes[i]);
        std::vector<double> cs(order + 1);
        double norm = std::sqrt(3.141592653589793);  // 2^m m! sqrt(pi), built up
        for (int m = 0; m <= order; ++m) {
            if (m > 0) norm *= 2.0 * m;
            double s = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                s += rule.weights[i] * gx[i] * hermite_poly(m, rule.nodes[i]);
            cs[m] = s / norm;
        }
        return cs;
    };

    std::vector<double> cs = coefficients(n);
    std::vector<double> cs2 = coefficients(2 * n);
    double drift = 0.0;
    for (int m = 0; m <= order; ++m) drift = std::max(drift, std::abs(cs[m] - cs2[m]));

    ProfileExpansion out;
    out.expansion = HermiteExpansion(cs2);
    out.quadrature_drift = drift;
    out.quadrature_converged = drift <= 1e-10;
    out.nodes_used = 2 * n;
    return out;
}

/// Dense-grid sup of |h| + |h'| on [a, b] (1001 nodes).
inline double profile_derivative_bound(const HermiteExpansion& h, double a, double b) {
    double sup = 0.0;
    const int n = 1000;
    for (int i = 0; i <= n; ++i) {
        const double x = a + (b - a) * i / n;
        sup = std::max(sup, std::abs(h.eval(x)) + std::abs(h.eval_derivative(x)));
    }
    return sup;
}

// ---------------------------------------------------------------------------
// Compactly supported extension of theta exp(theta^2)
// ---------------------------------------------------------------------------

/// Two-point Hermite interpolation: the unique degree 2k+1 polynomial with
/// the given derivative lists at x0 and x1 (confluent divided differences).
class BlendPolynomial {
public:
    BlendPolynomial(double x0, std::vector<double> derivs0, double x1,
                    std::vector<double> derivs1)
        : x0_(x0) {
        if (derivs0.size() != derivs1.size() || derivs0.empty())
            throw StructuralError("BlendPolynomial: derivative lists must match");
        const int k = static_cast<int>(derivs0.size());
        const int n = 2 * k;
        std::vector<double> xs(n), fs(n);
        for (int i = 0; i < k; ++i) xs[i] = x0;
        for (int i = k; i < n; ++i) xs[i] = x1;
        // confluent divided-difference table
        std::vector<std::vector<double>> dd(n, std::vector<double>(n, 0.0));
        double fact = 1.0;
        for (int j = 0; j < n; ++j) {
            if (j > 0) fact *= j;
            for (int i = 0; i + j < n; ++i) {
                if (xs[i] == xs[i + j]) {
                    const auto& d = (xs[i] == x0) ? derivs0 : derivs1;
                    dd[i][j] = d.at(j) / fact;
                } else {
                    dd[i][j] = (dd[i + 1][j - 1] - dd[i][j - 1]) / (xs[i + j] - xs[i]);
                }
            }
        }
        newton_ = dd[0];
        nodes_ = xs;
    }

    double eval(double x) const {
        double acc = newton_.back();
        for (int i = static_cast<int>(newton_.size()) - 2; i >= 0; --i)
            acc = acc * (x - nodes_[i]) + newton_[i];
        return acc;
    }

private:
    double x0_;
    std::vector<double> newton_;
    std::vector<double> nodes_;
};

/// Derivatives of f(x) = x exp(x^2): f^{(n)} = exp(x^2) p_n(x) with
/// p_0 = x, p_{n+1} = p_n' + 2x p_n.
inline std::vector<double> profile_core_derivatives(double x, int upto) {
    std::vector<double> poly = {0.0, 1.0};  // p_0 = x
    std::vector<double> out;
    const double e = std::exp(x * x);
    auto eval_poly = [&](const std::vector<double>& p) {
        double acc = 0.0;
        for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) acc = acc * x + p[i];
        return acc;
    };
    out.push_back(e * eval_poly(poly));
    for (int n = 1; n <= upto; ++n) {
        std::vector<double> next(poly.size() + 1, 0.0);
        for (std::size_t i = 1; i < poly.size(); ++i) next[i - 1] += i * poly[i];  // p'
        for (std::size_t i = 0; i < poly.size(); ++i) next[i + 1] += 2.0 * poly[i];  // 2x p
        poly = std::move(next);
        out.push_back(e * eval_poly(poly));
    }
    return out;
}

struct ProfileExtension {
    double left = -3.0;    // support starts here
    double right = 4.5;    // support ends here
    int matched_derivatives = 4;

    /// Smooth compactly supported extension of x exp(x^2) from [0, 1]:
    /// identical on [0, 1], polynomial blends matching `matched_derivatives`
    /// derivatives decay to zero at the support ends.
    double operator()(double x) const {
        if (x >= 0.0 && x <= 1.0) return x * std::exp(x * x);
        if (x <= left || x >= right) return 0.0;
        const int k = matched_derivatives;
        std::vector<double> zeros(k + 1, 0.0);
        if (x < 0.0) {
            BlendPolynomial blend(left, zeros, 0.0, profile_core_derivatives(0.0, k));
            return blend.eval(x);
        }
        BlendPolynomial blend(1.0, profile_core_derivatives(1.0, k), right, zeros);
        return blend.eval(x);
    }
};

/// Expansion whose partial sums approximate theta on [0, 1].
inline ProfileExpansion expand_identity_profile(int order) {
    ProfileExtension ext;
    return expand_profile([&](double x) { return ext(x); }, order);
}

}  // namespace ensteer
