#include <catch2/catch.hpp>

#include "ensteer/hermite.hpp"

using namespace ensteer;

TEST_CASE("hermite polynomial values") {
    for (double x : {-2.0, 0.0, 0.5, 3.0}) CHECK(hermite_poly(0, x) == 1.0);
    CHECK(hermite_poly(1, 0.5) == Approx(1.0));
    CHECK(hermite_poly(2, 0.0) == Approx(-2.0));
    CHECK(hermite_poly(3, 1.0) == Approx(8.0 - 12.0));  // H_3 = 8x^3 - 12x
    CHECK_THROWS_AS(hermite_poly(kHermiteOrderCap + 1, 0.0), CapabilityError);
    CHECK_THROWS_AS(hermite_poly(-1, 0.0), StructuralError);
}

TEST_CASE("derivative identity H'_m = 2m H_{m-1}") {
    for (int m = 1; m <= 20; ++m) {
        for (int i = 0; i <= 60; ++i) {
            const double x = -3.0 + 6.0 * i / 60.0;
            const double h = 1e-6 * (1 + std::abs(x));
            const double fd = (hermite_poly(m, x + h) - hermite_poly(m, x - h)) / (2 * h);
            const double identity = 2.0 * m * hermite_poly(m - 1, x);
            const double scale = std::max(1.0, std::abs(identity));
            CHECK(std::abs(fd - identity) / scale <= 1e-6);
        }
    }
}

TEST_CASE("quadrature normalization of H_3") {
    // integral of H_3^2 exp(-x^2) = 2^3 3! sqrt(pi)
    QuadratureRule rule = gauss_hermite(24);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        s += rule.weights[i] * sqr(hermite_poly(3, rule.nodes[i]));
    CHECK(s == Approx(48.0 * std::sqrt(3.141592653589793)).epsilon(1e-12));
    CHECK(s == Approx(85.0778).margin(1e-3));
}

TEST_CASE("expand_profile orthogonality") {
    SECTION("H_2 comes back as the unit coefficient vector") {
        auto pe = expand_profile([](double x) { return hermite_poly(2, x); }, 6);
        for (int m = 0; m <= 6; ++m)
            CHECK(pe.expansion.coeffs()[m] == Approx(m == 2 ? 1.0 : 0.0).margin(1e-8));
    }
    SECTION("zero profile") {
        auto pe = expand_profile([](double) { return 0.0; }, 5);
        for (double c : pe.expansion.coeffs()) CHECK(c == 0.0);
    }
    SECTION("unit vectors up to order 20") {
        // Recovery accuracy is limited by the input scale: coefficients of
        // H_j carry roundoff of order eps * ||H_j||_w, which crosses 1e-8
        // around j = 15 in double precision.
        for (int j : {0, 5, 10, 13, 20}) {
            auto pe = expand_profile([&](double x) { return hermite_poly(j, x); }, 20);
            double norm_j = std::sqrt(std::sqrt(3.141592653589793));
            for (int k = 1; k <= j; ++k) norm_j *= std::sqrt(2.0 * k);
            const double floor = 2e-14 * norm_j;
            const double tol = std::max(1e-8, floor);
            for (int m = 0; m <= 20; ++m)
                CHECK(pe.expansion.coeffs()[m] == Approx(m == j ? 1.0 : 0.0).margin(tol));
        }
    }
}

TEST_CASE("identity profile approximation on [0,1]") {
    auto sup_error = [](const HermiteExpansion& h) {
        double sup = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double th = i / 2000.0;
            sup = std::max(sup, std::abs(th - h.eval(th)));
        }
        return sup;
    };

    double prev = 1e9;
    for (int m : {10, 20, 40}) {
        auto pe = expand_identity_profile(m);
        const double err = sup_error(pe.expansion);
        const double bound = profile_derivative_bound(pe.expansion, 0.0, 1.0);
        CAPTURE(m, err, bound);
        CHECK(err < prev + 1e-6);     // no blow-up as the order grows
        CHECK(bound <= 3.0);          // equi-Lipschitz certificate
        if (m == 40) CHECK(err <= 1e-2);
        prev = err;
    }
}

TEST_CASE("profile_derivative_bound examples") {
    SECTION("zero expansion") {
        CHECK(profile_derivative_bound(HermiteExpansion({0.0}), 0.0, 1.0) == 0.0);
    }
    SECTION("single gaussian term") {
        // sup over [0,1] of (1 + 2 theta) exp(-theta^2) sits at theta = 1/2
        const double bound = profile_derivative_bound(HermiteExpansion({1.0}), 0.0, 1.0);
        CHECK(bound == Approx(2.0 * std::exp(-0.25)).epsilon(1e-6));
    }
}

TEST_CASE("expansion derivative matches finite differences") {
    auto pe = expand_identity_profile(12);
    for (double x : {0.1, 0.45, 0.9}) {
        const double h = 1e-6;
        const double fd = (pe.expansion.eval(x + h) - pe.expansion.eval(x - h)) / (2 * h);
        CHECK(pe.expansion.eval_derivative(x) == Approx(fd).margin(1e-7));
    }
}
