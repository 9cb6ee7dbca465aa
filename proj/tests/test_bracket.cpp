#include <catch2/catch.hpp>

#include "ensteer/bracket.hpp"

using namespace ensteer;

namespace {

double hermite_ref(int m, double x) {
    double h0 = 1.0, h1 = 2.0 * x;
    if (m == 0) return h0;
    if (m == 1) return h1;
    for (int k = 1; k < m; ++k) {
        const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

/// k-th derivative of exp(-x^2), reference route independent of brackets.
double phi_deriv(int k, double x) {
    return ((k % 2) ? -1.0 : 1.0) * hermite_ref(k, x) * std::exp(-x * x);
}

SmoothField random_field(int dim, int deg, Rng& rng) {
    return random_polynomial_field(dim, deg, 1.0, rng);
}

}  // namespace

TEST_CASE("bracket of a field with itself vanishes") {
    Rng rng(101);
    auto f = random_field(2, 3, rng);
    auto b = bracket(f, f);
    for (int i = 0; i < 10; ++i) {
        Point x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Point v = b.eval(x);
        CHECK(euclidean_norm(v.data(), 2) == Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("bracket against analytic differentiation of the gaussian channel") {
    auto fam = gauss2d_family();
    auto b = bracket(fam[0], fam[1]);
    // [d/dx1, phi(x1) d/dx2] = phi'(x1) d/dx2
    Point v0 = b.eval({0.0, 0.0});
    CHECK(v0[0] == Approx(0.0).margin(1e-15));
    CHECK(v0[1] == Approx(0.0).margin(1e-15));  // phi'(0) = 0
    Point v1 = b.eval({1.0, 0.3});
    CHECK(v1[1] == Approx(-2.0 * std::exp(-1.0)));
    CHECK(v1[1] == Approx(phi_deriv(1, 1.0)));
}

TEST_CASE("iterated bracket words on the gaussian family") {
    auto fam = gauss2d_family();

    auto w1 = iterated_bracket(fam, BracketWord::parse("1"));
    Point v = w1.eval({0.37, -2.0});
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 0.0);

    auto w112 = iterated_bracket(fam, BracketWord::parse("112"));
    CHECK(w112.eval({0.0, 0.0})[1] == Approx(-2.0));  // phi''(0) = H_2(0) = -2

    for (int k = 0; k <= 6; ++k) {
        std::vector<int> idx(k, 1);
        idx.push_back(2);
        auto f = iterated_bracket(fam, BracketWord(idx));
        for (double x1 : {-1.0, 0.0, 0.5, 1.0}) {
            Point val = f.eval({x1, 0.0});
            CHECK(val[0] == Approx(0.0).margin(1e-12));
            CHECK(val[1] == Approx(phi_deriv(k, x1)).margin(1e-10));
        }
    }
}

TEST_CASE("right-nesting consistency") {
    auto fam = gauss2d_family();
    BracketWord word({1, 1, 2});
    auto direct = iterated_bracket(fam, word);
    auto nested = bracket(fam[0], iterated_bracket(fam, word.tail()));
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        Point x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        Point a = direct.eval(x), b = nested.eval(x);
        CHECK(std::abs(a[0] - b[0]) <= 1e-12);
        CHECK(std::abs(a[1] - b[1]) <= 1e-12);
    }
}

TEST_CASE("ad_pow") {
    auto fam = gauss2d_family();
    auto y = fam[1];

    SECTION("k = 0 returns the field unchanged") {
        auto r = ad_pow(fam[0], 0, y);
        Point x = {0.3, 0.1};
        CHECK(r.eval(x) == y.eval(x));
    }

    SECTION("k = 1 equals a single bracket at random points") {
        auto r = ad_pow(fam[0], 1, y);
        auto b = bracket(fam[0], y);
        Rng rng(9);
        for (int i = 0; i < 10; ++i) {
            Point x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            Point a = r.eval(x), c = b.eval(x);
            CHECK(a[0] == Approx(c[0]).margin(1e-14));
            CHECK(a[1] == Approx(c[1]).margin(1e-14));
        }
    }

    SECTION("ad^2 Y X cross-checked against nested bracket calls") {
        auto direct = ad_pow(y, 2, fam[0]);
        auto nested = bracket(y, bracket(y, fam[0]));
        Point x = {0.0, 0.0};
        Point a = direct.eval(x), b = nested.eval(x);
        CHECK(a[0] == Approx(b[0]).margin(1e-14));
        CHECK(a[1] == Approx(b[1]).margin(1e-14));
    }
}

TEST_CASE("bracket algebra properties on random polynomial fields") {
    Rng rng(2024);

    SECTION("antisymmetry") {
        auto x_f = random_field(2, 3, rng);
        auto y_f = random_field(2, 3, rng);
        auto ab = bracket(x_f, y_f);
        auto ba = bracket(y_f, x_f);
        for (int i = 0; i < 100; ++i) {
            Point x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            Point u = ab.eval(x), v = ba.eval(x);
            for (int c = 0; c < 2; ++c) CHECK(std::abs(u[c] + v[c]) <= 1e-9);
        }
    }

    SECTION("bilinearity") {
        auto x_f = random_field(2, 3, rng);
        auto xp_f = random_field(2, 3, rng);
        auto y_f = random_field(2, 3, rng);
        const double a = 0.7, b = -1.3;
        std::vector<GaussPoly> comb;
        for (int i = 0; i < 2; ++i)
            comb.push_back(a * x_f.component(i) + b * xp_f.component(i));
        SmoothField mix(comb, "aX+bX'");
        auto lhs = bracket(mix, y_f);
        auto r1 = bracket(x_f, y_f);
        auto r2 = bracket(xp_f, y_f);
        for (int i = 0; i < 100; ++i) {
            Point x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            Point l = lhs.eval(x), u = r1.eval(x), v = r2.eval(x);
            for (int c = 0; c < 2; ++c) CHECK(std::abs(l[c] - (a * u[c] + b * v[c])) <= 1e-9);
        }
    }

    SECTION("Jacobi identity") {
        auto x_f = random_field(2, 2, rng);
        auto y_f = random_field(2, 2, rng);
        auto z_f = random_field(2, 2, rng);
        auto j1 = bracket(x_f, bracket(y_f, z_f));
        auto j2 = bracket(y_f, bracket(z_f, x_f));
        auto j3 = bracket(z_f, bracket(x_f, y_f));
        for (int i = 0; i < 100; ++i) {
            Point x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            Point a = j1.eval(x), b = j2.eval(x), c = j3.eval(x);
            for (int k = 0; k < 2; ++k) CHECK(std::abs(a[k] + b[k] + c[k]) <= 1e-7);
        }
    }
}

TEST_CASE("bracket errors") {
    CHECK_THROWS_AS(bracket(constant_field({1.0}), constant_field({1.0, 0.0})),
                    StructuralError);

    auto fam = gauss2d_family();
    SECTION("depth cap") {
        std::vector<int> idx(9, 1);
        CHECK_THROWS_AS(iterated_bracket(fam, BracketWord(idx)), CapabilityError);
        CHECK_NOTHROW(iterated_bracket(fam, BracketWord(idx), 16));
    }

    SECTION("insufficient jet order") {
        FieldFamily capped({fam[0].with_max_jet_order(2), fam[1].with_max_jet_order(2)});
        CHECK_THROWS_WITH(iterated_bracket(capped, BracketWord::parse("112")),
                          Catch::Contains("jet order"));
    }

    SECTION("word validation") {
        CHECK_THROWS_AS(iterated_bracket(fam, BracketWord::parse("13")), StructuralError);
        CHECK_THROWS_AS(BracketWord(std::vector<int>{}), StructuralError);
    }
}
