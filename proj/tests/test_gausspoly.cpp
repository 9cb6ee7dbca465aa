#include <catch2/catch.hpp>

#include "ensteer/gausspoly.hpp"

using namespace ensteer;

namespace {

double fd_partial(const GaussPoly& p, std::vector<double> x, int i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    std::vector<double> xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    return (p.eval(xp.data()) - p.eval(xm.data())) / (2 * h);
}

}  // namespace

TEST_CASE("algebra basics") {
    auto x1 = GaussPoly::variable(2, 0);
    auto x2 = GaussPoly::variable(2, 1);
    auto g1 = GaussPoly::gauss_factor(2, 0);

    GaussPoly p = 3.0 * (x1 * x1) + (-2.0) * x2 + GaussPoly::constant(2, 1.0);
    double pt[2] = {1.5, -0.5};
    CHECK(p.eval(pt) == Approx(3 * 2.25 + 1.0 + 1.0));

    GaussPoly q = x1 * g1;  // x1 exp(-x1^2)
    CHECK(q.eval(pt) == Approx(1.5 * std::exp(-2.25)));

    // exp factors multiply by adding gaussian exponents
    GaussPoly g2 = g1 * g1;
    CHECK(g2.eval(pt) == Approx(std::exp(-2.0 * 2.25)));
}

TEST_CASE("exact cancellation") {
    auto x1 = GaussPoly::variable(3, 0);
    GaussPoly z = x1 - x1;
    CHECK(z.is_zero());
    GaussPoly w = x1 * x1 + (-1.0) * (x1 * x1);
    CHECK(w.is_zero());
}

TEST_CASE("symbolic derivative matches finite differences") {
    auto x1 = GaussPoly::variable(2, 0);
    auto x2 = GaussPoly::variable(2, 1);
    auto g1 = GaussPoly::gauss_factor(2, 0);
    GaussPoly p = x1 * x1 * x2 + 2.5 * (x2 * g1) + GaussPoly::constant(2, -0.7);

    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        for (int axis = 0; axis < 2; ++axis) {
            const double exact = p.derivative(axis).eval(x.data());
            const double fd = fd_partial(p, x, axis);
            CHECK(exact == Approx(fd).margin(1e-7));
        }
    }
}

TEST_CASE("gaussian derivative closed form") {
    // d/dx exp(-x^2) = -2x exp(-x^2)
    auto g = GaussPoly::gauss_factor(1, 0);
    auto d = g.derivative(0);
    double x = 0.8;
    CHECK(d.eval(&x) == Approx(-2 * 0.8 * std::exp(-0.64)));
}

TEST_CASE("jet of a polynomial reproduces Taylor coefficients") {
    // p = x1^2 x2 around (1, 2): value 2, dp/dx1 = 2 x1 x2 = 4, dp/dx2 = 1
    auto p = GaussPoly::variable(2, 0) * GaussPoly::variable(2, 0) * GaussPoly::variable(2, 1);
    double x[2] = {1.0, 2.0};
    Jet j = p.jet(x, 2);
    CHECK(j.value() == Approx(2.0));
    CHECK(j.partial(0) == Approx(4.0));
    CHECK(j.partial(1) == Approx(1.0));
    Exponents e{};
    e[0] = 2;
    CHECK(j.derivative(e) == Approx(2 * 2.0));  // d2p/dx1^2 = 2 x2
}

TEST_CASE("jet of gaussian factor") {
    auto g = GaussPoly::gauss_factor(1, 0);
    double x = 0.0;
    Jet j0 = g.jet(&x, 2);
    CHECK(j0.value() == Approx(1.0));
    CHECK(j0.partial(0) == Approx(0.0).margin(1e-15));
    Exponents e{};
    e[0] = 2;
    CHECK(j0.derivative(e) == Approx(-2.0));  // (e^{-x^2})'' at 0 = -2

    x = 1.0;
    Jet j1 = g.jet(&x, 1);
    CHECK(j1.value() == Approx(std::exp(-1.0)));
    CHECK(j1.partial(0) == Approx(-2.0 * std::exp(-1.0)));
}

TEST_CASE("dimension checks") {
    CHECK_THROWS_AS(GaussPoly(0), StructuralError);
    CHECK_THROWS_AS(GaussPoly(kMaxDim + 1), StructuralError);
    auto a = GaussPoly::variable(2, 0);
    auto b = GaussPoly::variable(3, 0);
    CHECK_THROWS_AS(a + b, StructuralError);
}
