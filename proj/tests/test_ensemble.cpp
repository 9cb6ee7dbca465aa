#include <catch2/catch.hpp>

#include "ensteer/ensemble.hpp"

using namespace ensteer;

namespace {

Ensemble line_ensemble(int n = 101) {
    return Ensemble::from_profile(n, {[](double th) { return th; },
                                      [](double) { return 0.0; }});
}

Ensemble diagonal_ensemble(int n = 101) {
    return Ensemble::from_profile(n, {[](double th) { return th; },
                                      [](double th) { return th; }});
}

std::shared_ptr<ControlledRHS> shear_generator() {
    // Y = x1 d/dx2, the generator of (theta, t theta)
    GaussPoly zero(2);
    SmoothField y({zero, GaussPoly::variable(2, 0)}, "Y");
    return ControlledRHS::autonomous(y);
}

}  // namespace

TEST_CASE("ensemble metrics") {
    auto a = line_ensemble();
    SECTION("identity of indiscernibles") {
        CHECK(c0_distance(a, a) == 0.0);
        CHECK(lp_distance(a, a, 2.0) == 0.0);
    }

    SECTION("translation shifts by the vector length") {
        std::vector<Point> pts;
        for (const Point& p : a.points()) pts.push_back({p[0] + 0.3, p[1] - 0.4});
        Ensemble b(a.theta_grid(), pts);
        CHECK(c0_distance(a, b) == Approx(0.5));
        CHECK(lp_distance(a, b, 3.0) == Approx(0.5).margin(1e-12));
    }

    SECTION("sup between the line and the diagonal is attained at theta=1") {
        CHECK(c0_distance(a, diagonal_ensemble()) == Approx(1.0));
    }

    SECTION("L2 distance to the diagonal is 1/sqrt(3)") {
        CHECK(lp_distance(a, diagonal_ensemble(), 2.0) ==
              Approx(1.0 / std::sqrt(3.0)).margin(1e-4));
    }

    SECTION("grid mismatch is a structural error") {
        CHECK_THROWS_AS(c0_distance(a, line_ensemble(51)), StructuralError);
        CHECK_THROWS_AS(lp_distance(a, line_ensemble(51), 2.0), StructuralError);
    }

    SECTION("metric axioms on random triples") {
        Rng rng(77);
        auto rand_ens = [&] {
            std::vector<Point> pts;
            for (int i = 0; i < 21; ++i)
                pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
            std::vector<double> grid;
            for (int i = 0; i < 21; ++i) grid.push_back(i / 20.0);
            return Ensemble(grid, pts);
        };
        for (int trial = 0; trial < 10; ++trial) {
            auto x = rand_ens(), y = rand_ens(), z = rand_ens();
            for (double p : {1.0, 2.0}) {
                CHECK(lp_distance(x, y, p) == Approx(lp_distance(y, x, p)));
                CHECK(lp_distance(x, z, p) <=
                      lp_distance(x, y, p) + lp_distance(y, z, p) + 1e-12);
            }
            CHECK(c0_distance(x, y) == Approx(c0_distance(y, x)));
            CHECK(c0_distance(x, z) <= c0_distance(x, y) + c0_distance(y, z) + 1e-12);
        }
    }

    SECTION("lp approaches c0 as p grows") {
        // distance profile with a plateau at its maximum
        auto b = Ensemble::from_profile(
            101, {[](double th) { return th; },
                  [](double th) { return std::min(1.0, 2.0 * th); }});
        const double c0 = c0_distance(a, b);
        const double l64 = lp_distance(a, b, 64.0);
        CHECK(l64 <= c0 * 1.0 + 1e-12);  // |Theta| = 1
        CHECK(l64 >= 0.95 * c0);
    }
}

TEST_CASE("flow action on ensembles") {
    auto a = line_ensemble();

    SECTION("identity flow") {
        FlowMap id(ControlledRHS::autonomous(zero_field(2)), 0.0, 1.0);
        auto b = apply_flow(id, a);
        CHECK(c0_distance(a, b) <= 1e-14);
    }

    SECTION("gaussian channel writes the profile") {
        auto fam = gauss2d_family();
        auto rhs = std::make_shared<ControlledRHS>(
            std::vector<SmoothField>{fam[0], fam[1]},
            std::vector<ScalarFunction>{ScalarFunction::zero(), ScalarFunction::constant(1.0)});
        auto b = apply_flow(FlowMap(rhs, 0.0, 1.0), a);
        for (int i = 0; i < b.size(); ++i) {
            const double th = b.theta_grid()[i];
            CHECK(b.point(i)[0] == Approx(th).margin(1e-12));
            CHECK(b.point(i)[1] == Approx(std::exp(-th * th)).margin(1e-10));
        }
    }

    SECTION("left action composition") {
        // for a time-invariant field, applying P_t then P_s equals P_{s+t}
        SmoothField swirl({GaussPoly::variable(2, 1) * GaussPoly::gauss_factor(2, 0),
                           GaussPoly::variable(2, 0)},
                          "s");
        auto rhs = ControlledRHS::autonomous(swirl);
        auto stepwise = apply_flow(FlowMap(rhs, 0.0, 0.3),
                                   apply_flow(FlowMap(rhs, 0.0, 0.45), a));
        auto direct = apply_flow(FlowMap(rhs, 0.0, 0.75), a);
        CHECK(c0_distance(stepwise, direct) <= 1e-8);
    }
}

TEST_CASE("diffeotopy sampling") {
    auto a = line_ensemble();
    Diffeotopy d(shear_generator(), a, 1.0);

    SECTION("time zero returns the start and the generator along it") {
        auto s = diffeotopy_sample(d, 0.0);
        CHECK(c0_distance(s.ensemble, a) == 0.0);
        for (int i = 0; i < a.size(); ++i) {
            CHECK(s.generator_values[i][0] == 0.0);
            CHECK(s.generator_values[i][1] == Approx(a.theta_grid()[i]));
        }
    }

    SECTION("generator evaluation is (0, theta) at every time") {
        DiffeotopySampler sampler(d, {0.25, 0.5, 0.75, 1.0});
        for (int k = 0; k < sampler.count(); ++k) {
            auto s = sampler.sample(k);
            for (int i = 0; i < a.size(); ++i) {
                const double th = a.theta_grid()[i];
                CHECK(s.generator_values[i][0] == Approx(0.0).margin(1e-12));
                CHECK(s.generator_values[i][1] == Approx(th).margin(1e-10));
                CHECK(s.ensemble.point(i)[1] == Approx(sampler.time(k) * th).margin(1e-10));
            }
        }
    }

    SECTION("horizon lands on the target ensemble") {
        auto s = diffeotopy_sample(d, 1.0);
        CHECK(c0_distance(s.ensemble, diagonal_ensemble()) <= 1e-9);
    }

    SECTION("samples outside the horizon are rejected") {
        CHECK_THROWS_AS(diffeotopy_sample(d, 1.5), StructuralError);
    }
}
