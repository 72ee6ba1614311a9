#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include <doctest.h>

#include "mxd/design.hpp"
#include "mxd/risk.hpp"
#include "support/oracles.hpp"

using mxd::BasisContext;
using mxd::build_basis_context;
using mxd::build_design;
using mxd::DesignFamily;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::shared_ptr<const BasisContext> ctx_k(int deg) {
    return std::make_shared<const BasisContext>(build_basis_context(deg));
}

// closed form for the linear basis: f(h0) = 2 (3 x0^2 - 2 x0^3 - 1) / (1 + 3 x0^2)
double f_closed_k1(double h0) {
    const double x0 = std::sqrt((h0 - 1.0) / 3.0);
    return 2.0 * (3.0 * x0 * x0 - 2.0 * x0 * x0 * x0 - 1.0) / (1.0 + 3.0 * x0 * x0);
}

}  // namespace

TEST_CASE("h range") {
    const auto k1 = ctx_k(1);
    const auto r1 = mxd::h_range(*k1);
    CHECK(r1.h_min == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r1.h_max == doctest::Approx(4.0).epsilon(1e-12));

    const auto k2 = ctx_k(2);
    const auto r2 = mxd::h_range(*k2);
    CHECK(r2.h_min == doctest::Approx(1.8).epsilon(1e-10));
    CHECK(r2.h_max == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(std::abs(std::abs(r2.argmin) - 1.0 / std::sqrt(5.0)) < 1e-6);
}

TEST_CASE("level partition for the linear basis") {
    const auto k1 = ctx_k(1);
    const auto part = mxd::level_partition(*k1, 1.3975);
    const double x0 = std::sqrt(0.3975 / 3.0);  // 0.36400...
    REQUIRE(part.a.size() == 1);
    REQUIRE(part.b.size() == 2);
    CHECK(part.a[0].lo == doctest::Approx(-x0).epsilon(1e-8));
    CHECK(part.a[0].hi == doctest::Approx(x0).epsilon(1e-8));
    CHECK(part.b[0].lo == doctest::Approx(-1.0));
    CHECK(part.b[1].hi == doctest::Approx(1.0));
    for (double b : part.boundary_points)
        CHECK(mxd::evaluate_h(*k1, b) == doctest::Approx(1.3975).epsilon(1e-9));
}

TEST_CASE("level partition at h_max covers the support with A") {
    const auto k1 = ctx_k(1);
    const auto part = mxd::level_partition(*k1, 4.0);
    REQUIRE(part.a.size() == 1);
    CHECK(part.a[0].lo == doctest::Approx(-1.0));
    CHECK(part.a[0].hi == doctest::Approx(1.0));
    CHECK(part.b.empty());
    CHECK_THROWS_AS(mxd::level_partition(*k1, 4.5), std::out_of_range);
    CHECK_THROWS_AS(mxd::level_partition(*k1, 0.5), std::out_of_range);
}

TEST_CASE("level partition for the quadratic basis has two A intervals") {
    const auto k2 = ctx_k(2);
    const auto part = mxd::level_partition(*k2, 2.0355);
    REQUIRE(part.a.size() == 2);
    CHECK(part.a[0].lo == doctest::Approx(-0.587).epsilon(1e-3));
    CHECK(part.a[0].hi == doctest::Approx(-0.235).epsilon(1e-3));
    CHECK(part.a[1].lo == doctest::Approx(0.235).epsilon(1e-3));
    CHECK(part.a[1].hi == doctest::Approx(0.587).epsilon(1e-3));
    REQUIRE(part.b.size() == 3);
}

TEST_CASE("f values against hand integrals and the closed form") {
    const auto k1 = ctx_k(1);
    CHECK(mxd::f_value(*k1, 4.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(mxd::f_value(*k1, 1.0) == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(mxd::f_value(*k1, 1.3975) == doctest::Approx(f_closed_k1(1.3975)).epsilon(1e-9));
    CHECK(mxd::f_value(*k1, 1.3975) == doctest::Approx(-1.0).epsilon(1e-3));

    const auto k2 = ctx_k(2);
    CHECK(mxd::f_value(*k2, 9.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
}

TEST_CASE("f is monotone nondecreasing on 1000 probes") {
    for (int deg : {1, 2}) {
        const auto ctx = ctx_k(deg);
        const auto r = mxd::h_range(*ctx);
        double prev = -1e300;
        for (int i = 0; i <= 1000; ++i) {
            const double h0 = r.h_min + (r.h_max - r.h_min) * i / 1000;
            const double f = mxd::f_value(*ctx, h0);
            CHECK(f >= prev - 1e-10);
            CHECK(f <= 1e-12);
            prev = f;
        }
    }
}

TEST_CASE("sigma2_min values and the closed-form cross-check") {
    CHECK(mxd::sigma2_min(*ctx_k(1)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mxd::sigma2_min(*ctx_k(2)) == doctest::Approx(1.5).epsilon(1e-9));

    const auto k10 = ctx_k(10);
    const double direct = mxd::sigma2_min(*k10);
    const double closed = mxd::sigma2_min_closed_form(*k10);
    CHECK(direct > 1.5);
    CHECK(direct < 1.752);
    CHECK(direct == doctest::Approx(closed).epsilon(1e-8));
}

TEST_CASE("threshold solve hits the tabulated boundaries") {
    const auto k1 = ctx_k(1);

    SUBCASE("sigma2 = 2") {
        const double h0 = mxd::solve_threshold(*k1, 2.0);
        const double boundary = std::sqrt((h0 - 1.0) / 3.0);
        CHECK(boundary == doctest::Approx(0.364).epsilon(2e-3));
        CHECK(mxd::f_value(*k1, h0) == doctest::Approx(-1.0).epsilon(1e-8));
    }
    SUBCASE("sigma2 at the phase transition returns h_min") {
        CHECK(mxd::solve_threshold(*k1, 1.0) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(mxd::solve_threshold(*k1, 0.5) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("sigma2 = 3 derives a boundary away from the printed 0.550") {
        const double h0 = mxd::solve_threshold(*k1, 3.0);
        const double boundary = std::sqrt((h0 - 1.0) / 3.0);
        CHECK(boundary == doctest::Approx(0.4662).epsilon(1e-3));
        // 3 x^3 - 6 x^2 + 1 = 0 at the exact boundary
        CHECK(3.0 * std::pow(boundary, 3) - 6.0 * boundary * boundary + 1.0 ==
              doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    }
    SUBCASE("sigma2 = infinity returns h_max") {
        CHECK(mxd::solve_threshold(*k1, kInf) == doctest::Approx(4.0).epsilon(1e-12));
    }
}

TEST_CASE("prop-h design closed form for the linear basis") {
    const auto k1 = ctx_k(1);
    const auto d = build_design(k1, DesignFamily::PropH);
    CHECK(d.density_at(0.0) == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(d.density_at(1.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(d.density_at(-1.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(d.cdf_at(-1.0) == 0.0);
    CHECK(d.cdf_at(1.0) == 1.0);
}

TEST_CASE("sqrt design density at zero matches the quadrature oracle") {
    const auto k1 = ctx_k(1);
    const auto d = build_design(k1, DesignFamily::SqrtH);
    const double total = oracles::simpson(
        [&](double x) { return std::sqrt(mxd::evaluate_h(*k1, x)); }, -1.0, 1.0, 200000);
    CHECK(d.density_at(0.0) == doctest::Approx(1.0 / total).epsilon(1e-8));
    CHECK(d.density_at(0.0) == doctest::Approx(0.3623).epsilon(1e-3));
}

TEST_CASE("minimax design below the phase transition equals prop-h exactly") {
    const auto k1 = ctx_k(1);
    const auto mm = build_design(k1, DesignFamily::Minimax, 1.0);
    const auto ph = build_design(k1, DesignFamily::PropH);
    for (int i = 0; i <= 512; ++i) {
        const double x = -1.0 + 2.0 * i / 512;
        CHECK(mm.density_at(x) == doctest::Approx(ph.density_at(x)).epsilon(1e-13));
    }
    CHECK(mm.sigma2_used() == 1.0);
}

TEST_CASE("minimax design at infinite sigma2 equals the sqrt design in sup norm") {
    for (int deg : {1, 2}) {
        const auto ctx = ctx_k(deg);
        const auto mm = build_design(ctx, DesignFamily::Minimax, kInf);
        const auto sq = build_design(ctx, DesignFamily::SqrtH);
        double sup = 0.0;
        for (int i = 0; i <= 2048; ++i) {
            const double x = -1.0 + 2.0 * i / 2048;
            sup = std::max(sup, std::abs(mm.density_at(x) - sq.density_at(x)));
        }
        CHECK(sup < 1e-8);
    }
}

TEST_CASE("minimax design is continuous at its boundaries") {
    for (int deg : {1, 2}) {
        const auto ctx = ctx_k(deg);
        for (double s2 : {2.0, 3.0, 10.0}) {
            const auto d = build_design(ctx, DesignFamily::Minimax, s2);
            REQUIRE_FALSE(d.boundary_points().empty());
            for (double b : d.boundary_points()) {
                const double left = d.density_at(b - 1e-9);
                const double right = d.density_at(b + 1e-9);
                CHECK(std::abs(left - right) / std::max(left, right) < 1e-6);
                // both piece formulas evaluate to c h0 at the crossing
                const double c = d.normalizer();
                const double h0 = *d.threshold();
                CHECK(d.density_at(b) == doctest::Approx(c * h0).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("every constructed density integrates to one and is strictly positive") {
    const auto k2 = ctx_k(2);
    for (auto family : {DesignFamily::Uniform, DesignFamily::PropH, DesignFamily::SqrtH}) {
        const auto d = build_design(k2, family);
        const double mass =
            oracles::simpson([&](double x) { return d.density_at(x); }, -1.0, 1.0, 100000);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    }
    for (double s2 : {1.0, 2.0, 5.0, kInf}) {
        const auto d = build_design(k2, DesignFamily::Minimax, s2);
        const double mass =
            oracles::simpson([&](double x) { return d.density_at(x); }, -1.0, 1.0, 100000);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
        double min_density = 1e300;
        for (int i = 0; i <= 4096; ++i)
            min_density = std::min(min_density, d.density_at(-1.0 + 2.0 * i / 4096));
        CHECK(min_density > 0.0);
    }
}

TEST_CASE("phase transition is continuous in sigma2") {
    const auto k1 = ctx_k(1);
    const double s2min = mxd::sigma2_min(*k1);
    const auto below = build_design(k1, DesignFamily::Minimax, s2min * (1.0 - 1e-6));
    const auto above = build_design(k1, DesignFamily::Minimax, s2min * (1.0 + 1e-6));
    const auto ph = build_design(k1, DesignFamily::PropH);
    double sup = 0.0, sup_ph = 0.0;
    for (int i = 0; i <= 1024; ++i) {
        const double x = -1.0 + 2.0 * i / 1024;
        sup = std::max(sup, std::abs(below.density_at(x) - above.density_at(x)));
        sup_ph = std::max(sup_ph, std::abs(below.density_at(x) - ph.density_at(x)));
    }
    CHECK(sup < 1e-3);
    CHECK(sup_ph == 0.0);  // the below-transition design IS prop-h
}

TEST_CASE("minimax ratio h/pi is constant on B and smaller on A") {
    const auto k1 = ctx_k(1);
    const auto d = build_design(k1, DesignFamily::Minimax, 2.0);
    const double plateau = 1.0 / d.normalizer();
    double grid_max = 0.0;
    for (int i = 0; i <= 4096; ++i) {
        const double x = -1.0 + 2.0 * i / 4096;
        const double ratio = mxd::evaluate_h(*k1, x) / d.density_at(x);
        grid_max = std::max(grid_max, ratio);
        CHECK(ratio <= plateau * (1.0 + 1e-9));
    }
    CHECK(grid_max == doctest::Approx(plateau).epsilon(1e-6));
    // deep inside B the ratio equals the plateau
    CHECK(mxd::evaluate_h(*k1, 0.9) / d.density_at(0.9) ==
          doctest::Approx(plateau).epsilon(1e-10));
}

TEST_CASE("cdf and quantile are mutually inverse within the table budget") {
    const auto k1 = ctx_k(1);
    for (auto family : {DesignFamily::Uniform, DesignFamily::PropH, DesignFamily::SqrtH}) {
        const auto d = build_design(k1, family);
        for (int i = 0; i <= 200; ++i) {
            const double x = -1.0 + 2.0 * i / 200;
            CHECK(d.quantile(d.cdf_at(x)) == doctest::Approx(x).scale(1.0).epsilon(1e-4));
        }
    }
}

TEST_CASE("sqrt-design quantile matches the dense-CDF oracle") {
    const auto k1 = ctx_k(1);
    const auto d = build_design(k1, DesignFamily::SqrtH);
    for (double u : {0.01, 0.2, 0.5, 0.77, 0.99}) {
        const double want = oracles::dense_quantile(
            [&](double x) { return std::sqrt(mxd::evaluate_h(*k1, x)); }, -1.0, 1.0, u);
        CHECK(d.quantile(u) == doctest::Approx(want).scale(1.0).epsilon(1e-4));
    }
    CHECK_THROWS_AS(d.quantile(-0.1), std::domain_error);
    CHECK_THROWS_AS(d.quantile(1.1), std::domain_error);
    CHECK_THROWS_AS(d.density_at(1.5), std::domain_error);
}

TEST_CASE("custom table designs renormalize and round-trip through CSV") {
    const auto k1 = ctx_k(1);
    std::vector<double> xs, ds;
    for (int i = 0; i <= 256; ++i) {
        xs.push_back(-1.0 + 2.0 * i / 256);
        ds.push_back(2.0 + std::sin(3.0 * xs.back()));  // un-normalized
    }
    const auto d = mxd::design_from_table(k1, xs, ds);
    const double mass =
        oracles::simpson([&](double x) { return d.density_at(x); }, -1.0, 1.0, 100000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));

    std::ostringstream csv;
    d.export_csv(csv);
    CHECK(csv.str().substr(0, 14) == "x,density,cdf\n");

    CHECK_THROWS_AS(mxd::design_from_table(k1, {-1.0, 1.0}, {1.0, -1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(mxd::design_from_table(k1, {-0.5, 1.0}, {1.0, 1.0}),
                    std::invalid_argument);
}

TEST_CASE("general support and weight: the same machinery carries over") {
    // quadratic basis on [0,3] with a right-leaning truncated normal weight
    const auto w = mxd::WeightSpec::truncated_normal(2.0, 1.0, {0.0, 3.0});
    auto ctx = std::make_shared<const BasisContext>(
        build_basis_context(2, {0.0, 3.0}, w));

    const auto r = mxd::h_range(*ctx);
    CHECK(r.h_min > 0.0);
    CHECK(r.h_max > r.h_min);
    CHECK(mxd::sigma2_min(*ctx) ==
          doctest::Approx(mxd::sigma2_min_closed_form(*ctx)).epsilon(1e-8));

    const double s2 = mxd::sigma2_min(*ctx) * 2.0;  // above the transition
    const auto mm = build_design(ctx, DesignFamily::Minimax, s2);
    const double mass =
        oracles::simpson([&](double x) { return mm.density_at(x); }, 0.0, 3.0, 100000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    for (double b : mm.boundary_points()) {
        CHECK(mxd::evaluate_h(*ctx, b) == doctest::Approx(*mm.threshold()).epsilon(1e-7));
        const double left = mm.density_at(b - 1e-9), right = mm.density_at(b + 1e-9);
        CHECK(std::abs(left - right) / std::max(left, right) < 1e-6);
    }

    // dominance against the baselines still holds
    const double best = mxd::worst_case_risk(*ctx, mm, s2);
    for (auto family : {DesignFamily::Uniform, DesignFamily::PropH, DesignFamily::SqrtH}) {
        const auto d = build_design(ctx, family);
        CHECK(best <= mxd::worst_case_risk(*ctx, d, s2) + 1e-8);
    }

    // quantile transform stays consistent
    for (double u : {0.05, 0.5, 0.95})
        CHECK(mm.cdf_at(mm.quantile(u)) == doctest::Approx(u).scale(1.0).epsilon(1e-4));
}

TEST_CASE("constant basis: h is flat and every named family is uniform") {
    const auto k0 = ctx_k(0);
    const auto r = mxd::h_range(*k0);
    CHECK(r.h_max - r.h_min < 1e-12);
    CHECK(std::isinf(mxd::sigma2_min(*k0)));
    CHECK(std::isinf(mxd::sigma2_min_closed_form(*k0)));
    const auto mm = build_design(k0, DesignFamily::Minimax, 5.0);
    const auto un = build_design(k0, DesignFamily::Uniform);
    for (double x : {-1.0, -0.3, 0.8})
        CHECK(mm.density_at(x) == doctest::Approx(un.density_at(x)).epsilon(1e-12));
}

TEST_CASE("minimax without sigma2 and unknown families are usage errors") {
    const auto k1 = ctx_k(1);
    CHECK_THROWS_AS(build_design(k1, DesignFamily::Minimax), std::invalid_argument);
    CHECK_THROWS_AS(mxd::parse_design_family("parabolic"), std::invalid_argument);
    CHECK(mxd::parse_design_family("sqrt-h") == DesignFamily::SqrtH);
}
