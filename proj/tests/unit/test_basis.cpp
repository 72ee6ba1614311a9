#include <cmath>
#include <memory>

#include <doctest.h>

#include "mxd/basis.hpp"
#include "mxd/design.hpp"
#include "mxd/rng.hpp"
#include "support/oracles.hpp"

using mxd::BasisContext;
using mxd::build_basis_context;
using mxd::evaluate_h;
using mxd::Interval;
using mxd::MeanFunction;
using mxd::WeightSpec;

namespace {

double legendre(int n, double x) {
    double p0 = 1.0, p1 = x;
    if (n == 0) return p0;
    for (int j = 1; j < n; ++j) {
        const double p2 = ((2.0 * j + 1.0) * x * p1 - j * p0) / (j + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

}  // namespace

TEST_CASE("moment matrix entries for monomial bases") {
    const auto k1 = build_basis_context(1);
    CHECK(k1.q()(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(k1.q()(0, 1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(k1.q()(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    const auto k2 = build_basis_context(2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double want = ((i + j) % 2) ? 0.0 : 1.0 / (i + j + 1);
            CHECK(k2.q()(i, j) == doctest::Approx(want).scale(1.0).epsilon(1e-13));
        }
}

TEST_CASE("degenerate and invalid bases are rejected") {
    using Fn = mxd::ScalarFn;
    std::vector<Fn> dependent{[](double) { return 1.0; }, [](double x) { return x; },
                              [](double x) { return x; }};
    CHECK_THROWS_AS(build_basis_context(std::move(dependent)), std::runtime_error);

    CHECK_THROWS_AS(build_basis_context(16), std::invalid_argument);  // k = 17 > cap

    // weight that does not integrate to one
    WeightSpec half{[](double) { return 0.25; }, "quarter"};
    CHECK_THROWS_AS(build_basis_context(1, {-1.0, 1.0}, half), std::invalid_argument);

    // weight negative somewhere
    WeightSpec signedw{[](double x) { return x; }, "signed"};
    CHECK_THROWS_AS(build_basis_context(1, {-1.0, 1.0}, signedw), std::invalid_argument);
}

TEST_CASE("h for the linear basis is 1 + 3x^2") {
    const auto ctx = build_basis_context(1);
    CHECK(evaluate_h(ctx, 0.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(evaluate_h(ctx, 1.0) == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(evaluate_h(ctx, -1.0) == doctest::Approx(4.0).epsilon(1e-13));
    for (double x : {-0.9, -0.3, 0.11, 0.77})
        CHECK(evaluate_h(ctx, x) == doctest::Approx(1.0 + 3.0 * x * x).epsilon(1e-12));
    CHECK_THROWS_AS(evaluate_h(ctx, 1.5), std::domain_error);
}

TEST_CASE("h for the quadratic basis has interior minima found by the grid oracle") {
    const auto ctx = build_basis_context(2);
    CHECK(evaluate_h(ctx, 0.0) == doctest::Approx(2.25).epsilon(1e-12));
    const double hmin =
        oracles::grid_min([&](double x) { return evaluate_h(ctx, x); }, -1.0, 1.0);
    CHECK(hmin == doctest::Approx(1.8).epsilon(1e-9));
    CHECK(evaluate_h(ctx, 1.0 / std::sqrt(5.0)) == doctest::Approx(1.8).epsilon(1e-12));
}

TEST_CASE("trace identity: h/(4 lambda) integrates to the basis size") {
    // tr(Q^{-1} Q) = k, i.e. \int x^T Q^{-1} x lambda dx = k; with
    // h = 4 x^T Q^{-1} x lambda^2 that is \int h / (4 lambda) dx = k.
    auto check_trace = [](const BasisContext& ctx) {
        const double got = oracles::simpson(
            [&](double x) { return evaluate_h(ctx, x) / (4.0 * ctx.weight_at(x)); },
            ctx.support().lo, ctx.support().hi, 200000);
        CHECK(got == doctest::Approx(static_cast<double>(ctx.size())).epsilon(1e-8));
    };
    check_trace(build_basis_context(1));
    check_trace(build_basis_context(2));
    check_trace(build_basis_context(5));
    check_trace(build_basis_context(1, {-1.0, 1.0},
                                    WeightSpec::truncated_normal(0.5, 0.25, {-1.0, 1.0})));
    check_trace(build_basis_context(2, {0.0, 3.0}));

    // with the uniform weight on [-1,1] the factor 1/(4 lambda) IS lambda, so
    // \int h lambda dx = k and \int h dx = 2 (K+1) there
    for (int deg : {1, 2, 4}) {
        const auto ctx = build_basis_context(deg);
        const double weighted = oracles::simpson(
            [&](double x) { return evaluate_h(ctx, x) * ctx.weight_at(x); }, -1.0, 1.0,
            200000);
        CHECK(weighted == doctest::Approx(deg + 1.0).epsilon(1e-8));
        const double plain = oracles::simpson(
            [&](double x) { return evaluate_h(ctx, x); }, -1.0, 1.0, 200000);
        CHECK(plain == doctest::Approx(2.0 * (deg + 1.0)).epsilon(1e-8));
    }
}

TEST_CASE("uniform-weight h on [-1,1] reduces to the plain quadratic form") {
    // evaluate_h carries the 4 lambda^2 factor; for lambda = 1/2 it must equal
    // x^T Q^{-1} x, i.e. sum of (2j+1) P_j(x)^2 for monomial bases.
    for (int deg : {1, 2, 3, 5}) {
        const auto ctx = build_basis_context(deg);
        for (double x : {-1.0, -0.63, -0.2, 0.0, 0.41, 0.99}) {
            double want = 0.0;
            for (int j = 0; j <= deg; ++j) {
                const double p = legendre(j, x);
                want += (2.0 * j + 1.0) * p * p;
            }
            CHECK(evaluate_h(ctx, x) == doctest::Approx(want).epsilon(1e-11));
        }
    }

    // the reduction is specific to the uniform weight: a different lambda
    // scales h away from the plain quadratic form
    const auto tn = build_basis_context(
        1, {-1.0, 1.0}, WeightSpec::truncated_normal(0.5, 0.25, {-1.0, 1.0}));
    bool differs = false;
    for (double x : {-0.5, 0.0, 0.5})
        differs = differs || std::abs(evaluate_h(tn, x) - (1.0 + 3.0 * x * x)) > 0.05;
    CHECK(differs);
}

TEST_CASE("h is positive and even for monomial bases") {
    for (int deg : {1, 2, 3}) {
        const auto ctx = build_basis_context(deg);
        for (int i = 0; i <= 100; ++i) {
            const double x = -1.0 + 2.0 * i / 100;
            CHECK(evaluate_h(ctx, x) > 0.0);
            CHECK(std::abs(evaluate_h(ctx, x) - evaluate_h(ctx, -x)) < 1e-12);
        }
    }
}

TEST_CASE("best linear coefficients for the calibrated quadratic") {
    const auto ctx = build_basis_context(1);
    const auto m = MeanFunction::polynomial({0.0, 1.0, 3.354});
    const auto beta = mxd::best_linear_coefficients(m, ctx);
    CHECK(beta.beta[0] == doctest::Approx(3.354 / 3.0).epsilon(1e-12));
    CHECK(beta.beta[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("linear means are reproduced exactly, padded with zeros") {
    for (int deg : {1, 2, 3}) {
        const auto ctx = build_basis_context(deg);
        const auto m = MeanFunction::polynomial({0.7, -1.3});
        const auto beta = mxd::best_linear_coefficients(m, ctx);
        CHECK(beta.beta[0] == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(beta.beta[1] == doctest::Approx(-1.3).epsilon(1e-12));
        for (int j = 2; j <= deg; ++j)
            CHECK(beta.beta[j] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("cubic projects onto 0.6 x under the uniform weight") {
    const auto ctx = build_basis_context(2);
    const auto m = MeanFunction::polynomial({0.0, 1.0, 0.5, 6.614});
    const auto beta = mxd::best_linear_coefficients(m, ctx);
    CHECK(beta.beta[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(beta.beta[1] == doctest::Approx(1.0 + 0.6 * 6.614).epsilon(1e-12));
    CHECK(beta.beta[2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("projection is idempotent") {
    const auto ctx = build_basis_context(2);
    const auto m = MeanFunction::polynomial({0.3, -2.0, 1.1, 4.0, -0.7});
    const auto beta = mxd::best_linear_coefficients(m, ctx);
    const auto again = mxd::best_linear_coefficients(
        MeanFunction::polynomial({beta.beta[0], beta.beta[1], beta.beta[2]}), ctx);
    for (int j = 0; j < 3; ++j)
        CHECK(again.beta[j] == doctest::Approx(beta.beta[j]).scale(1.0).epsilon(1e-12));
}

TEST_CASE("orthogonality of the projection residual for random polynomials") {
    const auto ctx = build_basis_context(2);
    mxd::RngStream stream(123, 0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> coeffs(9);
        for (auto& c : coeffs) c = 4.0 * stream.next_uniform() - 2.0;
        const auto m = MeanFunction::polynomial(coeffs);
        const auto beta = mxd::best_linear_coefficients(m, ctx);
        for (int j = 0; j < ctx.size(); ++j) {
            const double inner = oracles::simpson(
                [&](double x) {
                    const auto row = ctx.eval_basis(x);
                    return row[j] * (m(x) - mxd::evaluate_linear(ctx, beta, x)) *
                           ctx.weight_at(x);
                },
                -1.0, 1.0, 20000);
            CHECK(std::abs(inner) < 1e-8);
        }
    }
}

TEST_CASE("best linear approximation under a design density") {
    auto ctx = std::make_shared<const BasisContext>(build_basis_context(1));
    const auto m = MeanFunction::polynomial({0.25, 0.5, 0.25});

    SUBCASE("uniform design agrees with the reference projection") {
        const auto uniform = mxd::build_design(ctx, mxd::DesignFamily::Uniform);
        const auto a = mxd::best_linear_coefficients(m, *ctx);
        const auto b = mxd::best_linear_coefficients_under_design(m, uniform, *ctx);
        CHECK(b.beta[0] == doctest::Approx(a.beta[0]).epsilon(1e-10));
        CHECK(b.beta[1] == doctest::Approx(a.beta[1]).epsilon(1e-10));
        CHECK(a.beta[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(a.beta[1] == doctest::Approx(0.5).epsilon(1e-12));
    }

    SUBCASE("right-leaning truncated normal lowers the intercept and raises the slope") {
        const auto w = WeightSpec::truncated_normal(0.5, 0.25, {-1.0, 1.0});
        std::vector<double> xs(4097), ds(4097);
        for (int i = 0; i <= 4096; ++i) {
            xs[i] = -1.0 + 2.0 * i / 4096;
            ds[i] = w.density(xs[i]);
        }
        const auto pi = mxd::design_from_table(ctx, xs, ds);
        const auto ref = mxd::best_linear_coefficients(m, *ctx);
        const auto under = mxd::best_linear_coefficients_under_design(m, pi, *ctx);
        CHECK(under.beta[0] < ref.beta[0] - 1e-3);
        CHECK(under.beta[1] > ref.beta[1] + 1e-3);
    }

    SUBCASE("linear means are fitted exactly under any design") {
        const auto lin = MeanFunction::polynomial({-0.4, 2.0});
        for (auto family : {mxd::DesignFamily::Uniform, mxd::DesignFamily::PropH,
                            mxd::DesignFamily::SqrtH}) {
            const auto d = mxd::build_design(ctx, family);
            const auto b = mxd::best_linear_coefficients_under_design(lin, d, *ctx);
            CHECK(b.beta[0] == doctest::Approx(-0.4).epsilon(1e-9));
            CHECK(b.beta[1] == doctest::Approx(2.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("deviation norm of the calibrated reference means is one") {
    const auto k1 = build_basis_context(1);
    CHECK(mxd::deviation_norm(MeanFunction::polynomial({0.0, 1.0, 3.354}), k1) ==
          doctest::Approx(1.0).epsilon(1e-3));

    const auto k2 = build_basis_context(2);
    CHECK(mxd::deviation_norm(MeanFunction::polynomial({0.0, 1.0, 0.5, 6.614}), k2) ==
          doctest::Approx(1.0).epsilon(1e-3));

    // m already linear: zero deviation
    CHECK(mxd::deviation_norm(MeanFunction::polynomial({1.0, 2.0}), k1) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("leading-coefficient calibration") {
    const auto k1 = build_basis_context(1);
    const auto m1 = mxd::calibrate_leading_coefficient({0.0, 1.0}, 2, k1, 1.0);
    CHECK(m1.poly_coefficients()[2] == doctest::Approx(std::sqrt(45.0 / 4.0)).epsilon(1e-12));
    CHECK(mxd::deviation_norm(m1, k1) == doctest::Approx(1.0).epsilon(1e-10));

    const auto k2 = build_basis_context(2);
    const auto m2 = mxd::calibrate_leading_coefficient({0.0, 1.0, 0.5}, 3, k2, 1.0);
    // c^2 = 1 / ((1/2) \int (x^3 - 0.6 x)^2 dx) = 43.75
    CHECK(m2.poly_coefficients()[3] * m2.poly_coefficients()[3] ==
          doctest::Approx(43.75).epsilon(1e-10));

    const auto m0 = mxd::calibrate_leading_coefficient({0.0, 1.0}, 2, k1, 0.0);
    CHECK(m0.poly_coefficients()[2] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));

    // leading term inside the span: deviation cannot move
    CHECK_THROWS_AS(mxd::calibrate_leading_coefficient({0.0}, 1, k1, 1.0),
                    std::runtime_error);
    // base outside the span violates the proportionality premise
    CHECK_THROWS_AS(mxd::calibrate_leading_coefficient({0.0, 0.0, 0.0, 1.0}, 4, k1, 1.0),
                    std::invalid_argument);
}

TEST_CASE("tabulated mean functions interpolate their source") {
    const auto f = [](double x) { return std::sin(3.0 * x) + 0.2 * x; };
    const auto m = MeanFunction::tabulated(f, {-1.0, 1.0}, "tabulated sin");
    for (double x : {-0.99, -0.4, 0.0, 0.35, 0.98})
        CHECK(m(x) == doctest::Approx(f(x)).epsilon(1e-6));
    CHECK_FALSE(m.is_polynomial());
}
