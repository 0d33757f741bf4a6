#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "bellfringe/error.hpp"
#include "bellfringe/noise_models.hpp"
#include "bellfringe/witnesses.hpp"

using namespace bellfringe;
using namespace bellfringe::noise;

namespace {

double integrate(const QuadratureRule& r, auto f)
{
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(r.nodes[i]);
    return s;
}

double sum(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0);
}

}  // namespace

TEST_CASE("Gauss-Hermite rule")
{
    for (int order : {1, 2, 5, 41, 81}) {
        const auto r = gauss_hermite_rule(order);
        REQUIRE(r.nodes.size() == static_cast<std::size_t>(order));
        CHECK(sum(r.weights) == doctest::Approx(1.0).epsilon(1e-14));
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            CHECK(r.weights[i] > 0.0);
            CHECK(r.nodes[i] == -r.nodes[r.nodes.size() - 1 - i]);
        }
        // normalized moments of exp(-x^2): E[x^2k] = (2k-1)!! / 2^k
        double expected = 1.0;
        for (int k = 1; 2 * k <= 2 * order - 1; ++k) {
            expected *= (2.0 * k - 1.0) / 2.0;
            const double got = integrate(r, [&](double x) { return std::pow(x, 2 * k); });
            CHECK(got == doctest::Approx(expected).epsilon(1e-10));
            if (k >= 12) break;
        }
    }
    CHECK(gauss_hermite_rule(41).nodes[20] == 0.0);
    CHECK_THROWS_AS(gauss_hermite_rule(0), InvalidArgument);
}

TEST_CASE("half-range Hermite rule integrates polynomials exactly")
{
    for (int order : {1, 3, 10, 20, 40, 80}) {
        const auto r = half_range_hermite_rule(order);
        CHECK(sum(r.weights) == doctest::Approx(1.0).epsilon(1e-14));
        for (double x : r.nodes) CHECK(x > 0.0);
        // int_0^inf x^k e^{-x^2} dx / (sqrt(pi)/2) = Gamma((k+1)/2) / sqrt(pi)
        for (int k = 0; k <= std::min(2 * order - 1, 30); ++k) {
            const double expected = std::tgamma(0.5 * (k + 1)) / std::sqrt(std::numbers::pi);
            const double got = integrate(r, [&](double x) { return std::pow(x, k); });
            CHECK(got == doctest::Approx(expected).epsilon(1e-11));
        }
    }
}

TEST_CASE("folded rule is symmetric and reproduces Gaussian moments")
{
    const auto r = folded_hermite_rule(20);
    REQUIRE(r.nodes.size() == 40);
    CHECK(sum(r.weights) == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(r.nodes[i] == -r.nodes[39 - i]);
        CHECK(r.weights[i] == r.weights[39 - i]);
    }
    CHECK(integrate(r, [](double x) { return x * x; }) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(integrate(r, [](double x) { return std::abs(x); })
          == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-13));
}

TEST_CASE("Gauss-Legendre rule")
{
    const auto r = gauss_legendre_rule(12, -1.0, 3.0);
    CHECK(sum(r.weights) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(integrate(r, [](double x) { return std::pow(x, 11); })
          == doctest::Approx((std::pow(3.0, 12) - 1.0) / 12.0).epsilon(1e-13));
}

TEST_CASE("delta mixture")
{
    SUBCASE("sigma zero is the pure ground state")
    {
        const auto e = delta_mixture(200, -1.2, 0.0);
        CHECK(e.size() == 1);
        const auto gs = josephson::ground_state({200, -1.2, 0.0});
        CHECK(spin::ensemble_moments(e) == spin::compute_moments(gs.state));
    }
    SUBCASE("odd moments vanish exactly")
    {
        for (double lambda : {-1.3, -0.8, 2.0}) {
            const auto m = spin::ensemble_moments(delta_mixture(300, lambda, 0.03));
            CHECK(m.jz == 0.0);
            CHECK(m.jy == 0.0);
        }
    }
    SUBCASE("ensemble and averaged moments agree")
    {
        const auto e = spin::ensemble_moments(delta_mixture(300, -1.1, 0.02, 40));
        const auto a = noisy_moments(300, -1.1, {0.02, 0.0, 0.0, 1.0}, {20, 1.0, 20});
        CHECK(e.jy2 == doctest::Approx(a.moments.jy2).epsilon(1e-12));
        CHECK(e.jx == doctest::Approx(a.moments.jx).epsilon(1e-12));
    }
    CHECK_THROWS_AS(delta_mixture(10, 0.0, -0.1), InvalidArgument);
}

TEST_CASE("attractive witness degrades with delta noise")
{
    double prev = -1e300;
    bool exited = false;
    for (double sigma : {0.0, 0.002, 0.005, 0.01, 0.02, 0.05}) {
        const auto nm = noisy_moments(1000, -1.2, {sigma, 0.0, 0.0, 1.0});
        const auto r = witness::evaluate(nm.moments, 1000, false);
        CHECK(r.b_param > prev);
        prev = r.b_param;
        exited = exited || r.b_param > 0.0;
    }
    CHECK(exited);
}

TEST_CASE("node doubling converges at the default order")
{
    for (double lambda : {-1.3, -1.1, -0.9, -0.5, 2.0, 6.0}) {
        for (double sigma : {0.005, 0.02, 0.1}) {
            const auto nm = noisy_moments(1000, lambda, {sigma, 0.0, 0.0, 1.0});
            CHECK(nm.converged);
            CHECK(nm.quadrature_change < 1e-6);
            CHECK(nm.half_order == 40);
        }
    }
}

TEST_CASE("delta averaging escalates when needed")
{
    // a kinked integrand of the delta variable forces refinement
    auto kinked = [](double d) {
        spin::Moments m;
        m.jx = 1.0 + std::abs(d - 0.3);
        m.jx2 = 1.0;
        m.jy2 = 1.0;
        m.jz2 = 1.0;
        return m;
    };
    const auto nm = delta_average(1.0, kinked, {4, 1e-6, 64});
    CHECK(nm.half_order > 4);
    const auto smooth = delta_average(1.0, [](double d) {
        spin::Moments m;
        m.jx = 1.0 + d * d;
        m.jx2 = m.jy2 = m.jz2 = 1.0;
        return m;
    }, {4, 1e-6, 64});
    CHECK(smooth.half_order == 8);
    CHECK(smooth.moments.jx == doctest::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("graded half-range rule")
{
    for (int order : {16, 32}) {
        const auto r = graded_half_range_rule(order);
        CHECK(sum(r.weights) == doctest::Approx(1.0).epsilon(1e-14));
        for (int k = 0; k <= 6; ++k) {
            const double expected = std::tgamma(0.5 * (k + 1)) / std::sqrt(std::numbers::pi);
            CHECK(integrate(r, [&](double x) { return std::pow(x, k); }) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("narrow features near delta = 0 fall back to the graded rule")
{
    // int_0^inf e^{-x^2} eps^2 / (x^2 + eps^2) dx = (pi eps / 2) e^{eps^2} erfc(eps)
    const double eps = 1e-3;
    const auto nm = delta_average(1.0, [&](double d) {
        const double x = d / std::numbers::sqrt2;
        spin::Moments m;
        m.jx = eps * eps / (x * x + eps * eps);
        m.jx2 = m.jy2 = m.jz2 = 1.0;
        return m;
    });
    CHECK(nm.converged);
    CHECK(nm.graded_order > 0);
    const double exact = std::sqrt(std::numbers::pi) * eps * std::exp(eps * eps) * std::erfc(eps);
    CHECK(nm.moments.jx == doctest::Approx(exact).epsilon(1e-6));
}

TEST_CASE("thermal average")
{
    const std::vector<double> e{-1.0, 0.0, 2.0};
    std::vector<spin::Moments> m(3);
    m[0].jx = 1.0;
    m[1].jx = 2.0;
    m[2].jx = 3.0;
    CHECK(thermal_average(e, m, 0.0).jx == 1.0);
    const double z = 1.0 + std::exp(-1.0) + std::exp(-3.0);
    CHECK(thermal_average(e, m, 1.0).jx
          == doctest::Approx((1.0 + 2.0 * std::exp(-1.0) + 3.0 * std::exp(-3.0)) / z).epsilon(1e-14));
    CHECK_THROWS_AS(thermal_average(e, m, -1.0), InvalidArgument);
    CHECK_THROWS_AS(thermal_average({1.0}, m, 1.0), InvalidArgument);
}

TEST_CASE("combined noise is flagged")
{
    CHECK_FALSE(noisy_moments(100, -0.5, {0.01, 0.0, 0.0, 1.0}).extension);
    CHECK_FALSE(noisy_moments(100, -0.5, {0.0, 0.3, 0.0, 1.0}).extension);
    CHECK(noisy_moments(100, -0.5, {0.01, 0.3, 0.0, 1.0}).extension);
}

TEST_CASE("detector blur")
{
    CHECK(blur_visibility(0.8, 1.0, 0.0) == 0.8);
    CHECK(blur_visibility(1.0, 2.0, 0.5) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(blur_visibility(1.0, 1.0, 40.0) == 0.0);
    for (double s1 : {0.1, 0.4, 1.3}) {
        for (double s2 : {0.0, 0.2, 0.9}) {
            const double twice = blur_visibility(blur_visibility(0.9, 1.7, s1), 1.7, s2);
            const double once = blur_visibility(0.9, 1.7, std::hypot(s1, s2));
            CHECK(std::abs(twice - once) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(blur_visibility(1.2, 1.0, 0.1), InvalidArgument);
}

TEST_CASE("witness with noise")
{
    CHECK(witness_with_noise(0.4, 1.0) == doctest::Approx(-0.1));
    for (double xi2 : {0.2, 0.5}) {
        for (double nu : {0.3, 0.9, 1.0}) {
            CHECK(witness_with_noise(xi2, nu) == witness::bell_witness(xi2, nu));
        }
    }
    const double shift = witness_with_noise(0.3, 0.9) - witness_with_noise(0.3, 1.0);
    CHECK(shift == doctest::Approx((std::sqrt(1.0 - 0.81) - 1.0) / 1.62 + 0.5).epsilon(1e-14));
    CHECK(shift == doctest::Approx(0.1518).epsilon(1e-3));
    CHECK_THROWS_AS(witness_with_noise(0.3, 0.0), UndefinedWitness);
}

TEST_CASE("configuration validation")
{
    CHECK_NOTHROW(NoiseConfig{}.validate());
    CHECK_THROWS_AS((NoiseConfig{-0.1, 0.0, 0.0, 1.0}.validate()), InvalidArgument);
    CHECK_THROWS_AS((NoiseConfig{0.0, -1.0, 0.0, 1.0}.validate()), InvalidArgument);
    CHECK_THROWS_AS((NoiseConfig{0.0, 0.0, 0.1, 0.0}.validate()), InvalidArgument);
}
