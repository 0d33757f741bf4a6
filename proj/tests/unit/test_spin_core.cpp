#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "bellfringe/error.hpp"
#include "bellfringe/josephson.hpp"
#include "bellfringe/spin_core.hpp"

using namespace bellfringe;
using namespace bellfringe::spin;
using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

namespace {

// Materialized spin-j matrices in the Dicke basis, built from the textbook
// J+ elements sqrt(j(j+1) - m(m+1)) independently of the library.
struct DenseSpin {
    CMat jx, jy, jz;
};

DenseSpin dense_spin(int n)
{
    const double j = 0.5 * n;
    const int d = n + 1;
    CMat jp = CMat::Zero(d, d);
    CMat jz = CMat::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        const double m = -j + i;
        jz(i, i) = m;
        if (i + 1 < d) jp(i + 1, i) = std::sqrt(j * (j + 1) - m * (m + 1));
    }
    const CMat jm = jp.adjoint();
    return {(jp + jm) / 2.0, (jp - jm) / cplx(0.0, 2.0), jz};
}

Moments dense_moments(const DenseSpin& s, const CVec& psi)
{
    auto ev = [&](const CMat& a) { return psi.dot(a * psi).real(); };
    return {ev(s.jx), ev(s.jy), ev(s.jz), ev(s.jx * s.jx), ev(s.jy * s.jy), ev(s.jz * s.jz)};
}

std::vector<double> random_unit(std::size_t d, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> v(d);
    double s = 0.0;
    for (auto& x : v) {
        x = g(rng);
        s += x * x;
    }
    for (auto& x : v) x /= std::sqrt(s);
    return v;
}

SpinState coherent_x(int n)
{
    const DickeBasis b(n);
    std::vector<double> c(b.dimension());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double log_binom = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
        c[i] = std::exp(0.5 * log_binom - 0.5 * n * std::log(2.0));
    }
    return SpinState(b, c);
}

void check_close(const Moments& a, const Moments& b, double tol)
{
    CHECK(std::abs(a.jx - b.jx) < tol);
    CHECK(std::abs(a.jy - b.jy) < tol);
    CHECK(std::abs(a.jz - b.jz) < tol);
    CHECK(std::abs(a.jx2 - b.jx2) < tol);
    CHECK(std::abs(a.jy2 - b.jy2) < tol);
    CHECK(std::abs(a.jz2 - b.jz2) < tol);
}

}  // namespace

TEST_CASE("basis labelling")
{
    CHECK(build_basis(2).m_values() == std::vector<double>{-1.0, 0.0, 1.0});
    CHECK(build_basis(1).m_values() == std::vector<double>{-0.5, 0.5});
    const auto big = build_basis(1000);
    CHECK(big.dimension() == 1001);
    CHECK(big.j() == 500.0);
    const auto mv = big.m_values();
    for (std::size_t i = 1; i < mv.size(); ++i) CHECK(mv[i] - mv[i - 1] == 1.0);
    CHECK(mv.front() == -mv.back());
    CHECK(big.index_of(0.0) == 500);
    CHECK_THROWS_AS(build_basis(0), InvalidArgument);
    CHECK_THROWS_AS(build_basis(-3), InvalidArgument);
    CHECK_THROWS_AS(big.index_of(0.5), InvalidArgument);
}

TEST_CASE("ladder coefficients")
{
    const auto b2 = build_basis(2);
    CHECK(ladder_coefficient(b2, 0.0) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));
    CHECK(ladder_coefficient(b2, -1.0) == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-15));
    CHECK(ladder_coefficient(build_basis(1000), 0.0) == doctest::Approx(250.24987512484395).epsilon(1e-14));
    CHECK_THROWS_AS(ladder_coefficient(b2, 1.0), InvalidArgument);
    CHECK_THROWS_AS(ladder_coefficient(b2, -2.0), InvalidArgument);
    const auto all = ladder_coefficients(build_basis(9));
    for (std::size_t i = 0; i < all.size(); ++i) {
        CHECK(all[i] > 0.0);
        CHECK(all[i] == doctest::Approx(all[all.size() - 1 - i]).epsilon(1e-15));
    }
}

TEST_CASE("state normalization is enforced")
{
    const auto b = build_basis(3);
    CHECK_THROWS_AS(SpinState(b, {1.0, 0.0, 0.0, 0.1}), InvalidArgument);
    CHECK_THROWS_AS(SpinState(b, {1.0, 0.0}), InvalidArgument);
    CHECK_NOTHROW(SpinState(b, {1.0, 0.0, 0.0, 1e-6}));
}

TEST_CASE("moments agree with dense matrices for N <= 8")
{
    for (int n = 1; n <= 8; ++n) {
        const DenseSpin s = dense_spin(n);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto c = random_unit(static_cast<std::size_t>(n) + 1, 31 * n + seed);
            const SpinState st(build_basis(n), c);
            CVec psi(n + 1);
            for (int i = 0; i <= n; ++i) psi(i) = c[static_cast<std::size_t>(i)];
            check_close(compute_moments(st), dense_moments(s, psi), 1e-10);
        }
    }
}

TEST_CASE("coherent state along x")
{
    for (int n : {2, 10, 1000}) {
        const Moments m = compute_moments(coherent_x(n));
        CHECK(m.jx == doctest::Approx(n / 2.0).epsilon(1e-12));
        CHECK(m.jy == 0.0);
        // jy2 is a difference of two O(N^2) sums, so only ~1e-9 relative survives at N = 1000
        CHECK(m.jy2 == doctest::Approx(n / 4.0).epsilon(1e-9));
        CHECK(m.jz2 == doctest::Approx(n / 4.0).epsilon(1e-12));
        CHECK(std::abs(m.jz) < 1e-10);
    }
}

TEST_CASE("polarized Dicke state")
{
    const auto b = build_basis(10);
    const Moments m = compute_moments(dicke_state(b, 5.0));
    CHECK(m.jx == 0.0);
    CHECK(m.jz == 5.0);
    CHECK(m.jz2 == 25.0);
    CHECK(m.jx2 == doctest::Approx(2.5));
}

TEST_CASE("Casimir identity and exact zero <Jy>")
{
    for (int n : {1, 2, 5, 50, 999}) {
        const auto c = random_unit(static_cast<std::size_t>(n) + 1, 7u * n);
        const auto b = build_basis(n);
        const Moments m = compute_moments(SpinState(b, c));
        CHECK(std::abs(casimir_defect(m, b)) < 1e-9);
        CHECK(m.jy == 0.0);
        CHECK(m.jx * m.jx <= m.jx2 + 1e-9);
        CHECK(m.jz * m.jz <= m.jz2 + 1e-9);
        CHECK(m.jx2 <= b.j() * b.j() + 1e-9);
    }
}

TEST_CASE("reflection negates jz and keeps the rest")
{
    const auto b = build_basis(12);
    const SpinState s(b, random_unit(13, 99));
    const Moments m = compute_moments(s);
    const Moments r = compute_moments(s.reflected());
    CHECK(r.jz == -m.jz);
    CHECK(r.jx == doctest::Approx(m.jx).epsilon(1e-14));
    CHECK(r.jz2 == doctest::Approx(m.jz2).epsilon(1e-14));
}

TEST_CASE("ensembles")
{
    const auto b = build_basis(6);
    const SpinState up = dicke_state(b, 3.0);
    const SpinState down = dicke_state(b, -3.0);
    const StateEnsemble cat({{0.5, up}, {0.5, down}});
    const Moments m = ensemble_moments(cat);
    CHECK(m.jz == 0.0);
    CHECK(m.jz2 == 9.0);

    const SpinState s(b, random_unit(7, 3));
    CHECK(ensemble_moments(StateEnsemble::pure(s)) == compute_moments(s));

    CHECK_THROWS_AS(StateEnsemble({}), InvalidArgument);
    CHECK_THROWS_AS(StateEnsemble({{1.2, up}, {-0.2, down}}), InvalidArgument);
    CHECK_THROWS_AS(StateEnsemble({{0.5, up}, {0.4, down}}), InvalidArgument);
    CHECK_THROWS_AS(StateEnsemble({{0.5, up}, {0.5, dicke_state(build_basis(4), 2.0)}}),
                    InvalidArgument);
}

TEST_CASE("pi/2 rotation remap matches the dense matrix exponential")
{
    for (int n = 1; n <= 8; ++n) {
        const DenseSpin s = dense_spin(n);
        const CMat u = (CMat(cplx(0.0, -std::numbers::pi / 2.0) * s.jx)).exp();
        const auto c = random_unit(static_cast<std::size_t>(n) + 1, 500 + n);
        CVec psi(n + 1);
        for (int i = 0; i <= n; ++i) psi(i) = c[static_cast<std::size_t>(i)];
        const Moments remapped = rotate_pi2_about_x(compute_moments(SpinState(build_basis(n), c)));
        check_close(remapped, dense_moments(s, u * psi), 1e-10);
    }

    SUBCASE("N = 2 repulsive ground state")
    {
        const auto gs = josephson::ground_state({2, 10.0, 0.0});
        const DenseSpin s = dense_spin(2);
        const CMat u = (CMat(cplx(0.0, -std::numbers::pi / 2.0) * s.jx)).exp();
        CVec psi(3);
        for (int i = 0; i < 3; ++i) psi(i) = gs.state.coeffs()[static_cast<std::size_t>(i)];
        const Moments dense = dense_moments(s, u * psi);
        const Moments remapped = rotate_pi2_about_x(compute_moments(gs.state));
        CHECK(std::abs(remapped.jy2 - dense.jy2) < 1e-10);
        CHECK(std::abs(remapped.jz2 - dense.jz2) < 1e-10);
    }
}

TEST_CASE("rotation algebra")
{
    const Moments m{3.0, 0.0, 0.5, 10.0, 4.0, 2.0};
    Moments r = m;
    for (int i = 0; i < 4; ++i) r = rotate_pi2_about_x(r);
    CHECK(r == m);
    const Moments once = rotate_pi2_about_x(m);
    CHECK(once.jy == -0.5);
    CHECK(once.jy2 == 2.0);
    CHECK(once.jz2 == 4.0);
    CHECK(once.jx2 == m.jx2);

    const Moments coh = compute_moments(coherent_x(40));
    const Moments rc = rotate_pi2_about_x(coh);
    CHECK(rc.jy2 == doctest::Approx(coh.jy2).epsilon(1e-12));

    // number squeezed -> phase squeezed
    const Moments ns{9.0, 0.0, 0.0, 81.0, 7.0, 2.0};
    CHECK(rotate_pi2_about_x(ns).jy2 < 20.0 / 4.0);
}
