#include "bellfringe/witnesses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bellfringe/error.hpp"

namespace bellfringe::witness {

namespace {

void require_visibility(double nu)
{
    if (!(nu > 0.0)) throw UndefinedWitness("visibility is zero: witness undefined");
    if (!(nu <= 1.0)) throw InvalidArgument("visibility must lie in (0, 1]");
}

}  // namespace

double visibility(const spin::Moments& moments, int n)
{
    return std::min(1.0, 2.0 * std::abs(moments.jx) / n);
}

double phase_squeezing(const spin::Moments& moments, int n)
{
    if (moments.jx == 0.0) throw UndefinedWitness("<Jx> = 0: phase squeezing undefined");
    return n * moments.jy2 / (moments.jx * moments.jx);
}

double sensitivity(double xi2, double nu, int n)
{
    require_visibility(nu);
    return (xi2 + std::sqrt(1.0 - nu * nu) / (nu * nu)) / n;
}

double param_a(double xi2, double nu)
{
    require_visibility(nu);
    const double nu2 = nu * nu;
    return xi2 + (std::sqrt(1.0 - nu2) - nu2) / nu2;
}

double bell_witness(double xi2, double nu)
{
    require_visibility(nu);
    const double nu2 = nu * nu;
    return xi2 + (std::sqrt(1.0 - nu2) - 1.0) / (2.0 * nu2);
}

double visibility_offset(double nu)
{
    require_visibility(nu);
    const double nu2 = nu * nu;
    return 1.0 - (std::sqrt(1.0 - nu2) + 1.0) / (2.0 * nu2);
}

double bell_theta(int n, double jx, double jy2, double theta)
{
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    return 2.0 * n * c * c - 4.0 * jx * c + 8.0 * s * s * jy2;
}

OptimalAngle optimal_theta(double nu, double xi2)
{
    require_visibility(nu);
    const double denom = 1.0 - xi2 * nu * nu;
    if (denom > 0.0) {
        const double c = nu / (2.0 * denom);
        if (c <= 1.0) return {2.0 * std::acos(c), true};
    }
    return {0.0, false};
}

DirectMinimum minimize_bell_direct(int n, const spin::Moments& moments)
{
    constexpr int kGrid = 1024;
    constexpr double kPi = std::numbers::pi;
    auto f = [&](double t) { return bell_theta(n, moments.jx, moments.jy2, t); };

    int best = 0;
    double best_val = f(0.0);
    for (int k = 1; k < kGrid; ++k) {
        const double v = f(kPi * k / (kGrid - 1));
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }
    double a = kPi * std::max(best - 1, 0) / (kGrid - 1);
    double b = kPi * std::min(best + 1, kGrid - 1) / (kGrid - 1);

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > 1e-10) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    DirectMinimum out{0.5 * (a + b), f(0.5 * (a + b))};
    // The bracket may sit against a boundary where the minimum is attained.
    for (double edge : {0.0, kPi}) {
        const double v = f(edge);
        if (v < out.value) out = {edge, v};
    }
    return out;
}

WitnessReport make_report(double xi2, double nu, int n, bool rotated)
{
    require_visibility(nu);
    WitnessReport r;
    r.n = n;
    r.nu = nu;
    r.xi2 = xi2;
    r.a_param = param_a(xi2, nu);
    r.b_param = bell_witness(xi2, nu);
    r.var_phi = sensitivity(xi2, nu, n);
    const OptimalAngle angle = optimal_theta(nu, xi2);
    r.theta0 = angle.theta0;
    r.interior_minimum = angle.interior;
    r.rotated = rotated;
    return r;
}

WitnessReport evaluate(const spin::Moments& moments, int n, bool rotate)
{
    const spin::Moments m = rotate ? spin::rotate_pi2_about_x(moments) : moments;
    const double nu = visibility(m, n);
    if (!(nu > 0.0)) throw UndefinedWitness("visibility is zero: witness undefined");
    return make_report(phase_squeezing(m, n), nu, n, rotate);
}

bool relation_check(const WitnessReport& report)
{
    return std::abs(report.b_param - report.a_param - visibility_offset(report.nu)) <= 1e-10;
}

}  // namespace bellfringe::witness
