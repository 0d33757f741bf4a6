#include "bellfringe/analytics.hpp"

#include <cmath>
#include <string>

#include "bellfringe/error.hpp"

namespace bellfringe::analytics {

namespace {

// (sqrt(1 - nu^2) - 1) / (2 nu^2) without cancellation at small nu.
double visibility_term(double nu)
{
    const double s = std::sqrt(1.0 - nu * nu);
    return -0.5 / (1.0 + s);
}

// Bisection for a sign change of f on [lo, hi]; f(lo) < 0 < f(hi).
template <class F>
double bisect(F f, double lo, double hi)
{
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-10 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::string_view to_string(Regime r)
{
    switch (r) {
        case Regime::attractive_para: return "attractive_para";
        case Regime::attractive_ferro: return "attractive_ferro";
        case Regime::repulsive: return "repulsive";
    }
    return "unknown";
}

Regime regime_of(double lambda)
{
    if (!std::isfinite(lambda)) throw InvalidArgument("lambda must be finite");
    if (lambda == -1.0) throw InvalidArgument("lambda = -1 is the critical point");
    if (lambda > 0.0) return Regime::repulsive;
    if (lambda > -1.0) return Regime::attractive_para;
    return Regime::attractive_ferro;
}

SemiclassicalPrediction semiclassical_ab(double lambda)
{
    if (!(lambda > kSqueezingLowerBound)) {
        throw InvalidArgument("semiclassical prediction requires lambda > -(1+sqrt5)/2, got "
                              + std::to_string(lambda));
    }
    if (std::abs(lambda + 1.0) < kBreakdownHalfWidth) {
        throw InvalidArgument("semiclassical prediction breaks down near lambda = -1");
    }
    SemiclassicalPrediction p;
    p.regime = regime_of(lambda);
    switch (p.regime) {
        case Regime::attractive_para: {
            const double r = std::sqrt(1.0 + lambda);
            p.xi2 = r;
            p.nu = 1.0;
            p.a_param = r - 1.0;
            p.b_param = r - 0.5;
            break;
        }
        case Regime::attractive_ferro: {
            const double a = std::abs(lambda);
            const double r = std::sqrt(lambda * lambda - 1.0);
            p.xi2 = a * r;
            p.nu = 1.0 / a;
            p.a_param = 2.0 * a * r - 1.0;
            p.b_param = 1.5 * a * r - 0.5 * lambda * lambda;
            break;
        }
        case Regime::repulsive: {
            const double x = 1.0 / std::sqrt(1.0 + lambda);
            p.xi2 = x;
            p.nu = 1.0;
            p.a_param = x - 1.0;
            p.b_param = x - 0.5;
            break;
        }
    }
    return p;
}

double thermal_xi2(double lambda, double temperature)
{
    if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
    const Regime regime = regime_of(lambda);
    double amplitude = 0.0;
    double omega = 0.0;
    if (regime == Regime::attractive_ferro) {
        omega = std::sqrt(lambda * lambda - 1.0);
        amplitude = std::abs(lambda) * omega;
    } else {
        omega = std::sqrt(1.0 + lambda);
        amplitude = regime == Regime::repulsive ? 1.0 / omega : omega;
    }
    if (temperature == 0.0) return amplitude;
    const double x = omega / (2.0 * temperature);
    return amplitude / std::tanh(x);
}

double analytic_boundary_t(double lambda)
{
    const double xi0 = thermal_xi2(lambda, 0.0);
    if (std::abs(xi0 - 0.5) <= 1e-15) return 0.0;
    if (xi0 > 0.5) {
        throw InvalidArgument("no temperature boundary: B >= 0 already at T = 0 for lambda = "
                              + std::to_string(lambda));
    }
    auto b = [&](double t) { return thermal_xi2(lambda, t) - 0.5; };
    double hi = 1.0;
    while (b(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e12) throw InvalidArgument("temperature boundary not bracketed");
    }
    return bisect(b, 0.0, hi);
}

double analytic_boundary_sigma(double lambda, double k_fringe)
{
    if (!(k_fringe > 0.0)) throw InvalidArgument("k_fringe must be > 0");
    const SemiclassicalPrediction p = semiclassical_ab(lambda);
    auto b = [&](double sigma) {
        const double nu = p.nu * std::exp(-0.5 * k_fringe * k_fringe * sigma * sigma);
        return p.xi2 + visibility_term(nu);
    };
    if (b(0.0) >= 0.0) {
        throw InvalidArgument("no blur boundary: B >= 0 already at sigma = 0 for lambda = "
                              + std::to_string(lambda));
    }
    if (p.xi2 <= 0.25) {
        throw InvalidArgument("no blur boundary: B < 0 for every sigma at lambda = "
                              + std::to_string(lambda));
    }
    double hi = 1.0 / k_fringe;
    while (b(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e6 / k_fringe) throw InvalidArgument("blur boundary not bracketed");
    }
    return bisect(b, 0.0, hi);
}

}  // namespace bellfringe::analytics
