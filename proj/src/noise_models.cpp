#include "bellfringe/noise_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bellfringe/error.hpp"
#include "bellfringe/tridiagonal.hpp"

namespace bellfringe::noise {

namespace {

// Nodes and normalized weights of the Gauss rule whose Jacobi matrix has
// diagonal `a` and squared off-diagonal `b` (b[0] unused).
QuadratureRule golub_welsch(const std::vector<double>& a, const std::vector<double>& b)
{
    linalg::SymTridiag jac;
    jac.diag = a;
    jac.offdiag.resize(a.size() - 1);
    for (std::size_t k = 1; k < a.size(); ++k) jac.offdiag[k - 1] = std::sqrt(b[k]);
    const auto sys = linalg::eigensystem(jac);

    QuadratureRule rule;
    rule.nodes = sys.values;
    rule.weights.resize(sys.values.size());
    for (std::size_t k = 0; k < sys.values.size(); ++k) {
        rule.weights[k] = sys.vectors[k][0] * sys.vectors[k][0];
    }
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    for (double& w : rule.weights) w /= total;
    return rule;
}

void require_order(int order)
{
    if (order < 1 || order > 4096) {
        throw InvalidArgument("quadrature order must be in [1, 4096], got " + std::to_string(order));
    }
}

void accumulate(spin::Moments& acc, double w, const spin::Moments& m)
{
    acc.jx += w * m.jx;
    acc.jy += w * m.jy;
    acc.jz += w * m.jz;
    acc.jx2 += w * m.jx2;
    acc.jy2 += w * m.jy2;
    acc.jz2 += w * m.jz2;
}

spin::Moments folded_average(const QuadratureRule& rule, double sigma_delta,
                             const std::function<spin::Moments(double)>& at_delta)
{
    spin::Moments acc;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double delta = std::numbers::sqrt2 * sigma_delta * rule.nodes[i];
        const spin::Moments m = at_delta(delta);
        const double w = 0.5 * rule.weights[i];
        // Consecutive +delta / -delta updates keep odd moments exactly zero.
        accumulate(acc, w, m);
        accumulate(acc, w, reflect(m));
    }
    return acc;
}

}  // namespace

void NoiseConfig::validate() const
{
    if (!(sigma_delta >= 0.0)) throw InvalidArgument("sigma_delta must be >= 0");
    if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
    if (!(sigma_detector >= 0.0)) throw InvalidArgument("sigma_detector must be >= 0");
    if (!(k_fringe >= 0.0)) throw InvalidArgument("k_fringe must be >= 0");
    if (sigma_detector > 0.0 && !(k_fringe > 0.0)) {
        throw InvalidArgument("k_fringe must be > 0 when sigma_detector > 0");
    }
}

QuadratureRule gauss_hermite_rule(int order)
{
    require_order(order);
    std::vector<double> a(static_cast<std::size_t>(order), 0.0);
    std::vector<double> b(static_cast<std::size_t>(order), 0.0);
    for (int k = 1; k < order; ++k) b[static_cast<std::size_t>(k)] = 0.5 * k;
    QuadratureRule rule = golub_welsch(a, b);
    // Symmetrize against rounding in the eigensolver.
    const std::size_t n = rule.nodes.size();
    for (std::size_t i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

QuadratureRule gauss_legendre_rule(int order, double a, double b)
{
    require_order(order);
    const auto n = static_cast<std::size_t>(order);
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75)
                            / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                const double jd = static_cast<double>(j);
                p1 = ((2.0 * jd - 1.0) * z * p2 - (jd - 1.0) * p3) / jd;
            }
            dp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
            const double step = p1 / dp;
            z -= step;
            if (std::abs(step) <= 1e-15) break;
        }
        rule.nodes[i] = mid - half * z;
        rule.nodes[n - 1 - i] = mid + half * z;
        rule.weights[i] = 2.0 * half / ((1.0 - z * z) * dp * dp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

QuadratureRule half_range_hermite_rule(int order)
{
    require_order(order);
    // Recurrence coefficients by the discretized Stieltjes (Lanczos)
    // procedure on a Gauss-Legendre discretization of [0, X]; exp(-X^2) is
    // far below double precision for the degrees involved.
    const double cutoff = std::sqrt(4.0 * order) + 8.0;
    const QuadratureRule disc = gauss_legendre_rule(400 + 10 * order, 0.0, cutoff);
    const std::size_t m = disc.nodes.size();
    std::vector<double> w(m);
    for (std::size_t i = 0; i < m; ++i) {
        w[i] = disc.weights[i] * std::exp(-disc.nodes[i] * disc.nodes[i]);
    }

    const auto n = static_cast<std::size_t>(order);
    std::vector<double> alpha(n, 0.0);
    std::vector<double> beta(n, 0.0);
    const double mu0 = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<double> q_prev(m, 0.0);
    std::vector<double> q(m, 1.0 / std::sqrt(mu0));
    std::vector<double> r(m);
    for (std::size_t k = 0; k < n; ++k) {
        double a = 0.0;
        for (std::size_t i = 0; i < m; ++i) a += w[i] * disc.nodes[i] * q[i] * q[i];
        alpha[k] = a;
        if (k + 1 == n) break;
        const double sb = k == 0 ? 0.0 : std::sqrt(beta[k]);
        double nr = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            r[i] = (disc.nodes[i] - a) * q[i] - sb * q_prev[i];
            nr += w[i] * r[i] * r[i];
        }
        beta[k + 1] = nr;
        const double inv = 1.0 / std::sqrt(nr);
        for (std::size_t i = 0; i < m; ++i) {
            q_prev[i] = q[i];
            q[i] = r[i] * inv;
        }
    }
    return golub_welsch(alpha, beta);
}

QuadratureRule graded_half_range_rule(int panel_order)
{
    require_order(panel_order);
    std::vector<double> edges{0.0};
    for (double x = 1e-7; x < 6.5; x *= 2.0) edges.push_back(x);
    edges.push_back(6.5);
    QuadratureRule rule;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const QuadratureRule gl = gauss_legendre_rule(panel_order, edges[p], edges[p + 1]);
        for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
            rule.nodes.push_back(gl.nodes[i]);
            rule.weights.push_back(gl.weights[i] * std::exp(-gl.nodes[i] * gl.nodes[i]));
        }
    }
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    for (double& w : rule.weights) w /= total;
    return rule;
}

QuadratureRule folded_hermite_rule(int half_order)
{
    const QuadratureRule half = half_range_hermite_rule(half_order);
    const std::size_t n = half.nodes.size();
    QuadratureRule rule;
    rule.nodes.resize(2 * n);
    rule.weights.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        rule.nodes[n - 1 - i] = -half.nodes[i];
        rule.nodes[n + i] = half.nodes[i];
        rule.weights[n - 1 - i] = 0.5 * half.weights[i];
        rule.weights[n + i] = 0.5 * half.weights[i];
    }
    return rule;
}

spin::StateEnsemble delta_mixture(int n, double lambda, double sigma_delta, int half_order)
{
    if (!(sigma_delta >= 0.0)) throw InvalidArgument("sigma_delta must be >= 0");
    if (sigma_delta == 0.0) {
        return spin::StateEnsemble::pure(josephson::ground_state({n, lambda, 0.0}).state);
    }
    const QuadratureRule rule = half_range_hermite_rule(half_order);
    std::vector<spin::WeightedState> members;
    members.reserve(2 * rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double delta = std::numbers::sqrt2 * sigma_delta * rule.nodes[i];
        auto gs = josephson::ground_state({n, lambda, delta});
        spin::SpinState mirror = gs.state.reflected();
        members.push_back({0.5 * rule.weights[i], std::move(gs.state)});
        members.push_back({0.5 * rule.weights[i], std::move(mirror)});
    }
    return spin::StateEnsemble(std::move(members));
}

spin::Moments reflect(const spin::Moments& m)
{
    spin::Moments r = m;
    r.jy = -m.jy;
    r.jz = -m.jz;
    return r;
}

double relative_change(const spin::Moments& coarse, const spin::Moments& fine)
{
    auto rel = [](double a, double b) {
        const double scale = std::abs(b);
        if (scale == 0.0) return std::abs(a);
        return std::abs(a - b) / scale;
    };
    return std::max({rel(coarse.jx, fine.jx), rel(coarse.jx2, fine.jx2),
                     rel(coarse.jy2, fine.jy2), rel(coarse.jz2, fine.jz2),
                     std::abs(coarse.jy - fine.jy), std::abs(coarse.jz - fine.jz)});
}

spin::Moments thermal_average(const std::vector<double>& energies,
                              const std::vector<spin::Moments>& per_state, double temperature)
{
    if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
    if (energies.empty() || energies.size() != per_state.size()) {
        throw InvalidArgument("thermal average: energies and moments must match in length");
    }
    if (temperature == 0.0) return per_state.front();
    const double e0 = energies.front();
    std::vector<double> w(energies.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(-(energies[k] - e0) / temperature);
    const double z = std::accumulate(w.begin(), w.end(), 0.0);
    spin::Moments acc;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] == 0.0) continue;
        accumulate(acc, w[k] / z, per_state[k]);
    }
    return acc;
}

NoisyMoments delta_average(double sigma_delta,
                           const std::function<spin::Moments(double)>& at_delta,
                           const MixtureOptions& options)
{
    if (!(sigma_delta >= 0.0)) throw InvalidArgument("sigma_delta must be >= 0");
    NoisyMoments out;
    if (sigma_delta == 0.0) {
        out.moments = at_delta(0.0);
        return out;
    }
    auto hermite = [&](int order) {
        return folded_average(half_range_hermite_rule(order), sigma_delta, at_delta);
    };
    int order = options.half_order;
    spin::Moments coarse = hermite(order);
    while (true) {
        const spin::Moments fine = hermite(2 * order);
        const double change = relative_change(coarse, fine);
        out.moments = fine;
        out.half_order = 2 * order;
        out.quadrature_change = change;
        out.converged = change <= options.tolerance;
        if (out.converged) return out;
        if (2 * order >= options.max_half_order) break;
        order *= 2;
        coarse = fine;
    }

    // Near lambda = -1 the ground state reorganizes over |delta| far below
    // sigma_delta, which global Hermite rules resolve only algebraically.
    auto graded = [&](int panel) {
        return folded_average(graded_half_range_rule(panel), sigma_delta, at_delta);
    };
    coarse = graded(8);
    for (int panel = 16; panel <= 64; panel *= 2) {
        const spin::Moments fine = graded(panel);
        const double change = relative_change(coarse, fine);
        if (change < out.quadrature_change) {
            out.moments = fine;
            out.quadrature_change = change;
            out.graded_order = panel;
            out.half_order = static_cast<int>(graded_half_range_rule(panel).nodes.size());
        }
        out.converged = out.quadrature_change <= options.tolerance;
        if (out.converged) break;
        coarse = fine;
    }
    return out;
}

NoisyMoments noisy_moments(int n, double lambda, const NoiseConfig& noise,
                           const MixtureOptions& options)
{
    noise.validate();
    const double temperature = noise.temperature;
    auto at_delta = [&](double delta) -> spin::Moments {
        const josephson::ModelParams params{n, lambda, delta};
        if (temperature == 0.0) return spin::compute_moments(josephson::ground_state(params).state);
        const auto spectrum = josephson::full_spectrum(params);
        std::vector<spin::Moments> per_state;
        per_state.reserve(spectrum.states.size());
        for (const auto& s : spectrum.states) per_state.push_back(spin::compute_moments(s));
        return thermal_average(spectrum.energies, per_state, temperature);
    };
    NoisyMoments out = delta_average(noise.sigma_delta, at_delta, options);
    out.extension = noise.sigma_delta > 0.0 && temperature > 0.0;
    return out;
}

double blur_visibility(double nu, double k_fringe, double sigma_detector)
{
    if (!(nu >= 0.0 && nu <= 1.0)) throw InvalidArgument("visibility must lie in [0, 1]");
    const double ks = k_fringe * sigma_detector;
    return nu * std::exp(-0.5 * ks * ks);
}

double witness_with_noise(double xi2_thermal, double nu_blurred)
{
    if (!(nu_blurred > 0.0)) throw UndefinedWitness("blurred visibility is zero");
    if (!(nu_blurred <= 1.0)) throw InvalidArgument("blurred visibility must lie in (0, 1]");
    const double nu2 = nu_blurred * nu_blurred;
    return xi2_thermal + (std::sqrt(1.0 - nu2) - 1.0) / (2.0 * nu2);
}

}  // namespace bellfringe::noise
