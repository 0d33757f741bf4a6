#include "bellfringe/fringe_mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "bellfringe/error.hpp"
#include "bellfringe/parallel.hpp"
#include "bellfringe/witnesses.hpp"

namespace bellfringe::fringe {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct StartResult {
    bool converged = false;
    double nu = 0.0;
    double phi = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

double sum_squares(std::span<const double> theta, std::span<const double> h, double nu, double phi)
{
    double s = 0.0;
    for (std::size_t b = 0; b < theta.size(); ++b) {
        const double r = h[b] - 1.0 - nu * std::cos(theta[b] + phi);
        s += r * r;
    }
    return s;
}

StartResult gauss_newton(std::span<const double> theta, std::span<const double> h, double nu,
                         double phi, const FitOptions& options)
{
    StartResult out;
    for (int it = 1; it <= options.max_iterations; ++it) {
        double a11 = 0.0, a12 = 0.0, a22 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t b = 0; b < theta.size(); ++b) {
            const double c = std::cos(theta[b] + phi);
            const double s = std::sin(theta[b] + phi);
            const double r = h[b] - 1.0 - nu * c;
            const double jn = c;         // d model / d nu
            const double jp = -nu * s;   // d model / d phi
            a11 += jn * jn;
            a12 += jn * jp;
            a22 += jp * jp;
            g1 += jn * r;
            g2 += jp * r;
        }
        double dn = 0.0;
        double dp = 0.0;
        if (options.fit_visibility) {
            const double damp = 1e-12 * (a11 + a22);
            a11 += damp;
            a22 += damp;
            const double det = a11 * a22 - a12 * a12;
            if (!(det > 0.0)) return out;
            dn = (a22 * g1 - a12 * g2) / det;
            dp = (a11 * g2 - a12 * g1) / det;
        } else {
            if (!(a22 > 0.0)) return out;
            dp = g2 / a22;
        }
        nu += dn;
        phi += dp;
        if (std::abs(dn) + std::abs(dp) <= 1e-12) {
            out.converged = true;
            out.iterations = it;
            break;
        }
    }
    if (!out.converged) return out;
    if (nu < 0.0) {
        nu = -nu;
        phi += std::numbers::pi;
    }
    out.nu = nu;
    out.phi = wrap_phase(phi);
    out.residual = sum_squares(theta, h, nu, phi);
    return out;
}

}  // namespace

void FringeParams::validate() const
{
    if (!(nu >= 0.0 && nu <= 1.0)) throw InvalidArgument("visibility must lie in [0, 1]");
    if (!(k > 0.0)) throw InvalidArgument("fringe wavevector must be > 0");
    if (n_atoms < 1) throw InvalidArgument("n_atoms must be >= 1");
    if (n_periods < 1) throw InvalidArgument("n_periods must be >= 1");
    if (!std::isfinite(phi)) throw InvalidArgument("phase must be finite");
}

double FringeParams::window() const
{
    return n_periods * kTwoPi / k;
}

double density(double x, double nu, double phi, double k)
{
    return 1.0 + nu * std::cos(k * x + phi);
}

double wrap_phase(double phi)
{
    double w = std::remainder(phi, kTwoPi);  // [-pi, pi]
    if (w <= -std::numbers::pi) w += kTwoPi;
    return w;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

ShotSample sample_shot(const FringeParams& params, double shot_phase, std::uint64_t seed)
{
    params.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> position(0.0, params.window());
    std::uniform_real_distribution<double> height(0.0, 1.0 + params.nu);

    ShotSample out;
    out.positions.reserve(static_cast<std::size_t>(params.n_atoms));
    while (out.positions.size() < static_cast<std::size_t>(params.n_atoms)) {
        const double x = position(rng);
        const double u = height(rng);
        ++out.proposals;
        if (u < density(x, params.nu, shot_phase, params.k)) out.positions.push_back(x);
    }
    return out;
}

double draw_shot_phase(double phi, double xi2, int n_atoms, std::uint64_t seed)
{
    if (!(xi2 >= 0.0)) throw InvalidArgument("xi2 must be >= 0");
    if (n_atoms < 1) throw InvalidArgument("n_atoms must be >= 1");
    if (xi2 == 0.0) return phi;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> beta(0.0, std::sqrt(xi2 / n_atoms));
    return phi + beta(rng);
}

int bins_per_period(std::size_t n_atoms)
{
    return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_atoms))));
}

FitResult fit_histogram(std::span<const double> centers, std::span<const double> heights, double k,
                        const FitOptions& options)
{
    if (centers.size() != heights.size() || centers.empty()) {
        throw InvalidArgument("histogram centers and heights must be nonempty and match");
    }
    std::vector<double> theta(centers.size());
    for (std::size_t b = 0; b < centers.size(); ++b) theta[b] = k * centers[b];

    const double nu0 = options.fit_visibility ? 0.5 : options.fixed_visibility;
    StartResult best;
    int total_iterations = 0;
    for (int s = 0; s < options.starts; ++s) {
        const double phi0 = -std::numbers::pi + kTwoPi * s / options.starts;
        const StartResult r = gauss_newton(theta, heights, nu0, phi0, options);
        total_iterations += r.iterations;
        if (r.converged && (!best.converged || r.residual < best.residual)) best = r;
    }
    if (!best.converged) {
        throw ConvergenceError("fringe fit did not converge from any start", total_iterations);
    }
    return {best.phi, best.nu, best.residual, total_iterations};
}

FitResult fit_phase(std::span<const double> positions, double k, double window,
                    const FitOptions& options)
{
    if (positions.size() < 100) throw InvalidArgument("fringe fit needs at least 100 positions");
    if (!(k > 0.0) || !(window > 0.0)) throw InvalidArgument("k and window must be > 0");
    const double periods = std::round(window * k / kTwoPi);
    const int per_period = bins_per_period(positions.size());
    const auto nbins = static_cast<std::size_t>(std::max(1.0, periods) * per_period);
    const double width = window / static_cast<double>(nbins);

    std::vector<double> heights(nbins, 0.0);
    for (double x : positions) {
        auto b = static_cast<std::size_t>(x / width);
        if (b >= nbins) b = nbins - 1;
        heights[b] += 1.0;
    }
    const double scale = static_cast<double>(nbins) / static_cast<double>(positions.size());
    std::vector<double> centers(nbins);
    for (std::size_t b = 0; b < nbins; ++b) {
        heights[b] *= scale;
        centers[b] = (static_cast<double>(b) + 0.5) * width;
    }
    return fit_histogram(centers, heights, k, options);
}

ShotResult run_shot(const FringeParams& params, double xi2, std::uint64_t shot_seed,
                    const FitOptions& options)
{
    const double phase = draw_shot_phase(params.phi, xi2, params.n_atoms, derive_seed(shot_seed, 0));
    ShotSample sample = sample_shot(params, phase, derive_seed(shot_seed, 1));
    const FitResult fit = fit_phase(sample.positions, params.k, params.window(), options);
    return {std::move(sample.positions), fit.phi_est, fit.residual};
}

SensitivityResult verify_sensitivity(const FringeParams& params, double xi2, int n_shots,
                                     std::uint64_t seed, const FitOptions& options, int threads)
{
    params.validate();
    if (!(params.nu > 0.2 && params.nu < 0.98)) {
        throw InvalidArgument("sensitivity check requires visibility in (0.2, 0.98)");
    }
    if (n_shots < 1000) throw InvalidArgument("sensitivity check requires >= 1000 shots");
    if (!(xi2 >= 0.0)) throw InvalidArgument("xi2 must be >= 0");

    const auto count = static_cast<std::size_t>(n_shots);
    std::vector<double> errors(count, std::numeric_limits<double>::quiet_NaN());
    parallel_for(count, threads, [&](std::size_t i) {
        try {
            const ShotResult shot = run_shot(params, xi2, derive_seed(seed, i), options);
            errors[i] = wrap_phase(shot.phi_est - params.phi);
        } catch (const ConvergenceError&) {
            // counted below
        }
    });

    SensitivityResult out;
    double sum = 0.0;
    for (double e : errors) {
        if (std::isnan(e)) {
            ++out.failures;
            continue;
        }
        ++out.shots;
        sum += e;
    }
    if (out.failures * 100 > n_shots) {
        throw ConvergenceError("more than 1% of fringe fits failed", out.failures);
    }
    out.mean_error = sum / out.shots;
    double ss = 0.0;
    for (double e : errors) {
        if (!std::isnan(e)) ss += (e - out.mean_error) * (e - out.mean_error);
    }
    out.empirical_variance = ss / (out.shots - 1);
    out.standard_error = std::sqrt(out.empirical_variance / out.shots);
    out.predicted_variance = witness::sensitivity(xi2, params.nu, params.n_atoms);

    // i.i.d. atoms fitted by unweighted least squares behave like the first
    // Fourier-moment estimator: Var = 2 / (N nu^2 s^2), s the bin-averaging
    // attenuation sin(pi/b)/(pi/b).
    const double half_bin = std::numbers::pi / bins_per_period(static_cast<std::size_t>(params.n_atoms));
    const double attenuation = std::sin(half_bin) / half_bin;
    out.independent_atom_variance =
        (xi2 + 2.0 / (params.nu * params.nu * attenuation * attenuation)) / params.n_atoms;
    return out;
}

}  // namespace bellfringe::fringe
