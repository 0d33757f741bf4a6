#pragma once

// Noise channels acting on the double-well source and the detector:
//   - shot-to-shot Gaussian fluctuations of the energy mismatch delta,
//   - thermal occupation of excited states,
//   - finite spatial resolution of the atom detector (visibility blur).

#include <functional>
#include <vector>

#include "bellfringe/josephson.hpp"
#include "bellfringe/spin_core.hpp"

namespace bellfringe::noise {

struct NoiseConfig {
    double sigma_delta = 0.0;     // std. deviation of delta
    double temperature = 0.0;     // k_B T / E_J
    double sigma_detector = 0.0;  // Gaussian blur width (units of 1/k)
    double k_fringe = 1.0;        // fringe wavevector

    void validate() const;
};

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;  // positive, summing to 1
};

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line, weights
/// normalized to unit sum.
QuadratureRule gauss_hermite_rule(int order);

/// Gauss rule for the weight exp(-x^2) on [0, inf), weights normalized to
/// unit sum.
QuadratureRule half_range_hermite_rule(int order);

/// Half-range rule mirrored onto the real line: nodes +-x_i with weights
/// w_i / 2 (2 * half_order nodes, symmetric about 0).
QuadratureRule folded_hermite_rule(int half_order);

/// Gauss-Legendre rule on [a, b] (unnormalized weights).
QuadratureRule gauss_legendre_rule(int order, double a, double b);

/// Normalized rule for the weight exp(-x^2) on [0, inf) built from
/// Gauss-Legendre panels of `panel_order` nodes on geometrically graded
/// intervals [0, 1e-7], [1e-7, 2e-7], ... up to x = 6.5. Resolves integrands
/// with structure on any scale down to 1e-7.
QuadratureRule graded_half_range_rule(int panel_order);

struct MixtureOptions {
    int half_order = 20;          // ground-state solves per rule
    double tolerance = 1e-6;      // node-doubling relative change
    int max_half_order = 160;
};

/// Ensemble of ground states at the folded-rule nodes delta_i =
/// sqrt(2) sigma x_i. The -delta member is the m -> -m reflection of the
/// +delta ground state. sigma_delta == 0 yields the delta = 0 ground state.
spin::StateEnsemble delta_mixture(int n, double lambda, double sigma_delta, int half_order = 20);

/// Moments reflected m -> -m (rotation by pi about x).
spin::Moments reflect(const spin::Moments& m);

/// Largest relative change across jx, jx2, jy2, jz2 (jy, jz absolute).
double relative_change(const spin::Moments& coarse, const spin::Moments& fine);

struct NoisyMoments {
    spin::Moments moments;
    int half_order = 0;             // 0 when no delta averaging took place
    int graded_order = 0;           // panel order when the graded rule was needed
    double quadrature_change = 0.0; // node-doubling change of the accepted rule
    bool converged = true;
    bool extension = false;         // delta fluctuations combined with T > 0
};

/// Gibbs average of per-eigenstate moments.
spin::Moments thermal_average(const std::vector<double>& energies,
                              const std::vector<spin::Moments>& per_state, double temperature);

/// Average of `at_delta` over the delta distribution with node doubling
/// until the relative change drops below options.tolerance. If the
/// half-range Hermite rule has not converged at max_half_order, the graded
/// rule takes over (panel orders 8, 16, 32, 64).
NoisyMoments delta_average(double sigma_delta,
                           const std::function<spin::Moments(double)>& at_delta,
                           const MixtureOptions& options = {});

/// Source moments under delta fluctuations and temperature (detector blur
/// does not touch the source).
NoisyMoments noisy_moments(int n, double lambda, const NoiseConfig& noise,
                           const MixtureOptions& options = {});

/// nu * exp(-k^2 sigma^2 / 2)
double blur_visibility(double nu, double k_fringe, double sigma_detector);

/// B(T, sigma) = xi^2(T) + (sqrt(1 - nu~^2) - 1) / (2 nu~^2)
double witness_with_noise(double xi2_thermal, double nu_blurred);

}  // namespace bellfringe::noise
