#pragma once

// Monte-Carlo bench for the interference experiment: atoms are drawn from
// the far-field density 1 + nu cos(k x + phi) along the fringe axis, the
// phase is recovered by a least-squares fit of the binned positions, and the
// shot-to-shot spread of the estimate is compared with the fit-sensitivity
// formula.

#include <cstdint>
#include <span>
#include <vector>

namespace bellfringe::fringe {

struct FringeParams {
    double nu = 1.0;     // visibility
    double phi = 0.0;    // true phase
    double k = 1.0;      // fringe wavevector
    int n_atoms = 1000;  // atoms per shot
    int n_periods = 8;   // window length in fringe periods

    void validate() const;
    double window() const;
};

double density(double x, double nu, double phi, double k);

/// Wrap into (-pi, pi].
double wrap_phase(double phi);

/// Seed for stream `index` derived from `master` (splitmix64 counter).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct ShotSample {
    std::vector<double> positions;
    std::uint64_t proposals = 0;  // rejection-sampling proposals drawn
};

/// n_atoms independent positions on [0, window) from the normalized fringe
/// density with phase `shot_phase`, by rejection against the flat envelope
/// 1 + nu. Deterministic in `seed`.
ShotSample sample_shot(const FringeParams& params, double shot_phase, std::uint64_t seed);

/// phi + beta with beta ~ Normal(0, xi2 / n_atoms).
double draw_shot_phase(double phi, double xi2, int n_atoms, std::uint64_t seed);

struct FitOptions {
    bool fit_visibility = true;    // otherwise nu is held at fixed_visibility
    double fixed_visibility = 1.0;
    int starts = 8;
    int max_iterations = 100;
};

struct FitResult {
    double phi_est = 0.0;   // in (-pi, pi]
    double nu_fit = 0.0;
    double residual = 0.0;  // sum of squared histogram residuals
    int iterations = 0;
};

/// Bins per fringe period used for n atoms: ceil(sqrt(n)).
int bins_per_period(std::size_t n_atoms);

/// Least-squares fit of 1 + nu cos(k x + phi) to histogram heights at bin
/// centers, Gauss-Newton from `starts` evenly spaced phases.
FitResult fit_histogram(std::span<const double> centers, std::span<const double> heights, double k,
                        const FitOptions& options = {});

/// Bins positions on [0, window) (ceil(sqrt(n)) bins per period,
/// normalized to mean 1) and fits the fringe. Requires >= 100 positions.
FitResult fit_phase(std::span<const double> positions, double k, double window,
                    const FitOptions& options = {});

struct ShotResult {
    std::vector<double> positions;
    double phi_est = 0.0;
    double fit_residual = 0.0;
};

/// One shot: draw the phase offset, sample positions, fit.
ShotResult run_shot(const FringeParams& params, double xi2, std::uint64_t shot_seed,
                    const FitOptions& options = {});

struct SensitivityResult {
    double empirical_variance = 0.0;
    double predicted_variance = 0.0;    // fit-sensitivity formula
    double independent_atom_variance = 0.0;  // xi2/N + binned-LS variance of i.i.d. atoms
    double mean_error = 0.0;            // mean of wrap(phi_est - phi)
    double standard_error = 0.0;        // of the mean
    int shots = 0;
    int failures = 0;
};

/// Runs n_shots shots and compares the spread of phi_est with the
/// prediction. Requires nu in (0.2, 0.98) and n_shots >= 1000; throws
/// ConvergenceError when more than 1% of fits fail.
SensitivityResult verify_sensitivity(const FringeParams& params, double xi2, int n_shots,
                                     std::uint64_t seed, const FitOptions& options = {},
                                     int threads = 1);

}  // namespace bellfringe::fringe
