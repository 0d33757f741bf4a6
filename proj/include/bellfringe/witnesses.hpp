#pragma once

// Fringe visibility, phase squeezing, fit sensitivity, the sensitivity
// parameter A = N Var(phi_est) - 1 and the Bell-correlation witness B built
// from first and second collective-spin moments.

#include "bellfringe/spin_core.hpp"

namespace bellfringe::witness {

/// nu = 2 |<Jx>| / N, clamped to [0, 1] against rounding.
double visibility(const spin::Moments& moments, int n);

/// xi^2 = N <Jy^2> / <Jx>^2. Throws UndefinedWitness when <Jx> == 0.
double phase_squeezing(const spin::Moments& moments, int n);

/// Var(phi_est) = (xi^2 + sqrt(1 - nu^2) / nu^2) / N.
double sensitivity(double xi2, double nu, int n);

/// A = xi^2 + (sqrt(1 - nu^2) - nu^2) / nu^2; negative means sub-shot-noise.
double param_a(double xi2, double nu);

/// B = xi^2 + (sqrt(1 - nu^2) - 1) / (2 nu^2); negative witnesses Bell
/// correlations.
double bell_witness(double xi2, double nu);

/// f(nu) = 1 - (sqrt(1 - nu^2) + 1) / (2 nu^2), so that B = A + f(nu).
double visibility_offset(double nu);

/// Expectation of the Bell operator at angle theta (extensive, O(N)):
/// 2N cos^2(t/2) - 4 <Jx> cos(t/2) + 8 sin^2(t/2) <Jy^2>.
double bell_theta(int n, double jx, double jy2, double theta);

struct OptimalAngle {
    double theta0 = 0.0;
    bool interior = false;
};

/// Stationary angle cos(theta0/2) = nu / (2 (1 - xi^2 nu^2)). Falls back to
/// the boundary theta0 = 0 (interior = false) when no such angle exists.
OptimalAngle optimal_theta(double nu, double xi2);

struct DirectMinimum {
    double theta = 0.0;
    double value = 0.0;
};

/// Numerical minimum of bell_theta over [0, pi]: 1024-point grid followed
/// by golden-section refinement.
DirectMinimum minimize_bell_direct(int n, const spin::Moments& moments);

struct WitnessReport {
    int n = 0;
    double nu = 0.0;
    double xi2 = 0.0;
    double var_phi = 0.0;
    double a_param = 0.0;
    double b_param = 0.0;
    double theta0 = 0.0;
    bool interior_minimum = false;
    bool rotated = false;
};

/// Report from (xi^2, nu) directly. Throws UndefinedWitness for nu == 0.
WitnessReport make_report(double xi2, double nu, int n, bool rotated = false);

/// Report from moments; applies the pi/2 rotation about x first when
/// `rotate` is set (number squeezing -> phase squeezing).
WitnessReport evaluate(const spin::Moments& moments, int n, bool rotate);

/// True when the repulsive-side pi/2 rotation applies to this interaction.
inline bool rotation_applies(double lambda) { return lambda > 0.0; }

/// |B - A - f(nu)| <= 1e-10
bool relation_check(const WitnessReport& report);

}  // namespace bellfringe::witness
