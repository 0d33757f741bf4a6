#pragma once

// Large-N semiclassical predictions for the double-well ground state and
// its thermal states, and the B = 0 boundaries they imply.

#include <string_view>

namespace bellfringe::analytics {

/// Lower end of the attractive phase-squeezing interval, -(1 + sqrt 5)/2.
inline constexpr double kSqueezingLowerBound = -1.6180339887498948482;

/// Half-width of the window around lambda = -1 where the semiclassical
/// expressions are not trusted.
inline constexpr double kBreakdownHalfWidth = 0.02;

enum class Regime { attractive_para, attractive_ferro, repulsive };

std::string_view to_string(Regime r);

/// Regime of the delta = 0 ground state (lambda == 0 counts as
/// attractive_para; both expressions agree there).
Regime regime_of(double lambda);

struct SemiclassicalPrediction {
    Regime regime = Regime::repulsive;
    double xi2 = 0.0;
    double nu = 1.0;
    double a_param = 0.0;
    double b_param = 0.0;
};

/// Throws InvalidArgument outside (-(1+sqrt5)/2, inf) or within
/// kBreakdownHalfWidth of lambda = -1.
SemiclassicalPrediction semiclassical_ab(double lambda);

/// Thermal phase squeezing; temperature in units of E_J. Throws
/// InvalidArgument at lambda = -1 or for negative temperature.
double thermal_xi2(double lambda, double temperature);

struct Thresholds {
    double paramagnetic;   // -3/4
    double ferromagnetic;  // -3/(2 sqrt 2)
    double repulsive;      // 3
};

constexpr Thresholds bell_thresholds()
{
    return {-0.75, -1.0606601717798212866, 3.0};
}

/// Temperature at which B(T, 0) = 0, using the thermal squeezing formula
/// with nu = 1. Throws InvalidArgument if B(0, 0) >= 0 (no boundary), except
/// that an exactly vanishing B(0, 0) returns 0.
double analytic_boundary_t(double lambda);

/// Detector blur sigma at which B(0, sigma) = 0 with the semiclassical
/// zero-temperature xi^2 and nu. Throws InvalidArgument when B(0, 0) >= 0
/// or B stays negative for every sigma.
double analytic_boundary_sigma(double lambda, double k_fringe);

}  // namespace bellfringe::analytics
