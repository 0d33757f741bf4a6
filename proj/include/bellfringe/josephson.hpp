#pragma once

// Two-mode Bose-Hubbard (bosonic Josephson junction) Hamiltonian
//
//     H = -Jx + (lambda / N) Jz^2 + delta Jz
//
// in units of the tunneling energy, represented in the Dicke basis as a real
// symmetric tridiagonal matrix.

#include <vector>

#include "bellfringe/spin_core.hpp"
#include "bellfringe/tridiagonal.hpp"

namespace bellfringe::josephson {

using linalg::SymTridiag;

struct ModelParams {
    int n = 1;            // particle count
    double lambda = 0.0;  // interaction over tunneling, U / E_J
    double delta = 0.0;   // energy mismatch between the wells

    /// Throws InvalidArgument unless n >= 1 and lambda, delta are finite.
    void validate() const;
};

SymTridiag build_hamiltonian(const ModelParams& params);

struct GroundState {
    double energy = 0.0;
    spin::SpinState state;
    int iterations = 0;
};

/// Lowest eigenpair. At delta == 0 the solve is restricted to the
/// reflection-even sector, which always contains the ground state.
GroundState ground_state(const ModelParams& params);

struct Spectrum {
    std::vector<double> energies;        // ascending
    std::vector<spin::SpinState> states; // states[k] has energy energies[k]
};

struct SpectrumOptions {
    int max_particles = 4000;
    double residual_tolerance = 1e-8;       // relative to ||H||_inf
    double orthonormality_tolerance = 1e-8;
};

/// All N+1 eigenpairs, residual- and orthonormality-checked. At delta == 0
/// the reflection-even and -odd sectors are diagonalized separately, so every
/// eigenvector has definite parity even inside quasi-degenerate doublets.
Spectrum full_spectrum(const ModelParams& params, const SpectrumOptions& options = {});

/// Gibbs ensemble at temperature T = k_B T / E_J. T == 0 returns the
/// ground state alone.
spin::StateEnsemble thermal_ensemble(const ModelParams& params, double temperature);

/// Gibbs weights over a precomputed spectrum.
spin::StateEnsemble thermal_ensemble(const Spectrum& spectrum, double temperature);

/// Flip the global sign so the largest-magnitude amplitude (first on ties)
/// is positive.
void fix_sign(std::vector<double>& amplitudes);

}  // namespace bellfringe::josephson
