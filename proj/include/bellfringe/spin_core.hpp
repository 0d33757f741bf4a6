#pragma once

// Collective spin j = N/2 in the Dicke basis |j, m>, m = -j..j.
//
// Basis index i = 0..N labels m = -j + i. States carry real amplitudes;
// the Josephson Hamiltonian is real symmetric in this basis, so <Jy> = 0
// for every state handled here.

#include <span>
#include <vector>

namespace bellfringe::spin {

class DickeBasis {
public:
    /// Throws InvalidArgument for particle_count < 1.
    explicit DickeBasis(int particle_count);

    int particle_count() const { return n_; }
    double j() const { return 0.5 * n_; }
    std::size_t dimension() const { return static_cast<std::size_t>(n_) + 1; }

    /// m value at basis index i.
    double m(std::size_t i) const { return -j() + static_cast<double>(i); }
    std::vector<double> m_values() const;

    /// Basis index of m; throws InvalidArgument if m is not in the ladder.
    std::size_t index_of(double m) const;

    friend bool operator==(const DickeBasis&, const DickeBasis&) = default;

private:
    int n_;
};

DickeBasis build_basis(int particle_count);

/// Half the J+ matrix element between |m> and |m+1>:
/// c_m = sqrt(j(j+1) - m(m+1)) / 2, so that <m+1|Jx|m> = c_m.
double ladder_coefficient(const DickeBasis& basis, double m);

/// c_m for every adjacent pair, indexed by the lower basis index.
std::vector<double> ladder_coefficients(const DickeBasis& basis);

class SpinState {
public:
    /// Throws InvalidArgument if the amplitude count does not match the basis
    /// or the norm deviates from 1 by more than `norm_tolerance`.
    SpinState(DickeBasis basis, std::vector<double> coeffs, double norm_tolerance = 1e-9);

    const DickeBasis& basis() const { return basis_; }
    std::span<const double> coeffs() const { return coeffs_; }

    /// Amplitudes reflected m -> -m.
    SpinState reflected() const;

private:
    DickeBasis basis_;
    std::vector<double> coeffs_;
};

/// Fully polarized state |j, m>.
SpinState dicke_state(const DickeBasis& basis, double m);

struct Moments {
    double jx = 0.0;
    double jy = 0.0;
    double jz = 0.0;
    double jx2 = 0.0;
    double jy2 = 0.0;
    double jz2 = 0.0;

    friend bool operator==(const Moments&, const Moments&) = default;
};

/// jx2 + jy2 + jz2 - j(j+1); zero for any physical state.
double casimir_defect(const Moments& m, const DickeBasis& basis);

Moments compute_moments(const SpinState& state);

struct WeightedState {
    double weight = 0.0;
    SpinState state;
};

/// Weighted mixture of pure states over a common basis.
class StateEnsemble {
public:
    /// Throws InvalidArgument on an empty list, negative weights, a basis
    /// mismatch, or weights not summing to 1 within 1e-12.
    explicit StateEnsemble(std::vector<WeightedState> members);

    static StateEnsemble pure(SpinState state);

    const DickeBasis& basis() const { return members_.front().state.basis(); }
    const std::vector<WeightedState>& members() const { return members_; }
    std::size_t size() const { return members_.size(); }

private:
    std::vector<WeightedState> members_;
};

/// Moments are linear in the density matrix: weight-averaged pure moments.
Moments ensemble_moments(const StateEnsemble& ensemble);

/// Moments after exp(-i pi/2 Jx): (jy, jz) -> (-jz, jy), jy2 <-> jz2.
Moments rotate_pi2_about_x(const Moments& moments);

}  // namespace bellfringe::spin
