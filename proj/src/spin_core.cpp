#include "bellfringe/spin_core.hpp"

#include <cmath>
#include <string>

#include "bellfringe/error.hpp"

namespace bellfringe::spin {

DickeBasis::DickeBasis(int particle_count) : n_(particle_count)
{
    if (particle_count < 1) {
        throw InvalidArgument("particle count must be >= 1, got " + std::to_string(particle_count));
    }
}

std::vector<double> DickeBasis::m_values() const
{
    std::vector<double> out(dimension());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = m(i);
    return out;
}

std::size_t DickeBasis::index_of(double m) const
{
    const double shifted = m + j();
    const double rounded = std::round(shifted);
    if (std::abs(shifted - rounded) > 1e-9 || rounded < 0.0 || rounded > n_) {
        throw InvalidArgument("m = " + std::to_string(m) + " is not in the Dicke ladder for N = "
                              + std::to_string(n_));
    }
    return static_cast<std::size_t>(rounded);
}

DickeBasis build_basis(int particle_count)
{
    return DickeBasis(particle_count);
}

double ladder_coefficient(const DickeBasis& basis, double m)
{
    const std::size_t i = basis.index_of(m);
    if (i + 1 >= basis.dimension()) {
        throw InvalidArgument("ladder coefficient: m + 1 is outside the ladder");
    }
    const double j = basis.j();
    const double mm = basis.m(i);
    return 0.5 * std::sqrt(j * (j + 1.0) - mm * (mm + 1.0));
}

std::vector<double> ladder_coefficients(const DickeBasis& basis)
{
    const double j = basis.j();
    std::vector<double> c(basis.dimension() - 1);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double m = basis.m(i);
        c[i] = 0.5 * std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
    return c;
}

SpinState::SpinState(DickeBasis basis, std::vector<double> coeffs, double norm_tolerance)
    : basis_(basis), coeffs_(std::move(coeffs))
{
    if (coeffs_.size() != basis_.dimension()) {
        throw InvalidArgument("state has " + std::to_string(coeffs_.size())
                              + " amplitudes, basis dimension is "
                              + std::to_string(basis_.dimension()));
    }
    double norm = 0.0;
    for (double c : coeffs_) norm += c * c;
    if (!(std::abs(norm - 1.0) <= norm_tolerance)) {
        throw InvalidArgument("state is not normalized: |psi|^2 = " + std::to_string(norm));
    }
}

SpinState SpinState::reflected() const
{
    return SpinState(basis_, std::vector<double>(coeffs_.rbegin(), coeffs_.rend()));
}

SpinState dicke_state(const DickeBasis& basis, double m)
{
    std::vector<double> c(basis.dimension(), 0.0);
    c[basis.index_of(m)] = 1.0;
    return SpinState(basis, std::move(c));
}

double casimir_defect(const Moments& m, const DickeBasis& basis)
{
    const double j = basis.j();
    return m.jx2 + m.jy2 + m.jz2 - j * (j + 1.0);
}

Moments compute_moments(const SpinState& state)
{
    const DickeBasis& basis = state.basis();
    const auto psi = state.coeffs();
    const std::size_t n = psi.size();
    const double j = basis.j();
    const auto c = ladder_coefficients(basis);

    Moments out;
    // Pair m with -m so that reflecting the state negates <Jz> exactly.
    for (std::size_t lo = 0, hi = n - 1; lo < hi; ++lo, --hi) {
        const double m = basis.m(hi);
        const double a = psi[lo] * psi[lo];
        const double b = psi[hi] * psi[hi];
        out.jz += m * (b - a);
        out.jz2 += m * m * (a + b);
    }

    double hop = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) hop += c[i] * psi[i] * psi[i + 1];
    out.jx = 2.0 * hop;

    // <J+^2 + J-^2>/4 = 2 sum_m c_m c_{m+1} psi_m psi_{m+2}
    double two_step = 0.0;
    for (std::size_t i = 0; i + 2 < n; ++i) two_step += c[i] * c[i + 1] * psi[i] * psi[i + 2];

    const double transverse = 0.5 * (j * (j + 1.0) - out.jz2);
    out.jx2 = transverse + 2.0 * two_step;
    out.jy2 = transverse - 2.0 * two_step;
    out.jy = 0.0;
    return out;
}

StateEnsemble::StateEnsemble(std::vector<WeightedState> members) : members_(std::move(members))
{
    if (members_.empty()) throw InvalidArgument("ensemble must contain at least one state");
    double total = 0.0;
    const DickeBasis& basis = members_.front().state.basis();
    for (const auto& m : members_) {
        if (!(m.weight >= 0.0)) throw InvalidArgument("ensemble weights must be nonnegative");
        if (!(m.state.basis() == basis)) throw InvalidArgument("ensemble members differ in basis");
        total += m.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw InvalidArgument("ensemble weights sum to " + std::to_string(total) + ", expected 1");
    }
}

StateEnsemble StateEnsemble::pure(SpinState state)
{
    std::vector<WeightedState> one;
    one.push_back({1.0, std::move(state)});
    return StateEnsemble(std::move(one));
}

Moments ensemble_moments(const StateEnsemble& ensemble)
{
    Moments acc;
    for (const auto& [w, state] : ensemble.members()) {
        if (w == 0.0) continue;
        const Moments m = compute_moments(state);
        acc.jx += w * m.jx;
        acc.jy += w * m.jy;
        acc.jz += w * m.jz;
        acc.jx2 += w * m.jx2;
        acc.jy2 += w * m.jy2;
        acc.jz2 += w * m.jz2;
    }
    return acc;
}

Moments rotate_pi2_about_x(const Moments& m)
{
    Moments r = m;
    r.jy = -m.jz;
    r.jz = m.jy;
    r.jy2 = m.jz2;
    r.jz2 = m.jy2;
    return r;
}

}  // namespace bellfringe::spin
