#include "bellfringe/josephson.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bellfringe/error.hpp"

namespace bellfringe::josephson {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

// Reflection-symmetric block decomposition of a tridiagonal matrix that
// commutes with i -> n-1-i.
struct ParitySectors {
    SymTridiag even;
    SymTridiag odd;  // empty when n == 1
    std::size_t full_size = 0;
};

ParitySectors split_parity(const SymTridiag& h)
{
    const std::size_t n = h.size();
    ParitySectors out;
    out.full_size = n;
    if (n % 2 == 1) {
        const std::size_t c = n / 2;  // center index, m = 0
        out.even.diag.assign(h.diag.begin(), h.diag.begin() + static_cast<long>(c) + 1);
        out.even.offdiag.assign(h.offdiag.begin(), h.offdiag.begin() + static_cast<long>(c));
        if (c > 0) out.even.offdiag[c - 1] *= std::sqrt(2.0);
        out.odd.diag.assign(h.diag.begin(), h.diag.begin() + static_cast<long>(c));
        if (c > 0) {
            out.odd.offdiag.assign(h.offdiag.begin(), h.offdiag.begin() + static_cast<long>(c) - 1);
        }
    } else {
        const std::size_t half = n / 2;  // pairs (i, n-1-i), i < half
        const std::size_t h_last = half - 1;
        out.even.diag.assign(h.diag.begin(), h.diag.begin() + static_cast<long>(half));
        out.even.offdiag.assign(h.offdiag.begin(), h.offdiag.begin() + static_cast<long>(h_last));
        out.odd = out.even;
        out.even.diag[h_last] += h.offdiag[h_last];
        out.odd.diag[h_last] -= h.offdiag[h_last];
    }
    return out;
}

std::vector<double> expand_sector(std::span<const double> u, std::size_t n, bool even)
{
    std::vector<double> v(n, 0.0);
    const double sign = even ? 1.0 : -1.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const std::size_t mirror = n - 1 - i;
        if (mirror == i) {
            v[i] = u[i];
        } else {
            v[i] = u[i] * kInvSqrt2;
            v[mirror] = sign * u[i] * kInvSqrt2;
        }
    }
    return v;
}

void check_residual(const SymTridiag& h, double energy, std::span<const double> v,
                    double tolerance, std::size_t index)
{
    const double scale = h.max_row_sum();
    const double res = linalg::residual_norm(h, energy, v);
    if (!(res <= tolerance * scale)) {
        throw VerificationError("eigenpair " + std::to_string(index) + " residual "
                                + std::to_string(res) + " exceeds "
                                + std::to_string(tolerance) + " * ||H||");
    }
}

void check_orthonormal(const std::vector<std::vector<double>>& vectors, double tolerance)
{
    const std::size_t k = vectors.size();
    for (std::size_t a = 0; a < k; ++a) {
        const auto& va = vectors[a];
        for (std::size_t b = a; b < k; ++b) {
            const auto& vb = vectors[b];
            double dot = 0.0;
            for (std::size_t i = 0; i < va.size(); ++i) dot += va[i] * vb[i];
            const double target = a == b ? 1.0 : 0.0;
            if (!(std::abs(dot - target) <= tolerance)) {
                throw VerificationError("eigenvectors " + std::to_string(a) + ", "
                                        + std::to_string(b) + " violate orthonormality: "
                                        + std::to_string(dot));
            }
        }
    }
}

}  // namespace

void ModelParams::validate() const
{
    if (n < 1) throw InvalidArgument("particle count must be >= 1");
    if (!std::isfinite(lambda)) throw InvalidArgument("lambda must be finite");
    if (!std::isfinite(delta)) throw InvalidArgument("delta must be finite");
}

SymTridiag build_hamiltonian(const ModelParams& params)
{
    params.validate();
    const spin::DickeBasis basis(params.n);
    SymTridiag h;
    h.diag.resize(basis.dimension());
    const double g = params.lambda / params.n;
    for (std::size_t i = 0; i < h.diag.size(); ++i) {
        const double m = basis.m(i);
        h.diag[i] = g * m * m + params.delta * m;
    }
    h.offdiag = spin::ladder_coefficients(basis);
    for (double& e : h.offdiag) e = -e;
    return h;
}

void fix_sign(std::vector<double>& amplitudes)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < amplitudes.size(); ++i) {
        if (std::abs(amplitudes[i]) > std::abs(amplitudes[best])) best = i;
    }
    if (!amplitudes.empty() && amplitudes[best] < 0.0) {
        for (double& a : amplitudes) a = -a;
    }
}

GroundState ground_state(const ModelParams& params)
{
    const SymTridiag h = build_hamiltonian(params);
    const spin::DickeBasis basis(params.n);

    linalg::Eigenpair pair;
    std::vector<double> v;
    if (params.delta == 0.0) {
        const ParitySectors sectors = split_parity(h);
        pair = linalg::lowest_eigenpair(sectors.even);
        v = expand_sector(pair.vector, h.size(), true);
    } else {
        pair = linalg::lowest_eigenpair(h);
        v = std::move(pair.vector);
    }
    fix_sign(v);

    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;

    check_residual(h, pair.value, v, 1e-8, 0);
    return {pair.value, spin::SpinState(basis, std::move(v)), pair.iterations};
}

Spectrum full_spectrum(const ModelParams& params, const SpectrumOptions& options)
{
    params.validate();
    if (params.n > options.max_particles) {
        throw InvalidArgument("full spectrum requested for N = " + std::to_string(params.n)
                              + ", above the cap of " + std::to_string(options.max_particles));
    }
    const SymTridiag h = build_hamiltonian(params);
    const spin::DickeBasis basis(params.n);
    const std::size_t n = h.size();

    struct Pair {
        double energy;
        std::vector<double> vec;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n);

    if (params.delta == 0.0) {
        const ParitySectors sectors = split_parity(h);
        auto even = linalg::eigensystem(sectors.even);
        check_orthonormal(even.vectors, options.orthonormality_tolerance);
        for (std::size_t k = 0; k < even.values.size(); ++k) {
            pairs.push_back({even.values[k], expand_sector(even.vectors[k], n, true)});
        }
        if (!sectors.odd.diag.empty()) {
            auto odd = linalg::eigensystem(sectors.odd);
            check_orthonormal(odd.vectors, options.orthonormality_tolerance);
            for (std::size_t k = 0; k < odd.values.size(); ++k) {
                pairs.push_back({odd.values[k], expand_sector(odd.vectors[k], n, false)});
            }
        }
        // Even and odd sectors are exactly orthogonal; only norms can drift
        // through the 1/sqrt(2) expansion.
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            double nn = 0.0;
            for (double x : pairs[k].vec) nn += x * x;
            if (!(std::abs(nn - 1.0) <= options.orthonormality_tolerance)) {
                throw VerificationError("expanded eigenvector " + std::to_string(k)
                                        + " is not normalized");
            }
        }
        std::stable_sort(pairs.begin(), pairs.end(),
                         [](const Pair& a, const Pair& b) { return a.energy < b.energy; });
    } else {
        auto sys = linalg::eigensystem(h);
        check_orthonormal(sys.vectors, options.orthonormality_tolerance);
        for (std::size_t k = 0; k < n; ++k) {
            pairs.push_back({sys.values[k], std::move(sys.vectors[k])});
        }
    }

    Spectrum out;
    out.energies.reserve(n);
    out.states.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        fix_sign(pairs[k].vec);
        check_residual(h, pairs[k].energy, pairs[k].vec, options.residual_tolerance, k);
        out.energies.push_back(pairs[k].energy);
        out.states.emplace_back(basis, std::move(pairs[k].vec));
    }
    return out;
}

spin::StateEnsemble thermal_ensemble(const Spectrum& spectrum, double temperature)
{
    if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
    if (spectrum.energies.empty()) throw InvalidArgument("empty spectrum");
    if (temperature == 0.0) return spin::StateEnsemble::pure(spectrum.states.front());

    const double e0 = spectrum.energies.front();
    std::vector<double> w(spectrum.energies.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = std::exp(-(spectrum.energies[k] - e0) / temperature);
    }
    const double z = std::accumulate(w.begin(), w.end(), 0.0);

    std::vector<spin::WeightedState> members;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] == 0.0) continue;
        members.push_back({w[k] / z, spectrum.states[k]});
    }
    return spin::StateEnsemble(std::move(members));
}

spin::StateEnsemble thermal_ensemble(const ModelParams& params, double temperature)
{
    if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
    if (temperature == 0.0) return spin::StateEnsemble::pure(ground_state(params).state);
    return thermal_ensemble(full_spectrum(params), temperature);
}

}  // namespace bellfringe::josephson
