#pragma once

// Real symmetric tridiagonal matrices and their eigensolvers.
//
// Two routes are provided: a full-spectrum implicit QL iteration with
// eigenvector accumulation, and a lowest-eigenpair path (Sturm bisection
// followed by inverse iteration). Both are O(n) per sweep on the matrix
// itself; the QL eigenvector update is O(n^2) per sweep.

#include <cstddef>
#include <span>
#include <vector>

namespace bellfringe::linalg {

struct SymTridiag {
    std::vector<double> diag;     // length n
    std::vector<double> offdiag;  // length n-1, offdiag[i] couples i and i+1

    std::size_t size() const { return diag.size(); }

    /// Infinity norm (maximum absolute row sum).
    double max_row_sum() const;

    /// y = A x
    void apply(std::span<const double> x, std::span<double> y) const;

    /// Sum of the diagonal.
    double trace() const;
};

struct Eigensystem {
    std::vector<double> values;                // ascending
    std::vector<std::vector<double>> vectors;  // vectors[k] belongs to values[k]
    int sweeps = 0;                            // total QL sweeps performed
};

/// Full spectrum by implicit-shift QL. Throws ConvergenceError if any
/// eigenvalue needs more than `max_sweeps_per_value` sweeps.
Eigensystem eigensystem(const SymTridiag& matrix, int max_sweeps_per_value = 60);

/// Number of eigenvalues strictly below x (Sturm sequence count).
std::size_t count_below(const SymTridiag& matrix, double x);

/// Smallest eigenvalue by bisection on the Sturm count.
double lowest_eigenvalue(const SymTridiag& matrix);

struct Eigenpair {
    double value = 0.0;
    std::vector<double> vector;
    int iterations = 0;
};

/// Lowest eigenpair by bisection + shifted inverse iteration. The returned
/// value is the Rayleigh quotient of the converged vector.
Eigenpair lowest_eigenpair(const SymTridiag& matrix, int max_iterations = 100);

/// ||A v - lambda v||_2
double residual_norm(const SymTridiag& matrix, double value, std::span<const double> vec);

}  // namespace bellfringe::linalg
