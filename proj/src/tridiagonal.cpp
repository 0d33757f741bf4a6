#include "bellfringe/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bellfringe/error.hpp"

namespace bellfringe::linalg {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_shape(const SymTridiag& matrix)
{
    if (matrix.diag.empty()) {
        throw InvalidArgument("tridiagonal matrix must have at least one row");
    }
    if (matrix.offdiag.size() + 1 != matrix.diag.size()) {
        throw InvalidArgument("tridiagonal matrix: offdiag length must be n-1");
    }
}

// Gershgorin interval containing the whole spectrum.
std::pair<double, double> gershgorin(const SymTridiag& m)
{
    const std::size_t n = m.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(m.offdiag[i - 1]);
        if (i + 1 < n) r += std::abs(m.offdiag[i]);
        lo = std::min(lo, m.diag[i] - r);
        hi = std::max(hi, m.diag[i] + r);
    }
    return {lo, hi};
}

double norm2(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

double SymTridiag::max_row_sum() const
{
    const std::size_t n = size();
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = std::abs(diag[i]);
        if (i > 0) r += std::abs(offdiag[i - 1]);
        if (i + 1 < n) r += std::abs(offdiag[i]);
        best = std::max(best, r);
    }
    return best;
}

void SymTridiag::apply(std::span<const double> x, std::span<double> y) const
{
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = diag[i] * x[i];
        if (i > 0) acc += offdiag[i - 1] * x[i - 1];
        if (i + 1 < n) acc += offdiag[i] * x[i + 1];
        y[i] = acc;
    }
}

double SymTridiag::trace() const
{
    return std::accumulate(diag.begin(), diag.end(), 0.0);
}

Eigensystem eigensystem(const SymTridiag& matrix, int max_sweeps_per_value)
{
    require_shape(matrix);
    const std::size_t n = matrix.size();

    std::vector<double> d = matrix.diag;
    std::vector<double> e(n, 0.0);
    std::copy(matrix.offdiag.begin(), matrix.offdiag.end(), e.begin());

    // z[k] is the k-th eigenvector (row storage keeps the rotation loop
    // contiguous).
    std::vector<std::vector<double>> z(n, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < n; ++k) z[k][k] = 1.0;

    int total_sweeps = 0;
    for (std::size_t l = 0; l < n; ++l) {
        int sweeps = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= kEps * dd) break;
            }
            if (m == l) break;
            if (sweeps++ == max_sweeps_per_value) {
                throw ConvergenceError("tridiagonal QL: eigenvalue " + std::to_string(l)
                                           + " did not converge",
                                       total_sweeps + sweeps);
            }
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0;
            double c = 1.0;
            double p = 0.0;
            bool underflow = false;
            for (std::size_t i = m; i-- > l;) {
                double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                auto& zi = z[i];
                auto& zi1 = z[i + 1];
                for (std::size_t k = 0; k < n; ++k) {
                    f = zi1[k];
                    zi1[k] = s * zi[k] + c * f;
                    zi[k] = c * zi[k] - s * f;
                }
            }
            if (underflow) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (true);
        total_sweeps += sweeps;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

    Eigensystem out;
    out.values.reserve(n);
    out.vectors.reserve(n);
    for (std::size_t k : order) {
        out.values.push_back(d[k]);
        out.vectors.push_back(std::move(z[k]));
    }
    out.sweeps = total_sweeps;
    return out;
}

std::size_t count_below(const SymTridiag& matrix, double x)
{
    require_shape(matrix);
    const std::size_t n = matrix.size();
    const double tiny = std::numeric_limits<double>::min();
    std::size_t count = 0;
    double q = matrix.diag[0] - x;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        const double e = matrix.offdiag[i - 1];
        q = matrix.diag[i] - x - e * e / q;
        if (q == 0.0) q = -tiny;
        if (q < 0.0) ++count;
    }
    return count;
}

double lowest_eigenvalue(const SymTridiag& matrix)
{
    require_shape(matrix);
    auto [lo, hi] = gershgorin(matrix);
    // Invariant: count_below(lo) == 0, count_below(hi) >= 1.
    hi += kEps * std::max(1.0, std::abs(hi));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (count_below(matrix, mid) >= 1) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo <= 2.0 * kEps * std::max(std::abs(lo), std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

Eigenpair lowest_eigenpair(const SymTridiag& matrix, int max_iterations)
{
    require_shape(matrix);
    const std::size_t n = matrix.size();
    if (n == 1) return {matrix.diag[0], {1.0}, 0};

    const double scale = std::max(matrix.max_row_sum(), std::numeric_limits<double>::min());
    const double estimate = lowest_eigenvalue(matrix);
    const double shift = estimate - 1e-9 * scale;

    // LDL^T factorization of (A - shift I); positive definite since
    // shift lies below the spectrum.
    std::vector<double> piv(n);
    std::vector<double> lower(n - 1);
    piv[0] = matrix.diag[0] - shift;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(piv[i] > 0.0)) {
            throw ConvergenceError("inverse iteration: shifted matrix not positive definite", 0);
        }
        lower[i] = matrix.offdiag[i] / piv[i];
        piv[i + 1] = matrix.diag[i + 1] - shift - lower[i] * matrix.offdiag[i];
    }
    if (!(piv[n - 1] > 0.0)) {
        throw ConvergenceError("inverse iteration: shifted matrix not positive definite", 0);
    }

    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * std::sin(static_cast<double>(i + 1));
    double nv = norm2(v);
    for (double& x : v) x /= nv;

    std::vector<double> w(n);
    std::vector<double> av(n);
    for (int it = 1; it <= max_iterations; ++it) {
        // Solve L D L^T w = v.
        w[0] = v[0];
        for (std::size_t i = 1; i < n; ++i) w[i] = v[i] - lower[i - 1] * w[i - 1];
        for (std::size_t i = 0; i < n; ++i) w[i] /= piv[i];
        for (std::size_t i = n - 1; i-- > 0;) w[i] -= lower[i] * w[i + 1];

        nv = norm2(w);
        double change = 0.0;
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += w[i] * v[i];
        const double sgn = dot < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double next = sgn * w[i] / nv;
            change = std::max(change, std::abs(next - v[i]));
            v[i] = next;
        }

        matrix.apply(v, av);
        double rq = 0.0;
        for (std::size_t i = 0; i < n; ++i) rq += v[i] * av[i];
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) res += (av[i] - rq * v[i]) * (av[i] - rq * v[i]);
        res = std::sqrt(res);

        if (change <= 1e-14 || res <= 1e-14 * scale) {
            return {rq, std::move(v), it};
        }
    }
    throw ConvergenceError("inverse iteration did not converge", max_iterations);
}

double residual_norm(const SymTridiag& matrix, double value, std::span<const double> vec)
{
    std::vector<double> av(vec.size());
    matrix.apply(vec, av);
    double s = 0.0;
    for (std::size_t i = 0; i < vec.size(); ++i) {
        const double r = av[i] - value * vec[i];
        s += r * r;
    }
    return std::sqrt(s);
}

}  // namespace bellfringe::linalg
