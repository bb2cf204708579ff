#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mfg/error.hpp"

namespace mfg {

/**
 * Tridiagonal matrix: row i holds lower[i]·x[i-1] + diag[i]·x[i] + upper[i]·x[i+1].
 * lower[0] and upper[n-1] are unused and kept at zero.
 */
struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    Tridiagonal() = default;
    explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

    std::size_t size() const noexcept { return diag.size(); }

    Tridiagonal transposed() const {
        const std::size_t n = size();
        Tridiagonal t(n);
        t.diag = diag;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            t.upper[i] = lower[i + 1];
            t.lower[i + 1] = upper[i];
        }
        return t;
    }

    void multiply(std::span<const double> x, std::span<double> y) const {
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i) {
            double acc = diag[i] * x[i];
            if (i > 0) acc += lower[i] * x[i - 1];
            if (i + 1 < n) acc += upper[i] * x[i + 1];
            y[i] = acc;
        }
    }

    std::vector<double> operator*(std::span<const double> x) const {
        std::vector<double> y(size());
        multiply(x, y);
        return y;
    }

    /// Returns s·I + f·this.
    Tridiagonal shifted(double s, double f) const {
        Tridiagonal m(size());
        for (std::size_t i = 0; i < size(); ++i) {
            m.lower[i] = f * lower[i];
            m.diag[i] = s + f * diag[i];
            m.upper[i] = f * upper[i];
        }
        return m;
    }
};

/**
 * Thomas algorithm. Needs no pivoting for the row- or column-diagonally
 * dominant M-matrices the HJB and KFE steps produce; for those a nonnegative
 * right-hand side yields a nonnegative solution without cancellation.
 */
inline void solve_tridiagonal(const Tridiagonal& m, std::span<const double> rhs, std::span<double> x) {
    const std::size_t n = m.size();
    detail::require(rhs.size() == n && x.size() == n, "solve_tridiagonal: size mismatch");
    std::vector<double> c(n);
    double pivot = m.diag[0];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw NumericalError("solve_tridiagonal: singular pivot at row 0");
    c[0] = n > 1 ? m.upper[0] / pivot : 0.0;
    x[0] = rhs[0] / pivot;
    for (std::size_t i = 1; i < n; ++i) {
        pivot = m.diag[i] - m.lower[i] * c[i - 1];
        if (pivot == 0.0 || !std::isfinite(pivot))
            throw NumericalError("solve_tridiagonal: singular pivot at row " + std::to_string(i));
        c[i] = i + 1 < n ? m.upper[i] / pivot : 0.0;
        x[i] = (rhs[i] - m.lower[i] * x[i - 1]) / pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
}

inline std::vector<double> solve_tridiagonal(const Tridiagonal& m, std::span<const double> rhs) {
    std::vector<double> x(m.size());
    solve_tridiagonal(m, rhs, x);
    return x;
}

}  // namespace mfg
