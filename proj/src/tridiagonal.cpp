#include "memdiff/tridiagonal.hpp"

#include "memdiff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace memdiff {

std::vector<double> Tridiagonal::apply(const std::vector<double>& x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = diag[i] * x[i];
        if (i > 0) s += sub[i - 1] * x[i - 1];
        if (i + 1 < n) s += sup[i] * x[i + 1];
        y[i] = s;
    }
    return y;
}

TridiagonalLU::TridiagonalLU(const Tridiagonal& t) : lower_(t.sub.size()), diag_(t.diag), sup_(t.sup) {
    const std::size_t n = t.size();
    if (n == 0 || t.sub.size() + 1 != n || t.sup.size() + 1 != n)
        throw InvalidInput("tridiagonal: inconsistent band lengths");
    for (std::size_t i = 1; i < n; ++i) {
        if (diag_[i - 1] == 0.0 || !std::isfinite(diag_[i - 1]))
            throw NumericalFailure("tridiagonal: zero pivot");
        lower_[i - 1] = t.sub[i - 1] / diag_[i - 1];
        diag_[i] -= lower_[i - 1] * sup_[i - 1];
    }
    if (diag_[n - 1] == 0.0 || !std::isfinite(diag_[n - 1])) throw NumericalFailure("tridiagonal: zero pivot");
}

void TridiagonalLU::solve_in_place(std::vector<double>& x) const {
    const std::size_t n = diag_.size();
    for (std::size_t i = 1; i < n; ++i) x[i] -= lower_[i - 1] * x[i - 1];
    x[n - 1] /= diag_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (x[i] - sup_[i] * x[i + 1]) / diag_[i];
}

std::vector<double> TridiagonalLU::solve(const std::vector<double>& rhs) const {
    std::vector<double> x = rhs;
    solve_in_place(x);
    return x;
}

std::size_t sturm_count(const std::vector<double>& diag, const std::vector<double>& off, double x) {
    std::size_t count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        const double b2 = i > 0 ? off[i - 1] * off[i - 1] : 0.0;
        q = diag[i] - x - (i > 0 ? b2 / q : 0.0);
        if (q == 0.0) q = -std::numeric_limits<double>::epsilon() * (std::abs(x) + 1.0);
        if (q < 0.0) ++count;
    }
    return count;
}

double symmetric_tridiagonal_eigenvalue(const std::vector<double>& diag, const std::vector<double>& off,
                                        std::size_t k, double tol) {
    const std::size_t n = diag.size();
    if (k >= n) throw InvalidInput("tridiagonal eigenvalue index out of range");
    // Gershgorin bounds.
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(off[i]) : 0.0);
        lo = std::min(lo, diag[i] - r);
        hi = std::max(hi, diag[i] + r);
    }
    const double scale = std::max(std::abs(lo), std::abs(hi));
    while (hi - lo > tol * std::max(1.0, std::min(scale, std::abs(0.5 * (lo + hi))))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (sturm_count(diag, off, mid) > k) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace memdiff
