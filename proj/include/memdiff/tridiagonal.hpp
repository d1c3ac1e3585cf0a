#pragma once

#include <cstddef>
#include <vector>

namespace memdiff {

// Tridiagonal matrix: sub[i] couples rows i+1 and i, sup[i] couples rows i and i+1.
struct Tridiagonal {
    std::vector<double> sub, diag, sup;

    std::size_t size() const { return diag.size(); }
    std::vector<double> apply(const std::vector<double>& x) const;
};

// LU factorization without pivoting (Thomas algorithm); factor once, solve many.
class TridiagonalLU {
public:
    explicit TridiagonalLU(const Tridiagonal& t);
    std::vector<double> solve(const std::vector<double>& rhs) const;
    void solve_in_place(std::vector<double>& x) const;

private:
    std::vector<double> lower_, diag_, sup_;
};

// Number of eigenvalues of a symmetric tridiagonal matrix strictly below x (Sturm count).
std::size_t sturm_count(const std::vector<double>& diag, const std::vector<double>& off, double x);

// k-th smallest eigenvalue (k = 0 is the smallest) by bisection on the Sturm count.
double symmetric_tridiagonal_eigenvalue(const std::vector<double>& diag, const std::vector<double>& off,
                                        std::size_t k, double tol = 1e-13);

}  // namespace memdiff
