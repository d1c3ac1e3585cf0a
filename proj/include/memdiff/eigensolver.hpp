#pragma once

#include "memdiff/grid.hpp"

#include <optional>
#include <string>

namespace memdiff {

class ResourceProfile {
public:
    enum class Kind { Cos1, Sin1, Constant, Tabulated };

    static ResourceProfile cos1();
    static ResourceProfile sin1();
    static ResourceProfile constant(double c);
    // Samples on one specific grid; evaluating on any other grid throws GridMismatch.
    static ResourceProfile tabulated(Field samples);
    // "cos1", "sin1", "const:<c>".
    static ResourceProfile parse(const std::string& name);

    Kind kind() const { return kind_; }
    std::string name() const;
    Field samples(const Grid& g) const;

private:
    ResourceProfile(Kind k, double c) : kind_(k), c_(c) {}
    Kind kind_;
    double c_ = 0.0;
    std::optional<Field> table_;
};

struct EigenPair {
    double lambda_star = 0.0;
    Field phi;             // positive, h * sum(phi^2) = 1
    double residual = 0.0; // ||lap(phi) + lambda r phi|| / ||phi||
    int iterations = 0;
    int deflations = 0;
};

struct EigenOptions {
    int max_iterations = 500;
    double eigenvalue_tol = 1e-12;
    double residual_tol = 1e-10;
    double shift = 0.0;
};

EigenPair principal_eigen(const ResourceProfile& r, const Grid& grid, const EigenOptions& opt = {});

// Second-smallest eigenvalue of -(lap + lambda diag(r)).
double second_eigenvalue_shifted(const ResourceProfile& r, double lambda, const Grid& grid);

// Discrete Rayleigh quotient: forward-difference gradient energy over <r f, f>.
double rayleigh_quotient(const Field& f, const Field& r);

struct ExtrapolatedEigenvalue {
    double coarse = 0.0;
    double fine = 0.0;
    double value = 0.0;
    std::size_t n_coarse = 0, n_fine = 0;
};

// Second-order Richardson extrapolation in h between two grids on (a, b).
ExtrapolatedEigenvalue extrapolated_principal_eigenvalue(const ResourceProfile& r, double a, double b,
                                                         std::size_t n_fine, std::size_t n_coarse);

}  // namespace memdiff
