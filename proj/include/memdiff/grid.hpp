#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace memdiff {

// Uniform grid on (a, b) with n interior nodes; boundary values are zero.
class Grid {
public:
    Grid(double a, double b, std::size_t n);

    static Grid unit_pi(std::size_t n);

    double a() const { return a_; }
    double b() const { return b_; }
    std::size_t n() const { return n_; }
    double h() const { return h_; }
    double x(std::size_t j) const { return a_ + static_cast<double>(j + 1) * h_; }
    std::vector<double> nodes() const;

    bool operator==(const Grid& o) const { return a_ == o.a_ && b_ == o.b_ && n_ == o.n_; }
    bool operator!=(const Grid& o) const { return !(*this == o); }

private:
    double a_, b_;
    std::size_t n_;
    double h_;
};

// Interior node values; index j holds the value at x(j).
class Field {
public:
    // Single zero node on (0, 1); placeholder for default-constructed aggregates.
    Field() : Field(Grid(0.0, 1.0, 1)) {}
    explicit Field(const Grid& g);
    Field(const Grid& g, std::vector<double> values);

    static Field sample(const Grid& g, const std::function<double(double)>& f);
    static Field constant(const Grid& g, double c);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](std::size_t j) const { return values_[j]; }
    double& operator[](std::size_t j) { return values_[j]; }

    bool all_finite() const;
    double max() const;
    double min() const;
    double max_abs() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double c);

private:
    Grid grid_;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double c, Field a);
Field operator*(Field a, double c);
// Pointwise product.
Field hadamard(const Field& a, const Field& b);

void require_same_grid(const Field& a, const Field& b);

enum class GhostMode { Zero, Unit };

Field laplacian(const Field& f);

// Conservative discretization of div(u grad w) with zero ghost values.
// GhostMode::Unit extends u by one instead, so that u == 1 reproduces laplacian(w).
Field flux_divergence(const Field& u, const Field& w, GhostMode ghost = GhostMode::Zero);

// Interface fluxes F_{j+1/2}, j = 0..n (n+1 values, including both boundary faces).
std::vector<double> interface_fluxes(const Field& u, const Field& w, GhostMode ghost = GhostMode::Zero);

double inner_product(const Field& f, const Field& g);
double l2_norm(const Field& f);

// Squared L2 norm of the forward-difference gradient over all n+1 intervals.
double gradient_energy(const Field& f);

}  // namespace memdiff
