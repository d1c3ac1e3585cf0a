#include "memdiff/eigensolver.hpp"

#include "memdiff/errors.hpp"
#include "memdiff/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace memdiff {

ResourceProfile ResourceProfile::cos1() { return {Kind::Cos1, 0.0}; }
ResourceProfile ResourceProfile::sin1() { return {Kind::Sin1, 0.0}; }
ResourceProfile ResourceProfile::constant(double c) { return {Kind::Constant, c}; }

ResourceProfile ResourceProfile::tabulated(Field samples) {
    ResourceProfile p(Kind::Tabulated, 0.0);
    p.table_ = std::move(samples);
    return p;
}

ResourceProfile ResourceProfile::parse(const std::string& name) {
    if (name == "cos1") return cos1();
    if (name == "sin1") return sin1();
    if (name.rfind("const:", 0) == 0) {
        try {
            std::size_t used = 0;
            const double c = std::stod(name.substr(6), &used);
            if (used == name.size() - 6 && std::isfinite(c)) return constant(c);
        } catch (const std::exception&) {
        }
    }
    throw InvalidInput("unknown resource profile '" + name + "' (expected cos1, sin1 or const:<value>)");
}

std::string ResourceProfile::name() const {
    switch (kind_) {
        case Kind::Cos1: return "cos1";
        case Kind::Sin1: return "sin1";
        case Kind::Constant: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "const:%.17g", c_);
            return buf;
        }
        case Kind::Tabulated: return "tabulated";
    }
    return "?";
}

Field ResourceProfile::samples(const Grid& g) const {
    switch (kind_) {
        case Kind::Cos1: return Field::sample(g, [](double x) { return std::cos(x) + 1.0; });
        case Kind::Sin1: return Field::sample(g, [](double x) { return std::sin(x) + 1.0; });
        case Kind::Constant: return Field::constant(g, c_);
        case Kind::Tabulated:
            if (table_->grid() != g) throw GridMismatch("tabulated resource profile sampled on a different grid");
            return *table_;
    }
    return Field(g);
}

namespace {

Tridiagonal negated_laplacian(const Grid& g, double shift, const std::vector<double>& r) {
    const std::size_t n = g.n();
    const double ih2 = 1.0 / (g.h() * g.h());
    Tridiagonal t;
    t.diag.assign(n, 2.0 * ih2);
    for (std::size_t j = 0; j < n; ++j) t.diag[j] -= shift * r[j];
    t.sub.assign(n - 1, -ih2);
    t.sup.assign(n - 1, -ih2);
    return t;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void check_h0(const Field& r) {
    if (!(r.max() > 0.0)) throw InvalidInput("resource profile is nowhere positive on the grid (H0 violated)");
}

}  // namespace

EigenPair principal_eigen(const ResourceProfile& profile, const Grid& grid, const EigenOptions& opt) {
    const Field rf = profile.samples(grid);
    check_h0(rf);
    const std::size_t n = grid.n();
    const std::vector<double>& r = rf.values();
    const Tridiagonal L = negated_laplacian(grid, 0.0, r);
    // Shift-and-invert: iterate x <- (L - sigma R)^{-1} R x, which is self-adjoint in the L inner product.
    const TridiagonalLU solver(negated_laplacian(grid, opt.shift, r));

    auto apply_R = [&](const std::vector<double>& x) {
        std::vector<double> y(n);
        for (std::size_t j = 0; j < n; ++j) y[j] = r[j] * x[j];
        return y;
    };
    const double roundoff_floor = 16.0 * std::numeric_limits<double>::epsilon() * 4.0 / (grid.h() * grid.h());

    std::vector<std::vector<double>> rejected;  // L-normalized modes with <R x, x> < 0
    std::vector<std::vector<double>> rejected_L;
    int total_iters = 0;
    for (int attempt = 0; attempt <= 16; ++attempt) {
        std::vector<double> x(n, 1.0);
        auto deflate = [&](std::vector<double>& y) {
            for (std::size_t k = 0; k < rejected.size(); ++k) {
                const double c = dot(rejected_L[k], y);
                for (std::size_t j = 0; j < n; ++j) y[j] -= c * rejected[k][j];
            }
        };
        deflate(x);
        double lambda = std::numeric_limits<double>::quiet_NaN();
        double residual = std::numeric_limits<double>::infinity();
        bool converged = false;
        for (int it = 0; it < opt.max_iterations; ++it) {
            ++total_iters;
            std::vector<double> y = apply_R(x);
            solver.solve_in_place(y);
            deflate(y);
            const double ny = std::sqrt(dot(y, y));
            if (!(ny > 0.0) || !std::isfinite(ny)) throw NumericalFailure("eigensolver: iteration collapsed");
            for (double& v : y) v /= ny;
            const std::vector<double> Ly = L.apply(y);
            const std::vector<double> Ry = apply_R(y);
            const double yLy = dot(y, Ly), yRy = dot(y, Ry);
            const double next = yLy / yRy;
            double res2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) res2 += (Ly[j] - next * Ry[j]) * (Ly[j] - next * Ry[j]);
            residual = std::sqrt(res2);  // both norms carry the same factor h, so the ratio is unweighted
            const bool small_step = std::abs(next - lambda) < opt.eigenvalue_tol * std::max(1.0, std::abs(next));
            lambda = next;
            x = std::move(y);
            if (small_step && residual < std::max(opt.residual_tol, roundoff_floor)) {
                converged = true;
                break;
            }
        }
        if (!converged) throw NumericalFailure("eigensolver: no convergence within max_iterations");

        const double xRx = dot(x, apply_R(x));
        if (xRx > 0.0) {
            // Fix sign and normalize h * sum(phi^2) = 1.
            double sum = 0.0;
            for (double v : x) sum += v;
            if (sum < 0.0)
                for (double& v : x) v = -v;
            const double scale = 1.0 / std::sqrt(grid.h() * dot(x, x));
            for (double& v : x) v *= scale;
            EigenPair out{lambda, Field(grid, x), residual, total_iters, attempt};
            if (out.phi.min() <= 0.0) throw NumericalFailure("eigensolver: converged mode is not positive");
            return out;
        }
        // Mode with negative weighted mass: deflate it out and restart.
        const std::vector<double> Lx = L.apply(x);
        const double nrm = std::sqrt(dot(x, Lx));
        std::vector<double> q = x, qL = Lx;
        for (std::size_t j = 0; j < n; ++j) {
            q[j] /= nrm;
            qL[j] /= nrm;
        }
        rejected.push_back(std::move(q));
        rejected_L.push_back(std::move(qL));
    }
    throw NumericalFailure("eigensolver: too many deflations without an admissible mode");
}

double second_eigenvalue_shifted(const ResourceProfile& profile, double lambda, const Grid& grid) {
    const Field rf = profile.samples(grid);
    check_h0(rf);
    if (grid.n() < 2) throw InvalidInput("second eigenvalue needs at least two nodes");
    const Tridiagonal t = negated_laplacian(grid, lambda, rf.values());
    return symmetric_tridiagonal_eigenvalue(t.diag, t.sub, 1);
}

double rayleigh_quotient(const Field& f, const Field& r) {
    const double denom = inner_product(hadamard(r, f), f);
    if (!(denom > 0.0)) throw InvalidInput("rayleigh quotient: field is not admissible (<r f, f> <= 0)");
    return gradient_energy(f) / denom;
}

ExtrapolatedEigenvalue extrapolated_principal_eigenvalue(const ResourceProfile& r, double a, double b,
                                                         std::size_t n_fine, std::size_t n_coarse) {
    if (n_coarse >= n_fine) throw InvalidInput("extrapolation needs n_coarse < n_fine");
    const Grid gf(a, b, n_fine), gc(a, b, n_coarse);
    ExtrapolatedEigenvalue out;
    out.n_fine = n_fine;
    out.n_coarse = n_coarse;
    out.fine = principal_eigen(r, gf).lambda_star;
    out.coarse = principal_eigen(r, gc).lambda_star;
    const double hf2 = gf.h() * gf.h(), hc2 = gc.h() * gc.h();
    out.value = (hc2 * out.fine - hf2 * out.coarse) / (hc2 - hf2);
    return out;
}

}  // namespace memdiff
