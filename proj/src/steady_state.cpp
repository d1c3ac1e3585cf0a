#include "memdiff/steady_state.hpp"

#include "memdiff/errors.hpp"
#include "memdiff/tridiagonal.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace memdiff {

std::string to_string(StateOrder o) {
    switch (o) {
        case StateOrder::Leading: return "leading";
        case StateOrder::FirstOrder: return "first-order";
        case StateOrder::Refined: return "refined";
    }
    return "?";
}

std::pair<double, double> lambda_primes(const ModelParams& p, const EigenPair& eig1, const EigenPair& eig2,
                                        const KappaSet& k) {
    const Grid& g = eig1.phi.grid();
    const double den1 = inner_product(hadamard(p.r1.samples(g), eig1.phi), eig1.phi);
    const double den2 = inner_product(hadamard(p.r2.samples(eig2.phi.grid()), eig2.phi), eig2.phi);
    if (!(den1 > 0.0) || !(den2 > 0.0))
        throw NumericalFailure("lambda': weighted eigenfunction mass is not positive (inadmissible eigenpair)");
    const double l1 = (eig1.lambda_star * (p.a11 * k.kappa3 + p.a12 * k.kappa4) - p.d1 * k.kappa1) / den1;
    const double l2 = (eig2.lambda_star * (p.a21 * k.kappa5 + p.a22 * k.kappa6) - p.d2 * k.kappa2) / den2;
    return {l1, l2};
}

double s_from_lambda(double lambda_target, double lambda_star, double lambda_prime0) {
    if (lambda_prime0 == 0.0) throw Degenerate("s from lambda: lambda'(0) vanishes");
    const double s = (lambda_target - lambda_star) / lambda_prime0;
    if (lambda_target == lambda_star) return 0.0;
    if (!(s > 0.0)) throw Degenerate("s from lambda: target lies on the subcritical side (s <= 0)");
    return s;
}

SteadyState leading_state(double s, double omega, const EigenPair& eig1, const EigenPair& eig2) {
    if (s < 0.0) throw InvalidInput("leading state: s must be non-negative");
    SteadyState st;
    st.s = s;
    st.u = (s * std::cos(omega)) * eig1.phi;
    st.v = (s * std::sin(omega)) * eig2.phi;
    st.order = StateOrder::Leading;
    return st;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Solves [A  phi; phi^T  0][w; mu] = [rhs; 0] with A = lap + lambda* diag(r) (singular along phi).
std::pair<Field, double> bordered_solve(const Field& r, const EigenPair& eig, const Field& rhs) {
    const Grid& g = eig.phi.grid();
    const std::size_t n = g.n();
    const double ih2 = 1.0 / (g.h() * g.h());
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(5 * n + 1);
    for (std::size_t j = 0; j < n; ++j) {
        const int i = static_cast<int>(j);
        t.emplace_back(i, i, -2.0 * ih2 + eig.lambda_star * r[j]);
        if (j > 0) t.emplace_back(i, i - 1, ih2);
        if (j + 1 < n) t.emplace_back(i, i + 1, ih2);
        t.emplace_back(i, static_cast<int>(n), eig.phi[j]);
        t.emplace_back(static_cast<int>(n), i, eig.phi[j]);
    }
    SpMat M(static_cast<int>(n + 1), static_cast<int>(n + 1));
    M.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<SpMat> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) throw NumericalFailure("w'(0): bordered system is singular");
    Vec b(static_cast<int>(n + 1));
    for (std::size_t j = 0; j < n; ++j) b[static_cast<int>(j)] = rhs[j];
    b[static_cast<int>(n)] = 0.0;
    const Vec x = lu.solve(b);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw NumericalFailure("w'(0): bordered solve failed");
    Field w(g);
    for (std::size_t j = 0; j < n; ++j) w[j] = x[static_cast<int>(j)];
    return {w, x[static_cast<int>(n)]};
}

Field correction_operator(const Field& w, const Field& r, double lambda_star) {
    return laplacian(w) + lambda_star * hadamard(r, w);
}

}  // namespace

WPrime solve_w_prime(const ModelParams& p, const EigenPair& eig1, const EigenPair& eig2,
                     std::pair<double, double> lambda_prime0) {
    const Grid& g = eig1.phi.grid();
    require_same_grid(eig1.phi, eig2.phi);
    const double c = std::cos(p.omega), s = std::sin(p.omega);
    const Field& phi = eig1.phi;
    const Field& psi = eig2.phi;
    const Field r1 = p.r1.samples(g), r2 = p.r2.samples(g);

    // Source terms b such that lap w + lambda* r w + b = 0.
    Field b1 = (p.d1 * c * c) * flux_divergence(phi, phi) + (lambda_prime0.first * c) * hadamard(phi, r1) -
               (eig1.lambda_star * c) * hadamard(phi, p.a11 * c * phi + p.a12 * s * psi);
    Field b2 = (p.d2 * s * s) * flux_divergence(psi, psi) + (lambda_prime0.second * s) * hadamard(psi, r2) -
               (eig2.lambda_star * s) * hadamard(psi, p.a21 * c * phi + p.a22 * s * psi);

    auto [w1, mu1] = bordered_solve(r1, eig1, -1.0 * b1);
    auto [w2, mu2] = bordered_solve(r2, eig2, -1.0 * b2);
    WPrime out{w1, w2, mu1, mu2};
    out.residual1 = l2_norm(correction_operator(w1, r1, eig1.lambda_star) + b1);
    out.residual2 = l2_norm(correction_operator(w2, r2, eig2.lambda_star) + b2);
    out.rhs_norm1 = l2_norm(b1);
    out.rhs_norm2 = l2_norm(b2);
    return out;
}

SteadyState first_order_state(double s, const ModelParams& p, const EigenPair& eig1, const EigenPair& eig2,
                              const KappaSet& k) {
    SteadyState st = leading_state(s, p.omega, eig1, eig2);
    const auto lp = lambda_primes(p, eig1, eig2, k);
    const WPrime w = solve_w_prime(p, eig1, eig2, lp);
    st.u += (s * s) * w.w1;
    st.v += (s * s) * w.w2;
    st.order = StateOrder::FirstOrder;
    st.lambda1_prime0 = lp.first;
    st.lambda2_prime0 = lp.second;
    st.w1_prime0 = w.w1;
    st.w2_prime0 = w.w2;
    st.lambda1 = eig1.lambda_star + lp.first * s;
    st.lambda2 = eig2.lambda_star + lp.second * s;
    return st;
}

std::pair<Field, Field> steady_residual(const Field& u, const Field& v, const ModelParams& p) {
    require_same_grid(u, v);
    const Grid& g = u.grid();
    const Field r1 = p.r1.samples(g), r2 = p.r2.samples(g);
    Field fu = laplacian(u) + p.d1 * flux_divergence(u, u);
    Field fv = laplacian(v) + p.d2 * flux_divergence(v, v);
    for (std::size_t j = 0; j < g.n(); ++j) {
        fu[j] += p.lambda1 * u[j] * (r1[j] - p.a11 * u[j] - p.a12 * v[j]);
        fv[j] += p.lambda2 * v[j] * (r2[j] - p.a21 * u[j] - p.a22 * v[j]);
    }
    return {fu, fv};
}

namespace {

// Unknowns interleaved as (u_0, v_0, u_1, v_1, ...), optionally followed by (lambda1, lambda2).
struct NewtonProblem {
    std::function<Vec(const Vec&)> residual;
    std::function<SpMat(const Vec&)> jacobian;
};

double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void add_species_jacobian(std::vector<Eigen::Triplet<double>>& t, std::size_t n, double h, int offset, double d,
                          const std::vector<double>& self, const std::vector<double>& react_diag) {
    const double ih2 = 1.0 / (h * h);
    // d/dself of lap(self) + d/2 lap(self^2): lap * diag(1 + d self).
    for (std::size_t j = 0; j < n; ++j) {
        const int row = static_cast<int>(2 * j) + offset;
        t.emplace_back(row, row, -2.0 * ih2 * (1.0 + d * self[j]) + react_diag[j]);
        if (j > 0) t.emplace_back(row, row - 2, ih2 * (1.0 + d * self[j - 1]));
        if (j + 1 < n) t.emplace_back(row, row + 2, ih2 * (1.0 + d * self[j + 1]));
    }
}

std::vector<Eigen::Triplet<double>> model_jacobian_triplets(const Vec& x, const ModelParams& p, const Field& r1,
                                                            const Field& r2, double lambda1, double lambda2) {
    const std::size_t n = r1.size();
    const double h = r1.grid().h();
    std::vector<double> u(n), v(n), du(n), dv(n);
    for (std::size_t j = 0; j < n; ++j) {
        u[j] = x[static_cast<int>(2 * j)];
        v[j] = x[static_cast<int>(2 * j + 1)];
        du[j] = lambda1 * (r1[j] - 2.0 * p.a11 * u[j] - p.a12 * v[j]);
        dv[j] = lambda2 * (r2[j] - p.a21 * u[j] - 2.0 * p.a22 * v[j]);
    }
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(10 * n + 8);
    add_species_jacobian(t, n, h, 0, p.d1, u, du);
    add_species_jacobian(t, n, h, 1, p.d2, v, dv);
    for (std::size_t j = 0; j < n; ++j) {
        const int iu = static_cast<int>(2 * j), iv = iu + 1;
        t.emplace_back(iu, iv, -lambda1 * p.a12 * u[j]);
        t.emplace_back(iv, iu, -lambda2 * p.a21 * v[j]);
    }
    return t;
}

Vec pack(const Field& u, const Field& v, std::size_t extra = 0) {
    const std::size_t n = u.size();
    Vec x(static_cast<int>(2 * n + extra));
    for (std::size_t j = 0; j < n; ++j) {
        x[static_cast<int>(2 * j)] = u[j];
        x[static_cast<int>(2 * j + 1)] = v[j];
    }
    return x;
}

void unpack(const Vec& x, Field& u, Field& v) {
    for (std::size_t j = 0; j < u.size(); ++j) {
        u[j] = x[static_cast<int>(2 * j)];
        v[j] = x[static_cast<int>(2 * j + 1)];
    }
}

Vec model_residual(const Vec& x, const ModelParams& p, const Grid& g) {
    Field u(g), v(g);
    unpack(x, u, v);
    const auto [fu, fv] = steady_residual(u, v, p);
    return pack(fu, fv);
}

struct NewtonOutcome {
    Vec x;
    std::vector<double> history;
    int iterations = 0;
    bool converged = false;
    bool used_continuation = false;
};

Vec sparse_solve(const SpMat& J, const Vec& rhs) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw NumericalFailure("newton: singular Jacobian");
    Vec dx = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !dx.allFinite()) throw NumericalFailure("newton: linear solve failed");
    return dx;
}

NewtonOutcome damped_newton(const NewtonProblem& prob, Vec x, const NewtonOptions& opt) {
    NewtonOutcome out;
    Vec F = prob.residual(x);
    double norm = max_abs(F);
    out.history.push_back(norm);
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (norm <= opt.tol) {
            out.converged = true;
            break;
        }
        Vec dx;
        try {
            dx = sparse_solve(prob.jacobian(x), -F);
        } catch (const NumericalFailure&) {
            break;
        }
        double alpha = 1.0;
        bool accepted = false;
        for (int b = 0; b <= opt.max_backtracks; ++b, alpha *= 0.5) {
            Vec trial = x + alpha * dx;
            Vec Ft = prob.residual(trial);
            const double nt = max_abs(Ft);
            if (std::isfinite(nt) && nt < (1.0 - 1e-4 * alpha) * norm) {
                x = std::move(trial);
                F = std::move(Ft);
                norm = nt;
                accepted = true;
                break;
            }
        }
        ++out.iterations;
        out.history.push_back(norm);
        if (!accepted) break;
    }
    if (norm <= opt.tol) out.converged = true;
    out.x = std::move(x);
    return out;
}

// Pseudo-transient continuation: (I/dt - J) dx = F with dt grown by switched evolution relaxation.
NewtonOutcome pseudo_transient(const NewtonProblem& prob, Vec x, std::size_t n_state, const NewtonOptions& opt) {
    NewtonOutcome out;
    out.used_continuation = true;
    Vec F = prob.residual(x);
    double norm = max_abs(F);
    double norm0 = norm;
    double dt = 1e-2;
    out.history.push_back(norm);
    for (int it = 0; it < opt.max_continuation_steps && norm > opt.tol; ++it) {
        SpMat J = prob.jacobian(x);
        SpMat shifted = -J;
        for (std::size_t i = 0; i < n_state; ++i) shifted.coeffRef(static_cast<int>(i), static_cast<int>(i)) += 1.0 / dt;
        Vec dx;
        try {
            dx = sparse_solve(shifted, F);
        } catch (const NumericalFailure&) {
            dt *= 0.25;
            continue;
        }
        Vec trial = x + dx;
        Vec Ft = prob.residual(trial);
        const double nt = max_abs(Ft);
        ++out.iterations;
        if (!std::isfinite(nt) || nt > 1e3 * std::max(1.0, norm0)) {
            dt *= 0.25;
            if (dt < 1e-10) break;
            continue;
        }
        dt = std::clamp(dt * norm / std::max(nt, 1e-300), dt * 0.1, 1e14);
        x = std::move(trial);
        F = std::move(Ft);
        norm = nt;
        out.history.push_back(norm);
    }
    out.converged = norm <= opt.tol;
    out.x = std::move(x);
    return out;
}

NewtonOutcome solve_with_fallback(const NewtonProblem& prob, const Vec& x0, std::size_t n_state,
                                  const NewtonOptions& opt) {
    NewtonOutcome first = damped_newton(prob, x0, opt);
    if (first.converged || !opt.allow_continuation) return first;
    NewtonOutcome second = pseudo_transient(prob, x0, n_state, opt);
    second.history.insert(second.history.begin(), first.history.begin(), first.history.end());
    second.iterations += first.iterations;
    if (!second.converged) return second;
    // Polish with plain Newton.
    NewtonOutcome polish = damped_newton(prob, second.x, opt);
    polish.history.insert(polish.history.begin(), second.history.begin(), second.history.end());
    polish.iterations += second.iterations;
    polish.used_continuation = true;
    if (!polish.converged) return second;
    return polish;
}

// Natural-parameter continuation in (lambda1, lambda2) from an exact equilibrium at `from`
// to the targets in p, with adaptive steps and a Newton corrector at each step.
NewtonOutcome lambda_continuation(const Vec& x_start, std::pair<double, double> from, const ModelParams& p,
                                  const Grid& g, const Field& r1, const Field& r2, const NewtonOptions& opt) {
    const std::size_t n = g.n();
    NewtonOutcome out;
    out.used_continuation = true;
    Vec x = x_start;
    double mu = 0.0, step = 0.05;
    NewtonOptions inner = opt;
    inner.max_iterations = 12;
    while (mu < 1.0) {
        const double next = std::min(1.0, mu + step);
        ModelParams q = p;
        q.lambda1 = from.first + next * (p.lambda1 - from.first);
        q.lambda2 = from.second + next * (p.lambda2 - from.second);
        NewtonProblem prob;
        prob.residual = [&](const Vec& y) { return model_residual(y, q, g); };
        prob.jacobian = [&](const Vec& y) {
            const auto t = model_jacobian_triplets(y, q, r1, r2, q.lambda1, q.lambda2);
            SpMat J(static_cast<int>(2 * n), static_cast<int>(2 * n));
            J.setFromTriplets(t.begin(), t.end());
            return J;
        };
        NewtonOutcome r = damped_newton(prob, x, inner);
        out.iterations += r.iterations;
        if (r.converged) {
            x = r.x;
            mu = next;
            out.history.push_back(r.history.back());
            step = std::min(0.25, step * 1.5);
        } else {
            step *= 0.5;
            if (step < 1e-4) {
                out.x = x;
                out.history.push_back(r.history.back());
                return out;
            }
        }
    }
    out.converged = true;
    out.x = x;
    return out;
}

}  // namespace

SteadyState refine_steady_state(const SteadyState& initial, const ModelParams& p, const NewtonOptions& opt) {
    if (!(initial.s > 0.0)) throw InvalidInput("refine: initial state must have s > 0");
    const Grid g = initial.u.grid();
    require_same_grid(initial.u, initial.v);
    const Field r1 = p.r1.samples(g), r2 = p.r2.samples(g);
    const std::size_t n = g.n();
    NewtonProblem prob;
    prob.residual = [&](const Vec& x) { return model_residual(x, p, g); };
    prob.jacobian = [&](const Vec& x) {
        const auto t = model_jacobian_triplets(x, p, r1, r2, p.lambda1, p.lambda2);
        SpMat J(static_cast<int>(2 * n), static_cast<int>(2 * n));
        J.setFromTriplets(t.begin(), t.end());
        return J;
    };
    NewtonOutcome res = damped_newton(prob, pack(initial.u, initial.v), opt);
    if (!res.converged && opt.allow_continuation) {
        // Start from the exact equilibrium on the bifurcating branch with the same amplitude,
        // then continue in the growth rates to the targets.
        try {
            const EigenPair e1 = principal_eigen(p.r1, g), e2 = principal_eigen(p.r2, g);
            const KappaSet k = compute_kappas(e1, e2, p.omega);
            NewtonOptions plain = opt;
            plain.allow_continuation = false;
            for (double frac : {1.0, 0.5, 0.25, 0.125}) {
                SteadyState b = initial;
                try {
                    b = branch_state(frac * initial.s, p, e1, e2, k, plain);
                } catch (const NumericalFailure&) {
                    continue;
                }
                NewtonOutcome cont = lambda_continuation(pack(b.u, b.v), {b.lambda1, b.lambda2}, p, g, r1, r2, opt);
                if (cont.converged) {
                    cont.history.insert(cont.history.begin(), res.history.begin(), res.history.end());
                    cont.iterations += res.iterations;
                    res = std::move(cont);
                    break;
                }
            }
        } catch (const Error&) {
        }
    }
    if (!res.converged && opt.allow_continuation) res = solve_with_fallback(prob, pack(initial.u, initial.v), 2 * n, opt);
    if (!res.converged)
        throw NumericalFailure("refine: Newton iteration did not converge (residual " +
                               std::to_string(res.history.empty() ? NAN : res.history.back()) + ")");
    SteadyState out = initial;
    unpack(res.x, out.u, out.v);
    out.order = StateOrder::Refined;
    out.newton_residual = res.history.back();
    out.residual_history = res.history;
    out.newton_iterations = res.iterations;
    out.used_continuation = res.used_continuation;
    out.positivity_loss = !(out.u.min() > 0.0 && out.v.min() > 0.0);
    out.semi_trivial = out.u.max_abs() < 1e-8 || out.v.max_abs() < 1e-8;
    out.lambda1 = p.lambda1;
    out.lambda2 = p.lambda2;
    return out;
}

SteadyState branch_state(double s, const ModelParams& p, const EigenPair& eig1, const EigenPair& eig2,
                         const KappaSet& k, const NewtonOptions& opt) {
    if (!(s > 0.0)) throw InvalidInput("branch state: s must be positive");
    const Grid g = eig1.phi.grid();
    const Field r1 = p.r1.samples(g), r2 = p.r2.samples(g);
    const std::size_t n = g.n();
    const int nl = static_cast<int>(2 * n);
    const double c = std::cos(p.omega), sn = std::sin(p.omega), h = g.h();
    const SteadyState guess = first_order_state(s, p, eig1, eig2, k);

    NewtonProblem prob;
    prob.residual = [&](const Vec& x) {
        ModelParams q = p;
        q.lambda1 = x[nl];
        q.lambda2 = x[nl + 1];
        Vec F(nl + 2);
        F.head(nl) = model_residual(x.head(nl), q, g);
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            a += eig1.phi[j] * x[static_cast<int>(2 * j)];
            b += eig2.phi[j] * x[static_cast<int>(2 * j + 1)];
        }
        F[nl] = h * a - s * c;
        F[nl + 1] = h * b - s * sn;
        return F;
    };
    prob.jacobian = [&](const Vec& x) {
        const double l1 = x[nl], l2 = x[nl + 1];
        auto t = model_jacobian_triplets(x, p, r1, r2, l1, l2);
        for (std::size_t j = 0; j < n; ++j) {
            const int iu = static_cast<int>(2 * j), iv = iu + 1;
            const double u = x[iu], v = x[iv];
            t.emplace_back(iu, nl, u * (r1[j] - p.a11 * u - p.a12 * v));
            t.emplace_back(iv, nl + 1, v * (r2[j] - p.a21 * u - p.a22 * v));
            t.emplace_back(nl, iu, h * eig1.phi[j]);
            t.emplace_back(nl + 1, iv, h * eig2.phi[j]);
        }
        SpMat J(nl + 2, nl + 2);
        J.setFromTriplets(t.begin(), t.end());
        return J;
    };
    Vec x0(nl + 2);
    x0.head(nl) = pack(guess.u, guess.v);
    x0[nl] = guess.lambda1;
    x0[nl + 1] = guess.lambda2;
    NewtonOptions plain = opt;
    plain.allow_continuation = false;
    const NewtonOutcome res = damped_newton(prob, x0, plain);
    if (!res.converged) throw NumericalFailure("branch state: Newton iteration did not converge");
    SteadyState out = guess;
    unpack(res.x.head(nl), out.u, out.v);
    out.lambda1 = res.x[nl];
    out.lambda2 = res.x[nl + 1];
    out.order = StateOrder::Refined;
    out.newton_residual = res.history.back();
    out.residual_history = res.history;
    out.newton_iterations = res.iterations;
    out.positivity_loss = !(out.u.min() > 0.0 && out.v.min() > 0.0);
    return out;
}

const SteadyState& SteadyStateBuild::best() const {
    if (refined && !refined->positivity_loss && !refined->semi_trivial) return *refined;
    return first_order;
}

SteadyStateBuild construct_steady_state(const ModelParams& p, std::size_t n, const NewtonOptions& opt) {
    p.validate();
    const Grid g = Grid::unit_pi(n);
    SteadyStateBuild b;
    b.eig1 = principal_eigen(p.r1, g);
    b.eig2 = principal_eigen(p.r2, g);
    b.kappas = compute_kappas(b.eig1, b.eig2, p.omega, KappaConvention::SelfFlux);
    const auto lp = lambda_primes(p, b.eig1, b.eig2, b.kappas);
    b.s = s_from_lambda(p.lambda1, b.eig1.lambda_star, lp.first);
    try {
        b.s_from_lambda2 = s_from_lambda(p.lambda2, b.eig2.lambda_star, lp.second);
    } catch (const Error&) {
        b.s_from_lambda2 = std::numeric_limits<double>::quiet_NaN();
    }
    b.first_order = first_order_state(b.s, p, b.eig1, b.eig2, b.kappas);
    try {
        b.refined = refine_steady_state(b.first_order, p, opt);
    } catch (const NumericalFailure& e) {
        b.refine_error = e.what();
    }
    return b;
}

H1Check check_h1(const ModelParams& p, const SteadyState& st) {
    H1Check c;
    c.bound_u = std::abs(p.d1) * std::max(0.0, st.u.max());
    c.bound_v = std::abs(p.d2) * std::max(0.0, st.v.max());
    c.satisfied = c.bound_u < 1.0 && c.bound_v < 1.0;
    return c;
}

}  // namespace memdiff
