#pragma once

#include "memdiff/bifurcation.hpp"
#include "memdiff/grid.hpp"
#include "memdiff/model.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace memdiff {

enum class StateOrder { Leading, FirstOrder, Refined };
std::string to_string(StateOrder o);

struct SteadyState {
    double s = 0.0;
    Field u, v;
    StateOrder order = StateOrder::Leading;
    double lambda1_prime0 = 0.0, lambda2_prime0 = 0.0;
    std::optional<Field> w1_prime0, w2_prime0;
    std::optional<double> newton_residual;
    std::vector<double> residual_history;
    int newton_iterations = 0;
    bool used_continuation = false;
    bool positivity_loss = false;
    bool semi_trivial = false;  // one species vanished (max below 1e-8)
    // Growth rates the state is an equilibrium for (targets for refined states).
    double lambda1 = 0.0, lambda2 = 0.0;
};

std::pair<double, double> lambda_primes(const ModelParams& p, const EigenPair& eig1, const EigenPair& eig2,
                                        const KappaSet& k);

double s_from_lambda(double lambda_target, double lambda_star, double lambda_prime0);

SteadyState leading_state(double s, double omega, const EigenPair& eig1, const EigenPair& eig2);

struct WPrime {
    Field w1, w2;
    // Lagrange multipliers of the bordered systems; zero when the solvability condition holds exactly.
    double multiplier1 = 0.0, multiplier2 = 0.0;
    // Residual of the correction equations and the norm of their right-hand sides.
    double residual1 = 0.0, residual2 = 0.0, rhs_norm1 = 0.0, rhs_norm2 = 0.0;
};

WPrime solve_w_prime(const ModelParams& p, const EigenPair& eig1, const EigenPair& eig2,
                     std::pair<double, double> lambda_prime0);

// leading_state plus s^2 * w'(0).
SteadyState first_order_state(double s, const ModelParams& p, const EigenPair& eig1, const EigenPair& eig2,
                              const KappaSet& k);

// Discrete residual of the elliptic system at growth rates (lambda1, lambda2) taken from p.
std::pair<Field, Field> steady_residual(const Field& u, const Field& v, const ModelParams& p);

struct NewtonOptions {
    double tol = 1e-9;
    int max_iterations = 60;
    int max_backtracks = 30;
    // Pseudo-transient continuation is tried when plain damped Newton fails.
    bool allow_continuation = true;
    int max_continuation_steps = 4000;
};

SteadyState refine_steady_state(const SteadyState& initial, const ModelParams& p, const NewtonOptions& opt = {});

// Point on the bifurcating branch with prescribed amplitude s: solves for (u, v, lambda1, lambda2)
// with <phi, u> = s cos(w) and <psi, v> = s sin(w).
SteadyState branch_state(double s, const ModelParams& p, const EigenPair& eig1, const EigenPair& eig2,
                         const KappaSet& k, const NewtonOptions& opt = {});

struct SteadyStateBuild {
    EigenPair eig1, eig2;
    KappaSet kappas;
    double s = 0.0;
    double s_from_lambda2 = 0.0;  // diagnostic: amplitude implied by the lambda2 target
    SteadyState first_order;
    std::optional<SteadyState> refined;
    std::string refine_error;
    // refined when it exists and is strictly positive, otherwise first_order.
    const SteadyState& best() const;
};

// Eigenpairs on an n-node grid, s from the lambda1 target, first-order state, Newton refinement.
SteadyStateBuild construct_steady_state(const ModelParams& p, std::size_t n, const NewtonOptions& opt = {});

struct H1Check {
    double bound_u = 0.0, bound_v = 0.0;  // |d_i| * max(state)
    bool satisfied = false;
};

H1Check check_h1(const ModelParams& p, const SteadyState& st);

}  // namespace memdiff
