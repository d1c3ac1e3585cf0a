#pragma once

#include "memdiff/grid.hpp"
#include "memdiff/model.hpp"
#include "memdiff/steady_state.hpp"
#include "memdiff/tridiagonal.hpp"
#include "memdiff/errors.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace memdiff {

enum class Outcome { ConvergedToSteadyState, SustainedOscillation, DecayToBoundary, Inconclusive };
std::string to_string(Outcome o);
Outcome parse_outcome(const std::string& s);

struct OutcomeTolerances {
    double tol_conv = 1e-3;
    double tol_osc = 5e-3;
    double tol_extinct = 1e-3;
    double growth_ratio = 0.8;
};

struct SimConfig {
    std::size_t n = 128;
    double dt = 0.002;  // upper bound; snapped down so that tau is an integer number of steps
    double t_end = 400.0;
    double epsilon = 0.01;
    std::string perturbation = "sin2x";  // sin2x | sin1x | cos1x | none
    double sample_interval = 0.1;        // time between recorded series samples
    double snapshot_interval = 2.0;      // time between stored field snapshots (<= 0 disables)
    double transient_fraction = 0.5;
    OutcomeTolerances tolerances;
    double blowup_threshold = 1e6;
    // The explicit memory flux is stable for dt <= h^2 / (2 c), c = max |d_i| * max(state);
    // c is taken from the initial history times this headroom factor.
    double flux_headroom = 2.0;

    void validate() const;
};

// Ring buffer of the last m+1 states; lag() returns the state exactly m pushes back.
class History {
public:
    History(std::size_t m, const Field& u0, const Field& v0);
    std::size_t m() const { return m_; }
    void push(const Field& u, const Field& v);
    const Field& lag_u() const;
    const Field& lag_v() const;
    const Field& current_u() const;
    const Field& current_v() const;

private:
    std::size_t m_;
    std::size_t head_ = 0;  // slot holding the newest state
    std::vector<Field> u_, v_;
};

struct TimeGrid {
    double dt = 0.0;
    std::size_t m = 0;  // delay in steps
    bool adjusted = false;
    double stability_limit = 0.0;  // flux stability bound on dt (infinity when there is no flux)
};

// dt = tau / ceil(tau / dt_max) (or dt_max when tau == 0).
TimeGrid snap_time_step(double tau, double dt_max);

// Largest dt for which the explicit memory flux is stable around states bounded by (u_max, v_max).
double flux_stability_limit(const ModelParams& p, const Grid& g, double u_max, double v_max, double headroom);

struct Snapshot {
    double t;
    Field u, v;
};

struct SimulationResult {
    double tau = 0.0;
    TimeGrid time_grid;
    std::vector<double> times, l2_u, l2_v, max_u, max_v, deviation;
    std::vector<Snapshot> snapshots;
    Outcome outcome = Outcome::Inconclusive;
    double amplitude = 0.0;       // peak-to-peak of the deviation over the analysis window
    double amplitude_third = 0.0, amplitude_last = 0.0;
    double final_deviation = 0.0;
    std::optional<double> period_estimate;
    bool negativity_flag = false;
    H1Check h1;
    std::size_t steps = 0;
    std::optional<double> blowup_time;
};

// Raised when the solution stops being finite or exceeds the blow-up threshold.
class SimulationBlowup : public NumericalFailure {
public:
    SimulationBlowup(const std::string& what, double t, std::shared_ptr<SimulationResult> partial)
        : NumericalFailure(what), time(t), partial(std::move(partial)) {}
    double time;
    std::shared_ptr<SimulationResult> partial;
};

// Right-hand side of the delayed system at one instant.
std::pair<Field, Field> rhs(const Field& u, const Field& v, const Field& u_lag, const Field& v_lag,
                            const ModelParams& p);

// One IMEX step: Crank-Nicolson diffusion, explicit memory flux and reaction.
class Stepper {
public:
    Stepper(const ModelParams& p, const Grid& g, double dt);
    double dt() const { return dt_; }
    // Advances (u, v) in place using the lag fields.
    void step(Field& u, Field& v, const Field& u_lag, const Field& v_lag);
    // Extremes of the state produced by the last step.
    double last_min() const { return last_min_; }
    double last_max_abs() const { return last_max_abs_; }

private:
    void advance(std::vector<double>& w, const std::vector<double>& lag, const std::vector<double>& other, double d,
                 double lambda, const std::vector<double>& r, double a_self, double a_other);

    ModelParams p_;
    Grid g_;
    double dt_;
    std::vector<double> r1_, r2_;
    TridiagonalLU cn_;  // I - dt/2 lap
    std::vector<double> buf_, flux_, old_;
    double last_min_ = 0.0, last_max_abs_ = 0.0;
};

Field perturbation_profile(const std::string& id, const Grid& g);

SimulationResult simulate(const ModelParams& p, double tau, const SteadyState& init, const SimConfig& config);

struct OutcomeSeries {
    const std::vector<double>& times;
    const std::vector<double>& deviation;
    const std::vector<double>& l2_u;
    const std::vector<double>& l2_v;
};

struct OutcomeMetrics {
    Outcome outcome = Outcome::Inconclusive;
    double amplitude = 0, amplitude_third = 0, amplitude_last = 0, final_deviation = 0;
    std::optional<double> period;
};

OutcomeMetrics classify_outcome(const OutcomeSeries& s, double transient_fraction, const OutcomeTolerances& tol);

struct ThresholdProbe {
    double tau;
    Outcome outcome;
    double amplitude;
    double t_end;
};

struct ThresholdResult {
    double threshold = 0.0;
    double lo = 0.0, hi = 0.0;
    std::vector<std::pair<double, double>> brackets;
    std::vector<ThresholdProbe> probes;
};

struct ThresholdOptions {
    double width = 0.25;
    int max_retries = 1;  // Inconclusive probe: rerun with doubled t_end this many times
};

// Bisection on tau between a converging and an oscillating delay.
ThresholdResult find_hopf_threshold(const ModelParams& p, double tau_lo, double tau_hi, const SteadyState& init,
                                    const SimConfig& config, const ThresholdOptions& opt = {});

}  // namespace memdiff
