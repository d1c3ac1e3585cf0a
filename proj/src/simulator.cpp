#include "memdiff/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace memdiff {

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::ConvergedToSteadyState: return "ConvergedToSteadyState";
        case Outcome::SustainedOscillation: return "SustainedOscillation";
        case Outcome::DecayToBoundary: return "DecayToBoundary";
        case Outcome::Inconclusive: return "Inconclusive";
    }
    return "?";
}

Outcome parse_outcome(const std::string& s) {
    for (Outcome o : {Outcome::ConvergedToSteadyState, Outcome::SustainedOscillation, Outcome::DecayToBoundary,
                      Outcome::Inconclusive})
        if (to_string(o) == s) return o;
    throw InvalidInput("unknown outcome '" + s + "'");
}

void SimConfig::validate() const {
    if (n == 0) throw InvalidInput("sim: n must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("sim: dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidInput("sim: t_end must be positive");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw InvalidInput("sim: epsilon must be non-negative");
    if (!(sample_interval > 0.0)) throw InvalidInput("sim: sample_interval must be positive");
    if (!(transient_fraction > 0.0 && transient_fraction < 1.0))
        throw InvalidInput("sim: transient_fraction must lie in (0, 1)");
    if (!(tolerances.tol_conv > 0 && tolerances.tol_osc > 0 && tolerances.tol_extinct > 0))
        throw InvalidInput("sim: outcome tolerances must be positive");
    (void)perturbation_profile(perturbation, Grid::unit_pi(1));
}

History::History(std::size_t m, const Field& u0, const Field& v0) : m_(m), u_(m + 1, u0), v_(m + 1, v0) {}

void History::push(const Field& u, const Field& v) {
    head_ = (head_ + 1) % (m_ + 1);
    // Copy into the existing storage to avoid reallocating.
    std::copy(u.values().begin(), u.values().end(), u_[head_].values().begin());
    std::copy(v.values().begin(), v.values().end(), v_[head_].values().begin());
}

const Field& History::lag_u() const { return u_[(head_ + 1) % (m_ + 1)]; }
const Field& History::lag_v() const { return v_[(head_ + 1) % (m_ + 1)]; }
const Field& History::current_u() const { return u_[head_]; }
const Field& History::current_v() const { return v_[head_]; }

TimeGrid snap_time_step(double tau, double dt_max) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidInput("tau must be finite and non-negative");
    if (!(dt_max > 0.0)) throw InvalidInput("dt must be positive");
    TimeGrid tg;
    if (tau == 0.0) {
        tg.dt = dt_max;
        tg.m = 0;
        return tg;
    }
    tg.m = static_cast<std::size_t>(std::ceil(tau / dt_max - 1e-9));
    tg.m = std::max<std::size_t>(tg.m, 1);
    tg.dt = tau / static_cast<double>(tg.m);
    tg.adjusted = tg.dt != dt_max;
    return tg;
}

double flux_stability_limit(const ModelParams& p, const Grid& g, double u_max, double v_max, double headroom) {
    const double c = headroom * std::max(std::abs(p.d1) * std::abs(u_max), std::abs(p.d2) * std::abs(v_max));
    if (!(c > 0.0)) return std::numeric_limits<double>::infinity();
    return g.h() * g.h() / (2.0 * c);
}

std::pair<Field, Field> rhs(const Field& u, const Field& v, const Field& u_lag, const Field& v_lag,
                            const ModelParams& p) {
    require_same_grid(u, v);
    require_same_grid(u, u_lag);
    require_same_grid(v, v_lag);
    const Field r1 = p.r1.samples(u.grid()), r2 = p.r2.samples(u.grid());
    Field fu = laplacian(u) + p.d1 * flux_divergence(u, u_lag);
    Field fv = laplacian(v) + p.d2 * flux_divergence(v, v_lag);
    for (std::size_t j = 0; j < u.size(); ++j) {
        fu[j] += p.lambda1 * u[j] * (r1[j] - p.a11 * u[j] - p.a12 * v[j]);
        fv[j] += p.lambda2 * v[j] * (r2[j] - p.a21 * u[j] - p.a22 * v[j]);
    }
    if (!fu.all_finite() || !fv.all_finite()) throw NumericalFailure("rhs: non-finite values");
    return {fu, fv};
}

namespace {

Tridiagonal cn_matrix(const Grid& g, double dt) {
    const std::size_t n = g.n();
    const double c = 0.5 * dt / (g.h() * g.h());
    Tridiagonal t;
    t.diag.assign(n, 1.0 + 2.0 * c);
    t.sub.assign(n - 1, -c);
    t.sup.assign(n - 1, -c);
    return t;
}

}  // namespace

Stepper::Stepper(const ModelParams& p, const Grid& g, double dt)
    : p_(p), g_(g), dt_(dt), r1_(p.r1.samples(g).values()), r2_(p.r2.samples(g).values()),
      cn_(g.n() > 1 ? cn_matrix(g, dt) : Tridiagonal{{}, {1.0 + dt / (g.h() * g.h())}, {}}),
      buf_(g.n()), flux_(g.n() + 1), old_(g.n()) {
    if (!(dt > 0.0)) throw InvalidInput("stepper: dt must be positive");
}

void Stepper::advance(std::vector<double>& w, const std::vector<double>& lag, const std::vector<double>& other,
                      double d, double lambda, const std::vector<double>& r, double a_self, double a_other) {
    const std::size_t n = w.size();
    const double ih = 1.0 / g_.h();
    const double ih2 = ih * ih;
    for (std::size_t k = 0; k <= n; ++k) {
        const double wl = k > 0 ? w[k - 1] : 0.0, wr = k < n ? w[k] : 0.0;
        const double ll = k > 0 ? lag[k - 1] : 0.0, lr = k < n ? lag[k] : 0.0;
        flux_[k] = 0.5 * (wl + wr) * (lr - ll) * ih;
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double left = j > 0 ? w[j - 1] : 0.0, right = j + 1 < n ? w[j + 1] : 0.0;
        const double lap = (left - 2.0 * w[j] + right) * ih2;
        const double expl = d * (flux_[j + 1] - flux_[j]) * ih + lambda * w[j] * (r[j] - a_self * w[j] - a_other * other[j]);
        buf_[j] = w[j] + dt_ * (0.5 * lap + expl);
    }
    cn_.solve_in_place(buf_);
    for (std::size_t j = 0; j < n; ++j) {
        w[j] = buf_[j];
        last_min_ = std::min(last_min_, w[j]);
        const double a = std::abs(w[j]);
        // NaN compares false; force it through as infinity.
        last_max_abs_ = a >= last_max_abs_ ? a : (a == a ? last_max_abs_ : std::numeric_limits<double>::infinity());
    }
}

void Stepper::step(Field& u, Field& v, const Field& u_lag, const Field& v_lag) {
    last_min_ = std::numeric_limits<double>::infinity();
    last_max_abs_ = 0.0;
    old_ = u.values();
    advance(u.values(), u_lag.values(), v.values(), p_.d1, p_.lambda1, r1_, p_.a11, p_.a12);
    advance(v.values(), v_lag.values(), old_, p_.d2, p_.lambda2, r2_, p_.a22, p_.a21);
}

Field perturbation_profile(const std::string& id, const Grid& g) {
    // Profiles are defined on (0, pi) and rescaled to the grid's interval.
    const double a = g.a(), L = g.b() - g.a();
    auto scaled = [&](auto f) { return Field::sample(g, [&](double x) { return f((x - a) * 3.141592653589793 / L); }); };
    if (id == "sin2x") return scaled([](double y) { return std::sin(2.0 * y); });
    if (id == "sin1x") return scaled([](double y) { return std::sin(y); });
    if (id == "cos1x") return scaled([](double y) { return std::cos(y); });
    if (id == "none") return Field(g);
    throw InvalidInput("unknown perturbation profile '" + id + "' (expected sin2x, sin1x, cos1x or none)");
}

SimulationResult simulate(const ModelParams& p, double tau, const SteadyState& init, const SimConfig& config) {
    p.validate();
    config.validate();
    const Grid g = init.u.grid();
    require_same_grid(init.u, init.v);
    if (g.n() != config.n) throw GridMismatch("simulate: initial state grid does not match config n");

    auto res = std::make_shared<SimulationResult>();
    res->tau = tau;
    res->h1 = check_h1(p, init);

    const Field rho = perturbation_profile(config.perturbation, g);
    Field u = init.u, v = init.v;
    for (std::size_t j = 0; j < g.n(); ++j) {
        u[j] *= 1.0 + config.epsilon * rho[j];
        v[j] *= 1.0 + config.epsilon * rho[j];
    }
    const double limit = flux_stability_limit(p, g, u.max_abs(), v.max_abs(), config.flux_headroom);
    res->time_grid = snap_time_step(tau, std::min(config.dt, limit));
    res->time_grid.stability_limit = limit;
    if (limit < config.dt) res->time_grid.adjusted = true;
    const double dt = res->time_grid.dt;
    History hist(res->time_grid.m, u, v);
    Stepper stepper(p, g, dt);

    const auto total = static_cast<std::size_t>(std::llround(std::ceil(config.t_end / dt - 1e-9)));
    const std::size_t sample_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.sample_interval / dt)));
    const std::size_t snap_every =
        config.snapshot_interval > 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.snapshot_interval / dt))) : 0;

    auto record = [&](std::size_t k) {
        const double t = static_cast<double>(k) * dt;
        res->times.push_back(t);
        res->l2_u.push_back(l2_norm(u));
        res->l2_v.push_back(l2_norm(v));
        res->max_u.push_back(u.max());
        res->max_v.push_back(v.max());
        res->deviation.push_back(l2_norm(u - init.u));
        if (snap_every && k % snap_every == 0) res->snapshots.push_back({t, u, v});
    };
    res->negativity_flag = u.min() < 0.0 || v.min() < 0.0;
    record(0);
    for (std::size_t k = 1; k <= total; ++k) {
        stepper.step(u, v, hist.lag_u(), hist.lag_v());
        hist.push(u, v);
        res->steps = k;
        if (stepper.last_min() < 0.0) res->negativity_flag = true;
        if (!(stepper.last_max_abs() <= config.blowup_threshold)) {
            const double t = static_cast<double>(k) * dt;
            res->blowup_time = t;
            res->outcome = Outcome::Inconclusive;
            throw SimulationBlowup("simulation blew up at t = " + std::to_string(t), t, res);
        }
        if (k % sample_every == 0 || k == total) record(k);
    }

    const OutcomeMetrics m = classify_outcome({res->times, res->deviation, res->l2_u, res->l2_v},
                                              config.transient_fraction, config.tolerances);
    res->outcome = m.outcome;
    res->amplitude = m.amplitude;
    res->amplitude_third = m.amplitude_third;
    res->amplitude_last = m.amplitude_last;
    res->final_deviation = m.final_deviation;
    res->period_estimate = m.period;
    return std::move(*res);
}

namespace {

double peak_to_peak(const std::vector<double>& x, std::size_t b, std::size_t e) {
    if (b >= e) return 0.0;
    const auto [lo, hi] = std::minmax_element(x.begin() + static_cast<std::ptrdiff_t>(b), x.begin() + static_cast<std::ptrdiff_t>(e));
    return *hi - *lo;
}

// Mean spacing of the maxima between successive upward crossings of the mean level.
std::optional<double> mean_peak_spacing(const std::vector<double>& t, const std::vector<double>& x, std::size_t b,
                                        std::size_t e) {
    if (e < b + 3) return std::nullopt;
    double mean = 0.0;
    for (std::size_t i = b; i < e; ++i) mean += x[i];
    mean /= static_cast<double>(e - b);
    std::vector<std::size_t> ups;
    for (std::size_t i = b + 1; i < e; ++i)
        if (x[i - 1] < mean && x[i] >= mean) ups.push_back(i);
    std::vector<double> peaks;
    for (std::size_t c = 0; c + 1 < ups.size(); ++c) {
        std::size_t best = ups[c];
        for (std::size_t i = ups[c]; i < ups[c + 1]; ++i)
            if (x[i] > x[best]) best = i;
        peaks.push_back(t[best]);
    }
    if (peaks.size() < 2) return std::nullopt;
    return (peaks.back() - peaks.front()) / static_cast<double>(peaks.size() - 1);
}

}  // namespace

OutcomeMetrics classify_outcome(const OutcomeSeries& s, double transient_fraction, const OutcomeTolerances& tol) {
    OutcomeMetrics m;
    const std::size_t N = s.times.size();
    if (N < 4 || s.deviation.size() != N || s.l2_u.size() != N || s.l2_v.size() != N) return m;
    const double t0 = s.times.front(), t1 = s.times.back();
    const double start = t0 + transient_fraction * (t1 - t0);
    const double mid = 0.5 * (start + t1);
    const auto b = static_cast<std::size_t>(std::lower_bound(s.times.begin(), s.times.end(), start) - s.times.begin());
    const auto c = static_cast<std::size_t>(std::lower_bound(s.times.begin(), s.times.end(), mid) - s.times.begin());
    m.amplitude = peak_to_peak(s.deviation, b, N);
    m.amplitude_third = peak_to_peak(s.deviation, b, c);
    m.amplitude_last = peak_to_peak(s.deviation, c, N);
    m.final_deviation = s.deviation.back();

    if (m.amplitude < tol.tol_conv && m.final_deviation < tol.tol_conv) {
        m.outcome = Outcome::ConvergedToSteadyState;
        return m;
    }
    if (m.amplitude_last >= tol.growth_ratio * m.amplitude_third && m.amplitude_last > tol.tol_osc) {
        m.period = mean_peak_spacing(s.times, s.l2_u, b, N);
        if (!m.period) m.period = mean_peak_spacing(s.times, s.deviation, b, N);
        if (m.period) {
            m.outcome = Outcome::SustainedOscillation;
            return m;
        }
    }
    if (s.l2_u.back() < tol.tol_extinct || s.l2_v.back() < tol.tol_extinct) {
        m.outcome = Outcome::DecayToBoundary;
        return m;
    }
    m.outcome = Outcome::Inconclusive;
    return m;
}

ThresholdResult find_hopf_threshold(const ModelParams& p, double tau_lo, double tau_hi, const SteadyState& init,
                                    const SimConfig& config, const ThresholdOptions& opt) {
    if (!(tau_lo >= 0.0 && tau_hi > tau_lo)) throw InvalidInput("threshold: need 0 <= tau_lo < tau_hi");
    if (!(opt.width > 0.0)) throw InvalidInput("threshold: bracket width must be positive");
    ThresholdResult out;
    auto probe = [&](double tau) {
        SimConfig cfg = config;
        for (int attempt = 0;; ++attempt) {
            SimulationResult r;
            try {
                r = simulate(p, tau, init, cfg);
            } catch (const SimulationBlowup& e) {
                out.probes.push_back({tau, Outcome::Inconclusive, 0.0, cfg.t_end});
                throw NumericalFailure("threshold: probe at tau = " + std::to_string(tau) + " failed: " + e.what());
            }
            out.probes.push_back({tau, r.outcome, r.amplitude, cfg.t_end});
            if (r.outcome != Outcome::Inconclusive) return r.outcome;
            if (attempt >= opt.max_retries)
                throw NumericalFailure("threshold: probe at tau = " + std::to_string(tau) + " stayed inconclusive");
            cfg.t_end *= 2.0;
        }
    };
    const Outcome lo = probe(tau_lo);
    if (lo != Outcome::ConvergedToSteadyState)
        throw Degenerate("threshold: invalid bracket, tau_lo = " + std::to_string(tau_lo) + " gives " + to_string(lo));
    const Outcome hi = probe(tau_hi);
    if (hi != Outcome::SustainedOscillation)
        throw Degenerate("threshold: invalid bracket, tau_hi = " + std::to_string(tau_hi) + " gives " + to_string(hi));
    out.lo = tau_lo;
    out.hi = tau_hi;
    out.brackets.emplace_back(out.lo, out.hi);
    while (out.hi - out.lo >= opt.width) {
        const double mid = 0.5 * (out.lo + out.hi);
        const Outcome o = probe(mid);
        if (o == Outcome::ConvergedToSteadyState) out.lo = mid;
        else if (o == Outcome::SustainedOscillation) out.hi = mid;
        else throw NumericalFailure("threshold: probe at tau = " + std::to_string(mid) + " gave " + to_string(o));
        out.brackets.emplace_back(out.lo, out.hi);
    }
    out.threshold = 0.5 * (out.lo + out.hi);
    return out;
}

}  // namespace memdiff
