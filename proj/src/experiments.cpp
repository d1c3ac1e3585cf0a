#include "memdiff/experiments.hpp"

#include "memdiff/errors.hpp"
#include "memdiff/steady_state.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

namespace memdiff {

using nlohmann::json;

std::string to_string(LineQuantity q) {
    switch (q) {
        case LineQuantity::L1Slope: return "l1_slope";
        case LineQuantity::L1Intercept: return "l1_intercept";
        case LineQuantity::L3Slope: return "l3_slope";
        case LineQuantity::L3Intercept: return "l3_intercept";
        case LineQuantity::L5Slope: return "l5_slope";
        case LineQuantity::L6H5Slope: return "l6_h5_slope";
        case LineQuantity::L6H6Slope: return "l6_h6_slope";
    }
    return "?";
}

namespace {

ModelParams at_point(ModelParams p, DiffusionPoint pt) {
    p.d1 = pt.d1;
    p.d2 = pt.d2;
    return p;
}

std::optional<double> line_value(const RegionLines& L, LineQuantity q) {
    switch (q) {
        case LineQuantity::L1Slope: return L.l1.slope;
        case LineQuantity::L1Intercept: return L.l1.intercept;
        case LineQuantity::L3Slope: return L.l3.slope;
        case LineQuantity::L3Intercept: return L.l3.intercept;
        case LineQuantity::L5Slope: return L.l5.slope;
        case LineQuantity::L6H5Slope: return L.l6_h5 ? std::optional(L.l6_h5->slope) : std::nullopt;
        case LineQuantity::L6H6Slope: return L.l6_h6 ? std::optional(L.l6_h6->slope) : std::nullopt;
    }
    return std::nullopt;
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json lines_json(const RegionLines& L) {
    auto line = [](const Line& l) { return json{{"slope", l.slope}, {"intercept", l.intercept}}; };
    json j{{"l1", line(L.l1)}, {"l2", line(L.l2)}, {"l3", line(L.l3)}, {"l4", line(L.l4)}, {"l5", line(L.l5)}};
    j["l6_h5"] = L.l6_h5 ? line(*L.l6_h5) : json(nullptr);
    j["l6_h6"] = L.l6_h6 ? line(*L.l6_h6) : json(nullptr);
    return j;
}

json report_json(const BifurcationReport& r) {
    json j;
    j["kappa_convention"] = to_string(r.kappas.convention);
    j["lambda1_star"] = r.eig1.lambda_star;
    j["lambda2_star"] = r.eig2.lambda_star;
    j["kappas"] = r.kappas.as_array();
    j["K"] = {r.Ks.K1, r.Ks.K2, r.Ks.K3, r.Ks.K4};
    j["lines"] = lines_json(r.region.lines);
    j["region"] = r.region.region ? json(to_string(*r.region.region)) : json("boundary");
    j["H2"] = r.region.H2;
    j["H3"] = r.region.H3;
    j["H5"] = r.region.H5;
    j["H6"] = r.region.H6;
    j["d_star"] = r.region.d_star ? num(*r.region.d_star) : json(nullptr);
    j["lambda_prime0"] = {r.lambda1_prime0, r.lambda2_prime0};
    j["s_from_lambda1"] = num(r.s_from_lambda1);
    j["s_from_lambda2"] = num(r.s_from_lambda2);
    if (r.hopf) {
        const HopfPoint& h = *r.hopf;
        j["hopf"] = {{"branch", to_string(*r.branch)},
                     {"p1", h.p1},
                     {"p2", h.p2},
                     {"h", h.h},
                     {"theta", h.theta},
                     {"characteristic_residuals", h.residuals},
                     {"unit_circle_residual", h.unit_residual},
                     {"transversality_sign", r.transversality->sign},
                     {"transversality_value", r.transversality->value},
                     {"transversality_alternative", r.transversality->alternative},
                     {"sn0_im", *r.sn0_im},
                     {"sn0_im_direct", *r.sn0_im_direct},
                     {"tau", r.tau},
                     {"order", "leading (s -> 0 limits of theta and h)"}};
    } else {
        j["hopf"] = nullptr;
        j["hopf_error"] = r.hopf_error;
    }
    return j;
}

struct JobResult {
    json record;
    std::vector<std::string> failures;
    int expectations = 0;
    double seconds = 0;
};

struct Job {
    std::size_t spec;
    std::string kind;  // analysis | run:<label> | threshold
    std::function<JobResult()> work;
};

std::string join_path(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

JobResult analysis_job(const ExperimentSpec& s, const std::string& dir, bool write) {
    JobResult out;
    json& j = out.record;
    if (s.eigen) {
        const double pi = 3.141592653589793;
        const auto e1 = extrapolated_principal_eigenvalue(s.params.r1, 0, pi, s.analysis.n, s.analysis.n_coarse);
        const auto e2 = extrapolated_principal_eigenvalue(s.params.r2, 0, pi, s.analysis.n, s.analysis.n_coarse);
        auto check = [&](const char* name, const ExtrapolatedEigenvalue& e, double expected) {
            const bool pass = std::abs(e.value - expected) <= s.eigen->tol;
            ++out.expectations;
            if (!pass) out.failures.push_back(s.id + ": " + name + " = " + format_number(e.value));
            return json{{"fine", e.fine}, {"coarse", e.coarse}, {"extrapolated", e.value},
                        {"n_fine", e.n_fine}, {"n_coarse", e.n_coarse}, {"expected", expected},
                        {"tol", s.eigen->tol}, {"pass", pass}};
        };
        j["eigen"] = {{"r1", check("lambda1*", e1, s.eigen->lambda1)}, {"r2", check("lambda2*", e2, s.eigen->lambda2)}};
        if (write) {
            const Grid g = Grid::unit_pi(s.analysis.n);
            write_eigen_csv(join_path(dir, "eigen_r1.csv"), principal_eigen(s.params.r1, g));
            write_eigen_csv(join_path(dir, "eigen_r2.csv"), principal_eigen(s.params.r2, g));
        }
    }
    for (KappaConvention conv : {KappaConvention::SelfFlux, KappaConvention::DirichletEnergy}) {
        const BifurcationReport r = analyze(s.params, s.analysis.n, conv, s.analysis.n_tau);
        j["bifurcation"][to_string(conv)] = report_json(r);
        if (conv != s.line_convention) continue;
        json checks = json::array();
        for (const LineExpectation& e : s.lines) {
            const auto v = line_value(r.region.lines, e.quantity);
            const bool pass = v && std::abs(*v - e.expected) <= e.tol;
            ++out.expectations;
            if (!pass)
                out.failures.push_back(s.id + ": " + to_string(e.quantity) + " = " + (v ? format_number(*v) : "n/a") +
                                       ", expected " + format_number(e.expected) + " +- " + format_number(e.tol));
            checks.push_back({{"quantity", to_string(e.quantity)}, {"computed", v ? json(*v) : json(nullptr)},
                              {"expected", e.expected}, {"tol", e.tol}, {"pass", pass}});
        }
        if (!s.lines.empty()) j["line_checks"] = {{"convention", to_string(conv)}, {"checks", checks}};
        if (s.region_map && write)
            write_regions_csv(join_path(dir, "regions.csv"),
                              sweep_regions(s.params, {-3, 3, 61}, {-3, 3, 61}, s.analysis.n, conv));
    }
    return out;
}

json steady_json(const SteadyStateBuild& b, const SteadyState& used, const ModelParams& p) {
    const H1Check h1 = check_h1(p, used);
    json j{{"s", b.s},
           {"s_from_lambda2", num(b.s_from_lambda2)},
           {"order", to_string(used.order)},
           {"refine_error", b.refine_error},
           {"max_u", used.u.max()},
           {"max_v", used.v.max()},
           {"l2_u", l2_norm(used.u)},
           {"l2_v", l2_norm(used.v)},
           {"H1_bound_u", h1.bound_u},
           {"H1_bound_v", h1.bound_v},
           {"H1_satisfied", h1.satisfied}};
    if (b.refined) {
        j["refined"] = {{"newton_residual", *b.refined->newton_residual},
                        {"iterations", b.refined->newton_iterations},
                        {"continuation", b.refined->used_continuation},
                        {"positivity_loss", b.refined->positivity_loss},
                        {"semi_trivial", b.refined->semi_trivial}};
    }
    return j;
}

JobResult run_job(const ExperimentSpec& s, const SimRun& run, const std::string& dir, bool write) {
    JobResult out;
    json& j = out.record;
    const ModelParams p = at_point(s.params, run.point);
    j["label"] = run.label;
    j["d1"] = run.point.d1;
    j["d2"] = run.point.d2;
    j["tau"] = run.tau;
    j["expected"] = run.expected ? json(to_string(*run.expected)) : json(nullptr);
    std::string outcome;
    try {
        const SteadyStateBuild b = construct_steady_state(p, s.sim.n);
        const SteadyState& init = b.best();
        j["steady_state"] = steady_json(b, init, p);
        std::shared_ptr<SimulationResult> res;
        try {
            res = std::make_shared<SimulationResult>(simulate(p, run.tau, init, s.sim));
            outcome = to_string(res->outcome);
        } catch (const SimulationBlowup& e) {
            res = e.partial;
            outcome = "Blowup";
            j["blowup_time"] = e.time;
        }
        j["dt"] = res->time_grid.dt;
        j["delay_steps"] = res->time_grid.m;
        j["dt_stability_limit"] = num(res->time_grid.stability_limit);
        j["steps"] = res->steps;
        j["amplitude"] = res->amplitude;
        j["amplitude_third_quarter"] = res->amplitude_third;
        j["amplitude_last_quarter"] = res->amplitude_last;
        j["final_deviation"] = res->final_deviation;
        j["period_estimate"] = res->period_estimate ? json(*res->period_estimate) : json(nullptr);
        j["negativity_flag"] = res->negativity_flag;
        if (write) {
            write_timeseries_csv(join_path(dir, "timeseries_" + run.label + ".csv"), *res);
            write_snapshots_csv(join_path(dir, "snapshots_" + run.label + ".csv"), *res);
        }
    } catch (const Error& e) {
        outcome = "Error";
        j["error"] = e.what();
    }
    j["outcome"] = outcome;
    if (run.expected) {
        const bool pass = outcome == to_string(*run.expected);
        ++out.expectations;
        j["pass"] = pass;
        if (!pass)
            out.failures.push_back(s.id + "/" + run.label + ": " + outcome + ", expected " + to_string(*run.expected));
    }
    return out;
}

JobResult threshold_job(const ExperimentSpec& s, const ThresholdSpec& t) {
    JobResult out;
    json& j = out.record;
    const ModelParams p = at_point(s.params, t.point);
    j["bracket"] = {t.tau_lo, t.tau_hi};
    j["expected"] = t.expected;
    j["tol"] = t.tol;
    ++out.expectations;
    ThresholdResult r;
    try {
        const SteadyStateBuild b = construct_steady_state(p, s.sim.n);
        r = find_hopf_threshold(p, t.tau_lo, t.tau_hi, b.best(), s.sim, {t.width, 1});
    } catch (const Error& e) {
        j["error"] = e.what();
        j["pass"] = false;
        out.failures.push_back(s.id + "/threshold: " + e.what());
        return out;
    }
    bool shrinking = true;
    for (std::size_t i = 1; i < r.brackets.size(); ++i)
        shrinking = shrinking && r.brackets[i].first >= r.brackets[i - 1].first &&
                    r.brackets[i].second <= r.brackets[i - 1].second &&
                    r.brackets[i].second - r.brackets[i].first < r.brackets[i - 1].second - r.brackets[i - 1].first;
    const bool inside = r.threshold > t.tau_lo && r.threshold < t.tau_hi;
    const bool pass = inside && shrinking && std::abs(r.threshold - t.expected) <= t.tol;
    j["threshold"] = r.threshold;
    j["final_bracket"] = {r.lo, r.hi};
    json probes = json::array();
    for (const ThresholdProbe& pr : r.probes)
        probes.push_back({{"tau", pr.tau}, {"outcome", to_string(pr.outcome)}, {"amplitude", pr.amplitude}});
    j["probes"] = probes;
    j["pass"] = pass;
    if (!pass) out.failures.push_back(s.id + "/threshold: " + format_number(r.threshold));
    return out;
}

}  // namespace

json to_json(const ExperimentSpec& s) {
    json j{{"id", s.id}, {"description", s.description}, {"params", to_json(s.params)}};
    j["analysis"] = {{"n", s.analysis.n}, {"n_coarse", s.analysis.n_coarse}, {"n_tau", s.analysis.n_tau}};
    j["sim"] = to_json(s.sim);
    j["line_convention"] = to_string(s.line_convention);
    if (s.eigen) j["eigen_expectation"] = {{"lambda1", s.eigen->lambda1}, {"lambda2", s.eigen->lambda2}, {"tol", s.eigen->tol}};
    json lines = json::array();
    for (const auto& l : s.lines) lines.push_back({{"quantity", to_string(l.quantity)}, {"expected", l.expected}, {"tol", l.tol}});
    j["line_expectations"] = lines;
    json runs = json::array();
    for (const auto& r : s.runs)
        runs.push_back({{"label", r.label}, {"d1", r.point.d1}, {"d2", r.point.d2}, {"tau", r.tau},
                        {"expected", r.expected ? json(to_string(*r.expected)) : json(nullptr)}});
    j["runs"] = runs;
    if (s.threshold)
        j["threshold"] = {{"d1", s.threshold->point.d1}, {"d2", s.threshold->point.d2},
                          {"bracket", {s.threshold->tau_lo, s.threshold->tau_hi}},
                          {"expected", s.threshold->expected}, {"tol", s.threshold->tol}, {"width", s.threshold->width}};
    return j;
}

std::vector<ExperimentSpec> builtin_suite() {
    using LQ = LineQuantity;
    const ModelParams q1 = preset_params("Q1"), q2 = preset_params("Q2");
    const DiffusionPoint P1 = preset_point("P1"), P2 = preset_point("P2"), P3 = preset_point("P3"),
                         P4 = preset_point("P4");
    const Outcome conv = Outcome::ConvergedToSteadyState, osc = Outcome::SustainedOscillation;
    std::vector<ExperimentSpec> suite;

    ExperimentSpec eig;
    eig.id = "eigenvalues";
    eig.description = "principal eigenvalues of cos(x)+1 and sin(x)+1 on (0, pi), Richardson from n = 500, 1000";
    eig.params = q1;
    eig.eigen = EigenExpectation{0.9291, 0.5403, 5e-4};
    suite.push_back(eig);

    ExperimentSpec l1;
    l1.id = "q1_lines";
    l1.description = "region lines for Q1";
    l1.params = at_point(q1, P3);
    l1.lines = {{LQ::L1Slope, -1.0622, 0.01}, {LQ::L1Intercept, -0.9050, 0.01}, {LQ::L3Slope, 1.2379, 0.01},
                {LQ::L3Intercept, -0.1827, 0.01}, {LQ::L5Slope, 1.8466, 0.01}, {LQ::L6H5Slope, 30.0015, 0.5}};
    l1.region_map = true;
    suite.push_back(l1);

    ExperimentSpec l2;
    l2.id = "q2_lines";
    l2.description = "region lines for Q2";
    l2.params = at_point(q2, P4);
    l2.lines = {{LQ::L1Slope, -1.0622, 0.01}, {LQ::L1Intercept, -1.0101, 0.01}, {LQ::L3Slope, 0.9903, 0.01},
                {LQ::L3Intercept, -0.2249, 0.01}, {LQ::L5Slope, 0.6155, 0.01}, {LQ::L6H6Slope, 0.7387, 0.01}};
    l2.region_map = true;
    suite.push_back(l2);

    ExperimentSpec st;
    st.id = "q1_stable_points";
    st.description = "Q1 points in D2 stay stable at tau = 10";
    st.params = at_point(q1, P1);
    st.runs = {{"P1_tau10", P1, 10.0, conv}, {"P2_tau10", P2, 10.0, conv}};
    suite.push_back(st);

    ExperimentSpec h5;
    h5.id = "q1_hopf_P3";
    h5.description = "Q1 point P3: stable below and oscillating above the critical delay";
    h5.params = at_point(q1, P3);
    h5.runs = {{"P3_tau4", P3, 4.0, conv}, {"P3_tau10", P3, 10.0, osc}};
    h5.threshold = ThresholdSpec{P3, 4.0, 10.0, 4.6458, 1.0};
    suite.push_back(h5);

    ExperimentSpec h6;
    h6.id = "q2_hopf_P4";
    h6.description = "Q2 point P4: stable below and oscillating above the critical delay";
    h6.params = at_point(q2, P4);
    h6.runs = {{"P4_tau3", P4, 3.0, conv}, {"P4_tau17", P4, 17.0, osc}};
    h6.threshold = ThresholdSpec{P4, 3.0, 17.0, 3.3592, 1.0};
    suite.push_back(h6);

    return suite;
}

SuiteReport run_suite(const std::vector<ExperimentSpec>& specs, const std::string& output_dir,
                      const SuiteOptions& opt) {
    for (std::size_t i = 0; i < specs.size(); ++i)
        for (std::size_t k = 0; k < i; ++k)
            if (specs[i].id == specs[k].id) throw InvalidInput("duplicate experiment id '" + specs[i].id + "'");

    std::vector<std::string> dirs;
    for (const auto& s : specs) {
        dirs.push_back(join_path(output_dir, s.id));
        if (opt.write_files) {
            std::error_code ec;
            std::filesystem::create_directories(dirs.back(), ec);
            if (ec) throw Error("cannot create " + dirs.back() + ": " + ec.message());
        }
    }

    std::vector<Job> jobs;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const ExperimentSpec& s = specs[i];
        const std::string& dir = dirs[i];
        jobs.push_back({i, "analysis", [&s, &dir, &opt] { return analysis_job(s, dir, opt.write_files); }});
        for (const SimRun& r : s.runs)
            jobs.push_back({i, "run:" + r.label, [&s, &r, &dir, &opt] { return run_job(s, r, dir, opt.write_files); }});
        if (s.threshold) jobs.push_back({i, "threshold", [&s] { return threshold_job(s, *s.threshold); }});
    }

    std::vector<JobResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < jobs.size();) {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                results[k] = jobs[k].work();
            } catch (const std::exception& e) {
                results[k].record = {{"error", e.what()}};
                results[k].failures.push_back(specs[jobs[k].spec].id + "/" + jobs[k].kind + ": " + e.what());
                results[k].expectations += 1;
            }
            results[k].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    unsigned nw = opt.workers ? opt.workers : std::max(1u, std::thread::hardware_concurrency());
    nw = static_cast<unsigned>(std::min<std::size_t>(nw, std::max<std::size_t>(1, jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < nw; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // Assembly in job order, independent of which worker ran what.
    SuiteReport rep;
    json suite = json::array();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        json rec{{"spec", to_json(specs[i])}, {"runs", json::array()}};
        json fails = json::array();
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            if (jobs[k].spec != i) continue;
            const JobResult& r = results[k];
            if (jobs[k].kind == "analysis") rec["analysis"] = r.record;
            else if (jobs[k].kind == "threshold") rec["threshold"] = r.record;
            else rec["runs"].push_back(r.record);
            rep.expectations += r.expectations;
            for (const auto& f : r.failures) {
                rep.failures.push_back(f);
                fails.push_back(f);
            }
            rep.timings[specs[i].id][jobs[k].kind] = r.seconds;
        }
        rec["failures"] = fails;
        rec["pass"] = fails.empty();
        suite.push_back(rec);
    }
    rep.payload = {{"experiments", suite},
                   {"summary", {{"expectations", rep.expectations}, {"failures", rep.failures}, {"pass", rep.ok()}}}};
    if (rep.timings.is_null()) rep.timings = json::object();

    if (opt.write_files) {
        json doc = rep.payload;
        doc["environment"] = {{"compiler", __VERSION__}, {"cxx_standard", __cplusplus}, {"workers", nw}};
        doc["timings_seconds"] = rep.timings;
        std::filesystem::create_directories(output_dir);
        std::ofstream f(join_path(output_dir, "report.json"), std::ios::trunc);
        if (!f) throw Error("cannot write report.json in " + output_dir);
        f << doc.dump(2) << '\n';
    }
    return rep;
}

std::vector<RegionCell> sweep_regions(const ModelParams& p, SweepRange r1, SweepRange r2, std::size_t n,
                                      KappaConvention convention) {
    if (r1.count < 1 || r2.count < 1) throw InvalidInput("sweep: need at least one sample per axis");
    const Grid g = Grid::unit_pi(n);
    const EigenPair e1 = principal_eigen(p.r1, g), e2 = principal_eigen(p.r2, g);
    const KappaSet k = compute_kappas(e1, e2, p.omega, convention);
    const KSet K = compute_Ks(k, p, e1.lambda_star, e2.lambda_star);
    auto axis = [](SweepRange r, std::size_t i) {
        return r.count == 1 ? r.lo : r.lo + (r.hi - r.lo) * static_cast<double>(i) / static_cast<double>(r.count - 1);
    };
    std::vector<RegionCell> cells;
    cells.reserve(r1.count * r2.count);
    for (std::size_t j = 0; j < r2.count; ++j)
        for (std::size_t i = 0; i < r1.count; ++i) {
            const double d1 = axis(r1, i), d2 = axis(r2, j);
            const RegionReport rep = classify_region(d1, d2, k, K);
            cells.push_back({d1, d2, rep.region ? to_string(*rep.region) : "boundary", rep.H2, rep.H3, rep.H5, rep.H6});
        }
    return cells;
}

}  // namespace memdiff
