#include "memdiff/bifurcation.hpp"
#include "memdiff/config.hpp"
#include "memdiff/csv.hpp"
#include "memdiff/eigensolver.hpp"
#include "memdiff/errors.hpp"
#include "memdiff/experiments.hpp"
#include "memdiff/steady_state.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>

using namespace memdiff;

namespace {

constexpr int kOk = 0, kInvalid = 2, kNumerical = 3, kExpectation = 4;
const double kPi = 3.141592653589793;

struct Overrides {
    std::string config, preset, point, out, kappa;
    std::optional<double> d1, d2, tau;
    bool dump = false;
};

RunConfig resolve(const Overrides& o) {
    RunConfig c = o.config.empty() ? default_run_config() : load_run_config(o.config);
    if (!o.preset.empty()) {
        const double d1 = c.model.d1, d2 = c.model.d2;
        c.model = preset_params(o.preset);
        c.model.d1 = d1;
        c.model.d2 = d2;
    }
    if (!o.point.empty()) {
        const DiffusionPoint pt = preset_point(o.point);
        c.model.d1 = pt.d1;
        c.model.d2 = pt.d2;
    }
    if (o.d1) c.model.d1 = *o.d1;
    if (o.d2) c.model.d2 = *o.d2;
    if (o.tau) c.tau = *o.tau;
    if (!o.out.empty()) c.output_dir = o.out;
    if (!o.kappa.empty()) c.analysis.kappa_convention = parse_kappa_convention(o.kappa);
    c.model.validate();
    c.sim.validate();
    if (!(c.tau >= 0)) throw InvalidInput("tau must be non-negative");
    return c;
}

std::string out_file(const RunConfig& c, const std::string& name) {
    std::filesystem::create_directories(c.output_dir);
    return (std::filesystem::path(c.output_dir) / name).string();
}

void print_line(const std::string& key, double v) { std::printf("%-24s %.10g\n", key.c_str(), v); }

void print_hopf(const BifurcationReport& r) {
    std::printf("region                   %s\n", r.region.region ? to_string(*r.region.region).c_str() : "boundary");
    std::printf("H2 H3 H5 H6              %d %d %d %d\n", r.region.H2, r.region.H3, r.region.H5, r.region.H6);
    if (!r.hopf) {
        std::printf("hopf                     none (%s)\n", r.hopf_error.c_str());
        return;
    }
    const HopfPoint& h = *r.hopf;
    std::printf("branch                   %s\n", to_string(*r.branch).c_str());
    print_line("d_star", h.d_star);
    print_line("p1", h.p1);
    print_line("p2", h.p2);
    print_line("h", h.h);
    print_line("theta", h.theta);
    print_line("unit_circle_residual", h.unit_residual);
    for (int i = 0; i < 4; ++i) print_line("char_residual_" + std::to_string(i + 1), h.residuals[i]);
    print_line("transversality_sign", r.transversality->sign);
    print_line("s", r.s_from_lambda1);
    for (std::size_t i = 0; i < r.tau.size(); ++i) print_line("tau_" + std::to_string(i), r.tau[i]);
    print_line("sn0_im", *r.sn0_im);
    print_line("sn0_im_direct", *r.sn0_im_direct);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memdiff: delayed memory-diffusion competition model on (0, pi)"};
    app.require_subcommand(0, 1);
    Overrides o;
    app.add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_flag("--dump-config", o.dump, "print the resolved configuration and exit");
    app.add_option("--preset", o.preset, "parameter set Q1 or Q2 (keeps d1, d2)");
    app.add_option("--point", o.point, "diffusion point P1..P4");
    app.add_option("--d1", o.d1, "memory diffusion coefficient of u");
    app.add_option("--d2", o.d2, "memory diffusion coefficient of v");
    app.add_option("--tau", o.tau, "memory delay");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--kappa-convention", o.kappa, "self-flux or dirichlet-energy");

    std::string profile = "cos1";
    std::size_t n = 0, n_coarse = 0;
    auto* eigen = app.add_subcommand("eigen", "principal eigenvalue and eigenfunction CSV");
    eigen->add_option("--profile", profile, "cos1, sin1 or const:<c>");
    eigen->add_option("--n", n, "interior nodes");
    eigen->add_option("--n-coarse", n_coarse, "Richardson partner grid (0 disables)");

    auto* coeffs = app.add_subcommand("coeffs", "kappa, K and lambda' table");
    coeffs->add_option("--n", n, "interior nodes");

    std::vector<double> range1{-3, 3}, range2{-3, 3};
    std::size_t count = 61;
    bool sweep_flag = false;
    auto* regions = app.add_subcommand("regions", "classify a point, or sweep a box with --sweep");
    regions->add_flag("--sweep", sweep_flag, "write regions.csv over a grid");
    auto* sweep = app.add_subcommand("sweep", "region map CSV");
    for (auto* s : {regions, sweep}) {
        s->add_option("--n", n, "interior nodes");
        s->add_option("--d1-range", range1, "lo hi")->expected(2);
        s->add_option("--d2-range", range2, "lo hi")->expected(2);
        s->add_option("--count", count, "samples per axis")->check(CLI::PositiveNumber);
    }

    auto* steady = app.add_subcommand("steady", "construct and refine the positive steady state");
    steady->add_option("--n", n, "interior nodes");

    auto* tau = app.add_subcommand("tau", "Hopf data and critical delays");
    tau->add_option("--n", n, "interior nodes");

    std::vector<double> bracket;
    auto* simulate_cmd = app.add_subcommand("simulate", "one delayed simulation, or a threshold bisection");
    simulate_cmd->add_option("--threshold", bracket, "tau_lo tau_hi")->expected(2);

    unsigned workers = 0;
    auto* reproduce = app.add_subcommand("reproduce", "run the builtin experiment suite");
    reproduce->add_option("--workers", workers, "parallel jobs (0: all cores)");

    for (auto* s : app.get_subcommands([](CLI::App*) { return true; })) s->fallthrough();

    if (argc < 2) {
        std::cerr << app.help();
        return kInvalid;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalid;
    }
    if (!o.dump && app.get_subcommands().empty()) {
        std::cerr << app.help();
        return kInvalid;
    }

    try {
        const RunConfig c = resolve(o);
        if (o.dump) {
            std::cout << to_json(c).dump(2) << '\n';
            return kOk;
        }
        const std::size_t na = n ? n : c.analysis.n;
        const ModelParams& p = c.model;

        if (*eigen) {
            const ResourceProfile r = ResourceProfile::parse(profile);
            const Grid g = Grid::unit_pi(na);
            const EigenPair e = principal_eigen(r, g);
            print_line("lambda_star", e.lambda_star);
            print_line("residual", e.residual);
            const std::size_t nc = eigen->count("--n-coarse") ? n_coarse : (n ? n / 2 : c.analysis.n_coarse);
            if (nc > 0) print_line("lambda_star_extrapolated", extrapolated_principal_eigenvalue(r, 0, kPi, na, nc).value);
            write_eigen_csv(out_file(c, "eigen.csv"), e);
        } else if (*coeffs) {
            const BifurcationReport r = analyze(p, na, c.analysis.kappa_convention, c.analysis.n_tau);
            std::printf("kappa_convention         %s\n", to_string(r.kappas.convention).c_str());
            print_line("lambda1_star", r.eig1.lambda_star);
            print_line("lambda2_star", r.eig2.lambda_star);
            const auto ks = r.kappas.as_array();
            for (std::size_t i = 0; i < ks.size(); ++i) print_line("kappa" + std::to_string(i + 1), ks[i]);
            print_line("K1", r.Ks.K1);
            print_line("K2", r.Ks.K2);
            print_line("K3", r.Ks.K3);
            print_line("K4", r.Ks.K4);
            print_line("lambda1_prime0", r.lambda1_prime0);
            print_line("lambda2_prime0", r.lambda2_prime0);
            const RegionLines& L = r.region.lines;
            print_line("l1_slope", L.l1.slope);
            print_line("l1_intercept", L.l1.intercept);
            print_line("l3_slope", L.l3.slope);
            print_line("l3_intercept", L.l3.intercept);
            print_line("l5_slope", L.l5.slope);
            if (L.l6_h5) print_line("l6_h5_slope", L.l6_h5->slope);
            if (L.l6_h6) print_line("l6_h6_slope", L.l6_h6->slope);
        } else if (*regions && !sweep_flag) {
            const Grid g = Grid::unit_pi(na);
            const EigenPair e1 = principal_eigen(p.r1, g), e2 = principal_eigen(p.r2, g);
            const KappaSet k = compute_kappas(e1, e2, p.omega, c.analysis.kappa_convention);
            const RegionReport rep = classify_region(p.d1, p.d2, k, compute_Ks(k, p, e1.lambda_star, e2.lambda_star));
            std::printf("%s\n", rep.region ? to_string(*rep.region).c_str() : "boundary");
            std::printf("H2=%d H3=%d H5=%d H6=%d\n", rep.H2, rep.H3, rep.H5, rep.H6);
        } else if (*regions || *sweep) {
            const auto cells = sweep_regions(p, {range1[0], range1[1], count}, {range2[0], range2[1], count}, na,
                                             c.analysis.kappa_convention);
            const std::string path = out_file(c, "regions.csv");
            write_regions_csv(path, cells);
            std::printf("%zu cells written to %s\n", cells.size(), path.c_str());
        } else if (*steady) {
            const SteadyStateBuild b = construct_steady_state(p, na);
            const SteadyState& st = b.best();
            print_line("s", b.s);
            print_line("s_from_lambda2", b.s_from_lambda2);
            std::printf("order                    %s\n", to_string(st.order).c_str());
            if (!b.refine_error.empty()) std::printf("refine_error             %s\n", b.refine_error.c_str());
            if (b.refined) {
                print_line("newton_residual", *b.refined->newton_residual);
                std::printf("semi_trivial             %d\n", b.refined->semi_trivial);
            }
            print_line("max_u", st.u.max());
            print_line("max_v", st.v.max());
            const H1Check h1 = check_h1(p, st);
            print_line("H1_bound_u", h1.bound_u);
            print_line("H1_bound_v", h1.bound_v);
            write_steady_csv(out_file(c, "steady.csv"), st.u, st.v);
        } else if (*tau) {
            print_hopf(analyze(p, na, c.analysis.kappa_convention, c.analysis.n_tau));
        } else if (*simulate_cmd) {
            const SteadyStateBuild b = construct_steady_state(p, c.sim.n);
            if (!bracket.empty()) {
                const ThresholdResult r = find_hopf_threshold(p, bracket[0], bracket[1], b.best(), c.sim);
                for (const ThresholdProbe& pr : r.probes)
                    std::printf("probe tau=%.6g %s amplitude=%.4g\n", pr.tau, to_string(pr.outcome).c_str(), pr.amplitude);
                print_line("threshold", r.threshold);
                print_line("bracket_lo", r.lo);
                print_line("bracket_hi", r.hi);
                return kOk;
            }
            SimulationResult res;
            int code = kOk;
            try {
                res = simulate(p, c.tau, b.best(), c.sim);
            } catch (const SimulationBlowup& e) {
                std::cerr << "memdiff: " << e.what() << '\n';
                res = *e.partial;
                code = kNumerical;
            }
            write_timeseries_csv(out_file(c, "timeseries.csv"), res);
            write_snapshots_csv(out_file(c, "snapshots.csv"), res);
            if (code != kOk) return code;
            std::printf("outcome                  %s\n", to_string(res.outcome).c_str());
            print_line("dt", res.time_grid.dt);
            print_line("amplitude", res.amplitude);
            print_line("final_deviation", res.final_deviation);
            if (res.period_estimate) print_line("period", *res.period_estimate);
        } else if (*reproduce) {
            const SuiteReport rep = run_suite(builtin_suite(), c.output_dir, {workers, true});
            for (const auto& f : rep.failures) std::printf("FAIL %s\n", f.c_str());
            std::printf("%d expectations, %zu failures; report in %s\n", rep.expectations, rep.failures.size(),
                        c.output_dir.c_str());
            return rep.ok() ? kOk : kExpectation;
        }
        return kOk;
    } catch (const InvalidInput& e) {
        std::cerr << "memdiff: invalid input: " << e.what() << '\n';
        return kInvalid;
    } catch (const NumericalFailure& e) {
        std::cerr << "memdiff: numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "memdiff: " << e.what() << '\n';
        return kNumerical;
    }
}
