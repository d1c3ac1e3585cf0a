// Acceptance gate: one PASS/FAIL line per criterion. Every tolerance is fixed here.
#include "memdiff/bifurcation.hpp"
#include "memdiff/csv.hpp"
#include "memdiff/errors.hpp"
#include "memdiff/experiments.hpp"
#include "memdiff/simulator.hpp"
#include "memdiff/steady_state.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace memdiff;
namespace fs = std::filesystem;

namespace {

constexpr double kEigenTol = 5e-4;
constexpr double kEigenSeconds = 1.0;
constexpr double kTrivialEigenTol = 1e-6;
constexpr double kTrivialPhiTol = 1e-4;
constexpr double kLineTol = 0.01;
constexpr double kL6H5Tol = 0.5;
constexpr double kLineSeconds = 1.0;
constexpr double kHopfTol = 1e-10;
constexpr double kRunSeconds = 60.0;
constexpr double kThresholdTol = 1.0;
constexpr double kSelfAdjointTol = 1e-12;
constexpr double kTelescopeTol = 1e-13;
constexpr int kPartitionPoints = 10000;

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;
    void check(bool ok, const std::string& what) {
        notes.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
        pass = pass && ok;
    }
    void info(const std::string& what) { notes.push_back("  info " + what); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelParams at(const std::string& q, const std::string& pt) {
    ModelParams p = preset_params(q);
    const DiffusionPoint d = preset_point(pt);
    p.d1 = d.d1;
    p.d2 = d.d2;
    return p;
}

Verdict principal_eigenvalues() {
    Verdict v;
    const double pi = std::numbers::pi;
    struct Case {
        const char* name;
        ResourceProfile r;
        double expected;
    };
    for (const Case& c : {Case{"cos(x)+1", ResourceProfile::cos1(), 0.9291},
                          Case{"sin(x)+1", ResourceProfile::sin1(), 0.5403}}) {
        const auto t0 = std::chrono::steady_clock::now();
        const ExtrapolatedEigenvalue e = extrapolated_principal_eigenvalue(c.r, 0, pi, 1000, 500);
        const double s = seconds_since(t0);
        v.check(std::abs(e.value - c.expected) <= kEigenTol,
                fmt("%s: lambda* = %.6f (n=1000: %.8f, n=500: %.8f), expected %.4f +- %.0e", c.name, e.value, e.fine,
                    e.coarse, c.expected, kEigenTol));
        v.check(s < kEigenSeconds, fmt("%s: %.3f s (limit %.0f s)", c.name, s, kEigenSeconds));
    }
    return v;
}

Verdict trivial_eigen_case() {
    Verdict v;
    const ExtrapolatedEigenvalue e =
        extrapolated_principal_eigenvalue(ResourceProfile::constant(1.0), 0, std::numbers::pi, 1000, 500);
    v.check(std::abs(e.value - 1.0) <= kTrivialEigenTol,
            fmt("r = 1: extrapolated lambda* - 1 = %.3e (tol %.0e)", e.value - 1.0, kTrivialEigenTol));
    const Grid g = Grid::unit_pi(1000);
    const EigenPair p = principal_eigen(ResourceProfile::constant(1.0), g);
    double dev = 0;
    for (std::size_t j = 0; j < g.n(); ++j)
        dev = std::max(dev, std::abs(p.phi[j] - std::sqrt(2 / std::numbers::pi) * std::sin(g.x(j))));
    v.check(dev < kTrivialPhiTol, fmt("max |phi - sqrt(2/pi) sin x| = %.3e (tol %.0e)", dev, kTrivialPhiTol));
    return v;
}

Verdict line_coefficients() {
    Verdict v;
    struct Expect {
        LineQuantity q;
        double value, tol;
    };
    const std::vector<Expect> q1 = {{LineQuantity::L1Slope, -1.0622, kLineTol},  {LineQuantity::L1Intercept, -0.9050, kLineTol},
                                    {LineQuantity::L3Slope, 1.2379, kLineTol},   {LineQuantity::L3Intercept, -0.1827, kLineTol},
                                    {LineQuantity::L5Slope, 1.8466, kLineTol},   {LineQuantity::L6H5Slope, 30.0015, kL6H5Tol}};
    const std::vector<Expect> q2 = {{LineQuantity::L1Slope, -1.0622, kLineTol},  {LineQuantity::L1Intercept, -1.0101, kLineTol},
                                    {LineQuantity::L3Slope, 0.9903, kLineTol},   {LineQuantity::L3Intercept, -0.2249, kLineTol},
                                    {LineQuantity::L5Slope, 0.6155, kLineTol},   {LineQuantity::L6H6Slope, 0.7387, kLineTol}};
    auto value = [](const RegionLines& L, LineQuantity q) -> double {
        switch (q) {
            case LineQuantity::L1Slope: return L.l1.slope;
            case LineQuantity::L1Intercept: return L.l1.intercept;
            case LineQuantity::L3Slope: return L.l3.slope;
            case LineQuantity::L3Intercept: return L.l3.intercept;
            case LineQuantity::L5Slope: return L.l5.slope;
            case LineQuantity::L6H5Slope: return L.l6_h5 ? L.l6_h5->slope : NAN;
            case LineQuantity::L6H6Slope: return L.l6_h6 ? L.l6_h6->slope : NAN;
        }
        return NAN;
    };
    // The reference tables follow the Dirichlet-energy reading of kappa1, kappa2; self-flux values are info only.
    for (const auto& [name, expects] : {std::pair{"Q1", q1}, std::pair{"Q2", q2}}) {
        const ModelParams p = preset_params(name);
        const auto t0 = std::chrono::steady_clock::now();
        const Grid g = Grid::unit_pi(1000);
        const EigenPair e1 = principal_eigen(p.r1, g), e2 = principal_eigen(p.r2, g);
        const KappaSet k = compute_kappas(e1, e2, p.omega, KappaConvention::DirichletEnergy);
        const RegionLines L = region_lines(k, compute_Ks(k, p, e1.lambda_star, e2.lambda_star));
        const double s = seconds_since(t0);
        const KappaSet ks = compute_kappas(e1, e2, p.omega, KappaConvention::SelfFlux);
        const RegionLines Ls = region_lines(ks, compute_Ks(ks, p, e1.lambda_star, e2.lambda_star));
        for (const Expect& x : expects) {
            const double got = value(L, x.q);
            v.check(std::abs(got - x.value) <= x.tol,
                    fmt("%s %s = %.4f, expected %.4f +- %.2g", name, to_string(x.q).c_str(), got, x.value, x.tol));
            v.info(fmt("%s %s under self-flux kappa = %.4f", name, to_string(x.q).c_str(), value(Ls, x.q)));
        }
        v.check(s < kLineSeconds, fmt("%s: %.3f s (limit %.0f s)", name, s, kLineSeconds));
    }
    return v;
}

Verdict hopf_algebra() {
    Verdict v;
    struct Case {
        const char* q;
        const char* pt;
        HopfBranch branch;
        int sign;
    };
    for (KappaConvention conv : {KappaConvention::DirichletEnergy, KappaConvention::SelfFlux}) {
        for (const Case& c : {Case{"Q1", "P3", HopfBranch::H2H5, -1}, Case{"Q2", "P4", HopfBranch::H3H6, +1}}) {
            const std::string tag = std::string(c.q) + "/" + c.pt + " (" + to_string(conv) + ")";
            const ModelParams p = at(c.q, c.pt);
            const Grid g = Grid::unit_pi(1000);
            const EigenPair e1 = principal_eigen(p.r1, g), e2 = principal_eigen(p.r2, g);
            const KappaSet k = compute_kappas(e1, e2, p.omega, conv);
            const KSet K = compute_Ks(k, p, e1.lambda_star, e2.lambda_star);
            HopfPoint hp;
            try {
                hp = hopf_point(p.d1, p.d2, k, K, c.branch);
            } catch (const Error& e) {
                v.check(false, tag + ": no Hopf point: " + e.what());
                continue;
            }
            v.check(std::abs(hp.unit_residual) <= kHopfTol,
                    fmt("%s: p1^2 + p2^2 - 1 = %.2e", tag.c_str(), hp.unit_residual));
            for (int i = 0; i < 4; ++i)
                v.check(std::abs(hp.residuals[i]) <= kHopfTol,
                        fmt("%s: characteristic equation %d residual = %.3e (tol %.0e)", tag.c_str(), i + 1,
                            hp.residuals[i], kHopfTol));
            const bool signs = c.sign < 0 ? hp.p1 < 0 && hp.p2 < 0 : hp.p1 > 0 && hp.p2 > 0;
            v.check(signs, fmt("%s: p1 = %.4f, p2 = %.4f, expected both %s 0", tag.c_str(), hp.p1, hp.p2,
                               c.sign < 0 ? "<" : ">"));
            const Transversality t = transversality_sign(hp, p.d1, p.d2, k, K);
            v.check(t.sign == 1, fmt("%s: transversality value %.4f (sign %+d); alternative form %.4f", tag.c_str(),
                                     t.value, t.sign, t.alternative));
        }
    }
    return v;
}

Verdict qualitative_dynamics() {
    Verdict v;
    struct Case {
        const char* q;
        const char* pt;
        double tau;
        Outcome expected;
    };
    const Outcome conv = Outcome::ConvergedToSteadyState, osc = Outcome::SustainedOscillation;
    SimConfig cfg;
    cfg.n = 128;
    cfg.t_end = 400;
    cfg.epsilon = 0.01;
    for (const Case& c : {Case{"Q1", "P1", 10, conv}, Case{"Q1", "P2", 10, conv}, Case{"Q1", "P3", 4, conv},
                          Case{"Q1", "P3", 10, osc}, Case{"Q2", "P4", 3, conv}, Case{"Q2", "P4", 17, osc}}) {
        const std::string tag = fmt("%s/%s tau=%g", c.q, c.pt, c.tau);
        const auto t0 = std::chrono::steady_clock::now();
        const ModelParams p = at(c.q, c.pt);
        const SteadyStateBuild b = construct_steady_state(p, cfg.n);
        const H1Check h1 = check_h1(p, b.best());
        std::string got;
        std::string extra;
        try {
            const SimulationResult r = simulate(p, c.tau, b.best(), cfg);
            got = to_string(r.outcome);
            extra = fmt("amplitude %.4g, period %.4g, dt %.3g", r.amplitude, r.period_estimate.value_or(NAN),
                        r.time_grid.dt);
        } catch (const SimulationBlowup& e) {
            got = "Blowup";
            extra = fmt("at t = %.1f", e.time);
        }
        const double s = seconds_since(t0);
        v.check(got == to_string(c.expected), tag + ": " + got + " (" + extra + "), expected " + to_string(c.expected));
        v.check(s <= kRunSeconds, fmt("%s: %.1f s (limit %.0f s)", tag.c_str(), s, kRunSeconds));
        v.info(fmt("%s: steady state %s%s, |d1| max u = %.3f, |d2| max v = %.3f", tag.c_str(),
                   to_string(b.best().order).c_str(), b.refine_error.empty() ? "" : " (refinement failed)",
                   h1.bound_u, h1.bound_v));
    }
    return v;
}

Verdict hopf_thresholds() {
    Verdict v;
    struct Case {
        const char* q;
        const char* pt;
        double lo, hi, expected;
    };
    SimConfig cfg;
    for (const Case& c : {Case{"Q1", "P3", 4, 10, 4.6458}, Case{"Q2", "P4", 3, 17, 3.3592}}) {
        const std::string tag = fmt("%s/%s [%g, %g]", c.q, c.pt, c.lo, c.hi);
        const ModelParams p = at(c.q, c.pt);
        const SteadyStateBuild b = construct_steady_state(p, cfg.n);
        try {
            const ThresholdResult r = find_hopf_threshold(p, c.lo, c.hi, b.best(), cfg, {0.25, 1});
            v.check(r.threshold > c.lo && r.threshold < c.hi, fmt("%s: threshold %.4f inside the bracket", tag.c_str(), r.threshold));
            bool shrink = true;
            for (std::size_t i = 1; i < r.brackets.size(); ++i)
                shrink = shrink && r.brackets[i].first >= r.brackets[i - 1].first &&
                         r.brackets[i].second <= r.brackets[i - 1].second &&
                         r.brackets[i].second - r.brackets[i].first < r.brackets[i - 1].second - r.brackets[i - 1].first;
            v.check(shrink, tag + ": brackets shrink monotonically");
            v.check(std::abs(r.threshold - c.expected) <= kThresholdTol,
                    fmt("%s: threshold %.4f, expected %.4f +- %.1f", tag.c_str(), r.threshold, c.expected, kThresholdTol));
        } catch (const Error& e) {
            v.check(false, tag + ": " + e.what());
        }
    }
    return v;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Verdict property_suites() {
    Verdict v;
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> U(-1, 1);
    auto random_field = [&](const Grid& g) {
        Field f(g);
        for (auto& x : f.values()) x = U(rng);
        return f;
    };

    {
        double worst = 0, worst_flux = 0;
        for (std::size_t n : {7, 128, 1000}) {
            const Grid g = Grid::unit_pi(n);
            for (int t = 0; t < 20; ++t) {
                const Field f = random_field(g), q = random_field(g), u = random_field(g);
                const double a = inner_product(laplacian(f), q), b = inner_product(f, laplacian(q));
                worst = std::max(worst, std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}));
                const double c = inner_product(flux_divergence(u, f), q), d = inner_product(f, flux_divergence(u, q));
                worst_flux = std::max(worst_flux, std::abs(c - d) / std::max({std::abs(c), std::abs(d), 1e-300}));
            }
        }
        v.check(worst <= kSelfAdjointTol, fmt("laplacian self-adjointness: worst relative defect %.2e", worst));
        v.check(worst_flux <= kSelfAdjointTol,
                fmt("flux operator w -> div(u grad w) self-adjointness: worst relative defect %.2e", worst_flux));
    }
    {
        double worst = 0;
        for (std::size_t n : {7, 128, 1000}) {
            const Grid g = Grid::unit_pi(n);
            for (int t = 0; t < 20; ++t) {
                const Field u = random_field(g), w = random_field(g);
                const Field d = flux_divergence(u, w);
                const auto F = interface_fluxes(u, w);
                double total = 0, scale = 0;
                for (double x : d.values()) {
                    total += x;
                    scale += std::abs(x);
                }
                worst = std::max(worst, std::abs(g.h() * total - (F.back() - F.front())) / (g.h() * scale));
            }
        }
        v.check(worst <= kTelescopeTol, fmt("flux divergence telescoping: worst relative defect %.2e", worst));
    }
    {
        ModelParams p = preset_params("Q1");
        SimConfig cfg;
        cfg.epsilon = 0;
        cfg.perturbation = "none";
        cfg.t_end = 100;
        const SteadyStateBuild b = construct_steady_state(p, cfg.n);
        if (!b.refined) {
            v.check(false, "equilibrium preservation: no refined steady state");
        } else {
            const SimulationResult r = simulate(p, 0.0, *b.refined, cfg);
            double worst = 0;
            for (double d : r.deviation) worst = std::max(worst, d);
            const double bound =
                10 * (*b.refined->newton_residual + r.time_grid.dt * r.time_grid.dt * cfg.t_end);
            v.check(worst < bound, fmt("equilibrium preservation (d = 0, tau = 0): max deviation %.2e < bound %.2e",
                                       worst, bound));
        }
    }
    {
        const fs::path base = fs::temp_directory_path() / "memdiff_acceptance_reproduce";
        fs::remove_all(base);
        int codes[2];
        for (int i = 0; i < 2; ++i) {
            const std::string cmd = std::string(MEMDIFF_CLI_PATH) + " --out " + (base / std::to_string(i)).string() +
                                    " reproduce > " + (base.string() + "_" + std::to_string(i) + ".log") + " 2>&1";
            const int st = std::system(cmd.c_str());
            codes[i] = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
        }
        v.info(fmt("reproduce exit codes %d and %d", codes[0], codes[1]));
        std::size_t files = 0, same = 0;
        for (const auto& e : fs::recursive_directory_iterator(base / "0")) {
            if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
            ++files;
            same += slurp(e.path()) == slurp(base / "1" / fs::relative(e.path(), base / "0"));
        }
        auto payload = [&](int i) {
            auto j = nlohmann::json::parse(slurp(base / std::to_string(i) / "report.json"));
            j.erase("timings_seconds");
            j.erase("environment");
            return j;
        };
        v.check(files > 0 && same == files, fmt("reproduce determinism: %zu of %zu CSV files bit-identical", same, files));
        v.check(payload(0) == payload(1), "reproduce determinism: report payloads identical (timings excluded)");
    }
    {
        const ModelParams p = preset_params("Q1");
        const Grid g = Grid::unit_pi(1000);
        const EigenPair e1 = principal_eigen(p.r1, g), e2 = principal_eigen(p.r2, g);
        bool all_ok = true;
        int boundary = 0;
        for (KappaConvention conv : {KappaConvention::SelfFlux, KappaConvention::DirichletEnergy}) {
            const KappaSet k = compute_kappas(e1, e2, p.omega, conv);
            const KSet K = compute_Ks(k, p, e1.lambda_star, e2.lambda_star);
            const RegionLines L = region_lines(k, K);
            std::uniform_real_distribution<double> D(-5, 5);
            for (int i = 0; i < kPartitionPoints; ++i) {
                const double d1 = D(rng), d2 = D(rng);
                const RegionReport r = classify_region(d1, d2, k, K);
                if (r.boundary) {
                    ++boundary;
                    all_ok = all_ok && !r.region;
                    continue;
                }
                auto between = [](double x, double a, double b) { return std::min(a, b) < x && x < std::max(a, b); };
                const bool in2 = between(d2, L.l1.at(d1), L.l2.at(d1)), in1 = between(d2, L.l3.at(d1), L.l4.at(d1));
                const bool is1 = r.region == Region::D1, is2 = r.region == Region::D2,
                           is3 = r.region == Region::D3_1 || r.region == Region::D3_2;
                all_ok = all_ok && r.region && (is1 + is2 + is3 == 1) && (!is2 || in2) && (!is1 || (in1 && !in2)) &&
                         (!is3 || (!in1 && !in2));
            }
        }
        v.check(all_ok, fmt("region partition over %d random points per convention: exactly one of D1, D2, D3, "
                            "D1 and D2 disjoint (%d boundary points excluded)",
                            kPartitionPoints, boundary));
    }
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"principal_eigenvalues", principal_eigenvalues}, {"trivial_eigen_case", trivial_eigen_case},
        {"line_coefficients", line_coefficients},         {"hopf_algebra", hopf_algebra},
        {"qualitative_dynamics", qualitative_dynamics},   {"hopf_thresholds", hopf_thresholds},
        {"property_suites", property_suites}};

    std::string only;
    bool verbose = true;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) only = argv[++i];
        else if (a == "--quiet") verbose = false;
        else {
            std::fprintf(stderr, "usage: acceptance [--only <criterion>] [--quiet]\n");
            return 2;
        }
    }
    if (!only.empty() && std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == only; })) {
        std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
        return 2;
    }

    int failed = 0;
    for (const auto& [name, run] : criteria) {
        if (!only.empty() && name != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v.check(false, std::string("unexpected error: ") + e.what());
        }
        std::printf("%s %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0));
        if (verbose)
            for (const auto& n : v.notes) std::printf("%s\n", n.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed ? 1 : 0;
}
