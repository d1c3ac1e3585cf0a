#include "memdiff/bifurcation.hpp"
#include "memdiff/errors.hpp"
#include "memdiff/model.hpp"

#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace memdiff;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Synthetic {
    KappaSet k;
    KSet K;
    double d1 = 1, d2 = 1;
    double p1, p2, h, theta;
};

// Builds (kappa, K) from a chosen solution (p1, p2, h, theta) of the four characteristic equations,
// so the closed forms have a known answer. Returns nothing when some K is not positive.
std::optional<Synthetic> make_instance(double a, double b, double theta, double phase, double h) {
    Synthetic s;
    s.k.kappa1 = a;
    s.k.kappa2 = b;
    s.p1 = std::cos(phase);
    s.p2 = std::sin(phase);
    s.h = h;
    s.theta = theta;
    const double c = std::cos(theta), sn = std::sin(theta);
    s.K.K4 = (-a * sn - h) / s.p2;
    s.K.K3 = (b * sn + h) / s.p2;
    s.K.K1 = a * c - s.K.K4 * s.p1;
    s.K.K2 = b * c - s.K.K3 * s.p1;
    if (!(s.K.K1 > 0 && s.K.K2 > 0 && s.K.K3 > 0 && s.K.K4 > 0)) return std::nullopt;
    // The closed form fixes the sign of p2 through the sign of d1 k1 K3 - d2 k2 K4.
    const double D = a * s.K.K3 - b * s.K.K4;
    if (!(s.p2 * D < 0)) return std::nullopt;
    return s;
}

std::vector<Synthetic> instances(int want) {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> U(-2, 2), T(0.05, 2 * std::numbers::pi - 0.05),
        H(0.05, 1.0);
    std::vector<Synthetic> out;
    for (int tries = 0; tries < 200000 && static_cast<int>(out.size()) < want; ++tries)
        if (auto s = make_instance(U(rng), U(rng), T(rng), T(rng), H(rng))) out.push_back(*s);
    return out;
}

struct Preset {
    EigenPair e1, e2;
    KappaSet k;
    KSet K;
    ModelParams p;
};

Preset preset(const std::string& q, KappaConvention conv, std::size_t n = 1000) {
    Preset s;
    s.p = preset_params(q);
    const Grid g = Grid::unit_pi(n);
    s.e1 = principal_eigen(s.p.r1, g);
    s.e2 = principal_eigen(s.p.r2, g);
    s.k = compute_kappas(s.e1, s.e2, s.p.omega, conv);
    s.K = compute_Ks(s.k, s.p, s.e1.lambda_star, s.e2.lambda_star);
    return s;
}

}  // namespace

TEST_CASE("kappa closed forms for a constant resource", "[bifurcation]") {
    const Grid g = Grid::unit_pi(1000);
    const EigenPair e = principal_eigen(ResourceProfile::constant(1.0), g);
    const double c = std::sqrt(0.5), w = std::pow(2 / std::numbers::pi, 1.5);
    const KappaSet k = compute_kappas(e, e, std::numbers::pi / 4);
    CHECK_THAT(k.kappa3, WithinAbs(c * w * 4.0 / 3.0, 1e-5));
    CHECK_THAT(k.kappa3, WithinAbs(0.4789, 5e-5));
    CHECK_THAT(k.kappa1, WithinAbs(-c * w * 2.0 / 3.0, 1e-5));
    CHECK_THAT(k.kappa1, WithinAbs(-0.2394, 5e-5));
    CHECK_THAT(k.kappa6, WithinAbs(k.kappa3, 1e-14));
    const KappaSet de = compute_kappas(e, e, std::numbers::pi / 4, KappaConvention::DirichletEnergy);
    CHECK_THAT(de.kappa1, WithinAbs(-c, 1e-5));
    CHECK(de.kappa3 == k.kappa3);

    const KappaSet vert = compute_kappas(e, e, std::numbers::pi / 2);
    for (double v : {vert.kappa1, vert.kappa3, vert.kappa5, vert.kappa7}) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("K coefficients", "[bifurcation]") {
    Preset s = preset("Q1", KappaConvention::SelfFlux, 200);
    ModelParams p = s.p;
    p.a11 *= 3;
    CHECK_THAT(compute_Ks(s.k, p, s.e1.lambda_star, s.e2.lambda_star).K1, WithinRel(3 * s.K.K1, 1e-14));
    p.a11 = 0;
    CHECK_THROWS_AS(compute_Ks(s.k, p, s.e1.lambda_star, s.e2.lambda_star), InvalidInput);
}

TEST_CASE("region lines", "[bifurcation]") {
    KappaSet k;
    k.kappa1 = 0;
    k.kappa2 = -0.5;
    const KSet K{0.4, 0.3, 0.2, 0.1};
    const RegionLines L = region_lines(k, K);
    CHECK(L.l1.slope == 0.0);
    CHECK(L.l2.slope == 0.0);
    CHECK(L.l1.intercept == -L.l2.intercept);
    CHECK_THAT(L.l1.intercept, WithinRel((0.4 + 0.3) / -0.5, 1e-15));
    k.kappa2 = 0;
    CHECK_THROWS_AS(region_lines(k, K), Degenerate);
}

TEST_CASE("regions of the reproduction points", "[bifurcation]") {
    for (KappaConvention conv : {KappaConvention::SelfFlux, KappaConvention::DirichletEnergy}) {
        const Preset q1 = preset("Q1", conv);
        CHECK(hypothesis_H2(q1.K));
        for (const char* name : {"P1", "P2"}) {
            const DiffusionPoint pt = preset_point(name);
            CHECK(classify_region(pt.d1, pt.d2, q1.k, q1.K).region == Region::D2);
        }
        const DiffusionPoint p3 = preset_point("P3");
        const RegionReport r3 = classify_region(p3.d1, p3.d2, q1.k, q1.K);
        CHECK(r3.region == Region::D3_1);
        CHECK(r3.H5);
    }
    const Preset q2 = preset("Q2", KappaConvention::DirichletEnergy);
    CHECK(hypothesis_H3(q2.K));
    const DiffusionPoint p4 = preset_point("P4");
    const RegionReport r4 = classify_region(p4.d1, p4.d2, q2.k, q2.K);
    CHECK(r4.region == Region::D3_2);
    CHECK(r4.H6);
}

TEST_CASE("region classifier partitions the plane", "[bifurcation]") {
    const Preset q1 = preset("Q1", KappaConvention::SelfFlux, 200);
    const RegionLines L = region_lines(q1.k, q1.K);
    auto between = [](double x, double a, double b) { return std::min(a, b) < x && x < std::max(a, b); };
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> U(-5, 5);
    int counted = 0;
    for (int i = 0; i < 10000; ++i) {
        const double d1 = U(rng), d2 = U(rng);
        const RegionReport r = classify_region(d1, d2, q1.k, q1.K);
        if (r.boundary) {
            CHECK_FALSE(r.region);
            continue;
        }
        REQUIRE(r.region);
        const bool band12 = between(d2, L.l1.at(d1), L.l2.at(d1));
        const bool band34 = between(d2, L.l3.at(d1), L.l4.at(d1));
        const int hits = (*r.region == Region::D1) + (*r.region == Region::D2) +
                         (*r.region == Region::D3_1 || *r.region == Region::D3_2);
        CHECK(hits == 1);
        if (*r.region == Region::D2) CHECK(band12);
        if (*r.region == Region::D1) CHECK((band34 && !band12));
        if (*r.region == Region::D3_1 || *r.region == Region::D3_2) CHECK((!band12 && !band34));
        if (r.H5) CHECK(*r.region == Region::D3_1);
        ++counted;
    }
    CHECK(counted > 9900);
}

TEST_CASE("hopf closed forms on consistent synthetic systems", "[bifurcation]") {
    const auto cases = instances(40);
    REQUIRE(cases.size() >= 20);
    int lower = 0, upper = 0;
    for (const Synthetic& s : cases) {
        const HopfPoint hp = hopf_closed_form(s.d1, s.d2, s.k, s.K);
        CHECK_THAT(hp.p1, WithinAbs(s.p1, 1e-10));
        CHECK_THAT(hp.p2, WithinAbs(s.p2, 1e-10));
        CHECK_THAT(hp.h, WithinAbs(s.h, 1e-9));
        CHECK_THAT(hp.theta, WithinAbs(s.theta, 1e-9));
        CHECK(std::abs(hp.unit_residual) <= 1e-10);
        for (double r : hp.residuals) CHECK(std::abs(r) <= 1e-10);
        CHECK_THAT(hp.d_star, WithinAbs(std::cos(s.theta), 1e-12));

        // The two S_n(0) forms agree once the characteristic equations hold (unit psi mass).
        for (int n : {0, 3})
            CHECK_THAT(sn0_imaginary(hp, s.d2, s.k, s.K, n),
                       WithinAbs(sn0_imaginary_direct(hp, s.d1, s.d2, s.k, 1.0, n), 1e-8));
        // Summing the two imaginary-part equations: 2h(k1 + k2) sin(theta) = value - 8 h^2.
        const Transversality t = transversality_sign(hp, s.d1, s.d2, s.k, s.K);
        CHECK_THAT(t.alternative, WithinAbs(t.value - 8 * hp.h * hp.h, 1e-9));
        (s.p2 < 0 ? lower : upper)++;
    }
    CHECK(lower > 0);
    CHECK(upper > 0);
}

TEST_CASE("hopf point hypotheses and errors", "[bifurcation]") {
    const Preset q1 = preset("Q1", KappaConvention::SelfFlux, 400);
    CHECK_THROWS_AS(hopf_point(1, -1, q1.k, q1.K, HopfBranch::H2H5), InvalidInput);
    CHECK_THROWS_AS(hopf_point(1, 3, q1.k, q1.K, HopfBranch::H3H6), InvalidInput);
    const HopfPoint hp = hopf_point(1, 3, q1.k, q1.K, HopfBranch::H2H5);
    CHECK(hp.p1 < 0);
    CHECK(hp.p2 < 0);
    CHECK(hp.h > 0);
    CHECK(std::abs(hp.unit_residual) <= 1e-10);

    KappaSet k;
    k.kappa1 = 1;
    k.kappa2 = 1;
    const KSet K{1, 1, 1, 0.01};
    CHECK_THROWS_AS(hopf_closed_form(0.1, 0.0, k, K), Degenerate);
}

TEST_CASE("tau sequence and S_n(0)", "[bifurcation]") {
    HopfPoint hp;
    hp.theta = 1.2;
    hp.h = 0.4;
    hp.p1 = -0.6;
    hp.p2 = -0.8;
    hp.d_star = std::cos(1.2);
    const auto tau = tau_sequence(hp, 0.5, 5);
    REQUIRE(tau.size() == 6);
    CHECK_THAT(tau[0], WithinRel(1.2 / 0.2, 1e-14));
    for (std::size_t i = 1; i < tau.size(); ++i)
        CHECK_THAT(tau[i] - tau[i - 1], WithinRel(2 * std::numbers::pi / 0.2, 1e-12));
    CHECK_THROWS_AS(tau_sequence(hp, 0.0, 3), InvalidInput);

    KappaSet k;
    k.kappa2 = -0.3;
    const KSet K{0.4, 0.3, 0.25, 0.2};
    const double s0 = sn0_imaginary(hp, 1.0, k, K, 0), s1 = sn0_imaginary(hp, 1.0, k, K, 1),
                 s2 = sn0_imaginary(hp, 1.0, k, K, 2);
    CHECK_THAT(s2 - s1, WithinRel(s1 - s0, 1e-12));

    const Preset q1 = preset("Q1", KappaConvention::SelfFlux, 400);
    const HopfPoint real = hopf_point(1, 3, q1.k, q1.K, HopfBranch::H2H5);
    CHECK(sn0_imaginary(real, 3, q1.k, q1.K, 0) > 0);
    CHECK(sn0_imaginary(real, 3, q1.k, q1.K, 1) > sn0_imaginary(real, 3, q1.k, q1.K, 0));
}

TEST_CASE("transversality sign", "[bifurcation]") {
    HopfPoint hp;
    hp.h = 0.5;
    hp.p2 = -0.8;
    hp.theta = 2.0;
    KappaSet k;
    const KSet K{0.4, 0.3, 0.3, 0.2};
    const Transversality t = transversality_sign(hp, 1, 1, k, K);
    CHECK_THAT(t.value, WithinAbs(-2 * 0.5 * (0.2 - 0.3) * -0.8 + 4 * 0.25, 1e-15));
    CHECK(t.sign == 1);
    hp.h = 0.0;
    CHECK(transversality_sign(hp, 1, 1, k, K).degenerate);
}

TEST_CASE("analysis report for the reproduction presets", "[bifurcation]") {
    ModelParams p = preset_params("Q1");
    p.d1 = 1;
    p.d2 = 3;
    const BifurcationReport r = analyze(p, 400, KappaConvention::SelfFlux, 3);
    REQUIRE(r.hopf);
    CHECK(r.branch == HopfBranch::H2H5);
    CHECK(r.tau.size() == 4);
    CHECK(r.transversality->sign == 1);
    CHECK(r.s_from_lambda1 > 0);
}
