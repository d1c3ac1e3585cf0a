#include "memdiff/bifurcation.hpp"

#include "memdiff/errors.hpp"
#include "memdiff/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace memdiff {

namespace {

double integral3(const Field& a, const Field& b, const Field& c) {
    require_same_grid(a, b);
    require_same_grid(a, c);
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j] * c[j];
    return a.grid().h() * s;
}

double self_flux(const Field& f, KappaConvention c) {
    return c == KappaConvention::SelfFlux ? inner_product(f, flux_divergence(f, f)) : inner_product(f, laplacian(f));
}

bool strictly_between(double x, double a, double b) { return std::min(a, b) < x && x < std::max(a, b); }

}  // namespace

std::string to_string(KappaConvention c) {
    return c == KappaConvention::SelfFlux ? "self-flux" : "dirichlet-energy";
}

KappaConvention parse_kappa_convention(const std::string& s) {
    if (s == "self-flux") return KappaConvention::SelfFlux;
    if (s == "dirichlet-energy") return KappaConvention::DirichletEnergy;
    throw InvalidInput("unknown kappa convention '" + s + "' (expected self-flux or dirichlet-energy)");
}

KappaSet compute_kappas(const EigenPair& eig1, const EigenPair& eig2, double omega, KappaConvention convention) {
    const Field& phi = eig1.phi;
    const Field& psi = eig2.phi;
    require_same_grid(phi, psi);
    const double c = std::cos(omega), s = std::sin(omega);
    KappaSet k;
    k.convention = convention;
    k.kappa1 = c * self_flux(phi, convention);
    k.kappa2 = s * self_flux(psi, convention);
    k.kappa3 = c * integral3(phi, phi, phi);
    k.kappa4 = s * integral3(phi, phi, psi);
    k.kappa5 = c * integral3(phi, psi, psi);
    k.kappa6 = s * integral3(psi, psi, psi);
    k.kappa7 = c * integral3(phi, phi, psi);
    k.kappa8 = s * integral3(phi, psi, psi);
    return k;
}

KSet compute_Ks(const KappaSet& k, const ModelParams& p, double lambda1_star, double lambda2_star) {
    KSet K{p.a11 * lambda1_star * k.kappa3, p.a22 * lambda2_star * k.kappa6, p.a21 * lambda2_star * k.kappa8,
           p.a12 * lambda1_star * k.kappa7};
    if (!(K.K1 > 0 && K.K2 > 0 && K.K3 > 0 && K.K4 > 0))
        throw InvalidInput("K coefficients must all be positive (check competition coefficients and omega)");
    return K;
}

RegionLines region_lines(const KappaSet& k, const KSet& K) {
    if (k.kappa2 == 0.0) throw Degenerate("region lines: kappa2 vanishes");
    RegionLines L;
    const double s12 = -k.kappa1 / k.kappa2;
    const double b12 = (K.K1 + K.K2) / k.kappa2;
    L.l1 = {s12, b12};
    L.l2 = {s12, -b12};
    const double s34 = K.K3 * k.kappa1 / (K.K4 * k.kappa2);
    const double b34 = std::abs(K.K1 * K.K3 - K.K2 * K.K4) / (K.K4 * k.kappa2);
    L.l3 = {s34, b34};
    L.l4 = {s34, -b34};
    L.l5 = {K.K2 * k.kappa1 / (K.K1 * k.kappa2), 0.0};
    if (K.K1 != K.K4) L.l6_h5 = Line{(K.K2 - K.K3) * k.kappa1 / ((K.K1 - K.K4) * k.kappa2), 0.0};
    L.l6_h6 = Line{(K.K2 + K.K3) * k.kappa1 / ((K.K1 + K.K4) * k.kappa2), 0.0};
    return L;
}

std::string to_string(Region r) {
    switch (r) {
        case Region::D1: return "D1";
        case Region::D2: return "D2";
        case Region::D3_1: return "D3_1";
        case Region::D3_2: return "D3_2";
    }
    return "?";
}

bool hypothesis_H2(const KSet& K) {
    return K.K1 * K.K3 - K.K2 * K.K4 < 0 && K.K1 - K.K4 > 0 && K.K3 - K.K4 > 0;
}

bool hypothesis_H3(const KSet& K) {
    return K.K1 * K.K3 - K.K2 * K.K4 > 0 && K.K1 - K.K4 > 0 && K.K3 - K.K4 < 0;
}

double critical_value(double d1, double d2, const KappaSet& k, const KSet& K) {
    const double D = d1 * k.kappa1 * K.K3 - d2 * k.kappa2 * K.K4;
    const double scale = std::abs(d1 * k.kappa1 * K.K3) + std::abs(d2 * k.kappa2 * K.K4);
    if (D == 0.0 || std::abs(D) <= 1e-14 * scale) throw Degenerate("d*: denominator d1 k1 K3 - d2 k2 K4 vanishes");
    return (K.K1 * K.K3 - K.K2 * K.K4) / D;
}

RegionReport classify_region(double d1, double d2, const KappaSet& k, const KSet& K, double boundary_tol) {
    RegionReport rep;
    rep.lines = region_lines(k, K);
    const RegionLines& L = rep.lines;
    rep.H2 = hypothesis_H2(K);
    rep.H3 = hypothesis_H3(K);
    try {
        rep.d_star = critical_value(d1, d2, k, K);
    } catch (const Degenerate&) {
    }

    for (const Line* l : {&L.l1, &L.l2, &L.l3, &L.l4})
        if (std::abs(d2 - l->at(d1)) <= boundary_tol) rep.boundary = true;
    if (rep.boundary) return rep;

    const bool in_d2 = strictly_between(d2, L.l1.at(d1), L.l2.at(d1));
    const bool in_d1 = strictly_between(d2, L.l3.at(d1), L.l4.at(d1));
    if (in_d2) {
        // The two bands overlap around the origin; the overlap belongs to D2.
        rep.region = Region::D2;
    } else if (in_d1) {
        rep.region = Region::D1;
    } else {
        // Same side of both band center lines: upper/lower wedges (D3_1); opposite sides: left/right wedges (D3_2).
        const double side1 = d2 - L.l3.slope * d1;
        const double side2 = d2 - L.l1.slope * d1;
        rep.region = side1 * side2 > 0 ? Region::D3_1 : Region::D3_2;
    }

    if (d1 != 0.0) {
        const double ratio = d2 / d1;
        if (L.l6_h5 && rep.H2 && rep.region == Region::D3_1)
            rep.H5 = strictly_between(ratio, L.l5.slope, L.l6_h5->slope);
        if (L.l6_h6 && rep.H3 && rep.region == Region::D3_2)
            rep.H6 = strictly_between(ratio, L.l5.slope, L.l6_h6->slope);
    }
    return rep;
}

std::string to_string(HopfBranch b) { return b == HopfBranch::H2H5 ? "H2H5" : "H3H6"; }

double HopfPoint::max_residual() const {
    double m = std::abs(unit_residual);
    for (double r : residuals) m = std::max(m, std::abs(r));
    return m;
}

std::array<double, 4> characteristic_residuals(double d1, double d2, const KappaSet& k, const KSet& K, double p1,
                                               double p2, double h, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {d1 * k.kappa1 * c - K.K1 - K.K4 * p1, d1 * k.kappa1 * s + K.K4 * p2 + h,
            d2 * k.kappa2 * c - K.K2 - K.K3 * p1, d2 * k.kappa2 * s - K.K3 * p2 + h};
}

HopfPoint hopf_point(double d1, double d2, const KappaSet& k, const KSet& K, HopfBranch branch) {
    const RegionReport rep = classify_region(d1, d2, k, K);
    const bool ok = branch == HopfBranch::H2H5 ? rep.H2 && rep.H5 : rep.H3 && rep.H6;
    if (!ok)
        throw InvalidInput("hopf point: hypotheses of branch " + to_string(branch) + " do not hold at (" +
                           std::to_string(d1) + ", " + std::to_string(d2) + ")");
    HopfPoint hp = hopf_closed_form(d1, d2, k, K);
    if (!(hp.h > 0.0)) throw Degenerate("hopf point: h0 is not positive");
    return hp;
}

HopfPoint hopf_closed_form(double d1, double d2, const KappaSet& k, const KSet& K) {
    HopfPoint hp;
    hp.d_star = critical_value(d1, d2, k, K);
    if (std::abs(hp.d_star) > 1.0) throw Degenerate("hopf point: |d*| > 1, no purely imaginary root");
    const double D = d1 * k.kappa1 * K.K3 - d2 * k.kappa2 * K.K4;
    const double N = d2 * k.kappa2 * K.K1 - d1 * k.kappa1 * K.K2;
    hp.p1 = N / D;
    const double disc = D * D - N * N;
    if (disc < 0.0) throw Degenerate("hopf point: p1 outside [-1, 1]");
    hp.p2 = std::sqrt(disc) / (-D);
    const double hden = d1 * k.kappa1 - d2 * k.kappa2;
    if (hden == 0.0) throw Degenerate("hopf point: d1 k1 == d2 k2");
    hp.h = (d2 * k.kappa2 * K.K4 + d1 * k.kappa1 * K.K3) / hden * hp.p2;
    hp.unit_residual = hp.p1 * hp.p1 + hp.p2 * hp.p2 - 1.0;

    const double t0 = std::acos(hp.d_star);
    double best = std::numeric_limits<double>::infinity();
    for (double theta : {t0, 2.0 * std::numbers::pi - t0}) {
        const auto res = characteristic_residuals(d1, d2, k, K, hp.p1, hp.p2, hp.h, theta);
        double m = 0.0;
        for (double r : res) m = std::max(m, std::abs(r));
        if (m < best) {
            best = m;
            hp.theta = theta;
            hp.residuals = res;
        }
    }
    return hp;
}

std::vector<double> tau_sequence(const HopfPoint& hp, double s, int n_max) {
    if (!(s > 0.0)) throw InvalidInput("tau sequence: s must be positive");
    if (!(hp.h > 0.0)) throw InvalidInput("tau sequence: h0 must be positive");
    if (n_max < 0) throw InvalidInput("tau sequence: n_max must be non-negative");
    std::vector<double> tau;
    const double nu = s * hp.h;
    for (int n = 0; n <= n_max; ++n) tau.push_back((hp.theta + 2.0 * n * std::numbers::pi) / nu);
    return tau;
}

double sn0_imaginary(const HopfPoint& hp, double d2, const KappaSet& k, const KSet& K, int n) {
    const double phase = hp.theta + 2.0 * n * std::numbers::pi;
    return 2.0 * hp.p1 * hp.p2 + 2.0 * phase +
           phase / hp.h * (hp.p2 * (K.K4 - K.K3) + 2.0 * hp.p1 * hp.p2 * d2 * k.kappa2 * hp.d_star);
}

double sn0_imaginary_direct(const HopfPoint& hp, double d1, double d2, const KappaSet& k, double psi_sq_integral,
                            int n) {
    const double phase = hp.theta + 2.0 * n * std::numbers::pi;
    return 2.0 * hp.p1 * hp.p2 * psi_sq_integral +
           phase / hp.h *
               (2.0 * hp.p1 * hp.p2 * d2 * k.kappa2 * std::cos(hp.theta) -
                (d1 * k.kappa1 + d2 * k.kappa2) * std::sin(hp.theta));
}

Transversality transversality_sign(const HopfPoint& hp, double d1, double d2, const KappaSet& k, const KSet& K) {
    Transversality t;
    t.value = -2.0 * hp.h * (K.K4 - K.K3) * hp.p2 + 4.0 * hp.h * hp.h;
    t.alternative = 2.0 * hp.h * (d1 * k.kappa1 + d2 * k.kappa2) * std::sin(hp.theta);
    t.degenerate = std::abs(t.value) <= 1e-12;
    t.sign = t.degenerate ? 0 : (t.value > 0 ? 1 : -1);
    return t;
}

BifurcationReport analyze(const ModelParams& p, std::size_t n, KappaConvention convention, int n_tau) {
    p.validate();
    const Grid g = Grid::unit_pi(n);
    BifurcationReport rep;
    rep.eig1 = principal_eigen(p.r1, g);
    rep.eig2 = principal_eigen(p.r2, g);
    rep.kappas = compute_kappas(rep.eig1, rep.eig2, p.omega, convention);
    rep.Ks = compute_Ks(rep.kappas, p, rep.eig1.lambda_star, rep.eig2.lambda_star);
    rep.region = classify_region(p.d1, p.d2, rep.kappas, rep.Ks);
    std::tie(rep.lambda1_prime0, rep.lambda2_prime0) = lambda_primes(p, rep.eig1, rep.eig2, rep.kappas);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto safe_s = [&](double target, double star, double prime) {
        try {
            return s_from_lambda(target, star, prime);
        } catch (const Error&) {
            return nan;
        }
    };
    rep.s_from_lambda1 = safe_s(p.lambda1, rep.eig1.lambda_star, rep.lambda1_prime0);
    rep.s_from_lambda2 = safe_s(p.lambda2, rep.eig2.lambda_star, rep.lambda2_prime0);

    if (rep.region.H5) rep.branch = HopfBranch::H2H5;
    else if (rep.region.H6) rep.branch = HopfBranch::H3H6;
    if (!rep.branch) {
        rep.hopf_error = "neither (H2, H5) nor (H3, H6) holds at this point";
        return rep;
    }
    try {
        rep.hopf = hopf_point(p.d1, p.d2, rep.kappas, rep.Ks, *rep.branch);
    } catch (const Error& e) {
        rep.hopf_error = e.what();
        return rep;
    }
    rep.transversality = transversality_sign(*rep.hopf, p.d1, p.d2, rep.kappas, rep.Ks);
    if (std::isfinite(rep.s_from_lambda1)) rep.tau = tau_sequence(*rep.hopf, rep.s_from_lambda1, n_tau);
    rep.sn0_im = sn0_imaginary(*rep.hopf, p.d2, rep.kappas, rep.Ks, 0);
    rep.sn0_im_direct = sn0_imaginary_direct(*rep.hopf, p.d1, p.d2, rep.kappas,
                                             inner_product(rep.eig2.phi, rep.eig2.phi), 0);
    return rep;
}

}  // namespace memdiff
