#pragma once

#include "memdiff/eigensolver.hpp"
#include "memdiff/model.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace memdiff {

// How the self-flux integrals kappa1/kappa2 are evaluated.
//  SelfFlux:        kappa1 = cos(w) <phi, div(phi grad phi)>     (the defining integral)
//  DirichletEnergy: kappa1 = cos(w) <phi, lap(phi)> = -cos(w) ||grad phi||^2
// The second form reproduces the reference line-coefficient tables; see README.
enum class KappaConvention { SelfFlux, DirichletEnergy };

std::string to_string(KappaConvention c);
KappaConvention parse_kappa_convention(const std::string& s);

struct KappaSet {
    double kappa1 = 0, kappa2 = 0, kappa3 = 0, kappa4 = 0, kappa5 = 0, kappa6 = 0, kappa7 = 0, kappa8 = 0;
    KappaConvention convention = KappaConvention::SelfFlux;

    std::array<double, 8> as_array() const {
        return {kappa1, kappa2, kappa3, kappa4, kappa5, kappa6, kappa7, kappa8};
    }
};

struct KSet {
    double K1 = 0, K2 = 0, K3 = 0, K4 = 0;
};

KappaSet compute_kappas(const EigenPair& eig1, const EigenPair& eig2, double omega,
                        KappaConvention convention = KappaConvention::SelfFlux);

// Throws InvalidInput if any K is not strictly positive.
KSet compute_Ks(const KappaSet& k, const ModelParams& p, double lambda1_star, double lambda2_star);

struct Line {
    double slope = 0.0;
    double intercept = 0.0;
    double at(double d1) const { return slope * d1 + intercept; }
};

struct RegionLines {
    Line l1, l2, l3, l4, l5;
    std::optional<Line> l6_h5;  // (K2-K3)k1/((K1-K4)k2), absent when K1 == K4
    std::optional<Line> l6_h6;  // (K2+K3)k1/((K1+K4)k2)
};

RegionLines region_lines(const KappaSet& k, const KSet& K);

enum class Region { D1, D2, D3_1, D3_2 };
std::string to_string(Region r);

struct RegionReport {
    RegionLines lines;
    std::optional<Region> region;  // empty when the point sits on a boundary line
    bool boundary = false;
    bool H2 = false, H3 = false, H5 = false, H6 = false;
    std::optional<double> d_star;  // empty on the set d1 k1 K3 == d2 k2 K4
};

bool hypothesis_H2(const KSet& K);
bool hypothesis_H3(const KSet& K);

// d* = (K1K3 - K2K4) / (d1 k1 K3 - d2 k2 K4); throws Degenerate when the denominator vanishes.
double critical_value(double d1, double d2, const KappaSet& k, const KSet& K);

RegionReport classify_region(double d1, double d2, const KappaSet& k, const KSet& K, double boundary_tol = 1e-12);

enum class HopfBranch { H2H5, H3H6 };
std::string to_string(HopfBranch b);

struct HopfPoint {
    double p1 = 0, p2 = 0, h = 0, theta = 0;
    double d_star = 0;
    // Residuals of the four real characteristic equations and of p1^2 + p2^2 = 1.
    std::array<double, 4> residuals{};
    double unit_residual = 0;
    double max_residual() const;
};

std::array<double, 4> characteristic_residuals(double d1, double d2, const KappaSet& k, const KSet& K, double p1,
                                               double p2, double h, double theta);

// Closed-form Hopf data; the arccos branch (theta or 2pi - theta) with the smaller residual is returned.
// Throws Degenerate when |d*| > 1 or a denominator vanishes, InvalidInput when the branch hypotheses fail.
// The residual is reported, not enforced: callers decide what to do with an inconsistent system.
HopfPoint hopf_point(double d1, double d2, const KappaSet& k, const KSet& K, HopfBranch branch);
// The same closed forms without the hypothesis and sign checks.
HopfPoint hopf_closed_form(double d1, double d2, const KappaSet& k, const KSet& K);

std::vector<double> tau_sequence(const HopfPoint& hp, double s, int n_max);

// Im S_n(0) from the simplified expression with unit-normalized psi.
double sn0_imaginary(const HopfPoint& hp, double d2, const KappaSet& k, const KSet& K, int n);
// Im S_n(0) evaluated directly from the real/imaginary split, with the given integral of psi^2.
double sn0_imaginary_direct(const HopfPoint& hp, double d1, double d2, const KappaSet& k, double psi_sq_integral,
                            int n);

struct Transversality {
    int sign = 0;          // +1, -1, or 0 when degenerate
    double value = 0;      // -2h(K4-K3)p2 + 4h^2 (positive factor 1/|S_n|^2 dropped)
    double alternative = 0; // 2h (d1 k1 + d2 k2) sin(theta)
    bool degenerate = false;
};

Transversality transversality_sign(const HopfPoint& hp, double d1, double d2, const KappaSet& k, const KSet& K);

// Everything the analysis produces for one (d1, d2) point.
struct BifurcationReport {
    EigenPair eig1, eig2;
    KappaSet kappas;
    KSet Ks;
    RegionReport region;
    double lambda1_prime0 = 0, lambda2_prime0 = 0;
    double s_from_lambda1 = 0, s_from_lambda2 = 0;
    std::optional<HopfBranch> branch;
    std::optional<HopfPoint> hopf;
    std::optional<Transversality> transversality;
    std::vector<double> tau;  // tau_n using s_from_lambda1
    std::optional<double> sn0_im, sn0_im_direct;
    std::string hopf_error;   // why there is no Hopf data, if there is none
};

BifurcationReport analyze(const ModelParams& p, std::size_t n, KappaConvention convention, int n_tau = 4);

}  // namespace memdiff
