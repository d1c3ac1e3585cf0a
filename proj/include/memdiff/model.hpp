#pragma once

#include "memdiff/eigensolver.hpp"

#include <string>

namespace memdiff {

struct ModelParams {
    double d1 = 0.0, d2 = 0.0;
    double lambda1 = 2.0, lambda2 = 2.0;
    double a11 = 0.5, a12 = 0.5, a21 = 1.0, a22 = 1.5;
    double omega = 0.7853981633974483;
    ResourceProfile r1 = ResourceProfile::cos1();
    ResourceProfile r2 = ResourceProfile::sin1();

    // Throws InvalidInput unless the competition coefficients are positive and omega lies in (0, pi/2).
    void validate() const;
};

}  // namespace memdiff

namespace memdiff {

// Competition sets "Q1" and "Q2": omega = pi/4, lambda1 = lambda2 = 2, cos1/sin1 resources, d1 = d2 = 0.
ModelParams preset_params(const std::string& name);

struct DiffusionPoint {
    double d1, d2;
};

// "P1" = (1, -1), "P2" = (0.1, 0.5), "P3" = (1, 3), "P4" = (2, 1.4).
DiffusionPoint preset_point(const std::string& name);

}  // namespace memdiff
