#include "memdiff/model.hpp"

#include "memdiff/errors.hpp"

#include <cmath>
#include <numbers>

namespace memdiff {

void ModelParams::validate() const {
    for (double v : {d1, d2, lambda1, lambda2, a11, a12, a21, a22, omega})
        if (!std::isfinite(v)) throw InvalidInput("model parameters must be finite");
    if (!(a11 > 0 && a12 > 0 && a21 > 0 && a22 > 0))
        throw InvalidInput("competition coefficients a11, a12, a21, a22 must be positive");
    if (!(omega > 0 && omega < std::numbers::pi / 2)) throw InvalidInput("omega must lie in (0, pi/2)");
    if (!(lambda1 > 0 && lambda2 > 0)) throw InvalidInput("growth rates lambda1, lambda2 must be positive");
}

ModelParams preset_params(const std::string& name) {
    ModelParams p;
    p.d1 = p.d2 = 0.0;
    p.lambda1 = p.lambda2 = 2.0;
    p.omega = std::numbers::pi / 4;
    p.r1 = ResourceProfile::cos1();
    p.r2 = ResourceProfile::sin1();
    if (name == "Q1") {
        p.a11 = 0.5;
        p.a12 = 0.5;
        p.a21 = 1.0;
        p.a22 = 1.5;
    } else if (name == "Q2") {
        p.a11 = 1.0;
        p.a12 = 0.5;
        p.a21 = 0.8;
        p.a22 = 1.0;
    } else {
        throw InvalidInput("unknown preset '" + name + "' (expected Q1 or Q2)");
    }
    return p;
}

DiffusionPoint preset_point(const std::string& name) {
    if (name == "P1") return {1.0, -1.0};
    if (name == "P2") return {0.1, 0.5};
    if (name == "P3") return {1.0, 3.0};
    if (name == "P4") return {2.0, 1.4};
    throw InvalidInput("unknown point '" + name + "' (expected P1, P2, P3 or P4)");
}

}  // namespace memdiff
