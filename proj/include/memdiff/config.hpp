#pragma once

#include "memdiff/bifurcation.hpp"
#include "memdiff/model.hpp"
#include "memdiff/simulator.hpp"

#include "json.hpp"

#include <string>

namespace memdiff {

struct AnalysisConfig {
    std::size_t n = 1000;
    std::size_t n_coarse = 500;  // Richardson partner grid; 0 disables extrapolation
    KappaConvention kappa_convention = KappaConvention::SelfFlux;
    int n_tau = 4;
};

struct RunConfig {
    ModelParams model;
    AnalysisConfig analysis;
    SimConfig sim;
    double tau = 10.0;
    std::string output_dir = "out";
};

// Defaults: competition set Q1 at the point (1, 3), delay 10.
RunConfig default_run_config();

nlohmann::json to_json(const RunConfig& c);
// Strict: unknown keys and wrongly typed values throw InvalidInput. Missing keys keep defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

bool operator==(const RunConfig& a, const RunConfig& b);

nlohmann::json to_json(const ModelParams& p);
nlohmann::json to_json(const SimConfig& c);

}  // namespace memdiff
