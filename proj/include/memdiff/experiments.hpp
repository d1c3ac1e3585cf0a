#pragma once

#include "memdiff/bifurcation.hpp"
#include "memdiff/config.hpp"
#include "memdiff/csv.hpp"
#include "memdiff/model.hpp"
#include "memdiff/simulator.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace memdiff {

struct EigenExpectation {
    double lambda1 = 0, lambda2 = 0;
    double tol = 0;
};

enum class LineQuantity { L1Slope, L1Intercept, L3Slope, L3Intercept, L5Slope, L6H5Slope, L6H6Slope };
std::string to_string(LineQuantity q);

struct LineExpectation {
    LineQuantity quantity;
    double expected;
    double tol;
};

struct SimRun {
    std::string label;
    DiffusionPoint point;
    double tau;
    std::optional<Outcome> expected;
};

struct ThresholdSpec {
    DiffusionPoint point;
    double tau_lo, tau_hi;
    double expected;
    double tol;
    double width = 0.25;
};

struct ExperimentSpec {
    std::string id;
    std::string description;
    ModelParams params;  // d1, d2 of the analysed point included
    AnalysisConfig analysis;
    std::optional<EigenExpectation> eigen;
    KappaConvention line_convention = KappaConvention::DirichletEnergy;
    std::vector<LineExpectation> lines;
    std::vector<SimRun> runs;
    std::optional<ThresholdSpec> threshold;
    SimConfig sim;
    bool region_map = false;
};

std::vector<ExperimentSpec> builtin_suite();

struct SuiteReport {
    nlohmann::json payload;  // deterministic part
    nlohmann::json timings;  // wall-clock seconds per job
    int expectations = 0;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

struct SuiteOptions {
    unsigned workers = 0;  // 0: hardware concurrency
    bool write_files = true;
};

// Runs every analysis and simulation (independent jobs on a bounded worker pool), writes CSV files and
// report.json under output_dir, and returns the pass/fail summary.
SuiteReport run_suite(const std::vector<ExperimentSpec>& specs, const std::string& output_dir,
                      const SuiteOptions& opt = {});

struct SweepRange {
    double lo, hi;
    std::size_t count;
};

std::vector<RegionCell> sweep_regions(const ModelParams& p, SweepRange d1, SweepRange d2, std::size_t n,
                                      KappaConvention convention);

nlohmann::json to_json(const ExperimentSpec& s);

}  // namespace memdiff
