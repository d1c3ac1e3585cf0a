#include "memdiff/errors.hpp"
#include "memdiff/experiments.hpp"

#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

using namespace memdiff;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<ExperimentSpec> cheap_suite() {
    ExperimentSpec a;
    a.id = "cheap_lines";
    a.params = preset_params("Q1");
    a.analysis.n = 200;
    a.analysis.n_coarse = 100;
    a.eigen = EigenExpectation{0.9291, 0.5403, 5e-3};
    a.region_map = true;

    ExperimentSpec b;
    b.id = "cheap_runs";
    b.params = preset_params("Q1");
    b.analysis = a.analysis;
    b.sim.n = 32;
    b.sim.t_end = 30;
    b.runs = {{"P2_short", preset_point("P2"), 1.0, std::nullopt}, {"P3_short", preset_point("P3"), 2.0, std::nullopt}};
    return {a, b};
}

}  // namespace

TEST_CASE("builtin suite contents", "[experiments]") {
    const auto suite = builtin_suite();
    REQUIRE(suite.size() == 6);
    std::set<std::string> ids;
    for (const auto& s : suite) ids.insert(s.id);
    CHECK(ids.size() == 6);
    const auto& q1 = suite[1];
    CHECK(q1.params.omega == std::numbers::pi / 4);
    CHECK(q1.params.lambda1 == 2.0);
    CHECK(q1.params.lambda2 == 2.0);
    REQUIRE(suite[5].threshold);
    CHECK(suite[5].threshold->expected == 3.3592);
    CHECK(suite[5].threshold->tau_lo == 3.0);
    CHECK(suite[5].threshold->tau_hi == 17.0);
    REQUIRE(suite[4].threshold);
    CHECK(suite[4].threshold->expected == 4.6458);
    for (const auto& s : suite)
        for (const auto& r : s.runs) CHECK(r.expected);
}

TEST_CASE("empty suite", "[experiments]") {
    const fs::path d = fs::temp_directory_path() / "memdiff_empty_suite";
    fs::remove_all(d);
    const SuiteReport r = run_suite({}, d.string());
    CHECK(r.ok());
    CHECK(r.expectations == 0);
    CHECK(fs::exists(d / "report.json"));
}

TEST_CASE("duplicate ids are rejected", "[experiments]") {
    auto s = cheap_suite();
    s[1].id = s[0].id;
    CHECK_THROWS_AS(run_suite(s, "unused", {1, false}), InvalidInput);
}

TEST_CASE("region sweeps", "[experiments]") {
    const ModelParams p = preset_params("Q1");
    const auto box = sweep_regions(p, {0.05, 0.15, 2}, {0.4, 0.6, 2}, 200, KappaConvention::SelfFlux);
    REQUIRE(box.size() == 4);
    for (const auto& c : box) CHECK(c.region == "D2");

    const auto line = sweep_regions(p, {0.0, 0.0, 1}, {-3, 3, 241}, 200, KappaConvention::SelfFlux);
    int changes = 0;
    for (std::size_t i = 1; i < line.size(); ++i) changes += line[i].region != line[i - 1].region;
    // Along d1 = 0 the labels can only change where one of the four band lines is crossed.
    CHECK(changes <= 4);
    CHECK(changes >= 2);
}

TEST_CASE("suite determinism and parallel/serial equivalence", "[experiments]") {
    const fs::path base = fs::temp_directory_path() / "memdiff_det";
    fs::remove_all(base);
    const auto specs = cheap_suite();
    const SuiteReport serial = run_suite(specs, (base / "a").string(), {1, true});
    const SuiteReport parallel = run_suite(specs, (base / "b").string(), {4, true});
    CHECK(serial.payload == parallel.payload);
    CHECK(serial.ok());
    CHECK(serial.expectations == 2);

    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
        if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
        const fs::path other = base / "b" / fs::relative(e.path(), base / "a");
        CHECK(slurp(e.path()) == slurp(other));
        ++files;
    }
    CHECK(files == 7);  // two eigenfunctions, a region map, and two series plus two snapshot files

    const auto report = nlohmann::json::parse(slurp(base / "a" / "report.json"));
    CHECK(report.contains("environment"));
    CHECK(report.contains("timings_seconds"));
    CHECK(report["experiments"][1]["spec"]["sim"]["n"] == 32);
}
