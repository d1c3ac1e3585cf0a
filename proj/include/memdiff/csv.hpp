#pragma once

#include "memdiff/bifurcation.hpp"
#include "memdiff/eigensolver.hpp"
#include "memdiff/simulator.hpp"

#include <string>
#include <vector>

namespace memdiff {

// 17 significant digits, enough to round-trip any double.
std::string format_number(double x);

struct RegionCell {
    double d1, d2;
    std::string region;  // D1, D2, D3_1, D3_2 or boundary
    bool H2, H3, H5, H6;
};

// Each writer replaces the file if it exists.
void write_timeseries_csv(const std::string& path, const SimulationResult& r);
void write_snapshots_csv(const std::string& path, const SimulationResult& r);
void write_regions_csv(const std::string& path, const std::vector<RegionCell>& cells);
void write_eigen_csv(const std::string& path, const EigenPair& e);
void write_steady_csv(const std::string& path, const Field& u, const Field& v);

}  // namespace memdiff
