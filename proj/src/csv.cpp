#include "memdiff/csv.hpp"

#include "memdiff/errors.hpp"

#include <cstdio>
#include <fstream>

namespace memdiff {

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::ofstream open_csv(const std::string& path, const char* header) {
    std::ofstream f(path, std::ios::out | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << header << '\n';
    return f;
}

void finish(std::ofstream& f, const std::string& path) {
    f.flush();
    if (!f) throw Error("write to " + path + " failed");
}

}  // namespace

void write_timeseries_csv(const std::string& path, const SimulationResult& r) {
    auto f = open_csv(path, "t,l2_u,l2_v,max_u,max_v");
    for (std::size_t i = 0; i < r.times.size(); ++i)
        f << format_number(r.times[i]) << ',' << format_number(r.l2_u[i]) << ',' << format_number(r.l2_v[i]) << ','
          << format_number(r.max_u[i]) << ',' << format_number(r.max_v[i]) << '\n';
    finish(f, path);
}

void write_snapshots_csv(const std::string& path, const SimulationResult& r) {
    auto f = open_csv(path, "t,x,u,v");
    for (const Snapshot& s : r.snapshots) {
        const std::string t = format_number(s.t);
        for (std::size_t j = 0; j < s.u.size(); ++j)
            f << t << ',' << format_number(s.u.grid().x(j)) << ',' << format_number(s.u[j]) << ','
              << format_number(s.v[j]) << '\n';
    }
    finish(f, path);
}

void write_regions_csv(const std::string& path, const std::vector<RegionCell>& cells) {
    auto f = open_csv(path, "d1,d2,region,H2,H3,H5,H6");
    for (const RegionCell& c : cells)
        f << format_number(c.d1) << ',' << format_number(c.d2) << ',' << c.region << ',' << int(c.H2) << ','
          << int(c.H3) << ',' << int(c.H5) << ',' << int(c.H6) << '\n';
    finish(f, path);
}

void write_eigen_csv(const std::string& path, const EigenPair& e) {
    auto f = open_csv(path, "x,phi");
    for (std::size_t j = 0; j < e.phi.size(); ++j)
        f << format_number(e.phi.grid().x(j)) << ',' << format_number(e.phi[j]) << '\n';
    finish(f, path);
}

void write_steady_csv(const std::string& path, const Field& u, const Field& v) {
    auto f = open_csv(path, "x,u,v");
    for (std::size_t j = 0; j < u.size(); ++j)
        f << format_number(u.grid().x(j)) << ',' << format_number(u[j]) << ',' << format_number(v[j]) << '\n';
    finish(f, path);
}

}  // namespace memdiff
