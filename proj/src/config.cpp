#include "memdiff/config.hpp"

#include "memdiff/errors.hpp"

#include <fstream>
#include <set>

namespace memdiff {

using nlohmann::json;

RunConfig default_run_config() {
    RunConfig c;
    c.model = preset_params("Q1");
    const DiffusionPoint p3 = preset_point("P3");
    c.model.d1 = p3.d1;
    c.model.d2 = p3.d2;
    return c;
}

json to_json(const ModelParams& p) {
    return json{{"d1", p.d1},           {"d2", p.d2},   {"lambda1", p.lambda1}, {"lambda2", p.lambda2},
                {"a11", p.a11},         {"a12", p.a12}, {"a21", p.a21},         {"a22", p.a22},
                {"omega", p.omega},     {"r1", p.r1.name()}, {"r2", p.r2.name()}};
}

json to_json(const SimConfig& c) {
    return json{{"n", c.n},
                {"dt", c.dt},
                {"t_end", c.t_end},
                {"epsilon", c.epsilon},
                {"perturbation", c.perturbation},
                {"sample_interval", c.sample_interval},
                {"snapshot_interval", c.snapshot_interval},
                {"transient_fraction", c.transient_fraction},
                {"tol_conv", c.tolerances.tol_conv},
                {"tol_osc", c.tolerances.tol_osc},
                {"tol_extinct", c.tolerances.tol_extinct},
                {"growth_ratio", c.tolerances.growth_ratio},
                {"blowup_threshold", c.blowup_threshold},
                {"flux_headroom", c.flux_headroom}};
}

json to_json(const RunConfig& c) {
    return json{{"model", to_json(c.model)},
                {"analysis",
                 {{"n", c.analysis.n},
                  {"n_coarse", c.analysis.n_coarse},
                  {"kappa_convention", to_string(c.analysis.kappa_convention)},
                  {"n_tau", c.analysis.n_tau}}},
                {"sim", to_json(c.sim)},
                {"tau", c.tau},
                {"output_dir", c.output_dir}};
}

namespace {

// Reads known keys from one JSON object and rejects everything else.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw InvalidInput(where_ + ": expected a JSON object");
    }

    void number(const char* key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(key, "a number");
            out = v->get<double>();
        }
    }

    void count(const char* key, std::size_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
            out = v->get<std::size_t>();
        }
    }

    void integer(const char* key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) fail(key, "an integer");
            out = v->get<int>();
        }
    }

    void string(const char* key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) fail(key, "a string");
            out = v->get<std::string>();
        }
    }

    const json* object(const char* key) { return find(key); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw InvalidInput(where_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json* find(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    [[noreturn]] void fail(const char* key, const char* what) const {
        throw InvalidInput(where_ + "." + key + ": expected " + what);
    }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

void read_model(const json& j, ModelParams& p) {
    ObjectReader r(j, "model");
    std::string preset;
    r.string("preset", preset);
    if (!preset.empty()) p = preset_params(preset);
    r.number("d1", p.d1);
    r.number("d2", p.d2);
    r.number("lambda1", p.lambda1);
    r.number("lambda2", p.lambda2);
    r.number("a11", p.a11);
    r.number("a12", p.a12);
    r.number("a21", p.a21);
    r.number("a22", p.a22);
    r.number("omega", p.omega);
    std::string r1 = p.r1.name(), r2 = p.r2.name();
    r.string("r1", r1);
    r.string("r2", r2);
    p.r1 = ResourceProfile::parse(r1);
    p.r2 = ResourceProfile::parse(r2);
    r.finish();
}

void read_analysis(const json& j, AnalysisConfig& a) {
    ObjectReader r(j, "analysis");
    r.count("n", a.n);
    r.count("n_coarse", a.n_coarse);
    std::string conv = to_string(a.kappa_convention);
    r.string("kappa_convention", conv);
    a.kappa_convention = parse_kappa_convention(conv);
    r.integer("n_tau", a.n_tau);
    r.finish();
    if (a.n < 2) throw InvalidInput("analysis.n must be at least 2");
    if (a.n_coarse != 0 && a.n_coarse >= a.n) throw InvalidInput("analysis.n_coarse must be 0 or below analysis.n");
    if (a.n_tau < 0) throw InvalidInput("analysis.n_tau must be non-negative");
}

void read_sim(const json& j, SimConfig& c) {
    ObjectReader r(j, "sim");
    r.count("n", c.n);
    r.number("dt", c.dt);
    r.number("t_end", c.t_end);
    r.number("epsilon", c.epsilon);
    r.string("perturbation", c.perturbation);
    r.number("sample_interval", c.sample_interval);
    r.number("snapshot_interval", c.snapshot_interval);
    r.number("transient_fraction", c.transient_fraction);
    r.number("tol_conv", c.tolerances.tol_conv);
    r.number("tol_osc", c.tolerances.tol_osc);
    r.number("tol_extinct", c.tolerances.tol_extinct);
    r.number("growth_ratio", c.tolerances.growth_ratio);
    r.number("blowup_threshold", c.blowup_threshold);
    r.number("flux_headroom", c.flux_headroom);
    r.finish();
    c.validate();
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
    RunConfig c = default_run_config();
    ObjectReader r(j, "config");
    if (const json* m = r.object("model")) read_model(*m, c.model);
    if (const json* a = r.object("analysis")) read_analysis(*a, c.analysis);
    if (const json* s = r.object("sim")) read_sim(*s, c.sim);
    r.number("tau", c.tau);
    r.string("output_dir", c.output_dir);
    r.finish();
    c.model.validate();
    if (!(c.tau >= 0.0)) throw InvalidInput("tau must be non-negative");
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot read config file " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw InvalidInput("config file " + path + ": " + e.what());
    }
    return run_config_from_json(j);
}

bool operator==(const RunConfig& a, const RunConfig& b) { return to_json(a) == to_json(b); }

}  // namespace memdiff
