#ifndef KPX_EXPERIMENT_HPP
#define KPX_EXPERIMENT_HPP

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpx/counting.hpp"
#include "kpx/estimate_probe.hpp"
#include "kpx/kp_solver.hpp"
#include "kpx/serialize.hpp"

namespace kpx {

struct usage_error : kpx_error {
    explicit usage_error(const std::string& what) : kpx_error(what) {}
};

// ---------------------------------------------------------------------------
// experiment configuration: line-oriented "key = value" files with optional
// [sections] (flattened as section.key), full override from the command line
// ---------------------------------------------------------------------------

struct ParamSpec {
    std::string key;
    std::string def;
    std::string help;
};

inline const std::map<std::string, std::vector<ParamSpec>>& command_registry() {
    static const std::map<std::string, std::vector<ParamSpec>> reg = {
        {"count",
         {{"r_max", "10000", "largest annulus radius^2 (dyadic sweep)"},
          {"delta_grid", "8", "shift grid step denominator on [0,1]^2"},
          {"csv_rows", "100000", "cap on emitted CSV rows"},
          {"seed", "1", "unused; recorded"},
          {"threads", "1", "worker threads"},
          {"output", "out-count", "output directory"}}},
        {"resonance",
         {{"alpha", "2", "dispersion exponent"},
          {"kmax", "50", "exhaustive |k1|,|k2| bound"},
          {"eta_max", "20", "eta component bound"},
          {"eta_samples", "100", "sampled eta pairs per k pair"},
          {"taus", "10", "random tau pairs per interaction"},
          {"tol", "1e-10", "relative identity tolerance"},
          {"csv_rows", "20000", "cap on emitted CSV rows"},
          {"seed", "1", "rng seed"},
          {"threads", "1", "worker threads"},
          {"output", "out-resonance", "output directory"}}},
        {"norms",
         {{"K", "8", "max |k|"},
          {"M", "8", "max |eta_i|"},
          {"J", "8", "max |j|"},
          {"Tw", "6.283185307179586", "time window"},
          {"s", "0.5", "x-weight exponent"},
          {"eps", "0.1", "y-weight exponent"},
          {"b", "0.5", "modulation exponent"},
          {"beta", "0", "extra weight exponent"},
          {"alpha", "2", "dispersion exponent"},
          {"k_weight", "homogeneous", "homogeneous | bracket"},
          {"p_tau", "1.5", "mixed-norm p"},
          {"input", "", "optional binary field to load"},
          {"weights_csv_rows", "0", "if > 0, dump per-mode weights"},
          {"seed", "1", "rng seed for the drawn field"},
          {"threads", "1", "worker threads"},
          {"output", "out-norms", "output directory"}}},
        {"probe",
         {{"case", "bil", "probe case name"},
          {"N", "8", "K = M = J when K is 0"},
          {"K", "0", "max |k| (0: use N)"},
          {"M", "0", "max |eta_i| (0: use N)"},
          {"J", "0", "max |j| (0: use N)"},
          {"Tw", "6.283185307179586", "time window"},
          {"family", "random_gaussian", "search family"},
          {"budget", "200", "ratio evaluations"},
          {"falsification", "0", "allow hypothesis-violating parameters"},
          {"alpha", "", "override dispersion exponent"},
          {"s1", "", "override"},
          {"s2", "", "override"},
          {"eps0", "", "override"},
          {"eps1", "", "override"},
          {"eps2", "", "override"},
          {"b", "", "override"},
          {"s", "", "override"},
          {"eps", "", "override"},
          {"bprime", "", "override"},
          {"beta", "", "override"},
          {"p_tau", "", "override"},
          {"T", "", "override (time cutoff)"},
          {"b_tilde", "", "override"},
          {"R", "", "override region size"},
          {"center1", "", "override region center x"},
          {"center2", "", "override region center y"},
          {"region", "disc", "disc | square"},
          {"dual_delta", "", "override"},
          {"k_weight", "homogeneous", "homogeneous | bracket"},
          {"k", "4", "kernel_sum: output k"},
          {"k1", "1", "kernel_sum: first k"},
          {"tau", "0", "kernel_sum: tau"},
          {"eta1", "0", "kernel_sum / time_loc eta"},
          {"eta2", "0", "kernel_sum / time_loc eta"},
          {"assert_ratio_below", "", "exit 2 when the best ratio reaches this"},
          {"seed", "1", "rng seed"},
          {"threads", "1", "worker threads"},
          {"output", "out-probe", "output directory"}}},
        {"sweep",
         {{"case", "bil", "probe case name"},
          {"sizes", "4,8,16", "ascending truncation sizes"},
          {"Tw", "6.283185307179586", "time window"},
          {"family", "random_gaussian", "search family"},
          {"budget", "200", "ratio evaluations per size"},
          {"falsification", "0", "allow hypothesis-violating parameters"},
          {"alpha", "", "override dispersion exponent"},
          {"s1", "", "override"},
          {"s2", "", "override"},
          {"eps0", "", "override"},
          {"eps1", "", "override"},
          {"eps2", "", "override"},
          {"b", "", "override"},
          {"s", "", "override"},
          {"eps", "", "override"},
          {"bprime", "", "override"},
          {"beta", "", "override"},
          {"p_tau", "", "override"},
          {"R", "", "override region size"},
          {"region", "disc", "disc | square"},
          {"dual_delta", "", "override"},
          {"k_weight", "homogeneous", "homogeneous | bracket"},
          {"assert_slope_below", "", "exit 2 when the fit slope reaches this"},
          {"seed", "1", "rng seed"},
          {"threads", "1", "worker threads"},
          {"output", "out-sweep", "output directory"}}},
        {"solve",
         {{"alpha", "2", "dispersion exponent"},
          {"K", "16", "max |k|"},
          {"M", "16", "max |eta_i|"},
          {"dt", "1e-3", "time step"},
          {"t_end", "1", "final time"},
          {"scheme", "etdrk4", "etdrk4 | ifrk4"},
          {"dealias", "0.6666666666666666", "retained band fraction"},
          {"amp", "0.1", "preset data amplitude"},
          {"u0", "cosx_cosxy1", "cosx_cosxy1 | cosx | single_mode_norm"},
          {"u0_norm", "0.05", "L2 norm for single_mode_norm data"},
          {"input", "", "optional binary initial data"},
          {"checkpoints", "1", "write trajectory checkpoints"},
          {"diag_energy", "1", "record the cubic energy term"},
          {"state_stride", "0", "checkpoint stride (0: 16 checkpoints)"},
          {"seed", "1", "unused; recorded"},
          {"threads", "1", "worker threads"},
          {"output", "out-solve", "output directory"}}},
        {"picard",
         {{"alpha", "2", "dispersion exponent"},
          {"K", "16", "max |k|"},
          {"M", "16", "max |eta_i|"},
          {"depth", "6", "iteration depth"},
          {"T", "0.05", "time horizon"},
          {"nodes", "65", "quadrature nodes on [0, T)"},
          {"u0_norm", "0.05", "L2 norm of the single-mode data"},
          {"dealias", "0.6666666666666666", "retained band fraction"},
          {"seed", "1", "unused; recorded"},
          {"threads", "1", "worker threads"},
          {"output", "out-picard", "output directory"}}}};
    return reg;
}

struct ExperimentConfig {
    std::string command;
    std::map<std::string, std::string> params; // fully resolved

    const std::string& raw(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end())
            throw usage_error("unknown parameter '" + key + "' for command " + command);
        return it->second;
    }
    double getd(const std::string& key) const {
        const std::string& s = raw(key);
        try {
            size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw usage_error("parameter '" + key + "' is not a number: '" + s + "'");
        }
    }
    int64_t geti(const std::string& key) const {
        const std::string& s = raw(key);
        try {
            size_t pos = 0;
            int64_t v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw usage_error("parameter '" + key + "' is not an integer: '" + s + "'");
        }
    }
    bool getb(const std::string& key) const {
        const std::string& s = raw(key);
        if (s == "1" || s == "true" || s == "yes") return true;
        if (s == "0" || s == "false" || s == "no") return false;
        throw usage_error("parameter '" + key + "' is not a boolean: '" + s + "'");
    }
    bool has(const std::string& key) const {
        auto it = params.find(key);
        return it != params.end() && !it->second.empty();
    }

    // canonical form and hash exclude the output path; everything else is
    // part of the experiment identity
    std::string canonical() const {
        std::string s = "command=" + command + "\n";
        for (const auto& [k, v] : params)
            if (k != "output") s += k + "=" + v + "\n";
        return s;
    }
    uint64_t hash() const { return fnv1a64(canonical()); }
    std::string hash_hex() const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016" PRIx64, hash());
        return buf;
    }
};

// parse "key = value" lines with optional [section] headers and # comments
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream is(text);
    std::string line, section;
    auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw usage_error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty())
            throw usage_error("config line " + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        out[key] = val;
    }
    return out;
}

// resolve defaults + file values + command-line overrides; unknown keys are
// rejected by name
inline ExperimentConfig make_config(const std::string& command,
                                    const std::map<std::string, std::string>& file_params,
                                    const std::map<std::string, std::string>& overrides) {
    auto reg_it = command_registry().find(command);
    if (reg_it == command_registry().end()) throw usage_error("unknown command '" + command + "'");
    ExperimentConfig cfg;
    cfg.command = command;
    for (const auto& spec : reg_it->second) cfg.params[spec.key] = spec.def;
    auto apply = [&](const std::map<std::string, std::string>& src, const char* origin) {
        for (const auto& [k, v] : src) {
            std::string key = k;
            // a "command.key" section form addresses this command's keys
            std::string prefix = command + ".";
            if (key.rfind(prefix, 0) == 0) key = key.substr(prefix.size());
            if (key == "command") {
                if (v != command)
                    throw usage_error(std::string(origin) + ": config is for command '" + v +
                                      "', not '" + command + "'");
                continue;
            }
            if (cfg.params.find(key) == cfg.params.end())
                throw usage_error(std::string(origin) + ": unknown key '" + key +
                                  "' for command " + command);
            cfg.params[key] = v;
        }
    };
    apply(file_params, "config file");
    apply(overrides, "command line");
    return cfg;
}

// ---------------------------------------------------------------------------
// output helpers: CSV (RFC-4180 style quoting) with the resolved config in
// comment lines, and JSON summaries embedding the same
// ---------------------------------------------------------------------------

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const ExperimentConfig& cfg,
              const std::vector<std::string>& columns)
        : os_(path) {
        if (!os_) throw kpx_error("cannot open " + path);
        os_ << "# config_hash=" << cfg.hash_hex() << "\n";
        os_ << "# command=" << cfg.command << "\n";
        for (const auto& [k, v] : cfg.params)
            if (k != "output") os_ << "# " << k << "=" << v << "\n";
        write_row(columns);
    }

    void write_row(const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i) os_ << ",";
            os_ << quote(fields[i]);
        }
        os_ << "\n";
    }

  private:
    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        q += '"';
        return q;
    }
    std::ofstream os_;
};

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["command"] = cfg.command;
    j["config_hash"] = cfg.hash_hex();
    nlohmann::json p;
    for (const auto& [k, v] : cfg.params)
        if (k != "output") p[k] = v;
    j["config"] = std::move(p);
    return j;
}

// the fully resolved probe-case parameters (presets plus overrides)
inline nlohmann::json case_json(const ProbeCase& c) {
    nlohmann::json j;
    j["case"] = c.name();
    j["alpha"] = c.disp.alpha;
    j["s1"] = c.s1;
    j["s2"] = c.s2;
    j["eps0"] = c.eps0;
    j["eps1"] = c.eps1;
    j["eps2"] = c.eps2;
    j["b"] = c.b;
    j["s"] = c.s;
    j["eps"] = c.eps;
    j["bprime"] = c.bprime;
    j["beta"] = c.beta;
    j["p_tau"] = c.p_tau;
    j["T"] = c.T;
    j["b_tilde"] = c.b_tilde;
    j["dual_delta"] = c.dual_delta;
    j["region"] = c.B.kind == Region::Kind::disc ? "disc" : "square";
    j["R"] = c.B.R;
    j["center"] = {c.B.c1, c.B.c2};
    j["k_weight"] = c.k_weight == KWeight::homogeneous ? "homogeneous" : "bracket";
    j["falsification"] = c.falsification;
    return j;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream os(path);
    if (!os) throw kpx_error("cannot open " + path);
    os << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// experiment construction helpers
// ---------------------------------------------------------------------------

inline ProbeCase probe_case_from_config(const ExperimentConfig& cfg) {
    auto kind = probe_kind_from_name(cfg.raw("case"));
    if (!kind) throw usage_error("unknown probe case '" + cfg.raw("case") + "'");
    ProbeCase c = ProbeCase::preset(*kind);
    auto setd = [&](const char* key, double& field) {
        if (cfg.has(key)) field = cfg.getd(key);
    };
    if (cfg.has("alpha")) c.disp = DispersionParams(cfg.getd("alpha"));
    setd("s1", c.s1);
    setd("s2", c.s2);
    setd("eps0", c.eps0);
    setd("eps1", c.eps1);
    setd("eps2", c.eps2);
    setd("b", c.b);
    setd("s", c.s);
    setd("eps", c.eps);
    setd("bprime", c.bprime);
    setd("beta", c.beta);
    setd("p_tau", c.p_tau);
    if (cfg.params.count("T")) setd("T", c.T);
    if (cfg.params.count("b_tilde")) setd("b_tilde", c.b_tilde);
    setd("dual_delta", c.dual_delta);
    if (cfg.has("R")) c.B.R = cfg.getd("R");
    if (cfg.params.count("center1") && cfg.has("center1")) c.B.c1 = cfg.getd("center1");
    if (cfg.params.count("center2") && cfg.has("center2")) c.B.c2 = cfg.getd("center2");
    if (cfg.raw("region") == "square")
        c.B.kind = Region::Kind::square;
    else if (cfg.raw("region") != "disc")
        throw usage_error("parameter 'region' must be disc or square");
    if (cfg.raw("k_weight") == "bracket")
        c.k_weight = KWeight::bracket;
    else if (cfg.raw("k_weight") != "homogeneous")
        throw usage_error("parameter 'k_weight' must be homogeneous or bracket");
    c.falsification = cfg.getb("falsification");
    return c;
}

inline SpatialSpectrum solve_initial_data(const ExperimentConfig& cfg) {
    if (cfg.has("input")) return load_spatial_field(cfg.raw("input"));
    int K = int(cfg.geti("K")), M = int(cfg.geti("M"));
    std::string kind = cfg.raw("u0");
    SpatialSpectrum u0(K, M);
    if (kind == "cosx_cosxy1") {
        double a = cfg.getd("amp") / 2.0;
        u0.set(1, 0, 0, {a, 0.0});
        u0.set(-1, 0, 0, {a, 0.0});
        u0.add(1, 1, 0, {a, 0.0});
        u0.add(-1, -1, 0, {a, 0.0});
    } else if (kind == "cosx") {
        double a = cfg.getd("amp") / 2.0;
        u0.set(1, 0, 0, {a, 0.0});
        u0.set(-1, 0, 0, {a, 0.0});
    } else if (kind == "single_mode_norm") {
        double c = cfg.getd("u0_norm") / std::sqrt(2.0);
        u0.set(1, 0, 0, {c, 0.0});
        u0.set(-1, 0, 0, {c, 0.0});
    } else {
        throw usage_error("parameter 'u0' has unknown preset '" + kind + "'");
    }
    return u0;
}

// validation op: named diagnostics, no side effects
inline std::vector<std::string> validate_experiment(const ExperimentConfig& cfg) {
    std::vector<std::string> diags;
    if (cfg.command == "probe" || cfg.command == "sweep") {
        ProbeCase c = probe_case_from_config(cfg);
        diags = c.validate();
    } else if (cfg.command == "count") {
        if (cfg.geti("r_max") < 100) diags.push_back("requires r_max >= 100");
        if (cfg.geti("delta_grid") < 1) diags.push_back("requires delta_grid >= 1");
    } else if (cfg.command == "solve" || cfg.command == "picard") {
        if (cfg.getd("alpha") < 2.0) diags.push_back("requires alpha >= 2");
    }
    return diags;
}

// ---------------------------------------------------------------------------
// run: deterministic artifacts per command; exit code 0 ok, 2 on an
// acceptance violation (callers map usage errors to 1)
// ---------------------------------------------------------------------------

inline int run_experiment(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const std::string dir = cfg.raw("output");
    fs::create_directories(dir);
    auto path = [&](const std::string& name) { return dir + "/" + name; };
    int threads = int(cfg.geti("threads"));

    if (cfg.command == "count") {
        int64_t r_max = cfg.geti("r_max");
        int64_t denom = cfg.geti("delta_grid");
        std::vector<std::pair<double, double>> deltas;
        for (int64_t i = 0; i <= denom; ++i)
            for (int64_t j = 0; j <= denom; ++j)
                deltas.push_back({double(i) / double(denom), double(j) / double(denom)});
        CsvWriter csv(path("counts.csv"), cfg, {"r", "delta_x", "delta_y", "count"});
        int64_t rows = 0, cap = cfg.geti("csv_rows");
        for (int64_t r = 1; r <= r_max; r *= 2)
            for (const auto& d : deltas) {
                if (rows++ >= cap) break;
                csv.write_row({std::to_string(r), fmt_double(d.first), fmt_double(d.second),
                               std::to_string(count_annulus({r, d.first, d.second}))});
            }
        auto fit = fit_growth_exponent(r_max, deltas);
        nlohmann::json j = config_json(cfg);
        j["exponent"] = fit.exponent;
        j["radii"] = fit.radii;
        j["max_counts"] = fit.max_counts;
        write_json(path("fit.json"), j);
        return 0;
    }

    if (cfg.command == "resonance") {
        DispersionParams disp(cfg.getd("alpha"));
        int kmax = int(cfg.geti("kmax"));
        int emax = int(cfg.geti("eta_max"));
        int esamples = int(cfg.geti("eta_samples"));
        int taus = int(cfg.geti("taus"));
        double tol = cfg.getd("tol");
        uint64_t seed = uint64_t(cfg.geti("seed"));
        CsvWriter csv(path("resonance.csv"), cfg,
                      {"k1", "k2", "eta1_1", "eta1_2", "eta2_1", "eta2_2", "alpha", "r_term",
                       "mixed_term"});
        int64_t rows = 0, cap = cfg.geti("csv_rows");
        int64_t checks = 0, violations = 0;
        double max_rel = 0.0;
        for (int k1 = -kmax; k1 <= kmax; ++k1)
            for (int k2 = -kmax; k2 <= kmax; ++k2) {
                if (k1 == 0 || k2 == 0 || k1 + k2 == 0) continue;
                Rng rng(Rng::derive(seed, uint64_t((k1 + kmax) * (2 * kmax + 1) + (k2 + kmax))));
                for (int s = 0; s < esamples; ++s) {
                    FreqPoint xi1{k1, int(rng.uniform_int(-emax, emax)),
                                  int(rng.uniform_int(-emax, emax))};
                    FreqPoint xi2{k2, int(rng.uniform_int(-emax, emax)),
                                  int(rng.uniform_int(-emax, emax))};
                    auto split = resonance_decomposition(xi1, xi2, disp);
                    if (rows++ < cap)
                        csv.write_row({std::to_string(k1), std::to_string(k2),
                                       std::to_string(xi1.e1), std::to_string(xi1.e2),
                                       std::to_string(xi2.e1), std::to_string(xi2.e2),
                                       fmt_double(disp.alpha), fmt_double(split.r_term),
                                       fmt_double(split.mixed_term)});
                    for (int t = 0; t < taus; ++t) {
                        double t1 = rng.uniform(-100.0, 100.0);
                        double t2 = rng.uniform(-100.0, 100.0);
                        double lhs = sigma(t1, xi1, disp) + sigma(t2, xi2, disp) -
                                     sigma(t1 + t2, xi1 + xi2, disp);
                        double rel = std::abs(lhs - split.total) /
                                     std::max(1.0, std::abs(split.total));
                        max_rel = std::max(max_rel, rel);
                        ++checks;
                        if (rel >= tol) ++violations;
                    }
                }
            }
        nlohmann::json j = config_json(cfg);
        j["checks"] = checks;
        j["violations"] = violations;
        j["max_rel_deviation"] = max_rel;
        write_json(path("summary.json"), j);
        return violations == 0 ? 0 : 2;
    }

    if (cfg.command == "norms") {
        GridSpec g(int(cfg.geti("K")), int(cfg.geti("M")), int(cfg.geti("J")), cfg.getd("Tw"));
        SpaceTimeSpectrum u(g);
        if (cfg.has("input")) {
            u = load_spacetime_field(cfg.raw("input"));
        } else {
            Rng rng(uint64_t(cfg.geti("seed")));
            u.for_each([&](int k, int, int, int, cplx& v) {
                if (k != 0) v = rng.gaussian_cplx();
            });
        }
        NormParams p(cfg.getd("s"), cfg.getd("eps"), cfg.getd("b"), cfg.getd("beta"),
                     DispersionParams(cfg.getd("alpha")),
                     cfg.raw("k_weight") == "bracket" ? KWeight::bracket : KWeight::homogeneous);
        nlohmann::json j = config_json(cfg);
        j["l2"] = u.l2_norm();
        j["xsb"] = xsb_norm(u, p);
        j["y"] = y_norm(u, p);
        j["z"] = z_norm(u, p);
        j["mixed"] = mixed_norm(u, p, cfg.getd("p_tau"));
        j["l4"] = lebesgue_norm(u, 4.0);
        write_json(path("norms.json"), j);
        int64_t cap = cfg.geti("weights_csv_rows");
        if (cap > 0) {
            CsvWriter csv(path("weights.csv"), cfg,
                          {"k", "eta1", "eta2", "j", "weight", "abs_coeff"});
            int64_t rows = 0;
            const GridSpec& gg = u.grid();
            u.for_each([&](int k, int e1, int e2, int jj, const cplx& v) {
                if (k == 0 || rows >= cap) return;
                ++rows;
                csv.write_row({std::to_string(k), std::to_string(e1), std::to_string(e2),
                               std::to_string(jj),
                               fmt_double(norm_weight(p, gg, k, e1, e2, jj)),
                               fmt_double(std::abs(v))});
            });
        }
        return 0;
    }

    if (cfg.command == "probe") {
        ProbeCase c = probe_case_from_config(cfg);
        int N = int(cfg.geti("N"));
        int K = cfg.geti("K") > 0 ? int(cfg.geti("K")) : N;
        int M = cfg.geti("M") > 0 ? int(cfg.geti("M")) : N;
        int J = cfg.geti("J") > 0 ? int(cfg.geti("J")) : N;
        GridSpec g(K, M, J, cfg.getd("Tw"));
        uint64_t seed = uint64_t(cfg.geti("seed"));

        if (c.kind == ProbeKind::kernel_sum) {
            auto rep = probe_kernel_sum(int(cfg.geti("k")), int(cfg.geti("k1")), cfg.getd("tau"),
                                        {int(cfg.geti("eta1")), int(cfg.geti("eta2"))}, c.B, c.b,
                                        c.eps, c.disp);
            CsvWriter csv(path("probe.csv"), cfg,
                          {"case", "lhs", "rhs", "ratio", "omega_max_dev", "points"});
            csv.write_row({"kernel_sum", fmt_double(rep.lhs), fmt_double(rep.rhs),
                           fmt_double(rep.ratio), fmt_double(rep.omega_max_dev),
                           std::to_string(rep.points)});
            nlohmann::json j = config_json(cfg);
            j["lhs"] = rep.lhs;
            j["rhs"] = rep.rhs;
            j["ratio"] = rep.ratio;
            j["omega_max_dev"] = rep.omega_max_dev;
            j["points"] = rep.points;
            write_json(path("probe.json"), j);
            if (cfg.has("assert_ratio_below") && rep.ratio >= cfg.getd("assert_ratio_below"))
                return 2;
            return 0;
        }
        if (c.kind == ProbeKind::time_loc) {
            SpatialSpectrum u0(K, M);
            Rng rng(seed);
            u0.for_each([&](int k, int, int, cplx& v) {
                if (k != 0) v = 0.1 * rng.gaussian_cplx();
            });
            auto rep = probe_time_localization(u0, c, g);
            CsvWriter csv(path("probe.csv"), cfg, {"case", "T", "ratio"});
            for (size_t i = 0; i < rep.T_values.size(); ++i)
                csv.write_row({"time_loc", fmt_double(rep.T_values[i]),
                               fmt_double(rep.ratios[i])});
            nlohmann::json j = config_json(cfg);
            j["T"] = rep.T_values;
            j["ratios"] = rep.ratios;
            j["fitted_exponent"] = rep.fitted_exponent;
            j["flagged"] = rep.flagged;
            write_json(path("probe.json"), j);
            return 0;
        }

        auto fam = family_from_name(cfg.raw("family"));
        if (!fam) throw usage_error("unknown family '" + cfg.raw("family") + "'");
        auto res = extremizer_search(c, *fam, g, size_t(cfg.geti("budget")), seed, threads);
        CsvWriter csv(path("probe.csv"), cfg,
                      {"case", "N", "K", "M", "J", "lhs", "rhs", "ratio", "seed", "family"});
        csv.write_row({c.name(), std::to_string(std::max({K, M, J})), std::to_string(K),
                       std::to_string(M), std::to_string(J), fmt_double(res.best.lhs),
                       fmt_double(res.best.rhs), fmt_double(res.best.ratio),
                       std::to_string(seed), cfg.raw("family")});
        nlohmann::json j = config_json(cfg);
        j["lhs"] = res.best.lhs;
        j["rhs"] = res.best.rhs;
        j["ratio"] = res.best.ratio;
        j["flagged"] = res.best.flagged;
        j["descriptor"] = res.descriptor;
        j["evaluations"] = res.evaluations;
        j["accepted_steps"] = res.accepted_steps;
        j["hypothesis_diagnostics"] = c.validate();
        j["resolved_case"] = case_json(c);
        write_json(path("probe.json"), j);
        if (cfg.has("assert_ratio_below") && res.best.ratio >= cfg.getd("assert_ratio_below"))
            return 2;
        return 0;
    }

    if (cfg.command == "sweep") {
        ProbeCase c = probe_case_from_config(cfg);
        auto fam = family_from_name(cfg.raw("family"));
        if (!fam) throw usage_error("unknown family '" + cfg.raw("family") + "'");
        std::vector<int> sizes;
        {
            std::istringstream is(cfg.raw("sizes"));
            std::string tok;
            while (std::getline(is, tok, ',')) sizes.push_back(std::stoi(tok));
        }
        auto rep = scaling_sweep(c, *fam, sizes, size_t(cfg.geti("budget")),
                                 uint64_t(cfg.geti("seed")), threads, cfg.getd("Tw"));
        CsvWriter csv(path("sweep.csv"), cfg,
                      {"case", "N", "K", "M", "J", "lhs", "rhs", "ratio", "seed", "family"});
        for (size_t i = 0; i < rep.sizes.size(); ++i) {
            int n = rep.sizes[i];
            const auto& b = rep.results[i].best;
            csv.write_row({c.name(), std::to_string(n), std::to_string(n), std::to_string(n),
                           std::to_string(n), fmt_double(b.lhs), fmt_double(b.rhs),
                           fmt_double(b.ratio), std::to_string(cfg.geti("seed")),
                           cfg.raw("family")});
        }
        nlohmann::json j = config_json(cfg);
        j["sizes"] = rep.sizes;
        j["best_ratios"] = rep.best_ratios;
        j["fit_slope"] = rep.fit_slope;
        j["hypothesis_diagnostics"] = c.validate();
        j["resolved_case"] = case_json(c);
        write_json(path("sweep.json"), j);
        if (cfg.has("assert_slope_below") && rep.fit_slope >= cfg.getd("assert_slope_below"))
            return 2;
        return 0;
    }

    if (cfg.command == "solve") {
        SolverConfig sc;
        sc.disp = DispersionParams(cfg.getd("alpha"));
        sc.K = int(cfg.geti("K"));
        sc.M = int(cfg.geti("M"));
        sc.dt = cfg.getd("dt");
        sc.t_end = cfg.getd("t_end");
        sc.dealias = cfg.getd("dealias");
        sc.state_stride = int(cfg.geti("state_stride"));
        std::string scheme = cfg.raw("scheme");
        if (scheme == "etdrk4")
            sc.scheme = Scheme::etdrk4;
        else if (scheme == "ifrk4")
            sc.scheme = Scheme::integrating_factor_rk4;
        else
            throw usage_error("parameter 'scheme' must be etdrk4 or ifrk4");
        KpSolver solver(sc);
        auto u0 = solve_initial_data(cfg);
        auto traj = solver.solve_cauchy(u0);
        CsvWriter csv(path("diagnostics.csv"), cfg, {"t", "l2", "drift", "energy", "max_mode"});
        for (const auto& d : traj.diagnostics)
            csv.write_row({fmt_double(d.t), fmt_double(d.l2), fmt_double(d.drift),
                           fmt_double(d.energy), fmt_double(d.max_mode)});
        if (cfg.getb("checkpoints")) {
            for (size_t i = 0; i < traj.states.size(); ++i) {
                char name[48];
                std::snprintf(name, sizeof name, "traj_%03zu.bin", i);
                save_field(traj.states[i], path(name));
            }
        }
        save_field(traj.states.back(), path("final.bin"));
        nlohmann::json j = config_json(cfg);
        j["steps"] = traj.diagnostics.size() - 1;
        j["l2_drift"] = l2_drift(traj);
        j["final_l2"] = traj.diagnostics.back().l2;
        write_json(path("solve.json"), j);
        return 0;
    }

    if (cfg.command == "picard") {
        SolverConfig sc;
        sc.disp = DispersionParams(cfg.getd("alpha"));
        sc.K = int(cfg.geti("K"));
        sc.M = int(cfg.geti("M"));
        sc.dealias = cfg.getd("dealias");
        SpatialSpectrum u0(sc.K, sc.M);
        double c = cfg.getd("u0_norm") / std::sqrt(2.0);
        u0.set(1, 0, 0, {c, 0.0});
        u0.set(-1, 0, 0, {c, 0.0});
        auto rep = duhamel_picard(u0, sc, int(cfg.geti("depth")), cfg.getd("T"),
                                  int(cfg.geti("nodes")));
        CsvWriter csv(path("picard.csv"), cfg, {"iteration", "diff_l2", "rho_l2", "rho_x"});
        for (size_t i = 0; i < rep.diff_l2.size(); ++i)
            csv.write_row({std::to_string(i + 1), fmt_double(rep.diff_l2[i]),
                           i > 0 ? fmt_double(rep.rho_l2[i - 1]) : "",
                           i > 0 ? fmt_double(rep.rho_x[i - 1]) : ""});
        save_field(rep.final_iterate.back(), path("final_node.bin"));
        nlohmann::json j = config_json(cfg);
        j["final_time"] = rep.final_time;
        j["diff_l2"] = rep.diff_l2;
        j["rho_l2"] = rep.rho_l2;
        j["rho_x"] = rep.rho_x;
        j["diverged"] = rep.diverged;
        write_json(path("picard.json"), j);
        return rep.diverged ? 2 : 0;
    }

    throw usage_error("unknown command '" + cfg.command + "'");
}

} // namespace kpx

#endif
