#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>

#include "kpx/experiment.hpp"

using namespace kpx;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("kpx_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

} // namespace

TEST_CASE("config file parsing") {
    auto kv = parse_config_text("# comment\n"
                                "budget = 10\n"
                                "[probe]\n"
                                "case = meps\n"
                                "\n"
                                "seed=42\n");
    CHECK(kv.at("budget") == "10");
    CHECK(kv.at("probe.case") == "meps");
    CHECK(kv.at("probe.seed") == "42");
    CHECK_THROWS_AS(parse_config_text("novalue\n"), usage_error);
}

TEST_CASE("unknown keys and commands are rejected by name") {
    CHECK_THROWS_AS(make_config("probe", {{"frobnicate", "1"}}, {}), usage_error);
    CHECK_THROWS_AS(make_config("nosuch", {}, {}), usage_error);
    try {
        make_config("probe", {}, {{"frobnicate", "1"}});
        FAIL("should have thrown");
    } catch (const usage_error& e) {
        CHECK(std::string(e.what()).find("frobnicate") != std::string::npos);
    }
    // section addressed to this command resolves
    auto cfg = make_config("probe", {{"probe.case", "meps"}}, {});
    CHECK(cfg.raw("case") == "meps");
}

TEST_CASE("typed getters and the config hash") {
    auto cfg = make_config("probe", {}, {{"budget", "5"}, {"seed", "9"}});
    CHECK(cfg.geti("budget") == 5);
    CHECK(cfg.getd("Tw") == Approx(2.0 * M_PI));
    CHECK_THROWS_AS(cfg.getd("case"), usage_error);
    auto cfg2 = make_config("probe", {}, {{"budget", "5"}, {"seed", "9"}});
    CHECK(cfg.hash_hex() == cfg2.hash_hex());
    auto cfg3 = make_config("probe", {}, {{"budget", "6"}, {"seed", "9"}});
    CHECK(cfg.hash_hex() != cfg3.hash_hex());
    // output path does not alter the identity
    auto cfg4 = make_config("probe", {}, {{"budget", "5"}, {"seed", "9"}, {"output", "x"}});
    CHECK(cfg.hash_hex() == cfg4.hash_hex());
}

TEST_CASE("probe case construction from config") {
    auto cfg = make_config("probe", {},
                           {{"case", "bil"}, {"b", "0.4"}, {"falsification", "1"}});
    ProbeCase c = probe_case_from_config(cfg);
    CHECK(c.b == 0.4);
    CHECK(c.falsification);
    auto diags = validate_experiment(cfg);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0] == "requires b > 1/2");

    auto bad = make_config("probe", {}, {{"case", "nosuch"}});
    CHECK_THROWS_AS(probe_case_from_config(bad), usage_error);
}

TEST_CASE("validate diagnostics for hypothesis presets") {
    auto ok = make_config("probe", {}, {{"case", "bil"}});
    CHECK(validate_experiment(ok).empty());
    auto n2 = make_config("probe", {}, {{"case", "nonlin2"}, {"alpha", "3"}});
    auto diags = validate_experiment(n2);
    REQUIRE(!diags.empty());
    CHECK(diags[0] == "requires 3 < alpha <= 4");
}

TEST_CASE("field serialization round-trips") {
    TempDir tmp("serialize");
    GridSpec g(3, 2, 2, 4.0);
    SpaceTimeSpectrum u(g);
    Rng rng(5);
    u.for_each([&](int k, int, int, int, cplx& v) {
        if (k != 0) v = rng.gaussian_cplx();
    });
    std::string p = tmp.str() + "/field.bin";
    save_field(u, p);
    auto back = load_spacetime_field(p);
    CHECK(back.grid() == g);
    CHECK(back.coeffs() == u.coeffs());

    SpatialSpectrum s(4, 3);
    s.set(2, -1, 3, {0.5, -0.25});
    std::string p2 = tmp.str() + "/spatial.bin";
    save_field(s, p2);
    auto back2 = load_spatial_field(p2);
    CHECK(back2.coeffs() == s.coeffs());
    CHECK_THROWS_AS(load_spacetime_field(p2), kpx_error); // kind mismatch

    auto j = field_debug_json(s);
    CHECK(j["kind"] == "spatial");
    CHECK(j["coeffs"].size() == 1);
}

TEST_CASE("experiments run deterministically") {
    SECTION("resonance identity experiment passes") {
        TempDir tmp("resonance");
        auto cfg = make_config("resonance", {},
                               {{"kmax", "6"},
                                {"eta_max", "5"},
                                {"eta_samples", "5"},
                                {"taus", "3"},
                                {"output", tmp.str()}});
        CHECK(run_experiment(cfg) == 0);
        std::string summary = read_file(tmp.str() + "/summary.json");
        CHECK(summary.find("\"violations\": 0") != std::string::npos);
        std::string csv = read_file(tmp.str() + "/resonance.csv");
        CHECK(csv.find("# config_hash=" + cfg.hash_hex()) != std::string::npos);
    }
    SECTION("count experiment emits counts and a fit") {
        TempDir tmp("count");
        auto cfg = make_config("count", {},
                               {{"r_max", "256"}, {"delta_grid", "2"}, {"output", tmp.str()}});
        CHECK(run_experiment(cfg) == 0);
        CHECK(fs::exists(tmp.str() + "/counts.csv"));
        CHECK(fs::exists(tmp.str() + "/fit.json"));
    }
    SECTION("probe experiment re-runs byte-identically") {
        TempDir t1("probe1"), t2("probe2");
        std::map<std::string, std::string> base = {
            {"case", "bil"}, {"N", "2"}, {"budget", "15"}, {"seed", "3"}, {"threads", "1"}};
        auto o1 = base;
        o1["output"] = t1.str();
        auto o2 = base;
        o2["output"] = t2.str();
        CHECK(run_experiment(make_config("probe", {}, o1)) == 0);
        CHECK(run_experiment(make_config("probe", {}, o2)) == 0);
        // identical configs up to the output path: identical bytes
        CHECK(read_file(t1.str() + "/probe.json") == read_file(t2.str() + "/probe.json"));
        CHECK(read_file(t1.str() + "/probe.csv") == read_file(t2.str() + "/probe.csv"));
    }
    SECTION("kernel_sum and time_loc probes route to their entry points") {
        TempDir tmp("kernel");
        auto cfg = make_config("probe", {},
                               {{"case", "kernel_sum"},
                                {"k", "3"},
                                {"k1", "1"},
                                {"R", "4"},
                                {"output", tmp.str()}});
        CHECK(run_experiment(cfg) == 0);
        CHECK(fs::exists(tmp.str() + "/probe.json"));

        TempDir tmp2("timeloc");
        auto cfg2 = make_config("probe", {},
                                {{"case", "time_loc"},
                                 {"N", "2"},
                                 {"J", "64"},
                                 {"output", tmp2.str()}});
        CHECK(run_experiment(cfg2) == 0);
    }
    SECTION("solve experiment writes diagnostics and checkpoints") {
        TempDir tmp("solve");
        auto cfg = make_config("solve", {},
                               {{"K", "4"},
                                {"M", "4"},
                                {"dt", "0.01"},
                                {"t_end", "0.05"},
                                {"output", tmp.str()}});
        CHECK(run_experiment(cfg) == 0);
        CHECK(fs::exists(tmp.str() + "/diagnostics.csv"));
        CHECK(fs::exists(tmp.str() + "/final.bin"));
        auto final_state = load_spatial_field(tmp.str() + "/final.bin");
        CHECK(final_state.l2_norm() > 0.0);
    }
    SECTION("picard experiment reports contraction data") {
        TempDir tmp("picard");
        auto cfg = make_config("picard", {},
                               {{"K", "4"},
                                {"M", "4"},
                                {"depth", "3"},
                                {"T", "0.05"},
                                {"nodes", "17"},
                                {"output", tmp.str()}});
        CHECK(run_experiment(cfg) == 0);
        std::string j = read_file(tmp.str() + "/picard.json");
        CHECK(j.find("rho_l2") != std::string::npos);
    }
    SECTION("sweep with an assertion gate returns exit 2 when violated") {
        TempDir tmp("sweep");
        auto cfg = make_config("sweep", {},
                               {{"case", "bil"},
                                {"sizes", "2,3"},
                                {"budget", "10"},
                                {"assert_slope_below", "-100"},
                                {"output", tmp.str()}});
        CHECK(run_experiment(cfg) == 2);
    }
}
