#include <catch2/catch.hpp>

#include "ergolab/cli_recipes.hpp"
#include "ergolab/config.hpp"
#include "ergolab/metric_spec.hpp"

#include <filesystem>
#include <fstream>

using namespace ergolab;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) { return read_text_file(p); }
}  // namespace

TEST_CASE("key=value parsing", "[config]") {
    SECTION("values, comments, namespaced keys") {
        auto cfg = KeyValueConfig::parse(
            "# header\n"
            "command = wave\n"
            "grid.n_rho = 400   # trailing comment\n"
            "time.dt = 2.5e-3\n"
            "flags = 1,2.5,-3\n");
        REQUIRE(cfg.get_string("command") == "wave");
        REQUIRE(cfg.get_int("grid.n_rho") == 400);
        REQUIRE(cfg.get_double("time.dt") == Approx(2.5e-3));
        auto v = cfg.get_doubles("flags");
        REQUIRE(v == std::vector<double>{1.0, 2.5, -3.0});
    }
    SECTION("parse errors carry line numbers") {
        try {
            KeyValueConfig::parse("a = 1\nnot a key value\n");
            FAIL("expected parse error");
        } catch (const ConfigParseError& e) {
            REQUIRE(e.line == 2);
        }
        REQUIRE_THROWS_AS(KeyValueConfig::parse("a = 1\na = 2\n"), ConfigParseError);
        REQUIRE_THROWS_AS(KeyValueConfig::parse("= 1\n"), ConfigParseError);
    }
    SECTION("typed access failures name the key") {
        auto cfg = KeyValueConfig::parse("x = abc\n");
        try {
            cfg.get_double("x");
            FAIL("expected validation error");
        } catch (const ConfigValidationError& e) {
            REQUIRE(e.key == "x");
        }
        REQUIRE_THROWS_AS(cfg.get_string("missing"), ConfigValidationError);
    }
    SECTION("unknown keys are rejected by the whitelist") {
        auto cfg = KeyValueConfig::parse("command = ergo\nmetric.family = kerr\nbogus = 1\n");
        try {
            cfg.validate_keys({"command", "metric."});
            FAIL("expected validation error");
        } catch (const ConfigValidationError& e) {
            REQUIRE(e.key == "bogus");
        }
    }
}

TEST_CASE("metric families from config", "[config]") {
    SECTION("kerr with horizon curve") {
        auto cfg = KeyValueConfig::parse("metric.family = kerr\nmetric.m = 1\nmetric.a = 0.5\n");
        MetricHandle mh = metric_from_config(cfg);
        REQUIRE(mh.horizon.has_value());
        REQUIRE(mh.flow.has_value());
        REQUIRE(mh.metric.coords == Coords::cylindrical);
        // the attached horizon really is characteristic
        CharReport rep = characteristic_residual(mh.metric, *mh.horizon);
        REQUIRE(rep.classification == SurfaceClass::black_hole);
    }
    SECTION("unknown family is a validation error") {
        auto cfg = KeyValueConfig::parse("metric.family = nonsense\n");
        REQUIRE_THROWS_AS(metric_from_config(cfg), ConfigValidationError);
    }
    SECTION("curve kinds") {
        auto cfg = KeyValueConfig::parse(
            "metric.family = horizon_design\n"
            "metric.curve.kind = ellipse\nmetric.curve.a = 1.5\nmetric.curve.b = 0.9\n");
        MetricHandle mh = metric_from_config(cfg);
        REQUIRE(mh.horizon.has_value());
        REQUIRE(mh.metric.dim == 2);
    }
}

TEST_CASE("curve csv round trip", "[config]") {
    fs::path dir = fs::temp_directory_path() / "ergolab_test_csv";
    fs::create_directories(dir);
    PlaneCurve c = make_circle(Vec2(0, 0), 1.5, 64);
    write_curve_csv(dir / "curve.csv", c);
    PlaneCurve back = read_curve_csv(dir / "curve.csv");
    REQUIRE(back.pts.size() == c.pts.size());
    for (std::size_t k = 0; k < c.pts.size(); ++k)
        REQUIRE((back.pts[k] - c.pts[k]).norm() == 0.0);  // 17 digits round-trip exactly
}

TEST_CASE("recipe catalog entries reference existing configs", "[config]") {
    for (const auto& r : cli::recipe_catalog()) {
        fs::path p = fs::path(PROJECT_SOURCE_DIR) / r.config;
        INFO(r.name << " -> " << p);
        REQUIRE(fs::exists(p));
        auto cfg = KeyValueConfig::parse(slurp(p));
        REQUIRE(cfg.get_string("command") == r.name);
    }
}

TEST_CASE("identical config and seed give byte-identical outputs", "[config]") {
    fs::path base = fs::temp_directory_path() / "ergolab_determinism";
    fs::remove_all(base);
    auto cfg = KeyValueConfig::parse(slurp(fs::path(PROJECT_SOURCE_DIR) / "recipes/prop21.cfg"));
    int c1 = cli::run_config(cfg, base / "a", std::nullopt);
    int c2 = cli::run_config(cfg, base / "b", std::nullopt);
    REQUIRE(c1 == cli::kPass);
    REQUIRE(c2 == cli::kPass);
    REQUIRE(slurp(base / "a" / "delta1_residuals.csv") ==
            slurp(base / "b" / "delta1_residuals.csv"));
}

TEST_CASE("travel-time command writes the lambda table", "[config]") {
    fs::path out = fs::temp_directory_path() / "ergolab_tt";
    fs::remove_all(out);
    auto cfg = KeyValueConfig::parse(
        "command = travel-time\n"
        "metric.family = acoustic_drain\nmetric.c = 1.0\nmetric.r0 = 1.0\nmetric.dim = 3\n"
        "path.from = 1.5,0,0\npath.to = 4,0,0\npath.samples = 16\n");
    REQUIRE(cli::run_config(cfg, out, std::nullopt) == cli::kPass);
    REQUIRE(fs::exists(out / "travel_time.csv"));
    REQUIRE(fs::exists(out / "manifest.json"));
}

TEST_CASE("strict key rejection at the command level", "[config]") {
    fs::path out = fs::temp_directory_path() / "ergolab_badkey";
    auto cfg = KeyValueConfig::parse("command = prop21\nseed = 1\nunexpected.key = 1\n");
    REQUIRE_THROWS_AS(cli::run_config(cfg, out, std::nullopt), ConfigValidationError);
}

TEST_CASE("cli binary exit codes", "[config][cli-exit]") {
#ifdef ERGOLAB_BIN
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "ergolab_exit_codes";
    fs::create_directories(dir);
    auto run = [&](const std::string& text) {
        fs::path cfg = dir / "case.cfg";
        std::ofstream(cfg) << text;
        std::string cmd = std::string(ERGOLAB_BIN) + " --config " + cfg.string() + " --out " +
                          (dir / "out").string() + " >/dev/null 2>&1";
        int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    // 2: parse error
    REQUIRE(run("not a key value line\n") == 2);
    // 3: unknown key
    REQUIRE(run("command = prop21\nseed = 1\nbogus.key = 1\n") == 3);
    // 0: a passing run
    REQUIRE(run("command = prop21\nseed = 1\n") == 0);
#endif
}
