#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "bellfringe/analytics.hpp"
#include "bellfringe/scan.hpp"
#include "bellfringe/witnesses.hpp"

using namespace bellfringe;
using namespace bellfringe::scan;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path()
                       / ("bellfringe-test-" + std::to_string(::getpid()) + "-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ScanSpec ground_spec(int n, std::vector<double> lambdas)
{
    ScanSpec s;
    s.n = n;
    s.lambda_grid = Grid::of(std::move(lambdas));
    return s;
}

ScanSpec noisy_spec(int n, ScanMode mode, NoiseAxis axis, std::vector<double> lambdas,
                    std::vector<double> noise)
{
    ScanSpec s = ground_spec(n, std::move(lambdas));
    s.mode = mode;
    s.noise_axis = axis;
    s.noise_grid = Grid::of(std::move(noise));
    return s;
}

}  // namespace

TEST_CASE("grids")
{
    CHECK(Grid::of({1.0, 2.0}).values() == std::vector<double>{1.0, 2.0});
    const auto r = Grid::range(-1.3, 0.0, 0.01).values();
    CHECK(r.size() == 131);
    CHECK(r.back() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(Grid::range(10.0, 0.0, -0.5).values().size() == 21);
    CHECK(Grid{}.empty());
}

TEST_CASE("spec JSON round trip")
{
    ScanSpec s = noisy_spec(300, ScanMode::thermal, NoiseAxis::temperature, {}, {0.0, 0.5, 2.0});
    s.lambda_grid = Grid::range(0.5, 10.0, 0.5);
    s.seed = 987654321987654321ull;
    s.k_fringe = 1.7;
    s.base_noise.sigma_detector = 0.2;
    s.base_noise.k_fringe = 1.7;
    s.outputs = {"json"};
    s.quadrature_order = 12;
    McBlock mc;
    mc.n_shots = 2000;
    mc.cases = {{1.0, 0.9}, {0.3, 0.95}};
    s.mc_block = mc;
    s.validate();

    const ScanSpec back = spec_from_json(nlohmann::json::parse(to_json(s).dump()));
    CHECK(back == s);
    CHECK(to_json(back) == to_json(s));

    const fs::path dir = scratch_dir("roundtrip");
    write_file_atomic(dir / "spec.json", to_json(s).dump(2));
    CHECK(load_spec(dir / "spec.json") == s);
    fs::remove_all(dir);
}

TEST_CASE("configuration errors")
{
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"N": 10})")), ConfigError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"N": 10, "lambda_grid": [1], "bogus": 1})")),
                    ConfigError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"N": 10, "lambda_grid": [1, 0.5, 2]})")),
                    ConfigError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"N": 10, "lambda_grid": []})")), ConfigError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"N": 10, "lambda_grid": [1], "mode": "thermal",
        "noise_axis": {"kind": "sigma_delta", "grid": [0.1]}})")),
                    ConfigError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"N": 10, "lambda_grid": [1], "mode": "warm"})")),
                    ConfigError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"N": 10, "lambda_grid": [1], "outputs": ["xml"]})")),
                    ConfigError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"N": "ten", "lambda_grid": [1]})")), ConfigError);
    CHECK_THROWS_AS(load_spec("/nonexistent/spec.json"), ConfigError);

    ScanSpec s = noisy_spec(10, ScanMode::delta_mixture, NoiseAxis::sigma_delta, {0.0}, {0.0, -0.1});
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.noise_grid = Grid::of({0.0, 0.1});
    s.base_noise.sigma_delta = 0.1;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.base_noise.sigma_delta = 0.0;
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("non-interacting row")
{
    const auto rows = run_scan(ground_spec(1000, {0.0}));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].has_values);
    CHECK(rows[0].nu == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(rows[0].a_param) < 1e-9);
    CHECK(rows[0].b_param == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_FALSE(rows[0].rotated);
    CHECK(rows[0].error.empty());
}

TEST_CASE("CSV layout")
{
    CHECK(to_csv({}) == csv_header() + "\n");
    CHECK(csv_header() == "lambda,noise_value,nu,xi2,a_param,b_param,theta0,interior_minimum,rotated,var_phi,error");

    ScanRow r;
    r.lambda = 0.1;
    r.nu = 0.5;
    r.error = "bad, \"quoted\"\nline";
    const std::string csv = to_csv({r});
    CHECK(csv.find("0.10000000000000001") != std::string::npos);
    CHECK(csv.find("\"bad, \"\"quoted\"\" line\"") != std::string::npos);
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(rows_to_json({r})[0]["xi2"].is_null());
}

TEST_CASE("emission is byte-identical across runs")
{
    ScanSpec s = noisy_spec(120, ScanMode::thermal, NoiseAxis::temperature, {-1.2, 0.5, 4.0}, {0.0, 0.5});
    s.seed = 3;
    const fs::path a = scratch_dir("emit-a");
    const fs::path b = scratch_dir("emit-b");
    const auto pa = emit_outputs(run_scan(s), s, a);
    RunOptions threaded;
    threaded.threads = 3;
    const auto pb = emit_outputs(run_scan(s, threaded), s, b);
    REQUIRE(pa.size() == 2);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(slurp(pa[i]) == slurp(pb[i]));

    const auto doc = nlohmann::json::parse(slurp(a / "scan.json"));
    CHECK(doc["library"]["version"] == kLibraryVersion);
    CHECK(doc["seed"] == 3);
    CHECK(spec_from_json(doc["spec"]) == s);
    CHECK(doc["rows"].size() == 6);

    s.outputs = {"csv"};
    CHECK(emit_outputs({}, s, a, "empty").size() == 1);
    CHECK(slurp(a / "empty.csv") == csv_header() + "\n");
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("unwritable output directory")
{
    ScanSpec s = ground_spec(10, {0.0});
    const fs::path dir = scratch_dir("blocked");
    write_file_atomic(dir / "file", "x");
    CHECK_THROWS_AS(emit_outputs({}, s, dir / "file" / "sub"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("rows are pointwise in the noise axis")
{
    ScanSpec fwd = noisy_spec(150, ScanMode::delta_mixture, NoiseAxis::sigma_delta, {-1.2, 2.0},
                              {0.0, 0.01, 0.05});
    ScanSpec rev = fwd;
    rev.noise_grid = Grid::of({0.05, 0.01, 0.0});
    const auto a = run_scan(fwd);
    const auto b = run_scan(rev);
    REQUIRE(a.size() == 6);
    for (int l = 0; l < 2; ++l) {
        for (int i = 0; i < 3; ++i) {
            const auto& x = a[static_cast<std::size_t>(3 * l + i)];
            const auto& y = b[static_cast<std::size_t>(3 * l + 2 - i)];
            CHECK(x.noise_value == y.noise_value);
            CHECK(x.b_param == y.b_param);
            CHECK(x.xi2 == y.xi2);
        }
    }
}

TEST_CASE("every row satisfies B = A + f(nu)")
{
    ScanSpec s = noisy_spec(200, ScanMode::blurred, NoiseAxis::sigma_detector, {-1.3, -0.8, 0.0, 2.0, 9.0},
                            {0.0, 0.3, 1.0});
    for (const auto& r : run_scan(s)) {
        REQUIRE(r.has_values);
        CHECK(std::abs(r.b_param - r.a_param - witness::visibility_offset(r.nu)) <= 1e-10);
        CHECK(r.rotated == (r.lambda > 0.0));
    }
}

TEST_CASE("blurred rows follow the attenuated visibility exactly")
{
    ScanSpec s = noisy_spec(300, ScanMode::blurred, NoiseAxis::sigma_detector, {8.0}, {0.0, 0.4});
    s.k_fringe = 1.5;
    s.base_noise.k_fringe = 1.5;
    const auto rows = run_scan(s);
    CHECK(rows[1].nu == doctest::Approx(rows[0].nu * std::exp(-0.5 * 1.5 * 1.5 * 0.16)).epsilon(1e-14));
    CHECK(rows[1].xi2 == rows[0].xi2);
    CHECK(std::abs(rows[1].b_param - witness::bell_witness(rows[0].xi2, rows[1].nu)) <= 1e-12);
}

TEST_CASE("vanishing visibility is marked")
{
    ScanSpec s = noisy_spec(50, ScanMode::blurred, NoiseAxis::sigma_detector, {0.0}, {0.0, 40.0});
    const auto rows = run_scan(s);
    CHECK(rows[0].has_values);
    CHECK_FALSE(rows[1].has_values);
    CHECK(rows[1].error.find("1e-6") != std::string::npos);
    const std::string csv = to_csv(rows);
    CHECK(csv.find(",,,,,false,,") != std::string::npos);
}

TEST_CASE("failed points are recorded and the scan continues")
{
    ScanSpec s = noisy_spec(4001, ScanMode::thermal, NoiseAxis::temperature, {2.0}, {0.5});
    const auto rows = run_scan(s);
    REQUIRE(rows.size() == 1);
    CHECK_FALSE(rows[0].has_values);
    CHECK_FALSE(rows[0].error.empty());
    CHECK(std::isnan(rows[0].nu));
}

TEST_CASE("rotation override")
{
    ScanSpec s = ground_spec(200, {5.0});
    RunOptions off;
    off.rotation = false;
    const auto on_row = run_scan(s).front();
    const auto off_row = run_scan(s, off).front();
    CHECK(on_row.rotated);
    CHECK_FALSE(off_row.rotated);
    CHECK(on_row.xi2 < 1.0);
    CHECK(off_row.xi2 > 1.0);
}

TEST_CASE("zero crossings")
{
    SUBCASE("constant sign gives nothing")
    {
        const auto rows = run_scan(ground_spec(200, {-0.6, -0.4, -0.2}));
        CHECK(find_zero_crossings(rows, Column::a_param, [](double) { return -1.0; }).empty());
    }
    SUBCASE("synthetic function is bisected")
    {
        std::vector<ScanRow> rows;
        for (double l : {0.0, 1.0, 2.0, 3.0}) {
            ScanRow r;
            r.lambda = l;
            r.has_values = true;
            r.b_param = std::cos(l);
            rows.push_back(r);
        }
        const auto x = find_zero_crossings(rows, Column::b_param, [](double l) { return std::cos(l); }, 1e-8);
        REQUIRE(x.size() == 1);
        CHECK(std::abs(x[0] - std::numbers::pi / 2.0) <= 1e-8);
        std::reverse(rows.begin(), rows.end());
        CHECK_THROWS_AS(find_zero_crossings(rows, Column::b_param, [](double l) { return std::cos(l); }),
                        InvalidArgument);
    }
    SUBCASE("ground-state thresholds with the model evaluator")
    {
        ScanSpec s = ground_spec(400, {});
        s.lambda_grid = Grid::range(-1.3, 0.0, 0.05);
        const auto rows = run_scan(s);
        const auto x = find_zero_crossings(rows, Column::b_param, point_evaluator(s, 0.0, Column::b_param));
        REQUIRE(!x.empty());
        CHECK(std::any_of(x.begin(), x.end(), [](double l) { return std::abs(l + 0.75) <= 0.05; }));
    }
}

TEST_CASE("region boundaries")
{
    SUBCASE("synthetic grid")
    {
        std::vector<ScanRow> rows;
        for (double l : {1.0, 2.0}) {
            for (double t : {0.0, 1.0, 2.0}) {
                ScanRow r;
                r.lambda = l;
                r.noise_value = t;
                r.has_values = true;
                r.b_param = t - l;  // zero at t = l
                rows.push_back(r);
            }
        }
        const auto b = extract_region_boundary(rows);
        REQUIRE(b.size() == 2);
        CHECK(b[0].lambda == 1.0);
        CHECK(b[0].noise_value == doctest::Approx(1.0));
        CHECK(b[1].noise_value == doctest::Approx(2.0));
    }
    SUBCASE("blur axis against the analytic solver")
    {
        const double step = 0.02;
        std::vector<double> sig;
        for (int i = 0; i <= 50; ++i) sig.push_back(step * i);
        ScanSpec s = noisy_spec(1000, ScanMode::blurred, NoiseAxis::sigma_detector, {6.0, 8.0, 10.0}, sig);
        const auto b = extract_region_boundary(run_scan(s));
        REQUIRE(b.size() == 3);
        for (const auto& p : b) {
            // the numeric state has a slightly different xi2 than the large-N formula
            CHECK(std::abs(p.noise_value - analytics::analytic_boundary_sigma(p.lambda, 1.0)) <= 0.1);
        }
    }
}

TEST_CASE("spectrum cache")
{
    const fs::path dir = scratch_dir("cache");
    const SpectrumCache cache(dir);
    const josephson::ModelParams p{30, 1.5, 0.0};
    CHECK_FALSE(cache.load(p).has_value());
    const auto computed = cache.get_or_compute(p);
    CHECK(fs::exists(cache.path_for(p)));
    const auto loaded = cache.load(p);
    REQUIRE(loaded.has_value());
    CHECK(loaded->energies == computed.energies);
    for (std::size_t k = 0; k < computed.states.size(); ++k) {
        const auto a = computed.states[k].coeffs();
        const auto b = loaded->states[k].coeffs();
        CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
    CHECK(cache.path_for(p) != cache.path_for({30, 1.5, 0.1}));
    CHECK(cache.path_for({30, 1.5, 0.0}) == cache.path_for({30, 1.5, -0.0}));
    CHECK_FALSE(cache.load({31, 1.5, 0.0}).has_value());

    write_file_atomic(cache.path_for({30, 2.5, 0.0}), "garbage");
    CHECK_FALSE(cache.load({30, 2.5, 0.0}).has_value());

    ScanSpec s = noisy_spec(60, ScanMode::thermal, NoiseAxis::temperature, {-1.2, 3.0}, {0.0, 1.0});
    RunOptions cached;
    cached.cache_dir = dir;
    const auto first = run_scan(s, cached);
    const auto second = run_scan(s, cached);
    const auto plain = run_scan(s);
    for (std::size_t i = 0; i < plain.size(); ++i) {
        CHECK(first[i].b_param == plain[i].b_param);
        CHECK(second[i].b_param == plain[i].b_param);
    }
    fs::remove_all(dir);
}
