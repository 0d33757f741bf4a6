// bellfringe: command-line driver for witness scans, threshold and boundary
// extraction, the fringe Monte-Carlo check and closed-form predictions.
//
// Exit status: 0 success, 1 configuration error, 2 computation or I/O error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bellfringe/analytics.hpp"
#include "bellfringe/error.hpp"
#include "bellfringe/fringe_mc.hpp"
#include "bellfringe/scan.hpp"

namespace bf = bellfringe;
namespace scan = bellfringe::scan;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string cache;
    bool no_rotation = false;
};

std::string num(double x)
{
    if (!std::isfinite(x)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json num_json(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

int resolve_threads(int requested)
{
    if (const char* env = std::getenv("BELLFRINGE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1 || v > 4096) {
            throw scan::ConfigError(std::string("BELLFRINGE_THREADS must be a positive integer, got '")
                                    + env + "'");
        }
        return static_cast<int>(v);
    }
    if (requested < 1) throw scan::ConfigError("--threads must be >= 1");
    return requested;
}

scan::ScanSpec load(const CommonOptions& o)
{
    scan::ScanSpec spec = scan::load_spec(o.config);
    if (o.seed) spec.seed = *o.seed;
    return spec;
}

scan::RunOptions run_options(const CommonOptions& o)
{
    scan::RunOptions r;
    r.threads = resolve_threads(o.threads);
    if (!o.cache.empty()) r.cache_dir = o.cache;
    r.rotation = !o.no_rotation;
    return r;
}

bool wants(const scan::ScanSpec& spec, const char* format)
{
    return std::find(spec.outputs.begin(), spec.outputs.end(), format) != spec.outputs.end();
}

// A table emitted as <stem>.csv and, mirrored with provenance, <stem>.json.
void write_table(const scan::ScanSpec& spec, const std::filesystem::path& out_dir,
                 const std::string& stem, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows, const json& json_rows,
                 const json& extra = json::object())
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw scan::IoError("cannot create output directory " + out_dir.string());
    if (wants(spec, "csv")) {
        std::string text;
        for (std::size_t i = 0; i < header.size(); ++i) text += (i ? "," : "") + header[i];
        text += '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) text += (i ? "," : "") + r[i];
            text += '\n';
        }
        scan::write_file_atomic(out_dir / (stem + ".csv"), text);
    }
    if (wants(spec, "json")) {
        json doc = extra;
        doc["library"] = {{"name", scan::kLibraryName}, {"version", scan::kLibraryVersion}};
        doc["seed"] = spec.seed;
        doc["spec"] = scan::to_json(spec);
        doc["rows"] = json_rows;
        scan::write_file_atomic(out_dir / (stem + ".json"), doc.dump(2) + "\n");
    }
}

int count_errors(const std::vector<scan::ScanRow>& rows)
{
    return static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                          [](const auto& r) { return !r.error.empty(); }));
}

// Per-point failures are recorded in the rows; a scan in which nothing
// could be computed is a computation error.
void require_some_values(const std::vector<scan::ScanRow>& rows)
{
    const int e = count_errors(rows);
    if (e > 0) std::cerr << e << " row(s) carry an error marker\n";
    if (!rows.empty() && std::none_of(rows.begin(), rows.end(), [](const auto& r) { return r.has_values; })) {
        throw bf::Error("no grid point produced witness values; first error: " + rows.front().error);
    }
}

int cmd_scan(const CommonOptions& o)
{
    const auto spec = load(o);
    const auto rows = scan::run_scan(spec, run_options(o));
    for (const auto& p : scan::emit_outputs(rows, spec, o.out)) std::cout << p.string() << '\n';
    require_some_values(rows);
    return 0;
}

int cmd_crossings(const CommonOptions& o, const std::string& column_name)
{
    const auto spec = load(o);
    const auto opts = run_options(o);
    const scan::Column column =
        column_name == "a_param" ? scan::Column::a_param : scan::Column::b_param;
    const auto rows = scan::run_scan(spec, opts);
    require_some_values(rows);

    std::map<double, std::vector<scan::ScanRow>> by_noise;
    for (const auto& r : rows) by_noise[r.noise_value].push_back(r);

    std::vector<std::vector<std::string>> table;
    json jrows = json::array();
    for (auto& [noise, group] : by_noise) {
        std::sort(group.begin(), group.end(),
                  [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
        const auto found =
            scan::find_zero_crossings(group, column, scan::point_evaluator(spec, noise, column, opts));
        for (double l : found) {
            table.push_back({num(noise), column_name, num(l)});
            jrows.push_back({{"noise_value", noise}, {"column", column_name}, {"lambda_star", l}});
        }
    }
    write_table(spec, o.out, "crossings", {"noise_value", "column", "lambda_star"}, table, jrows);
    for (const auto& r : table) std::cout << r[0] << ' ' << r[1] << ' ' << r[2] << '\n';
    return 0;
}

int cmd_boundary(const CommonOptions& o)
{
    const auto spec = load(o);
    if (spec.noise_axis == scan::NoiseAxis::none) {
        throw scan::ConfigError("boundary needs a noise axis");
    }
    const auto rows = scan::run_scan(spec, run_options(o));
    scan::emit_outputs(rows, spec, o.out, "scan");
    require_some_values(rows);
    const auto boundary = scan::extract_region_boundary(rows);

    std::vector<std::vector<std::string>> table;
    json jrows = json::array();
    for (const auto& p : boundary) {
        double analytic = std::nan("");
        try {
            if (spec.noise_axis == scan::NoiseAxis::temperature) {
                analytic = bf::analytics::analytic_boundary_t(p.lambda);
            } else if (spec.noise_axis == scan::NoiseAxis::sigma_detector) {
                analytic = bf::analytics::analytic_boundary_sigma(p.lambda, spec.k_fringe);
            }
        } catch (const bf::InvalidArgument&) {
            // no closed-form boundary at this lambda
        }
        table.push_back({num(p.lambda), num(p.noise_value), num(analytic)});
        jrows.push_back({{"lambda", p.lambda}, {"noise_value", p.noise_value},
                         {"analytic", num_json(analytic)}});
    }
    write_table(spec, o.out, "boundary", {"lambda", "noise_value", "analytic"}, table, jrows,
                {{"noise_axis", scan::to_string(spec.noise_axis)}});
    std::cout << boundary.size() << " boundary point(s)\n";
    return 0;
}

int cmd_mc_verify(const CommonOptions& o)
{
    const auto spec = load(o);
    if (!spec.mc_block || spec.mc_block->cases.empty()) {
        throw scan::ConfigError("mc-verify needs an mc_block with at least one case");
    }
    const int threads = resolve_threads(o.threads);
    const auto& mc = *spec.mc_block;
    bf::fringe::FitOptions fit;
    fit.fit_visibility = mc.fit_visibility;

    std::vector<std::vector<std::string>> table;
    json jrows = json::array();
    for (std::size_t i = 0; i < mc.cases.size(); ++i) {
        const auto& c = mc.cases[i];
        bf::fringe::FringeParams params{c.nu, mc.phi, mc.k, mc.n_atoms, mc.n_periods};
        fit.fixed_visibility = c.nu;
        const auto r = bf::fringe::verify_sensitivity(params, c.xi2, mc.n_shots,
                                                      bf::fringe::derive_seed(spec.seed, i), fit,
                                                      threads);
        const double ratio = r.empirical_variance / r.predicted_variance;
        const double ratio_iid = r.empirical_variance / r.independent_atom_variance;
        table.push_back({num(c.xi2), num(c.nu), std::to_string(mc.n_atoms), std::to_string(r.shots),
                         num(r.empirical_variance), num(r.predicted_variance), num(ratio),
                         num(r.independent_atom_variance), num(ratio_iid), num(r.mean_error),
                         num(r.standard_error), std::to_string(r.failures)});
        jrows.push_back({{"xi2", c.xi2},
                         {"nu", c.nu},
                         {"n_atoms", mc.n_atoms},
                         {"shots", r.shots},
                         {"empirical_variance", r.empirical_variance},
                         {"predicted_variance", r.predicted_variance},
                         {"ratio", ratio},
                         {"independent_atom_variance", r.independent_atom_variance},
                         {"ratio_independent", ratio_iid},
                         {"mean_error", r.mean_error},
                         {"standard_error", r.standard_error},
                         {"failures", r.failures}});
        std::cout << "xi2=" << c.xi2 << " nu=" << c.nu << " var/predicted=" << ratio
                  << " var/independent=" << ratio_iid << '\n';
    }
    write_table(spec, o.out, "mc",
                {"xi2", "nu", "n_atoms", "shots", "empirical_variance", "predicted_variance", "ratio",
                 "independent_atom_variance", "ratio_independent", "mean_error", "standard_error",
                 "failures"},
                table, jrows);
    return 0;
}

int cmd_analytics(const CommonOptions& o)
{
    namespace an = bf::analytics;
    const auto spec = load(o);
    std::vector<std::vector<std::string>> table;
    json jrows = json::array();
    for (double l : spec.lambda_grid.values()) {
        double xi2 = std::nan(""), nu = std::nan(""), a = std::nan(""), b = std::nan("");
        double bt = std::nan(""), bs = std::nan("");
        std::string regime;
        std::string error;
        try {
            const auto p = an::semiclassical_ab(l);
            regime = std::string(an::to_string(p.regime));
            xi2 = p.xi2;
            nu = p.nu;
            a = p.a_param;
            b = p.b_param;
        } catch (const bf::InvalidArgument& e) {
            error = e.what();
        }
        if (error.empty()) {
            try {
                bt = an::analytic_boundary_t(l);
            } catch (const bf::InvalidArgument&) {
            }
            try {
                bs = an::analytic_boundary_sigma(l, spec.k_fringe);
            } catch (const bf::InvalidArgument&) {
            }
        }
        std::string quoted = error.empty() ? "" : "\"" + error + "\"";
        table.push_back({num(l), regime, num(xi2), num(nu), num(a), num(b), num(bt), num(bs), quoted});
        jrows.push_back({{"lambda", l},
                         {"regime", regime.empty() ? json(nullptr) : json(regime)},
                         {"xi2", num_json(xi2)},
                         {"nu", num_json(nu)},
                         {"a_param", num_json(a)},
                         {"b_param", num_json(b)},
                         {"boundary_t", num_json(bt)},
                         {"boundary_sigma", num_json(bs)},
                         {"error", error.empty() ? json(nullptr) : json(error)}});
    }
    const auto th = an::bell_thresholds();
    write_table(spec, o.out, "analytics",
                {"lambda", "regime", "xi2", "nu", "a_param", "b_param", "boundary_t",
                 "boundary_sigma", "error"},
                table, jrows,
                {{"thresholds", {th.paramagnetic, th.ferromagnetic, th.repulsive}}});
    std::cout << table.size() << " row(s)\n";
    return 0;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool scans)
{
    cmd->add_option("--config", o.config, "JSON scan configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "override the configured seed");
    cmd->add_option("--threads", o.threads, "worker threads (BELLFRINGE_THREADS overrides)");
    if (scans) {
        cmd->add_option("--cache", o.cache, "directory for memoized spectra");
        cmd->add_flag("--no-rotation", o.no_rotation, "never apply the repulsive-side rotation");
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bell-correlation witnesses for a two-mode Bose gas"};
    app.require_subcommand(1);

    CommonOptions o;
    std::string column = "b_param";
    auto* scan_cmd = app.add_subcommand("scan", "witness values over the lambda x noise grid");
    add_common(scan_cmd, o, true);
    auto* cross_cmd = app.add_subcommand("crossings", "zero crossings along lambda per noise value");
    add_common(cross_cmd, o, true);
    cross_cmd->add_option("--column", column, "a_param or b_param")
        ->check(CLI::IsMember({"a_param", "b_param"}));
    auto* bound_cmd = app.add_subcommand("boundary", "noise value where B changes sign per lambda");
    add_common(bound_cmd, o, true);
    auto* mc_cmd = app.add_subcommand("mc-verify", "Monte-Carlo check of the fit sensitivity");
    add_common(mc_cmd, o, false);
    auto* an_cmd = app.add_subcommand("analytics", "closed-form predictions over the lambda grid");
    add_common(an_cmd, o, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*scan_cmd) return cmd_scan(o);
        if (*cross_cmd) return cmd_crossings(o, column);
        if (*bound_cmd) return cmd_boundary(o);
        if (*mc_cmd) return cmd_mc_verify(o);
        if (*an_cmd) return cmd_analytics(o);
    } catch (const scan::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
