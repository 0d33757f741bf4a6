#include "bellfringe/scan.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include <unistd.h>

#include "bellfringe/parallel.hpp"
#include "bellfringe/spin_core.hpp"
#include "bellfringe/witnesses.hpp"

namespace bellfringe::scan {

using nlohmann::json;

namespace {

constexpr double kMinVisibility = 1e-6;

template <class E>
struct EnumName {
    E value;
    const char* name;
};

constexpr EnumName<ScanMode> kModes[] = {
    {ScanMode::ground_state, "ground_state"},
    {ScanMode::thermal, "thermal"},
    {ScanMode::delta_mixture, "delta_mixture"},
    {ScanMode::blurred, "blurred"},
};

constexpr EnumName<NoiseAxis> kAxes[] = {
    {NoiseAxis::none, "none"},
    {NoiseAxis::sigma_delta, "sigma_delta"},
    {NoiseAxis::temperature, "temperature"},
    {NoiseAxis::sigma_detector, "sigma_detector"},
};

template <class E, std::size_t K>
E parse_enum(const EnumName<E> (&table)[K], const std::string& s, const char* what)
{
    for (const auto& e : table) {
        if (s == e.name) return e.value;
    }
    throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where)
{
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* a) { return key == a; });
        if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

json grid_to_json(const Grid& g)
{
    if (g.start) return json{{"start", *g.start}, {"stop", *g.stop}, {"step", *g.step}};
    return json(g.list);
}

Grid grid_from_json(const json& j, const char* where)
{
    if (j.is_array()) {
        try {
            return Grid::of(j.get<std::vector<double>>());
        } catch (const json::exception& e) {
            throw ConfigError(std::string(where) + ": " + e.what());
        }
    }
    check_keys(j, {"start", "stop", "step"}, where);
    if (!j.contains("start") || !j.contains("stop") || !j.contains("step")) {
        throw ConfigError(std::string(where) + " range needs start, stop and step");
    }
    return Grid::range(get_or(j, "start", 0.0), get_or(j, "stop", 0.0), get_or(j, "step", 0.0));
}

void validate_grid(const Grid& g, const char* what)
{
    if (g.start) {
        if (!std::isfinite(*g.start) || !std::isfinite(*g.stop) || !std::isfinite(*g.step)) {
            throw ConfigError(std::string(what) + " range must be finite");
        }
        if (*g.step == 0.0 || (*g.stop - *g.start) * *g.step < 0.0) {
            throw ConfigError(std::string(what) + " range step must point from start to stop");
        }
    }
    const auto v = g.values();
    if (v.empty()) throw ConfigError(std::string(what) + " is empty");
    if (v.size() > 1) {
        const bool up = v[1] > v[0];
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (!std::isfinite(v[i - 1]) || !std::isfinite(v[i])) {
                throw ConfigError(std::string(what) + " contains a non-finite value");
            }
            if ((up && !(v[i] > v[i - 1])) || (!up && !(v[i] < v[i - 1]))) {
                throw ConfigError(std::string(what) + " must be strictly monotone");
            }
        }
    } else if (!std::isfinite(v[0])) {
        throw ConfigError(std::string(what) + " contains a non-finite value");
    }
}

NoiseAxis axis_for(ScanMode mode)
{
    switch (mode) {
        case ScanMode::ground_state: return NoiseAxis::none;
        case ScanMode::thermal: return NoiseAxis::temperature;
        case ScanMode::delta_mixture: return NoiseAxis::sigma_delta;
        case ScanMode::blurred: return NoiseAxis::sigma_detector;
    }
    return NoiseAxis::none;
}

std::string format_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out + "\"";
}

std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

ScanRow make_row(double lambda, double noise_value, const spin::Moments& moments, int n,
                 bool rotate, double blur, double k_fringe)
{
    ScanRow row;
    row.lambda = lambda;
    row.noise_value = noise_value;
    row.rotated = rotate;
    const spin::Moments m = rotate ? spin::rotate_pi2_about_x(moments) : moments;
    double nu = witness::visibility(m, n);
    if (blur > 0.0) nu = noise::blur_visibility(nu, k_fringe, blur);
    row.nu = nu;
    if (nu < kMinVisibility) {
        row.error = "visibility below 1e-6, witness undefined";
        return row;
    }
    const double xi2 = witness::phase_squeezing(m, n);
    const auto r = witness::make_report(xi2, nu, n, rotate);
    row.xi2 = r.xi2;
    row.a_param = r.a_param;
    row.b_param = r.b_param;
    row.theta0 = r.theta0;
    row.interior_minimum = r.interior_minimum;
    row.var_phi = r.var_phi;
    row.has_values = true;
    return row;
}

ScanRow error_row(double lambda, double noise_value, const std::string& what)
{
    ScanRow row;
    row.lambda = lambda;
    row.noise_value = noise_value;
    row.nu = std::nan("");
    row.error = what;
    return row;
}

void note_quadrature(ScanRow& row, const noise::NoisyMoments& nm)
{
    row.extension = nm.extension;
    if (!nm.converged && row.error.empty()) {
        row.error = "delta quadrature not converged, change " + format_double(nm.quadrature_change);
    }
}

}  // namespace

Grid Grid::of(std::vector<double> values)
{
    Grid g;
    g.list = std::move(values);
    return g;
}

Grid Grid::range(double start, double stop, double step)
{
    Grid g;
    g.start = start;
    g.stop = stop;
    g.step = step;
    return g;
}

std::vector<double> Grid::values() const
{
    if (!start) return list;
    if (!(*step != 0.0) || !std::isfinite(*start) || !std::isfinite(*stop) || !std::isfinite(*step)) {
        return {};
    }
    const double span = (*stop - *start) / *step;
    if (span < 0.0) return {};
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = *start + static_cast<double>(i) * *step;
    return v;
}

std::string to_string(ScanMode m)
{
    for (const auto& e : kModes) {
        if (e.value == m) return e.name;
    }
    return "unknown";
}

std::string to_string(NoiseAxis a)
{
    for (const auto& e : kAxes) {
        if (e.value == a) return e.name;
    }
    return "unknown";
}

void ScanSpec::validate() const
{
    if (n < 1) throw ConfigError("N must be >= 1");
    validate_grid(lambda_grid, "lambda_grid");
    if (axis_for(mode) != noise_axis) {
        throw ConfigError("mode '" + to_string(mode) + "' requires noise axis '"
                          + to_string(axis_for(mode)) + "', got '" + to_string(noise_axis) + "'");
    }
    if (noise_axis == NoiseAxis::none) {
        if (!noise_grid.values().empty()) throw ConfigError("noise grid given without a noise axis");
    } else {
        validate_grid(noise_grid, "noise grid");
        for (double v : noise_grid.values()) {
            if (v < 0.0) throw ConfigError("noise values must be >= 0");
        }
    }
    if (!(k_fringe > 0.0) || !std::isfinite(k_fringe)) throw ConfigError("k_fringe must be > 0");
    try {
        base_noise.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("base_noise: ") + e.what());
    }
    if (mode == ScanMode::ground_state
        && (base_noise.sigma_delta != 0.0 || base_noise.temperature != 0.0
            || base_noise.sigma_detector != 0.0)) {
        throw ConfigError("ground_state mode takes no base noise");
    }
    const bool clash = (noise_axis == NoiseAxis::sigma_delta && base_noise.sigma_delta != 0.0)
                       || (noise_axis == NoiseAxis::temperature && base_noise.temperature != 0.0)
                       || (noise_axis == NoiseAxis::sigma_detector && base_noise.sigma_detector != 0.0);
    if (clash) throw ConfigError("base_noise sets the channel that is being scanned");
    if (outputs.empty()) throw ConfigError("outputs must name at least one format");
    for (const auto& o : outputs) {
        if (o != "csv" && o != "json") throw ConfigError("unknown output format '" + o + "'");
    }
    if (quadrature_order < 1) throw ConfigError("quadrature_order must be >= 1");
    if (mc_block) {
        const auto& mc = *mc_block;
        if (mc.n_atoms < 100) throw ConfigError("mc_block.n_atoms must be >= 100");
        if (mc.n_shots < 1000) throw ConfigError("mc_block.n_shots must be >= 1000");
        if (mc.n_periods < 1) throw ConfigError("mc_block.n_periods must be >= 1");
        if (!(mc.k > 0.0)) throw ConfigError("mc_block.k must be > 0");
        for (const auto& c : mc.cases) {
            if (!(c.xi2 >= 0.0)) throw ConfigError("mc_block case xi2 must be >= 0");
            if (!(c.nu > 0.2 && c.nu < 0.98)) throw ConfigError("mc_block case nu must lie in (0.2, 0.98)");
        }
    }
}

bool operator==(const ScanSpec& a, const ScanSpec& b)
{
    return a.n == b.n && a.lambda_grid == b.lambda_grid && a.noise_axis == b.noise_axis
           && a.noise_grid == b.noise_grid && a.k_fringe == b.k_fringe && a.seed == b.seed
           && a.outputs == b.outputs && a.mode == b.mode
           && a.base_noise.sigma_delta == b.base_noise.sigma_delta
           && a.base_noise.temperature == b.base_noise.temperature
           && a.base_noise.sigma_detector == b.base_noise.sigma_detector
           && a.quadrature_order == b.quadrature_order && a.mc_block == b.mc_block;
}

json to_json(const ScanSpec& spec)
{
    json j;
    j["N"] = spec.n;
    j["lambda_grid"] = grid_to_json(spec.lambda_grid);
    j["noise_axis"] = {{"kind", to_string(spec.noise_axis)}, {"grid", grid_to_json(spec.noise_grid)}};
    j["k_fringe"] = spec.k_fringe;
    j["seed"] = spec.seed;
    j["outputs"] = spec.outputs;
    j["mode"] = to_string(spec.mode);
    j["base_noise"] = {{"sigma_delta", spec.base_noise.sigma_delta},
                       {"temperature", spec.base_noise.temperature},
                       {"sigma_detector", spec.base_noise.sigma_detector}};
    j["quadrature_order"] = spec.quadrature_order;
    if (spec.mc_block) {
        const auto& mc = *spec.mc_block;
        json cases = json::array();
        for (const auto& c : mc.cases) cases.push_back({{"xi2", c.xi2}, {"nu", c.nu}});
        j["mc_block"] = {{"n_atoms", mc.n_atoms},     {"n_shots", mc.n_shots},
                         {"n_periods", mc.n_periods}, {"k", mc.k},
                         {"phi", mc.phi},             {"fit_visibility", mc.fit_visibility},
                         {"cases", cases}};
    }
    return j;
}

ScanSpec spec_from_json(const json& j)
{
    check_keys(j, {"N", "lambda_grid", "noise_axis", "k_fringe", "seed", "outputs", "mode",
                   "base_noise", "quadrature_order", "mc_block"},
               "scan config");
    ScanSpec s;
    s.n = get_or(j, "N", s.n);
    if (!j.contains("lambda_grid")) throw ConfigError("scan config needs lambda_grid");
    s.lambda_grid = grid_from_json(j.at("lambda_grid"), "lambda_grid");
    if (j.contains("noise_axis")) {
        const json& a = j.at("noise_axis");
        check_keys(a, {"kind", "grid"}, "noise_axis");
        s.noise_axis = parse_enum(kAxes, get_or<std::string>(a, "kind", "none"), "noise axis");
        if (a.contains("grid")) s.noise_grid = grid_from_json(a.at("grid"), "noise_axis.grid");
    }
    s.k_fringe = get_or(j, "k_fringe", s.k_fringe);
    s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
    s.outputs = get_or(j, "outputs", s.outputs);
    s.mode = parse_enum(kModes, get_or<std::string>(j, "mode", "ground_state"), "mode");
    if (j.contains("base_noise")) {
        const json& b = j.at("base_noise");
        check_keys(b, {"sigma_delta", "temperature", "sigma_detector"}, "base_noise");
        s.base_noise.sigma_delta = get_or(b, "sigma_delta", 0.0);
        s.base_noise.temperature = get_or(b, "temperature", 0.0);
        s.base_noise.sigma_detector = get_or(b, "sigma_detector", 0.0);
    }
    s.base_noise.k_fringe = s.k_fringe;
    s.quadrature_order = get_or(j, "quadrature_order", s.quadrature_order);
    if (j.contains("mc_block")) {
        const json& m = j.at("mc_block");
        check_keys(m, {"n_atoms", "n_shots", "n_periods", "k", "phi", "fit_visibility", "cases"},
                   "mc_block");
        McBlock mc;
        mc.n_atoms = get_or(m, "n_atoms", mc.n_atoms);
        mc.n_shots = get_or(m, "n_shots", mc.n_shots);
        mc.n_periods = get_or(m, "n_periods", mc.n_periods);
        mc.k = get_or(m, "k", mc.k);
        mc.phi = get_or(m, "phi", mc.phi);
        mc.fit_visibility = get_or(m, "fit_visibility", mc.fit_visibility);
        if (m.contains("cases")) {
            if (!m.at("cases").is_array()) throw ConfigError("mc_block.cases must be an array");
            for (const auto& c : m.at("cases")) {
                check_keys(c, {"xi2", "nu"}, "mc_block case");
                mc.cases.push_back({get_or(c, "xi2", 1.0), get_or(c, "nu", 0.9)});
            }
        }
        s.mc_block = mc;
    }
    s.validate();
    return s;
}

ScanSpec load_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return spec_from_json(j);
}

std::vector<ScanRow> evaluate_column(const ScanSpec& spec, double lambda,
                                     const std::vector<double>& noise_values,
                                     const RunOptions& options)
{
    const int n = spec.n;
    const bool rotate = options.rotation && witness::rotation_applies(lambda);
    const noise::MixtureOptions mix{spec.quadrature_order, 1e-6,
                                    std::max(160, spec.quadrature_order)};
    const auto& base = spec.base_noise;
    const double base_blur = base.sigma_detector;

    std::vector<ScanRow> rows;
    rows.reserve(noise_values.size());
    auto guarded = [&](double value, auto&& body) {
        try {
            rows.push_back(body());
        } catch (const Error& e) {
            rows.push_back(error_row(lambda, value, e.what()));
        }
    };

    switch (spec.mode) {
        case ScanMode::ground_state: {
            for (double v : noise_values) {
                guarded(v, [&] {
                    const auto gs = josephson::ground_state({n, lambda, 0.0});
                    return make_row(lambda, v, spin::compute_moments(gs.state), n, rotate,
                                    0.0, spec.k_fringe);
                });
            }
            break;
        }
        case ScanMode::thermal: {
            if (base.sigma_delta == 0.0) {
                std::vector<double> energies;
                std::vector<spin::Moments> per_state;
                std::string failure;
                try {
                    const josephson::ModelParams params{n, lambda, 0.0};
                    const auto spectrum = options.cache_dir
                                              ? SpectrumCache(*options.cache_dir).get_or_compute(params)
                                              : josephson::full_spectrum(params);
                    energies = spectrum.energies;
                    for (const auto& s : spectrum.states) per_state.push_back(spin::compute_moments(s));
                } catch (const Error& e) {
                    failure = e.what();
                }
                for (double t : noise_values) {
                    if (!failure.empty()) {
                        rows.push_back(error_row(lambda, t, failure));
                        continue;
                    }
                    guarded(t, [&] {
                        return make_row(lambda, t, noise::thermal_average(energies, per_state, t), n,
                                        rotate, base_blur, spec.k_fringe);
                    });
                }
            } else {
                for (double t : noise_values) {
                    guarded(t, [&] {
                        const auto nm = noise::noisy_moments(
                            n, lambda, {base.sigma_delta, t, 0.0, spec.k_fringe}, mix);
                        ScanRow row = make_row(lambda, t, nm.moments, n, rotate, base_blur, spec.k_fringe);
                        note_quadrature(row, nm);
                        return row;
                    });
                }
            }
            break;
        }
        case ScanMode::delta_mixture: {
            for (double s : noise_values) {
                guarded(s, [&] {
                    const auto nm = noise::noisy_moments(
                        n, lambda, {s, base.temperature, 0.0, spec.k_fringe}, mix);
                    ScanRow row = make_row(lambda, s, nm.moments, n, rotate, base_blur, spec.k_fringe);
                    note_quadrature(row, nm);
                    return row;
                });
            }
            break;
        }
        case ScanMode::blurred: {
            std::optional<noise::NoisyMoments> nm;
            std::string failure;
            try {
                nm = noise::noisy_moments(
                    n, lambda, {base.sigma_delta, base.temperature, 0.0, spec.k_fringe}, mix);
            } catch (const Error& e) {
                failure = e.what();
            }
            for (double s : noise_values) {
                if (!nm) {
                    rows.push_back(error_row(lambda, s, failure));
                    continue;
                }
                guarded(s, [&] {
                    ScanRow row = make_row(lambda, s, nm->moments, n, rotate, s, spec.k_fringe);
                    note_quadrature(row, *nm);
                    return row;
                });
            }
            break;
        }
    }
    return rows;
}

std::vector<ScanRow> run_scan(const ScanSpec& spec, const RunOptions& options)
{
    spec.validate();
    const auto lambdas = spec.lambda_grid.values();
    const auto noise_values = spec.noise_axis == NoiseAxis::none ? std::vector<double>{0.0}
                                                                 : spec.noise_grid.values();
    std::vector<std::vector<ScanRow>> columns(lambdas.size());
    parallel_for(lambdas.size(), options.threads, [&](std::size_t i) {
        columns[i] = evaluate_column(spec, lambdas[i], noise_values, options);
    });
    std::vector<ScanRow> rows;
    rows.reserve(lambdas.size() * noise_values.size());
    for (auto& c : columns) {
        for (auto& r : c) rows.push_back(std::move(r));
    }
    return rows;
}

double column_value(const ScanRow& row, Column column)
{
    return column == Column::a_param ? row.a_param : row.b_param;
}

std::vector<double> find_zero_crossings(const std::vector<ScanRow>& rows, Column column,
                                        const std::function<double(double)>& evaluate,
                                        double tolerance)
{
    if (!(tolerance > 0.0)) throw InvalidArgument("crossing tolerance must be > 0");
    std::vector<const ScanRow*> valid;
    for (const auto& r : rows) {
        if (r.has_values) valid.push_back(&r);
    }
    for (std::size_t i = 1; i < valid.size(); ++i) {
        if (!(valid[i]->lambda > valid[i - 1]->lambda)) {
            throw InvalidArgument("rows must be sorted by increasing lambda");
        }
    }

    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < valid.size(); ++i) {
        double lo = valid[i]->lambda;
        double hi = valid[i + 1]->lambda;
        double flo = column_value(*valid[i], column);
        const double fhi = column_value(*valid[i + 1], column);
        if (flo == 0.0) {
            if (out.empty() || out.back() != lo) out.push_back(lo);
            continue;
        }
        if (fhi == 0.0) {
            out.push_back(hi);
            continue;
        }
        if ((flo < 0.0) == (fhi < 0.0)) continue;
        while (hi - lo > tolerance) {
            const double mid = 0.5 * (lo + hi);
            const double fm = evaluate(mid);
            if (fm == 0.0) {
                lo = hi = mid;
                break;
            }
            if ((fm < 0.0) == (flo < 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        out.push_back(0.5 * (lo + hi));
    }
    return out;
}

std::function<double(double)> point_evaluator(const ScanSpec& spec, double noise_value,
                                              Column column, const RunOptions& options)
{
    return [spec, noise_value, column, options](double lambda) {
        const auto rows = evaluate_column(spec, lambda, {noise_value}, options);
        const ScanRow& r = rows.front();
        if (!r.has_values) {
            throw VerificationError("no witness value at lambda = " + format_double(lambda) + ": "
                                    + r.error);
        }
        return column_value(r, column);
    };
}

std::vector<BoundaryPoint> extract_region_boundary(const std::vector<ScanRow>& rows)
{
    std::vector<double> lambdas;
    for (const auto& r : rows) {
        if (std::find(lambdas.begin(), lambdas.end(), r.lambda) == lambdas.end()) {
            lambdas.push_back(r.lambda);
        }
    }
    std::vector<BoundaryPoint> out;
    for (double lambda : lambdas) {
        std::vector<const ScanRow*> col;
        for (const auto& r : rows) {
            if (r.lambda == lambda && r.has_values) col.push_back(&r);
        }
        std::stable_sort(col.begin(), col.end(), [](const ScanRow* a, const ScanRow* b) {
            return a->noise_value < b->noise_value;
        });
        for (std::size_t i = 0; i + 1 < col.size(); ++i) {
            const double b0 = col[i]->b_param;
            const double b1 = col[i + 1]->b_param;
            const double x0 = col[i]->noise_value;
            const double x1 = col[i + 1]->noise_value;
            if (b0 == 0.0) {
                out.push_back({lambda, x0});
                break;
            }
            if ((b0 < 0.0) != (b1 < 0.0)) {
                out.push_back({lambda, x0 - b0 * (x1 - x0) / (b1 - b0)});
                break;
            }
        }
    }
    return out;
}

std::string csv_header()
{
    return "lambda,noise_value,nu,xi2,a_param,b_param,theta0,interior_minimum,rotated,var_phi,error";
}

std::string to_csv(const std::vector<ScanRow>& rows)
{
    std::string out = csv_header() + "\n";
    for (const auto& r : rows) {
        out += format_double(r.lambda) + ',' + format_double(r.noise_value) + ',';
        out += (std::isfinite(r.nu) ? format_double(r.nu) : std::string()) + ',';
        if (r.has_values) {
            out += format_double(r.xi2) + ',' + format_double(r.a_param) + ','
                   + format_double(r.b_param) + ',' + format_double(r.theta0) + ','
                   + (r.interior_minimum ? "true" : "false") + ',' + (r.rotated ? "true" : "false")
                   + ',' + format_double(r.var_phi) + ',';
        } else {
            out += std::string(",,,,,") + (r.rotated ? "true" : "false") + ",,";
        }
        out += csv_field(r.error) + '\n';
    }
    return out;
}

json rows_to_json(const std::vector<ScanRow>& rows)
{
    json out = json::array();
    for (const auto& r : rows) {
        json j;
        j["lambda"] = r.lambda;
        j["noise_value"] = r.noise_value;
        j["nu"] = std::isfinite(r.nu) ? json(r.nu) : json(nullptr);
        if (r.has_values) {
            j["xi2"] = r.xi2;
            j["a_param"] = r.a_param;
            j["b_param"] = r.b_param;
            j["theta0"] = r.theta0;
            j["interior_minimum"] = r.interior_minimum;
            j["var_phi"] = r.var_phi;
        } else {
            for (const char* k : {"xi2", "a_param", "b_param", "theta0", "interior_minimum", "var_phi"}) {
                j[k] = nullptr;
            }
        }
        j["rotated"] = r.rotated;
        j["extension"] = r.extension;
        j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
        out.push_back(std::move(j));
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    std::ostringstream suffix;
    suffix << ".tmp." << ::getpid() << "." << std::hash<std::thread::id>{}(std::this_thread::get_id());
    std::filesystem::path tmp = path;
    tmp += suffix.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at " + path.string());
    }
}

std::vector<std::filesystem::path> emit_outputs(const std::vector<ScanRow>& rows,
                                                const ScanSpec& spec,
                                                const std::filesystem::path& out_dir,
                                                const std::string& stem)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw IoError("cannot create output directory " + out_dir.string());
    }
    std::vector<std::filesystem::path> written;
    for (const auto& format : spec.outputs) {
        const auto path = out_dir / (stem + "." + format);
        if (format == "csv") {
            write_file_atomic(path, to_csv(rows));
        } else {
            json doc;
            doc["library"] = {{"name", kLibraryName}, {"version", kLibraryVersion}};
            doc["seed"] = spec.seed;
            doc["spec"] = to_json(spec);
            doc["rows"] = rows_to_json(rows);
            write_file_atomic(path, doc.dump(2) + "\n");
        }
        written.push_back(path);
    }
    return written;
}

// ---- spectrum cache -------------------------------------------------------
//
// File layout (native endianness, the cache is host-local):
//   char[8]  "BFSPEC01"
//   int64    N
//   double   lambda, delta
//   double   energies[N+1]
//   double   vectors[(N+1)*(N+1)]   row k = eigenvector k

namespace {

constexpr char kMagic[8] = {'B', 'F', 'S', 'P', 'E', 'C', '0', '1'};

double canonical_delta(double delta)
{
    return delta == 0.0 ? 0.0 : delta;
}

template <class T>
void put(std::string& buf, const T& v)
{
    buf.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
bool get(std::istream& in, T& v)
{
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

}  // namespace

SpectrumCache::SpectrumCache(std::filesystem::path dir) : dir_(std::move(dir))
{
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) {
        throw IoError("cannot create cache directory " + dir_.string());
    }
}

std::filesystem::path SpectrumCache::path_for(const josephson::ModelParams& params) const
{
    char key[96];
    std::snprintf(key, sizeof key, "spectrum|%d|%016llx|%016llx", params.n,
                  static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(params.lambda)),
                  static_cast<unsigned long long>(
                      std::bit_cast<std::uint64_t>(canonical_delta(params.delta))));
    char name[64];
    std::snprintf(name, sizeof name, "spectrum-%016llx.bin",
                  static_cast<unsigned long long>(fnv1a(key)));
    return dir_ / name;
}

std::optional<josephson::Spectrum> SpectrumCache::load(const josephson::ModelParams& params) const
{
    std::ifstream in(path_for(params), std::ios::binary);
    if (!in) return std::nullopt;
    char magic[8];
    std::int64_t n = 0;
    double lambda = 0.0;
    double delta = 0.0;
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) return std::nullopt;
    if (!get(in, n) || !get(in, lambda) || !get(in, delta)) return std::nullopt;
    if (n != params.n || lambda != params.lambda || delta != canonical_delta(params.delta)) {
        return std::nullopt;  // hash collision or foreign file
    }
    const auto dim = static_cast<std::size_t>(n + 1);
    josephson::Spectrum s;
    s.energies.resize(dim);
    if (!in.read(reinterpret_cast<char*>(s.energies.data()),
                 static_cast<std::streamsize>(dim * sizeof(double)))) {
        return std::nullopt;
    }
    const auto basis = spin::build_basis(params.n);
    std::vector<double> v(dim);
    s.states.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        if (!in.read(reinterpret_cast<char*>(v.data()),
                     static_cast<std::streamsize>(dim * sizeof(double)))) {
            return std::nullopt;
        }
        try {
            s.states.emplace_back(basis, v);
        } catch (const InvalidArgument&) {
            return std::nullopt;
        }
    }
    return s;
}

void SpectrumCache::store(const josephson::ModelParams& params,
                          const josephson::Spectrum& spectrum) const
{
    const auto path = path_for(params);
    if (std::filesystem::exists(path)) return;  // write-once
    std::string buf;
    buf.append(kMagic, 8);
    put(buf, static_cast<std::int64_t>(params.n));
    put(buf, params.lambda);
    put(buf, canonical_delta(params.delta));
    for (double e : spectrum.energies) put(buf, e);
    for (const auto& s : spectrum.states) {
        for (double c : s.coeffs()) put(buf, c);
    }
    write_file_atomic(path, buf);
}

josephson::Spectrum SpectrumCache::get_or_compute(const josephson::ModelParams& params) const
{
    if (auto cached = load(params)) return std::move(*cached);
    auto spectrum = josephson::full_spectrum(params);
    store(params, spectrum);
    return spectrum;
}

}  // namespace bellfringe::scan
