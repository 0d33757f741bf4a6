#pragma once

// Parameter scans over interaction strength and one noise axis, zero-crossing
// and region-boundary extraction, and CSV/JSON emission.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bellfringe/error.hpp"
#include "bellfringe/josephson.hpp"
#include "bellfringe/noise_models.hpp"

namespace bellfringe::scan {

inline constexpr const char* kLibraryName = "bellfringe";
inline constexpr const char* kLibraryVersion = "0.1.0";

/// Malformed or inconsistent scan configuration.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// File output failed.
class IoError : public Error {
public:
    using Error::Error;
};

enum class ScanMode { ground_state, thermal, delta_mixture, blurred };
enum class NoiseAxis { none, sigma_delta, temperature, sigma_detector };

/// Either an explicit list or start/stop/step (inclusive of stop up to
/// rounding). Points are start + i * step.
struct Grid {
    std::vector<double> list;
    std::optional<double> start;
    std::optional<double> stop;
    std::optional<double> step;

    static Grid of(std::vector<double> values);
    static Grid range(double start, double stop, double step);

    std::vector<double> values() const;
    bool empty() const { return values().empty(); }

    friend bool operator==(const Grid&, const Grid&) = default;
};

struct McCase {
    double xi2 = 1.0;
    double nu = 0.9;
    friend bool operator==(const McCase&, const McCase&) = default;
};

struct McBlock {
    int n_atoms = 1000;
    int n_shots = 10000;
    int n_periods = 8;
    double k = 1.0;
    double phi = 0.0;
    bool fit_visibility = true;
    std::vector<McCase> cases;
    friend bool operator==(const McBlock&, const McBlock&) = default;
};

struct ScanSpec {
    int n = 1000;
    Grid lambda_grid;
    NoiseAxis noise_axis = NoiseAxis::none;
    Grid noise_grid;
    double k_fringe = 1.0;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs{"csv", "json"};
    ScanMode mode = ScanMode::ground_state;
    noise::NoiseConfig base_noise;  // fixed values for the non-scanned channels
    int quadrature_order = 20;      // half-range nodes for delta averaging
    std::optional<McBlock> mc_block;

    /// Throws ConfigError on empty/non-monotone grids or a mode that does
    /// not match the noise axis.
    void validate() const;

    friend bool operator==(const ScanSpec& a, const ScanSpec& b);
};

nlohmann::json to_json(const ScanSpec& spec);
ScanSpec spec_from_json(const nlohmann::json& j);
ScanSpec load_spec(const std::filesystem::path& path);

std::string to_string(ScanMode m);
std::string to_string(NoiseAxis a);

struct ScanRow {
    double lambda = 0.0;
    double noise_value = 0.0;
    double nu = 0.0;  // observed (blurred, if applicable) visibility
    double xi2 = 0.0;
    double a_param = 0.0;
    double b_param = 0.0;
    double theta0 = 0.0;
    bool interior_minimum = false;
    bool rotated = false;
    double var_phi = 0.0;
    bool has_values = false;  // false when the witness is undefined
    bool extension = false;   // delta fluctuations combined with T > 0
    std::string error;
};

struct RunOptions {
    int threads = 1;
    std::optional<std::filesystem::path> cache_dir;
    bool rotation = true;  // false: never apply the pi/2 rotation
};

/// Rows for one interaction value and several noise values (shares the
/// spectrum / state across the noise axis).
std::vector<ScanRow> evaluate_column(const ScanSpec& spec, double lambda,
                                     const std::vector<double>& noise_values,
                                     const RunOptions& options = {});

/// Full grid, lambda outer and noise inner, in grid order.
std::vector<ScanRow> run_scan(const ScanSpec& spec, const RunOptions& options = {});

enum class Column { a_param, b_param };
double column_value(const ScanRow& row, Column column);

/// Sign changes of `column` along rows sorted by lambda (rows at a single
/// noise value), each refined by bisection on `evaluate` to |d lambda| <= tol.
std::vector<double> find_zero_crossings(const std::vector<ScanRow>& rows, Column column,
                                        const std::function<double(double)>& evaluate,
                                        double tolerance = 1e-4);

/// Fresh-evaluation callback for find_zero_crossings.
std::function<double(double)> point_evaluator(const ScanSpec& spec, double noise_value,
                                              Column column, const RunOptions& options = {});

struct BoundaryPoint {
    double lambda = 0.0;
    double noise_value = 0.0;
};

/// For each lambda, the first noise value (ascending) at which b_param
/// changes sign, by linear interpolation between neighbours. Columns
/// without a sign change are skipped.
std::vector<BoundaryPoint> extract_region_boundary(const std::vector<ScanRow>& rows);

/// Fixed CSV header.
std::string csv_header();
std::string to_csv(const std::vector<ScanRow>& rows);
nlohmann::json rows_to_json(const std::vector<ScanRow>& rows);

/// Writes <stem>.csv and/or <stem>.json into `out_dir` per spec.outputs;
/// returns the written paths. Throws IoError on failure.
std::vector<std::filesystem::path> emit_outputs(const std::vector<ScanRow>& rows,
                                                const ScanSpec& spec,
                                                const std::filesystem::path& out_dir,
                                                const std::string& stem = "scan");

/// Write-once on-disk memo of spectra keyed by (N, lambda, delta).
class SpectrumCache {
public:
    explicit SpectrumCache(std::filesystem::path dir);

    std::filesystem::path path_for(const josephson::ModelParams& params) const;
    std::optional<josephson::Spectrum> load(const josephson::ModelParams& params) const;
    void store(const josephson::ModelParams& params, const josephson::Spectrum& spectrum) const;
    josephson::Spectrum get_or_compute(const josephson::ModelParams& params) const;

private:
    std::filesystem::path dir_;
};

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace bellfringe::scan
