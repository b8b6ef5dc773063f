#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lannlab/dataset.hpp"
#include "lannlab/lann.hpp"

namespace lannlab {

/// Per-layer terms S_i = sum_j k_ij - m_i + 1 and the log of the region
/// upper bound prod_i S_i^d.
struct RegionBound {
    std::vector<long long> layer_sums;
    double log_bound = 0.0;
};

RegionBound region_upper_bound(const LannModel& g);

/// Complexity measure C = d * sum_i ln S_i (natural log), which is the log
/// of the region upper bound.
struct ComplexityReport {
    double lambda = 0.0;
    std::vector<long long> layer_sums;
    double upper_bound_log = 0.0;
    double measure = 0.0;
    long long total_pieces = 0;
    bool converged = false;
};

ComplexityReport complexity_measure(const LannModel& g, double lambda, bool converged = true);

nlohmann::json to_json(const ComplexityReport& report);
/// "lambda=0.1 K=812 C=31.2 converged=yes"
std::string summary_line(const ComplexityReport& report);

/// Grid points per dimension; a resolution of r places r evenly spaced
/// points including both box ends (r = 1 uses the centre). Going from r to
/// 2r - 1 refines the grid without moving existing points.
inline constexpr double max_grid_points = 1e8;

/// Number of distinct activation patterns over the grid: a lower bound on the
/// number of linear regions meeting the box.
std::uint64_t count_regions_grid(const LannModel& g, const Box& box, std::span<const int> resolution);

struct DiagnosticsRow {
    double iteration = 0.0;  ///< centre of the smoothing window
    double smoothed_error = 0.0;
    double gain = 0.0;       ///< k = |first difference|
    std::optional<double> curvature;  ///< a = |second difference|
    std::optional<double> ratio;      ///< k^2 / a where a > 1e-12
};

struct DiagnosticsTrace {
    int window = 5;
    std::vector<DiagnosticsRow> rows;
    /// Smoothed error where k^2/a settles; absent when it never does or the
    /// trace is too short.
    std::optional<double> lambda0;
    std::optional<double> lambda0_iteration;
    std::string note;
};

inline constexpr double min_curvature = 1e-12;
inline constexpr double ratio_settle_spread = 0.2;

/// Approximation-gain diagnostics for a build trace (see README for the
/// settling rule).
DiagnosticsTrace lambda_diagnostics(std::span<const double> errors, int window = 5);
DiagnosticsTrace lambda_diagnostics(const BuildTrace& trace, int window = 5);

void save_diagnostics_csv(const DiagnosticsTrace& diag, const std::filesystem::path& path);
nlohmann::json to_json(const DiagnosticsTrace& diag);

}  // namespace lannlab
