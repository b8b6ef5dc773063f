#include "lannlab/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string_view>
#include <unordered_set>

#include "lannlab/csv.hpp"
#include "lannlab/error.hpp"
#include "lannlab/parallel.hpp"

namespace lannlab {

RegionBound region_upper_bound(const LannModel& g) {
    RegionBound bound;
    for (const auto& layer : g.approx) {
        long long sum = 1;
        for (const auto& fn : layer) sum += fn.piece_count() - 1;
        bound.layer_sums.push_back(sum);
        bound.log_bound += std::log(static_cast<double>(sum));
    }
    bound.log_bound *= g.base.input_dim;
    return bound;
}

ComplexityReport complexity_measure(const LannModel& g, double lambda, bool converged) {
    const auto bound = region_upper_bound(g);
    ComplexityReport report;
    report.lambda = lambda;
    report.layer_sums = bound.layer_sums;
    report.upper_bound_log = bound.log_bound;
    report.measure = bound.log_bound;
    report.total_pieces = g.total_pieces();
    report.converged = converged;
    return report;
}

nlohmann::json to_json(const ComplexityReport& report) {
    return {
        {"lambda", report.lambda},
        {"layer_sums", report.layer_sums},
        {"upper_bound_log", report.upper_bound_log},
        {"complexity", report.measure},
        {"log_base", "e"},
        {"K", report.total_pieces},
        {"converged", report.converged},
    };
}

std::string summary_line(const ComplexityReport& report) {
    return "lambda=" + format_double(report.lambda) + " K=" + std::to_string(report.total_pieces) +
           " C=" + format_double(report.measure) + " converged=" + (report.converged ? "yes" : "no");
}

namespace {

double grid_coordinate(const std::pair<double, double>& range, int resolution, int i) {
    if (resolution == 1) return 0.5 * (range.first + range.second);
    return range.first + (range.second - range.first) * static_cast<double>(i) / static_cast<double>(resolution - 1);
}

}  // namespace

std::uint64_t count_regions_grid(const LannModel& g, const Box& box, std::span<const int> resolution) {
    const auto& net = g.base;
    const int d = net.input_dim;
    if (static_cast<int>(box.size()) != d || static_cast<int>(resolution.size()) != d)
        throw ConfigError("box and resolution must have one entry per input dimension");
    double total = 1.0;
    for (int r : resolution) {
        if (r < 1) throw ConfigError("grid resolution must be at least 1 per dimension");
        total *= r;
    }
    if (total > max_grid_points) throw ConfigError("grid has more than 1e8 points");
    for (const auto& [lo, hi] : box)
        if (!(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("invalid grid box");

    const auto n_points = static_cast<std::uint64_t>(total);
    const int neurons = net.neuron_count();
    constexpr std::uint64_t chunk = 4096;
    const std::uint64_t n_chunks = (n_points + chunk - 1) / chunk;

    // Patterns are encoded as 16-bit piece indices packed into a string key.
    std::vector<std::unordered_set<std::string>> found(n_chunks);
    parallel_for(static_cast<std::size_t>(n_chunks), [&](std::size_t c) {
        const std::uint64_t begin = c * chunk;
        const std::uint64_t end = std::min(n_points, begin + chunk);
        const auto rows = static_cast<Eigen::Index>(end - begin);
        Eigen::MatrixXd x(rows, d);
        for (std::uint64_t p = begin; p < end; ++p) {
            std::uint64_t rem = p;
            for (int k = d - 1; k >= 0; --k) {
                const auto r = static_cast<std::uint64_t>(resolution[static_cast<std::size_t>(k)]);
                x(static_cast<Eigen::Index>(p - begin), k) =
                    grid_coordinate(box[static_cast<std::size_t>(k)], static_cast<int>(r), static_cast<int>(rem % r));
                rem /= r;
            }
        }
        std::vector<std::string> keys(static_cast<std::size_t>(rows), std::string(2 * static_cast<std::size_t>(neurons), '\0'));
        const Eigen::MatrixXd* prev = &x;
        Eigen::MatrixXd h;
        Eigen::MatrixXd next;
        std::size_t offset = 0;
        for (std::size_t i = 0; i < net.hidden.size(); ++i) {
            next = *prev * net.hidden[i].weights.transpose();
            next.rowwise() += net.hidden[i].bias.transpose();
            for (Eigen::Index j = 0; j < next.cols(); ++j, ++offset) {
                const auto& fn = g.approx[i][static_cast<std::size_t>(j)];
                for (Eigen::Index r = 0; r < rows; ++r) {
                    const int s = fn.active_index(next(r, j));
                    auto& key = keys[static_cast<std::size_t>(r)];
                    key[2 * offset] = static_cast<char>(s & 0xff);
                    key[2 * offset + 1] = static_cast<char>((s >> 8) & 0xff);
                    next(r, j) = fn.slopes()[static_cast<std::size_t>(s)] * next(r, j) +
                                 fn.intercepts()[static_cast<std::size_t>(s)];
                }
            }
            h.swap(next);
            prev = &h;
        }
        auto& set = found[c];
        for (auto& key : keys) set.insert(std::move(key));
    });

    std::unordered_set<std::string> all;
    for (auto& set : found) {
        for (const auto& key : set) all.insert(key);
        set.clear();
    }
    return all.size();
}

DiagnosticsTrace lambda_diagnostics(std::span<const double> errors, int window) {
    if (window < 1) throw ConfigError("smoothing window must be at least 1");
    DiagnosticsTrace diag;
    diag.window = window;
    const auto n = static_cast<int>(errors.size());
    if (n < window + 3) {
        diag.note = "trace too short for diagnostics";
        return diag;
    }
    // Centred moving average over complete windows only.
    const int m = n - window + 1;
    std::vector<double> smooth(static_cast<std::size_t>(m));
    for (int t = 0; t < m; ++t) {
        double s = 0.0;
        for (int u = 0; u < window; ++u) s += errors[static_cast<std::size_t>(t + u)];
        smooth[static_cast<std::size_t>(t)] = s / window;
    }
    const double centre = 0.5 * (window - 1);
    for (int t = 0; t + 1 < m; ++t) {
        DiagnosticsRow row;
        row.iteration = t + centre;
        row.smoothed_error = smooth[static_cast<std::size_t>(t)];
        row.gain = std::abs(smooth[static_cast<std::size_t>(t + 1)] - smooth[static_cast<std::size_t>(t)]);
        diag.rows.push_back(row);
    }
    for (std::size_t t = 0; t + 1 < diag.rows.size(); ++t) {
        const double a = std::abs(diag.rows[t + 1].gain - diag.rows[t].gain);
        diag.rows[t].curvature = a;
        if (a > min_curvature) diag.rows[t].ratio = diag.rows[t].gain * diag.rows[t].gain / a;
    }

    std::vector<std::size_t> defined;
    for (std::size_t t = 0; t < diag.rows.size(); ++t)
        if (diag.rows[t].ratio) defined.push_back(t);
    if (defined.size() < 3) {
        diag.note = "k^2/a undefined (second difference ~ 0)";
        return diag;
    }
    // Scale: the largest ratio over the trailing half of the rows. The
    // detector picks the earliest start whose suffix spread stays under
    // ratio_settle_spread times that scale.
    const std::size_t half = diag.rows.size() / 2;
    double scale = 0.0;
    for (auto t : defined)
        if (t >= half) scale = std::max(scale, *diag.rows[t].ratio);
    if (!(scale > 0.0)) {
        diag.note = "k^2/a undefined over the trailing half";
        return diag;
    }
    double lo = *diag.rows[defined.back()].ratio;
    double hi = lo;
    std::optional<std::size_t> start;
    for (std::size_t idx = defined.size(); idx-- > 0;) {
        const double r = *diag.rows[defined[idx]].ratio;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        if (hi - lo >= ratio_settle_spread * scale) break;
        if (defined.size() - idx >= 3) start = idx;
    }
    if (!start) {
        diag.note = "k^2/a does not settle";
        return diag;
    }
    const auto& row = diag.rows[defined[*start]];
    diag.lambda0 = row.smoothed_error;
    diag.lambda0_iteration = row.iteration;
    return diag;
}

DiagnosticsTrace lambda_diagnostics(const BuildTrace& trace, int window) {
    const auto e = trace.errors();
    return lambda_diagnostics(std::span<const double>(e), window);
}

void save_diagnostics_csv(const DiagnosticsTrace& diag, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.header({"iteration", "E_smoothed", "k", "a", "k2_over_a"});
    for (const auto& r : diag.rows) {
        auto row = out.row();
        row << r.iteration << r.smoothed_error << r.gain;
        if (r.curvature) row << *r.curvature; else row << "";
        if (r.ratio) row << *r.ratio; else row << "";
    }
}

nlohmann::json to_json(const DiagnosticsTrace& diag) {
    nlohmann::json j = {{"window", diag.window}, {"rows", diag.rows.size()}, {"note", diag.note}};
    j["lambda0"] = diag.lambda0 ? nlohmann::json(*diag.lambda0) : nlohmann::json(nullptr);
    j["lambda0_iteration"] = diag.lambda0_iteration ? nlohmann::json(*diag.lambda0_iteration) : nlohmann::json(nullptr);
    return j;
}

}  // namespace lannlab
