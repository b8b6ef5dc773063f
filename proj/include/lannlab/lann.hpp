#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lannlab/dataset.hpp"
#include "lannlab/distribution.hpp"
#include "lannlab/network.hpp"
#include "lannlab/pwl.hpp"

namespace lannlab {

/// Linear approximation network: the weights of `base` with every hidden
/// activation replaced by its own piecewise linear function.
struct LannModel {
    DenseNetwork base;
    std::vector<std::vector<PiecewiseLinearFn>> approx;
    /// Per-neuron output distributions of `base`; empty for hand-made fixtures.
    LayerDistributions distributions;

    /// Every approximation at its initial single tangent.
    static LannModel fresh(const DenseNetwork& base);

    /// K(g): total piece count over all hidden neurons.
    long long total_pieces() const;
    const PiecewiseLinearFn& fn(NeuronId id) const {
        return approx[static_cast<std::size_t>(id.layer)][static_cast<std::size_t>(id.index)];
    }
    bool has_distributions() const { return !distributions.empty(); }
    void validate() const;
};

/// Active piece index (0-based) for every hidden neuron.
struct ActivationPattern {
    std::vector<std::vector<int>> pieces;

    friend bool operator==(const ActivationPattern&, const ActivationPattern&) = default;
};

struct LannForward {
    std::vector<Eigen::VectorXd> hidden;
    Eigen::VectorXd logits;
    ActivationPattern pattern;
};

LannForward lann_forward(const LannModel& g, const Eigen::VectorXd& x);

/// Batched variant; rows are samples. Returns hidden outputs and logits.
BatchForward lann_forward_batch(const LannModel& g, const Eigen::MatrixXd& features);
Eigen::MatrixXd lann_logits_batch(const LannModel& g, const Eigen::MatrixXd& features);

/// The affine map y = W x + b the approximation computes on the linear
/// region identified by `pattern`.
struct AffineMap {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

AffineMap region_linear_map(const LannModel& g, const ActivationPattern& pattern);

/// Mean over samples of the mean absolute logit difference.
double mean_abs_logit_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
double approximation_error(const LannModel& g, const DenseNetwork& f, const LabeledDataset& data);

struct TangentProposal {
    double point = 0.0;       ///< pre-activation of the proposed tangent
    double gain = 0.0;        ///< expected error now minus after insertion
    double error_after = 0.0;
};

/// Best tangent among the distribution's grid candidates. Ties prefer the
/// smaller pre-activation. std::nullopt when every candidate duplicates an
/// existing tangent point.
std::optional<TangentProposal> next_tangent_point(const PiecewiseLinearFn& fn, const NeuronDistribution& dist);

struct BuildConfig {
    double lambda = 0.1;
    int batch = 8;
    int grid_size = NeuronDistribution::default_grid_size;
    int max_iterations = 10000;
    std::uint64_t seed = 0;
    /// Cap on samples per neuron when fitting distributions.
    std::size_t sample_cap = 10000;
    /// Rows used to evaluate E(g; f) each iteration; 0 means the full set.
    std::size_t eval_subsample = 0;

    void validate() const;
};

struct TraceRow {
    int iteration = 0;
    long long total_pieces = 0;
    double error = 0.0;
    int updated = 0;
};

struct BuildTrace {
    BuildConfig config;
    std::vector<TraceRow> rows;
    bool converged = false;
    std::string stop_reason;

    std::vector<double> errors() const;
};

struct BuildResult {
    LannModel model;
    BuildTrace trace;
};

/// Greedy construction: starting from single tangents, repeatedly add the
/// proposed tangent of the `batch` neurons with the largest positive
/// expected-error gain until E(g; f) <= lambda, the iteration cap, or no
/// positive gain remains.
BuildResult build_lann(const DenseNetwork& f, const LabeledDataset& data, const BuildConfig& cfg);
/// Same, with distributions fitted elsewhere.
BuildResult build_lann(const DenseNetwork& f, const LabeledDataset& data, const BuildConfig& cfg,
                       LayerDistributions distributions);

nlohmann::json to_json(const BuildConfig& cfg);
BuildConfig build_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LannModel& g);
LannModel lann_from_json(const nlohmann::json& j);

/// LANN file: model, approximations, distributions, config and trace.
void save_lann(const BuildResult& result, const std::filesystem::path& path);
BuildResult load_lann(const std::filesystem::path& path);
void save_trace_csv(const BuildTrace& trace, const std::filesystem::path& path);
/// Reads the (iteration, K, E) CSV written by save_trace_csv.
BuildTrace load_trace_csv(const std::filesystem::path& path);

}  // namespace lannlab
