#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lannlab/activation.hpp"
#include "lannlab/network.hpp"
#include "lannlab/pwl.hpp"

namespace lannlab {

/// Discrete density of one neuron's activation output on a uniform grid of
/// cell midpoints spanning the activation's output range.
///
/// weights() are KDE density values times the grid spacing, renormalised to
/// sum to 1, so every sum below is a proper expectation.
class NeuronDistribution {
public:
    static constexpr int default_grid_size = 200;

    /// Gaussian KDE with the rule-of-thumb bandwidth. Samples are activation
    /// outputs and must lie in the closed output range.
    static NeuronDistribution fit(Activation activation, std::span<const double> samples,
                                  int grid_size = default_grid_size);

    /// Explicit grid weights (normalised here). For unbounded activations
    /// the grid range must be given.
    static NeuronDistribution from_weights(Activation activation, std::vector<double> weights);
    static NeuronDistribution from_weights(Activation activation, std::vector<double> weights, double lo, double hi,
                                           double bandwidth = 0.0, std::size_t sample_count = 0);

    Activation activation() const { return activation_; }
    int grid_size() const { return static_cast<int>(grid_.size()); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double spacing() const { return (hi_ - lo_) / static_cast<double>(grid_.size()); }
    /// Grid of output values (cell midpoints).
    const std::vector<double>& grid() const { return grid_; }
    /// The grid mapped back to pre-activations.
    const std::vector<double>& preimages() const { return preimages_; }
    const std::vector<double>& weights() const { return weights_; }
    /// Indices with non-zero weight, ascending.
    const std::vector<int>& support() const { return support_; }
    double bandwidth() const { return bandwidth_; }
    std::size_t sample_count() const { return sample_count_; }

    /// Index of the grid cell containing output y (clamped to the grid).
    int cell_of(double y) const;

private:
    NeuronDistribution(Activation activation, double lo, double hi, std::vector<double> weights, double bandwidth,
                       std::size_t sample_count);

    Activation activation_;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::vector<double> grid_;
    std::vector<double> preimages_;
    std::vector<double> weights_;
    std::vector<int> support_;
    double bandwidth_ = 0.0;
    std::size_t sample_count_ = 0;
};

/// 0.9 * min(sd, IQR / 1.34) * n^(-1/5), floored at `floor`. The standard
/// deviation uses the n-1 denominator; quantiles interpolate linearly.
double rule_of_thumb_bandwidth(std::span<const double> samples, double floor);

/// Expected |l(phi^-1(y)) - y| under the distribution.
double expected_error(const PiecewiseLinearFn& fn, const NeuronDistribution& dist);

/// Expected |phi'| under the distribution.
double expected_abs_derivative(const NeuronDistribution& dist);

/// Expected distance of the output from phi(0), the centre of the linear
/// regime.
double nonlinearity_score(const NeuronDistribution& dist);

using LayerDistributions = std::vector<std::vector<NeuronDistribution>>;

/// Fits one distribution per hidden neuron from the network's activations on
/// `features`. At most `sample_cap` rows are used, chosen uniformly without
/// replacement with `seed` (the same rows for every neuron).
LayerDistributions fit_distributions(const DenseNetwork& net, const Eigen::MatrixXd& features,
                                     int grid_size = NeuronDistribution::default_grid_size,
                                     std::size_t sample_cap = 10000, std::uint64_t seed = 0);

/// Row subset used by fit_distributions.
std::vector<Eigen::Index> sample_rows(Eigen::Index n, std::size_t cap, std::uint64_t seed);

nlohmann::json to_json(const NeuronDistribution& dist);
NeuronDistribution distribution_from_json(const nlohmann::json& j);

}  // namespace lannlab
