#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lannlab/distribution.hpp"
#include "lannlab/lann.hpp"
#include "lannlab/network.hpp"

namespace lannlab {

/// E[|J_i|]: row j is E[|phi'|] of neuron {i,j} times |V_i| row j.
Eigen::MatrixXd expected_jacobian(const DenseNetwork& net, int layer, const LayerDistributions& dists);

/// Per-neuron amplification w_ij = (1/c) * column sums of
/// |V_o| * E|J_L| * ... * E|J_{i+1}|.
std::vector<Eigen::VectorXd> amplification(const DenseNetwork& net, const LayerDistributions& dists);

/// Expected approximation error E[e_ij] of every hidden neuron.
std::vector<Eigen::VectorXd> expected_neuron_errors(const LannModel& g);

/// Layerwise accumulated error r_1 = e_1, r_i = e_i + E|J_i| r_{i-1}.
std::vector<Eigen::VectorXd> error_accumulation(const LannModel& g);
/// The same quantity as a sum over source layers:
/// r_i = sum_{p <= i} E|J_i| ... E|J_{p+1}| e_p.
std::vector<Eigen::VectorXd> error_accumulation_expanded(const LannModel& g);

struct PropagationReport {
    std::vector<Eigen::VectorXd> expected_errors;
    /// jacobians[i] is m_i x m_{i-1} (m_0 = d).
    std::vector<Eigen::MatrixXd> jacobians;
    std::vector<Eigen::VectorXd> amplification;
    std::vector<Eigen::VectorXd> accumulation;
    int output_dim = 0;
};

PropagationReport propagation_report(const LannModel& g);
nlohmann::json to_json(const PropagationReport& report);
/// One row per neuron: layer, index, E[e], w.
void save_propagation_csv(const PropagationReport& report, const std::filesystem::path& path);

struct AblationResult {
    int layer = 0;
    int ablated = 0;  ///< neurons removed per trial
    std::vector<double> trial_rates;
    double mean_rate = 0.0;
};

inline constexpr double default_ablation_fraction = 0.1;
inline constexpr int default_ablation_trials = 20;

/// Repeatedly zeroes ceil(fraction * m_layer) random neurons of `layer` and
/// records the fraction of rows whose predicted class changes.
AblationResult ablation_flip_rate(const DenseNetwork& net, int layer, double fraction, int trials,
                                  const Eigen::MatrixXd& features, std::uint64_t seed);
void save_ablation_csv(const std::vector<AblationResult>& results, const std::filesystem::path& path);

/// Seed for trial `trial` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace lannlab
