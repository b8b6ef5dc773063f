#pragma once

#include <filesystem>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lannlab/distribution.hpp"
#include "lannlab/network.hpp"

namespace lannlab {

/// Per-neuron L1 coefficients proportional to E[|phi'|], scaled so their
/// mean equals the plain L1 weight. Coefficient (i, j) applies to row j of
/// V_i, the weights feeding neuron {i, j}.
struct CustomL1Coefficients {
    std::vector<Eigen::VectorXd> raw;     ///< a_ij = E[|phi'|]
    double target = 0.0;                  ///< a_L1
    std::vector<Eigen::VectorXd> scaled;  ///< (a_L1 / mean a) * a_ij
    /// Set when every a_ij is zero; `scaled` then holds a_L1 everywhere.
    bool fallback = false;
};

CustomL1Coefficients custom_l1_coefficients(const DenseNetwork& net, const LayerDistributions& dists,
                                            double a_l1);
/// sum_ij scaled_ij * sum_p |V_i[j, p]|
double custom_l1_penalty(const DenseNetwork& net, const CustomL1Coefficients& coeffs);
/// Subgradient of custom_l1_penalty for every hidden weight matrix, using
/// sign(0) = 0.
std::vector<Eigen::MatrixXd> custom_l1_gradient(const DenseNetwork& net, const CustomL1Coefficients& coeffs);
nlohmann::json to_json(const CustomL1Coefficients& coeffs);

/// Zeroes the incoming row, bias and outgoing column of the neuron.
void zero_neuron(DenseNetwork& net, NeuronId id);

struct PrunedNeuron {
    NeuronId id;
    double score = 0.0;
};

struct PruneResult {
    DenseNetwork net;
    std::vector<PrunedNeuron> pruned;
    /// Neurons the quota asked for but skipped to keep a layer non-empty.
    int withheld = 0;
};

/// Removes floor(percent% of the unpruned neurons) with the largest
/// nonlinearity score, never emptying a layer. Ties go to the lower
/// (layer, index). With `per_layer` the quota is applied within each layer.
PruneResult prune_step(const DenseNetwork& net, const LayerDistributions& dists, double percent,
                       const std::set<NeuronId>& already_pruned = {}, bool per_layer = false);

}  // namespace lannlab
