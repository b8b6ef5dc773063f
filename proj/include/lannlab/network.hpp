#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lannlab/activation.hpp"

namespace lannlab {

/// One affine map y = W x + b. `weights` is (outputs x inputs).
struct DenseLayer {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;

    Eigen::Index inputs() const { return weights.cols(); }
    Eigen::Index outputs() const { return weights.rows(); }
};

/// Identifies hidden neuron `index` of hidden layer `layer` (both 0-based).
struct NeuronId {
    int layer = 0;
    int index = 0;

    friend auto operator<=>(const NeuronId&, const NeuronId&) = default;
};

/// Fully connected network with L hidden layers sharing one activation and
/// an affine output layer producing logits.
struct DenseNetwork {
    Activation activation;
    int input_dim = 0;
    std::vector<DenseLayer> hidden;
    DenseLayer output;

    int depth() const { return static_cast<int>(hidden.size()); }
    int output_dim() const { return static_cast<int>(output.outputs()); }
    int width(int layer) const { return static_cast<int>(hidden.at(layer).outputs()); }
    std::vector<int> widths() const;
    int neuron_count() const;

    /// Throws ConfigError when the dimensions do not chain or a parameter is
    /// not finite.
    void validate() const;

    friend bool operator==(const DenseNetwork& a, const DenseNetwork& b);
};

/// Glorot-uniform weights, zero biases.
DenseNetwork make_network(int input_dim, std::span<const int> widths, int output_dim,
                          Activation activation, std::uint64_t seed);

struct ForwardResult {
    std::vector<Eigen::VectorXd> hidden;
    Eigen::VectorXd logits;
};

ForwardResult forward(const DenseNetwork& net, const Eigen::VectorXd& x);

/// Batched forward pass. `features` holds one sample per row; the returned
/// hidden outputs and logits follow the same layout (n x m_i, n x c).
struct BatchForward {
    std::vector<Eigen::MatrixXd> hidden;
    Eigen::MatrixXd logits;
};

BatchForward forward_batch(const DenseNetwork& net, const Eigen::MatrixXd& features);
Eigen::MatrixXd logits_batch(const DenseNetwork& net, const Eigen::MatrixXd& features);

std::vector<int> predict(const DenseNetwork& net, const Eigen::MatrixXd& features);
double accuracy(const DenseNetwork& net, const Eigen::MatrixXd& features, std::span<const int> labels);

/// Copy of `net` in which the listed neurons of hidden layer `layer` always
/// contribute 0 downstream (their outgoing weight columns are zeroed).
DenseNetwork ablate(const DenseNetwork& net, int layer, std::span<const int> neurons);

}  // namespace lannlab
