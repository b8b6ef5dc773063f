#include "lannlab/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lannlab/error.hpp"

namespace lannlab {

namespace {

// tanh via a vectorised exp; odd Taylor series where 1 - e cancels.
template <typename Block>
void fast_tanh(Block&& block) {
    auto z = block.array();
    const Eigen::ArrayXXd a = z.abs();
    const Eigen::ArrayXXd e = (-2.0 * a).exp();
    const Eigen::ArrayXXd z2 = z.square();
    const Eigen::ArrayXXd series = z * (1.0 + z2 * (-1.0 / 3.0 + z2 * (2.0 / 15.0 + z2 * (-17.0 / 315.0))));
    const Eigen::ArrayXXd far = z.sign() * (1.0 - e) / (1.0 + e);
    z = (a < 1e-2).select(series, far);
}

void apply_activation(Activation act, Eigen::MatrixXd& m) {
    switch (act.kind()) {
    case ActivationKind::tanh:
        // Large matrices go column by column so the temporaries stay in cache.
        if (m.size() <= 8192) fast_tanh(m);
        else
            for (Eigen::Index j = 0; j < m.cols(); ++j) fast_tanh(m.col(j));
        break;
    case ActivationKind::sigmoid: m = (1.0 + (-m.array()).exp()).inverse(); break;
    case ActivationKind::identity: break;
    }
}

void apply_activation(Activation act, Eigen::VectorXd& v) {
    for (auto& z : v) z = act(z);
}

}  // namespace

std::vector<int> DenseNetwork::widths() const {
    std::vector<int> w;
    w.reserve(hidden.size());
    for (const auto& layer : hidden) w.push_back(static_cast<int>(layer.outputs()));
    return w;
}

int DenseNetwork::neuron_count() const {
    int n = 0;
    for (const auto& layer : hidden) n += static_cast<int>(layer.outputs());
    return n;
}

void DenseNetwork::validate() const {
    if (input_dim <= 0) throw ConfigError("network input_dim must be positive");
    if (hidden.empty()) throw ConfigError("network needs at least one hidden layer");
    Eigen::Index prev = input_dim;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        const auto& layer = hidden[i];
        if (layer.weights.rows() == 0) throw ConfigError("hidden layer " + std::to_string(i) + " is empty");
        if (layer.weights.cols() != prev)
            throw ConfigError("hidden layer " + std::to_string(i) + " expects " +
                              std::to_string(layer.weights.cols()) + " inputs, previous layer gives " +
                              std::to_string(prev));
        if (layer.bias.size() != layer.weights.rows())
            throw ConfigError("hidden layer " + std::to_string(i) + " bias length mismatch");
        if (!layer.weights.allFinite() || !layer.bias.allFinite())
            throw ConfigError("hidden layer " + std::to_string(i) + " has non-finite parameters");
        prev = layer.weights.rows();
    }
    if (output.weights.rows() == 0) throw ConfigError("output layer is empty");
    if (output.weights.cols() != prev) throw ConfigError("output layer input width mismatch");
    if (output.bias.size() != output.weights.rows()) throw ConfigError("output bias length mismatch");
    if (!output.weights.allFinite() || !output.bias.allFinite())
        throw ConfigError("output layer has non-finite parameters");
}

bool operator==(const DenseNetwork& a, const DenseNetwork& b) {
    if (a.activation != b.activation || a.input_dim != b.input_dim || a.hidden.size() != b.hidden.size())
        return false;
    auto same = [](const DenseLayer& x, const DenseLayer& y) {
        return x.weights.rows() == y.weights.rows() && x.weights.cols() == y.weights.cols() &&
               x.bias.size() == y.bias.size() && x.weights == y.weights && x.bias == y.bias;
    };
    for (std::size_t i = 0; i < a.hidden.size(); ++i)
        if (!same(a.hidden[i], b.hidden[i])) return false;
    return same(a.output, b.output);
}

DenseNetwork make_network(int input_dim, std::span<const int> widths, int output_dim, Activation activation,
                          std::uint64_t seed) {
    if (input_dim <= 0 || output_dim <= 0) throw ConfigError("network dimensions must be positive");
    if (widths.empty()) throw ConfigError("network needs at least one hidden layer");
    std::mt19937_64 rng(seed);
    auto glorot = [&rng](int rows, int cols) {
        const double limit = std::sqrt(6.0 / (rows + cols));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Eigen::MatrixXd w(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) w(r, c) = dist(rng);
        return w;
    };

    DenseNetwork net;
    net.activation = activation;
    net.input_dim = input_dim;
    int prev = input_dim;
    for (int w : widths) {
        if (w <= 0) throw ConfigError("hidden widths must be positive");
        net.hidden.push_back({glorot(w, prev), Eigen::VectorXd::Zero(w)});
        prev = w;
    }
    net.output = {glorot(output_dim, prev), Eigen::VectorXd::Zero(output_dim)};
    return net;
}

ForwardResult forward(const DenseNetwork& net, const Eigen::VectorXd& x) {
    if (x.size() != net.input_dim)
        throw ConfigError("input has length " + std::to_string(x.size()) + ", network expects " +
                          std::to_string(net.input_dim));
    ForwardResult out;
    out.hidden.reserve(net.hidden.size());
    const Eigen::VectorXd* prev = &x;
    for (const auto& layer : net.hidden) {
        Eigen::VectorXd h = layer.weights * *prev + layer.bias;
        apply_activation(net.activation, h);
        out.hidden.push_back(std::move(h));
        prev = &out.hidden.back();
    }
    out.logits = net.output.weights * *prev + net.output.bias;
    return out;
}

BatchForward forward_batch(const DenseNetwork& net, const Eigen::MatrixXd& features) {
    if (features.cols() != net.input_dim)
        throw ConfigError("features have " + std::to_string(features.cols()) + " columns, network expects " +
                          std::to_string(net.input_dim));
    BatchForward out;
    out.hidden.reserve(net.hidden.size());
    const Eigen::MatrixXd* prev = &features;
    for (const auto& layer : net.hidden) {
        Eigen::MatrixXd h = *prev * layer.weights.transpose();
        h.rowwise() += layer.bias.transpose();
        apply_activation(net.activation, h);
        out.hidden.push_back(std::move(h));
        prev = &out.hidden.back();
    }
    out.logits = *prev * net.output.weights.transpose();
    out.logits.rowwise() += net.output.bias.transpose();
    return out;
}

Eigen::MatrixXd logits_batch(const DenseNetwork& net, const Eigen::MatrixXd& features) {
    return forward_batch(net, features).logits;
}

std::vector<int> predict(const DenseNetwork& net, const Eigen::MatrixXd& features) {
    const Eigen::MatrixXd logits = logits_batch(net, features);
    std::vector<int> labels(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index best = 0;
        logits.row(r).maxCoeff(&best);
        labels[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return labels;
}

double accuracy(const DenseNetwork& net, const Eigen::MatrixXd& features, std::span<const int> labels) {
    if (features.rows() == 0) throw ConfigError("accuracy of an empty dataset");
    const auto predicted = predict(net, features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

DenseNetwork ablate(const DenseNetwork& net, int layer, std::span<const int> neurons) {
    if (layer < 0 || layer >= net.depth()) throw ConfigError("ablation layer " + std::to_string(layer) + " out of range");
    DenseNetwork out = net;
    DenseLayer& next = layer + 1 < net.depth() ? out.hidden[static_cast<std::size_t>(layer + 1)] : out.output;
    for (int j : neurons) {
        if (j < 0 || j >= net.width(layer))
            throw ConfigError("ablation neuron " + std::to_string(j) + " out of range for layer " +
                              std::to_string(layer));
        next.weights.col(j).setZero();
    }
    return out;
}

}  // namespace lannlab
