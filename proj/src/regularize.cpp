#include "lannlab/regularize.hpp"

#include <algorithm>
#include <cmath>

#include "lannlab/error.hpp"

namespace lannlab {

namespace {

void check_shape(const DenseNetwork& net, const LayerDistributions& dists) {
    if (static_cast<int>(dists.size()) != net.depth()) throw ConfigError("distribution layer count mismatch");
    for (int i = 0; i < net.depth(); ++i)
        if (static_cast<int>(dists[static_cast<std::size_t>(i)].size()) != net.width(i))
            throw ConfigError("layer " + std::to_string(i) + " needs one distribution per neuron");
}

void check_shape(const DenseNetwork& net, const CustomL1Coefficients& coeffs) {
    if (static_cast<int>(coeffs.scaled.size()) != net.depth()) throw ConfigError("coefficient layer count mismatch");
    for (int i = 0; i < net.depth(); ++i)
        if (coeffs.scaled[static_cast<std::size_t>(i)].size() != net.width(i))
            throw ConfigError("layer " + std::to_string(i) + " needs one coefficient per neuron");
}

}  // namespace

CustomL1Coefficients custom_l1_coefficients(const DenseNetwork& net, const LayerDistributions& dists, double a_l1) {
    if (!(a_l1 >= 0.0) || !std::isfinite(a_l1)) throw ConfigError("L1 weight must be finite and non-negative");
    check_shape(net, dists);
    CustomL1Coefficients c;
    c.target = a_l1;
    double total = 0.0;
    long long count = 0;
    for (int i = 0; i < net.depth(); ++i) {
        Eigen::VectorXd a(net.width(i));
        for (int j = 0; j < net.width(i); ++j)
            a(j) = expected_abs_derivative(dists[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        total += a.sum();
        count += a.size();
        c.raw.push_back(std::move(a));
    }
    const double mean = count > 0 ? total / static_cast<double>(count) : 0.0;
    c.fallback = !(mean > 0.0);
    for (const auto& a : c.raw) {
        if (c.fallback) c.scaled.push_back(Eigen::VectorXd::Constant(a.size(), a_l1));
        else c.scaled.push_back(a * (a_l1 / mean));
    }
    return c;
}

double custom_l1_penalty(const DenseNetwork& net, const CustomL1Coefficients& coeffs) {
    check_shape(net, coeffs);
    double p = 0.0;
    for (int i = 0; i < net.depth(); ++i)
        p += coeffs.scaled[static_cast<std::size_t>(i)].dot(
            net.hidden[static_cast<std::size_t>(i)].weights.cwiseAbs().rowwise().sum());
    return p;
}

std::vector<Eigen::MatrixXd> custom_l1_gradient(const DenseNetwork& net, const CustomL1Coefficients& coeffs) {
    check_shape(net, coeffs);
    std::vector<Eigen::MatrixXd> grads;
    for (int i = 0; i < net.depth(); ++i) {
        const auto& w = net.hidden[static_cast<std::size_t>(i)].weights;
        Eigen::MatrixXd g = w.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
        grads.push_back(coeffs.scaled[static_cast<std::size_t>(i)].asDiagonal() * g);
    }
    return grads;
}

nlohmann::json to_json(const CustomL1Coefficients& coeffs) {
    nlohmann::json raw = nlohmann::json::array();
    nlohmann::json scaled = nlohmann::json::array();
    for (const auto& a : coeffs.raw) raw.push_back(std::vector<double>(a.data(), a.data() + a.size()));
    for (const auto& a : coeffs.scaled) scaled.push_back(std::vector<double>(a.data(), a.data() + a.size()));
    return {{"a_l1", coeffs.target}, {"fallback", coeffs.fallback}, {"raw", raw}, {"scaled", scaled}};
}

void zero_neuron(DenseNetwork& net, NeuronId id) {
    if (id.layer < 0 || id.layer >= net.depth() || id.index < 0 || id.index >= net.width(id.layer))
        throw ConfigError("neuron {" + std::to_string(id.layer) + "," + std::to_string(id.index) + "} out of range");
    auto& layer = net.hidden[static_cast<std::size_t>(id.layer)];
    layer.weights.row(id.index).setZero();
    layer.bias(id.index) = 0.0;
    auto& next = id.layer + 1 < net.depth() ? net.hidden[static_cast<std::size_t>(id.layer + 1)] : net.output;
    next.weights.col(id.index).setZero();
}

PruneResult prune_step(const DenseNetwork& net, const LayerDistributions& dists, double percent,
                       const std::set<NeuronId>& already_pruned, bool per_layer) {
    if (!(percent > 0.0 && percent <= 50.0)) throw ConfigError("prune percent must lie in (0, 50]");
    check_shape(net, dists);

    struct Candidate {
        NeuronId id;
        double score;
    };
    std::vector<Candidate> candidates;
    std::vector<int> remaining(static_cast<std::size_t>(net.depth()), 0);
    for (int i = 0; i < net.depth(); ++i)
        for (int j = 0; j < net.width(i); ++j) {
            if (already_pruned.contains({i, j})) continue;
            ++remaining[static_cast<std::size_t>(i)];
            candidates.push_back(
                {{i, j}, nonlinearity_score(dists[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])});
        }
    // Candidates are generated in (layer, index) order; stable_sort keeps it for ties.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

    auto quota_of = [&](std::size_t n) {
        return static_cast<int>(std::floor(static_cast<double>(n) * percent / 100.0 + 1e-9));
    };
    std::vector<int> layer_quota(static_cast<std::size_t>(net.depth()), 0);
    int global_quota = 0;
    if (per_layer) {
        for (int i = 0; i < net.depth(); ++i)
            layer_quota[static_cast<std::size_t>(i)] = quota_of(static_cast<std::size_t>(remaining[static_cast<std::size_t>(i)]));
    } else {
        global_quota = quota_of(candidates.size());
    }

    PruneResult result{net, {}, 0};
    int taken = 0;
    for (const auto& c : candidates) {
        const auto layer = static_cast<std::size_t>(c.id.layer);
        if (per_layer ? layer_quota[layer] == 0 : taken == global_quota) {
            if (!per_layer) break;
            continue;
        }
        if (remaining[layer] <= 1) {
            ++result.withheld;
            if (per_layer) --layer_quota[layer];
            else ++taken;
            continue;
        }
        zero_neuron(result.net, c.id);
        result.pruned.push_back({c.id, c.score});
        --remaining[layer];
        if (per_layer) --layer_quota[layer];
        else ++taken;
    }
    return result;
}

}  // namespace lannlab
