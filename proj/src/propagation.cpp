#include "lannlab/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lannlab/csv.hpp"
#include "lannlab/error.hpp"
#include "lannlab/parallel.hpp"

namespace lannlab {

namespace {

void check_distributions(const DenseNetwork& net, const LayerDistributions& dists) {
    if (static_cast<int>(dists.size()) != net.depth()) throw ConfigError("distribution layer count mismatch");
    for (int i = 0; i < net.depth(); ++i)
        if (static_cast<int>(dists[static_cast<std::size_t>(i)].size()) != net.width(i))
            throw ConfigError("layer " + std::to_string(i) + " needs one distribution per neuron");
}

std::vector<Eigen::MatrixXd> all_jacobians(const DenseNetwork& net, const LayerDistributions& dists) {
    std::vector<Eigen::MatrixXd> out;
    for (int i = 0; i < net.depth(); ++i) out.push_back(expected_jacobian(net, i, dists));
    return out;
}

}  // namespace

Eigen::MatrixXd expected_jacobian(const DenseNetwork& net, int layer, const LayerDistributions& dists) {
    if (layer < 0 || layer >= net.depth()) throw ConfigError("layer " + std::to_string(layer) + " out of range");
    check_distributions(net, dists);
    const auto& weights = net.hidden[static_cast<std::size_t>(layer)].weights;
    const auto& layer_dists = dists[static_cast<std::size_t>(layer)];
    Eigen::MatrixXd j = weights.cwiseAbs();
    for (Eigen::Index r = 0; r < j.rows(); ++r) {
        const auto& dist = layer_dists[static_cast<std::size_t>(r)];
        if (dist.activation() != net.activation) throw ConfigError("distribution activation mismatch");
        j.row(r) *= expected_abs_derivative(dist);
    }
    return j;
}

std::vector<Eigen::VectorXd> amplification(const DenseNetwork& net, const LayerDistributions& dists) {
    check_distributions(net, dists);
    const auto jac = all_jacobians(net, dists);
    const double c = net.output_dim();
    std::vector<Eigen::VectorXd> w(static_cast<std::size_t>(net.depth()));
    Eigen::MatrixXd chain = net.output.weights.cwiseAbs();
    for (int i = net.depth() - 1; i >= 0; --i) {
        w[static_cast<std::size_t>(i)] = chain.colwise().sum().transpose() / c;
        chain = chain * jac[static_cast<std::size_t>(i)];
    }
    return w;
}

std::vector<Eigen::VectorXd> expected_neuron_errors(const LannModel& g) {
    g.validate();
    if (!g.has_distributions()) throw ConfigError("approximation has no distributions");
    std::vector<Eigen::VectorXd> e;
    for (int i = 0; i < g.base.depth(); ++i) {
        Eigen::VectorXd layer(g.base.width(i));
        for (int j = 0; j < g.base.width(i); ++j)
            layer(j) = expected_error(g.fn({i, j}),
                                      g.distributions[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        e.push_back(std::move(layer));
    }
    return e;
}

std::vector<Eigen::VectorXd> error_accumulation(const LannModel& g) {
    const auto e = expected_neuron_errors(g);
    const auto jac = all_jacobians(g.base, g.distributions);
    std::vector<Eigen::VectorXd> r;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (i == 0) r.push_back(e[0]);
        else r.push_back(e[i] + jac[i] * r[i - 1]);
    }
    return r;
}

std::vector<Eigen::VectorXd> error_accumulation_expanded(const LannModel& g) {
    const auto e = expected_neuron_errors(g);
    const auto jac = all_jacobians(g.base, g.distributions);
    std::vector<Eigen::VectorXd> r;
    for (std::size_t i = 0; i < e.size(); ++i) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(e[i].size());
        for (std::size_t p = 0; p <= i; ++p) {
            Eigen::MatrixXd chain = Eigen::MatrixXd::Identity(e[i].size(), e[i].size());
            for (std::size_t q = i; q > p; --q) chain = chain * jac[q];
            sum += chain * e[p];
        }
        r.push_back(std::move(sum));
    }
    return r;
}

PropagationReport propagation_report(const LannModel& g) {
    PropagationReport report;
    report.expected_errors = expected_neuron_errors(g);
    report.jacobians = all_jacobians(g.base, g.distributions);
    report.amplification = amplification(g.base, g.distributions);
    report.accumulation = error_accumulation(g);
    report.output_dim = g.base.output_dim();
    return report;
}

nlohmann::json to_json(const PropagationReport& report) {
    auto vecs = [](const std::vector<Eigen::VectorXd>& v) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& x : v) out.push_back(std::vector<double>(x.data(), x.data() + x.size()));
        return out;
    };
    nlohmann::json jac = nlohmann::json::array();
    for (const auto& m : report.jacobians) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(m.cols()));
            for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
            rows.push_back(row);
        }
        jac.push_back(rows);
    }
    return {{"expected_errors", vecs(report.expected_errors)},
            {"expected_jacobians", jac},
            {"amplification", vecs(report.amplification)},
            {"accumulation", vecs(report.accumulation)},
            {"output_dim", report.output_dim}};
}

void save_propagation_csv(const PropagationReport& report, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.header({"layer", "index", "expected_error", "amplification", "accumulation"});
    for (std::size_t i = 0; i < report.expected_errors.size(); ++i)
        for (Eigen::Index j = 0; j < report.expected_errors[i].size(); ++j)
            out.row() << static_cast<int>(i + 1) << static_cast<int>(j) << report.expected_errors[i](j)
                      << report.amplification[i](j) << report.accumulation[i](j);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 finaliser over the combined value.
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

AblationResult ablation_flip_rate(const DenseNetwork& net, int layer, double fraction, int trials,
                                  const Eigen::MatrixXd& features, std::uint64_t seed) {
    if (layer < 0 || layer >= net.depth()) throw ConfigError("layer " + std::to_string(layer) + " out of range");
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("ablation fraction must lie in (0, 1)");
    if (trials < 1) throw ConfigError("ablation needs at least one trial");
    if (features.rows() == 0) throw ConfigError("ablation over an empty dataset");
    const int m = net.width(layer);
    // Guard against 0.1 * 30 = 3.0000000000000004 rounding up to 4.
    const int count = static_cast<int>(std::ceil(fraction * m - 1e-9));
    if (count < 1) throw ConfigError("ablation fraction selects zero neurons");

    const auto baseline = predict(net, features);
    AblationResult result;
    result.layer = layer;
    result.ablated = count;
    result.trial_rates.assign(static_cast<std::size_t>(trials), 0.0);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        std::mt19937_64 rng(derive_seed(seed, t));
        std::vector<int> idx(static_cast<std::size_t>(m));
        std::iota(idx.begin(), idx.end(), 0);
        for (int k = 0; k < count; ++k) {
            std::uniform_int_distribution<int> pick(k, m - 1);
            std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
        }
        idx.resize(static_cast<std::size_t>(count));
        const auto pred = predict(ablate(net, layer, idx), features);
        std::size_t flipped = 0;
        for (std::size_t r = 0; r < pred.size(); ++r) flipped += pred[r] != baseline[r];
        result.trial_rates[t] = static_cast<double>(flipped) / static_cast<double>(pred.size());
    });
    result.mean_rate = std::accumulate(result.trial_rates.begin(), result.trial_rates.end(), 0.0) / trials;
    return result;
}

void save_ablation_csv(const std::vector<AblationResult>& results, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.header({"layer", "trial", "flip_rate"});
    for (const auto& r : results)
        for (std::size_t t = 0; t < r.trial_rates.size(); ++t)
            out.row() << r.layer + 1 << static_cast<int>(t) << r.trial_rates[t];
}

}  // namespace lannlab
