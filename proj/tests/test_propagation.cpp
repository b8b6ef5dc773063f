#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "lannlab/error.hpp"
#include "lannlab/propagation.hpp"
#include "test_util.hpp"

using namespace lannlab;
using lannlab::testing::random_lann;
using lannlab::testing::random_net;
using lannlab::testing::random_points;

namespace {

const Activation tanh_act(ActivationKind::tanh);

LannModel fitted_lann(const DenseNetwork& net, const Eigen::MatrixXd& x, int max_pieces, std::uint64_t seed) {
    auto g = random_lann(net, max_pieces, seed);
    g.distributions = fit_distributions(net, x, 200, static_cast<std::size_t>(x.rows()), seed);
    return g;
}

}  // namespace

TEST(Jacobian, ZeroWeightsGiveZero) {
    auto net = random_net(3, {4}, 2, tanh_act, 1);
    net.hidden[0].weights.setZero();
    const auto d = fit_distributions(net, random_points(50, 3, -1, 1, 2), 100, 50, 0);
    EXPECT_EQ(expected_jacobian(net, 0, d).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Jacobian, MassAtZeroGivesAbsoluteWeights) {
    const auto net = random_net(3, {4}, 2, tanh_act, 1);
    LayerDistributions d(1);
    std::vector<double> w(201, 0.0);
    w[100] = 1.0;
    for (int j = 0; j < 4; ++j) d[0].push_back(NeuronDistribution::from_weights(tanh_act, w));
    const auto jac = expected_jacobian(net, 0, d);
    EXPECT_LE((jac - net.hidden[0].weights.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Jacobian, MatchesMonteCarloOverFittedDensities) {
    const auto net = random_net(2, {6, 5}, 2, tanh_act, 3, 0.8);
    const auto d = fit_distributions(net, random_points(3000, 2, -2, 2, 4), 200, 3000, 5);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 2; ++i) {
        const auto& layer = d[static_cast<std::size_t>(i)];
        const auto& v = net.hidden[static_cast<std::size_t>(i)].weights;
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            const auto& dist = layer[static_cast<std::size_t>(r)];
            std::discrete_distribution<int> cell(dist.weights().begin(), dist.weights().end());
            double mean = 0.0;
            for (int n = 0; n < 100000; ++n) {
                const double y = dist.grid()[static_cast<std::size_t>(cell(rng))];
                mean += 1.0 - y * y;
            }
            mean /= 100000.0;
            const auto jac = expected_jacobian(net, i, d);
            for (Eigen::Index c = 0; c < v.cols(); ++c) {
                const double mc = mean * std::abs(v(r, c));
                EXPECT_NEAR(jac(r, c), mc, 0.05 * mc) << "layer " << i << " (" << r << "," << c << ")";
            }
        }
    }
}

TEST(Amplification, SingleLayerIsScaledColumnSum) {
    const auto net = random_net(3, {5}, 3, tanh_act, 2);
    const auto d = fit_distributions(net, random_points(100, 3, -1, 1, 3), 100, 100, 0);
    const auto w = amplification(net, d);
    ASSERT_EQ(w.size(), 1u);
    const Eigen::VectorXd expected = net.output.weights.cwiseAbs().colwise().sum().transpose() / 3.0;
    EXPECT_LE((w[0] - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Amplification, ScalesWithJacobianPowers) {
    // Scaling every hidden |V_q| by t scales E|J_q| by t, so layer i picks up t^(L - i).
    const auto net = random_net(2, {3, 4, 3}, 2, tanh_act, 4);
    const auto d = fit_distributions(net, random_points(200, 2, -1, 1, 5), 100, 200, 0);
    auto scaled = net;
    const double t = 1.7;
    for (auto& layer : scaled.hidden) layer.weights *= t;
    const auto w = amplification(net, d);
    const auto ws = amplification(scaled, d);
    for (int i = 0; i < 3; ++i) {
        const double factor = std::pow(t, 2 - i);
        EXPECT_LE((ws[static_cast<std::size_t>(i)] - factor * w[static_cast<std::size_t>(i)]).cwiseAbs().maxCoeff(),
                  1e-12 * factor * w[static_cast<std::size_t>(i)].maxCoeff());
    }
}

TEST(Accumulation, RecursionEqualsExpandedSum) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto net = random_net(2, {5, 4, 6, 3}, 3, tanh_act, s, 0.9);
        const auto g = fitted_lann(net, random_points(800, 2, -2, 2, s + 10), 4, s);
        const auto r = error_accumulation(g);
        const auto rx = error_accumulation_expanded(g);
        ASSERT_EQ(r.size(), rx.size());
        for (std::size_t i = 0; i < r.size(); ++i) EXPECT_LE((r[i] - rx[i]).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Accumulation, AmplifiedErrorsSumToOutputAccumulation) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto net = random_net(3, {4, 7, 5}, 4, tanh_act, s + 20, 0.9);
        const auto g = fitted_lann(net, random_points(600, 3, -2, 2, s), 3, s);
        const auto report = propagation_report(g);
        double lhs = 0.0;
        for (std::size_t i = 0; i < report.amplification.size(); ++i)
            lhs += report.amplification[i].dot(report.expected_errors[i]);
        const double rhs = (net.output.weights.cwiseAbs() * report.accumulation.back()).sum() / net.output_dim();
        EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(rhs)));
        for (const auto& w : report.amplification) EXPECT_GE(w.minCoeff(), 0.0);
    }
}

TEST(Accumulation, ExactApproximationAccumulatesNothing) {
    const Activation id(ActivationKind::identity);
    const auto net = random_net(2, {3, 3}, 2, id, 5);
    auto g = LannModel::fresh(net);
    g.distributions = fit_distributions(net, random_points(100, 2, -1, 1, 6), 50, 100, 0);
    for (const auto& r : error_accumulation(g)) EXPECT_EQ(r.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Accumulation, SingleLayerIsItsOwnErrorAndMatchesSamples) {
    const auto net = random_net(2, {8}, 2, tanh_act, 7, 0.5);
    const auto x = random_points(20000, 2, -1, 1, 8);
    const auto g = fitted_lann(net, x, 3, 9);
    const auto r = error_accumulation(g);
    const auto e = expected_neuron_errors(g);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0], e[0]);
    // Sample mean of |h'_1 - h_1| agrees with the grid estimate while the
    // pre-activations stay inside the grid's preimage range.
    const Eigen::MatrixXd z = (x * net.hidden[0].weights.transpose()).rowwise() + net.hidden[0].bias.transpose();
    ASSERT_LT(z.cwiseAbs().maxCoeff(), 2.9);
    for (int j = 0; j < 8; ++j) {
        double mean = 0.0;
        for (Eigen::Index n = 0; n < z.rows(); ++n)
            mean += std::abs(std::tanh(z(n, j)) - g.fn({0, j}).evaluate(z(n, j)));
        mean /= static_cast<double>(z.rows());
        if (mean < 1e-4) continue;
        EXPECT_NEAR(e[0](j), mean, 0.1 * mean) << "neuron " << j;
    }
}

TEST(Propagation, RequiresDistributions) {
    const auto g = LannModel::fresh(random_net(2, {3}, 2, tanh_act, 1));
    EXPECT_THROW(expected_neuron_errors(g), ConfigError);
    EXPECT_THROW(expected_jacobian(g.base, 0, LayerDistributions{}), ConfigError);
    EXPECT_THROW(expected_jacobian(g.base, 1, LayerDistributions{}), ConfigError);
}

TEST(Propagation, CsvAndJsonShapes) {
    const auto net = random_net(2, {3, 2}, 2, tanh_act, 2);
    const auto report = propagation_report(fitted_lann(net, random_points(200, 2, -1, 1, 3), 2, 4));
    lannlab::testing::TempDir dir("prop");
    save_propagation_csv(report, dir / "p.csv");
    const auto text = lannlab::testing::slurp(dir / "p.csv");
    EXPECT_EQ(text.substr(0, text.find('\n')), "layer,index,expected_error,amplification,accumulation");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
    const auto j = to_json(report);
    EXPECT_EQ(j["expected_jacobians"][1].size(), 2u);
    EXPECT_EQ(j["expected_jacobians"][1][0].size(), 3u);
    EXPECT_EQ(j["output_dim"], 2);
}

TEST(Ablation, DeadNeuronNeverFlips) {
    auto net = random_net(2, {10}, 3, tanh_act, 11);
    for (Eigen::Index j = 1; j < 10; ++j) net.output.weights.col(j).setZero();
    // Only neuron 0 matters; ablating one neuron flips rows only when it is 0.
    const auto x = random_points(500, 2, -2, 2, 12);
    const auto res = ablation_flip_rate(net, 0, 0.1, 40, x, 3);
    EXPECT_EQ(res.ablated, 1);
    int zero_trials = 0;
    for (double r : res.trial_rates) zero_trials += r == 0.0;
    EXPECT_GT(zero_trials, 20);
    EXPECT_LT(zero_trials, 40);
}

TEST(Ablation, WholeLayerGivesConstantPrediction) {
    const auto net = random_net(2, {2, 3}, 3, tanh_act, 13);
    const auto x = random_points(700, 2, -2, 2, 14);
    const auto res = ablation_flip_rate(net, 1, 0.99, 3, x, 5);
    EXPECT_EQ(res.ablated, 3);
    const auto base = predict(net, x);
    const auto dead = predict(ablate(net, 1, std::vector<int>{0, 1, 2}), x);
    EXPECT_EQ(std::set<int>(dead.begin(), dead.end()).size(), 1u);
    double expected = 0.0;
    for (std::size_t r = 0; r < base.size(); ++r) expected += base[r] != dead[r];
    expected /= static_cast<double>(base.size());
    for (double r : res.trial_rates) EXPECT_EQ(r, expected);
}

TEST(Ablation, DeterministicAndValidated) {
    const auto net = random_net(2, {20}, 2, tanh_act, 15);
    const auto x = random_points(300, 2, -2, 2, 16);
    EXPECT_EQ(ablation_flip_rate(net, 0, 0.1, 10, x, 7).trial_rates,
              ablation_flip_rate(net, 0, 0.1, 10, x, 7).trial_rates);
    EXPECT_EQ(ablation_flip_rate(net, 0, 0.1, 10, x, 7).ablated, 2);
    EXPECT_THROW(ablation_flip_rate(net, 0, 0.0, 10, x, 7), ConfigError);
    EXPECT_EQ(ablation_flip_rate(net, 0, 0.01, 10, x, 7).ablated, 1);
    EXPECT_THROW(ablation_flip_rate(net, 1, 0.1, 10, x, 7), ConfigError);
    EXPECT_THROW(ablation_flip_rate(net, 0, 0.1, 0, x, 7), ConfigError);
}

TEST(DeriveSeed, DistinctStreams) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t base : {0ULL, 1ULL, 42ULL})
        for (std::uint64_t s = 0; s < 100; ++s) seen.insert(derive_seed(base, s));
    EXPECT_EQ(seen.size(), 300u);
    EXPECT_EQ(derive_seed(5, 6), derive_seed(5, 6));
}
