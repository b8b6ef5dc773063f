#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "lannlab/dataset.hpp"
#include "lannlab/error.hpp"
#include "lannlab/lann.hpp"
#include "test_util.hpp"

using namespace lannlab;
using lannlab::testing::random_lann;
using lannlab::testing::random_net;
using lannlab::testing::random_points;

namespace {

const Activation tanh_act(ActivationKind::tanh);
const Activation identity_act(ActivationKind::identity);

ActivationPattern pattern_of(const LannModel& g, const Eigen::VectorXd& x) { return lann_forward(g, x).pattern; }

}  // namespace

TEST(Lann, FreshMatchesBaseAtOriginWithZeroBiases) {
    auto net = random_net(3, {4, 5}, 2, tanh_act, 1);
    for (auto& l : net.hidden) l.bias.setZero();
    const auto g = LannModel::fresh(net);
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
    EXPECT_EQ(lann_forward(g, x).logits, forward(net, x).logits);
    EXPECT_EQ(g.total_pieces(), 9);
    ASSERT_EQ(g.approx.size(), 2u);
    EXPECT_EQ(g.approx[1].size(), 5u);
}

TEST(Lann, IdentityBaseIsReproducedExactly) {
    const auto net = random_net(2, {6, 3}, 2, identity_act, 2);
    const auto g = LannModel::fresh(net);
    const auto x = random_points(200, 2, -5, 5, 3);
    EXPECT_EQ(lann_logits_batch(g, x), logits_batch(net, x));
}

TEST(Lann, LogitsMatchRegionLinearMap) {
    const auto net = random_net(2, {8, 8}, 2, tanh_act, 4);
    const auto g = random_lann(net, 4, 5);
    const auto x = random_points(1000, 2, -3, 3, 6);
    const auto batch = lann_logits_batch(g, x);
    std::map<std::vector<std::vector<int>>, AffineMap> seen;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Eigen::VectorXd xr = x.row(r).transpose();
        const auto fwd = lann_forward(g, xr);
        const auto map = region_linear_map(g, fwd.pattern);
        const Eigen::VectorXd via_map = map.weights * xr + map.bias;
        EXPECT_LE((via_map - fwd.logits).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LE((batch.row(r).transpose() - fwd.logits).cwiseAbs().maxCoeff(), 1e-12);
        // Equal patterns give equal maps.
        const auto [it, fresh] = seen.emplace(fwd.pattern.pieces, map);
        if (!fresh) {
            EXPECT_EQ(it->second.weights, map.weights);
            EXPECT_EQ(it->second.bias, map.bias);
        }
    }
    EXPECT_GT(seen.size(), 1u);
}

TEST(Lann, FreshIsGloballyLinear) {
    const auto net = random_net(3, {5, 4}, 2, tanh_act, 7);
    const auto g = LannModel::fresh(net);
    const auto x = random_points(300, 3, -10, 10, 8);
    const auto map = region_linear_map(g, pattern_of(g, x.row(0).transpose()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Eigen::VectorXd xr = x.row(r).transpose();
        EXPECT_LE((map.weights * xr + map.bias - lann_forward(g, xr).logits).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Lann, OneTwoPieceNeuronGivesTwoMaps) {
    const auto net = random_net(2, {3}, 2, tanh_act, 9);
    auto g = LannModel::fresh(net);
    g.approx[0][1] = g.approx[0][1].insert_tangent(1.5);
    const auto x = random_points(2000, 2, -6, 6, 10);
    std::map<std::vector<std::vector<int>>, AffineMap> maps;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const auto p = pattern_of(g, x.row(r).transpose());
        maps.emplace(p.pieces, region_linear_map(g, p));
    }
    ASSERT_EQ(maps.size(), 2u);
    EXPECT_NE(maps.begin()->second.weights, std::next(maps.begin())->second.weights);
}

TEST(Lann, RegionMapAgreesWithSamplesInThatRegion) {
    const auto net = random_net(2, {4, 3}, 2, tanh_act, 11);
    const auto g = random_lann(net, 3, 12);
    const auto x = random_points(20000, 2, -4, 4, 13);
    std::map<std::vector<std::vector<int>>, std::vector<Eigen::Index>> members;
    for (Eigen::Index r = 0; r < x.rows(); ++r) members[pattern_of(g, x.row(r).transpose()).pieces].push_back(r);
    // The most populated region collects at least 100 samples.
    const auto biggest = std::max_element(members.begin(), members.end(), [](const auto& a, const auto& b) {
        return a.second.size() < b.second.size();
    });
    ASSERT_GE(biggest->second.size(), 100u);
    const auto map = region_linear_map(g, ActivationPattern{biggest->first});
    for (std::size_t k = 0; k < 100; ++k) {
        const Eigen::VectorXd xr = x.row(biggest->second[k]).transpose();
        EXPECT_LE((map.weights * xr + map.bias - lann_forward(g, xr).logits).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(ApproximationError, ExactAndRowDoubling) {
    const auto net = random_net(2, {5}, 3, identity_act, 3);
    const auto data = make_moons(100, 0.1, 1);
    EXPECT_EQ(approximation_error(LannModel::fresh(net), net, data), 0.0);

    const auto tnet = random_net(2, {5, 5}, 3, tanh_act, 3);
    const auto g = random_lann(tnet, 3, 4);
    Eigen::MatrixXd doubled(200, 2);
    doubled << data.features(), data.features();
    std::vector<int> labels = data.labels();
    labels.insert(labels.end(), data.labels().begin(), data.labels().end());
    EXPECT_NEAR(approximation_error(g, tnet, data), approximation_error(g, tnet, LabeledDataset(doubled, labels)),
                1e-14);
}

TEST(NextTangent, SymmetricTieGoesToSmallerPreactivation) {
    std::vector<double> w(200);
    for (int q = 0; q < 200; ++q) {
        const double y = -0.995 + 0.01 * q;
        w[static_cast<std::size_t>(q)] = std::exp(-8 * y * y);
    }
    for (int q = 0; q < 100; ++q) w[static_cast<std::size_t>(199 - q)] = w[static_cast<std::size_t>(q)];
    const auto d = NeuronDistribution::from_weights(tanh_act, w);
    const auto fn = PiecewiseLinearFn::initial(tanh_act);
    const auto best = next_tangent_point(fn, d);
    ASSERT_TRUE(best.has_value());
    EXPECT_LT(best->point, 0.0);
    const double mirrored = expected_error(fn.insert_tangent(-best->point), d);
    EXPECT_NEAR(mirrored, best->error_after, 1e-15);
}

TEST(NextTangent, MatchesIndependentCandidateScan) {
    std::mt19937_64 rng(3);
    std::gamma_distribution<double> gamma(0.5, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> w(200);
        for (double& v : w) v = gamma(rng);
        const auto d = NeuronDistribution::from_weights(tanh_act, w);
        const auto fn = PiecewiseLinearFn::from_tangent_points(tanh_act, {-0.7, 0.0, 1.2});
        // Own expected-error sum over the grid, own argmin with strict '<'.
        auto own_error = [&](const PiecewiseLinearFn& l) {
            double s = 0.0;
            for (int q = 0; q < 200; ++q) {
                const double y = d.grid()[static_cast<std::size_t>(q)];
                s += d.weights()[static_cast<std::size_t>(q)] * std::abs(l.evaluate(std::atanh(y)) - y);
            }
            return s;
        };
        const double before = own_error(fn);
        double best_err = INFINITY, best_p = 0.0;
        for (int q = 0; q < 200; ++q) {
            const double p = std::atanh(d.grid()[static_cast<std::size_t>(q)]);
            if (fn.has_tangent_near(p)) continue;
            const double e = own_error(fn.insert_tangent(p));
            if (e < best_err) {
                best_err = e;
                best_p = p;
            }
        }
        const auto got = next_tangent_point(fn, d);
        ASSERT_TRUE(got.has_value());
        EXPECT_EQ(got->point, best_p);
        EXPECT_NEAR(got->gain, before - best_err, 1e-12);
    }
}

TEST(NextTangent, IdentityHasNoGain) {
    const auto d = NeuronDistribution::from_weights(identity_act, std::vector<double>(20, 1.0), -2, 2);
    const auto got = next_tangent_point(PiecewiseLinearFn::initial(identity_act), d);
    if (got) {
        EXPECT_EQ(got->gain, 0.0);
    }
}

TEST(Build, IdentityFixtureStopsImmediately) {
    const auto net = random_net(2, {4, 3}, 2, identity_act, 1);
    const auto data = make_moons(100, 0.1, 1);
    std::vector<std::vector<NeuronDistribution>> dists;
    for (int w : net.widths())
        dists.emplace_back(static_cast<std::size_t>(w),
                           NeuronDistribution::from_weights(identity_act, std::vector<double>(10, 1.0), -1, 1));
    const auto r = build_lann(net, data, BuildConfig{}, dists);
    ASSERT_EQ(r.trace.rows.size(), 1u);
    EXPECT_EQ(r.trace.rows[0].iteration, 0);
    EXPECT_EQ(r.trace.rows[0].error, 0.0);
    EXPECT_EQ(r.trace.rows[0].total_pieces, 7);
    EXPECT_TRUE(r.trace.converged);
}

TEST(Build, TraceAccountingAndTermination) {
    const auto net = random_net(2, {6, 6}, 2, tanh_act, 5, 1.5);
    const auto data = make_moons(300, 0.1, 2);
    BuildConfig cfg;
    cfg.lambda = 0.02;
    cfg.batch = 3;
    const auto r = build_lann(net, data, cfg);
    const auto& rows = r.trace.rows;
    ASSERT_GE(rows.size(), 2u);
    for (std::size_t t = 1; t < rows.size(); ++t) {
        EXPECT_EQ(rows[t].iteration, static_cast<int>(t));
        EXPECT_EQ(rows[t].total_pieces - rows[t - 1].total_pieces, rows[t].updated);
        EXPECT_LE(rows[t].updated, cfg.batch);
        EXPECT_GE(rows[t].updated, 1);
    }
    EXPECT_EQ(rows.back().total_pieces, r.model.total_pieces());
    EXPECT_NEAR(rows.back().error, approximation_error(r.model, net, data), 1e-12);
    if (r.trace.converged) {
        EXPECT_LE(rows.back().error, cfg.lambda);
    }
    // Weights are carried over bit for bit.
    EXPECT_TRUE(r.model.base == net);
    // Same inputs, same result.
    const auto again = build_lann(net, data, cfg);
    EXPECT_EQ(again.trace.errors(), r.trace.errors());
    for (std::size_t i = 0; i < r.model.approx.size(); ++i) EXPECT_EQ(again.model.approx[i], r.model.approx[i]);
}

TEST(Build, StopReasons) {
    const auto net = random_net(2, {6, 6}, 2, tanh_act, 5, 1.5);
    const auto data = make_moons(300, 0.1, 2);
    BuildConfig cfg;
    cfg.lambda = 1e-9;
    cfg.max_iterations = 3;
    const auto capped = build_lann(net, data, cfg);
    EXPECT_FALSE(capped.trace.converged);
    EXPECT_EQ(capped.trace.stop_reason, "iteration limit");
    EXPECT_EQ(capped.trace.rows.size(), 4u);
    cfg.lambda = 1e6;
    const auto easy = build_lann(net, data, cfg);
    EXPECT_TRUE(easy.trace.converged);
    EXPECT_EQ(easy.trace.rows.size(), 1u);
    cfg = {};
    cfg.batch = 0;
    EXPECT_THROW(build_lann(net, data, cfg), ConfigError);
    cfg = {};
    cfg.lambda = 0;
    EXPECT_THROW(build_lann(net, data, cfg), ConfigError);
}

TEST(Build, EvaluationCostScalesWithDatasetSize) {
    const auto net = random_net(2, {32, 64, 16}, 2, tanh_act, 5);
    const auto g = random_lann(net, 6, 2);
    const auto small = make_moons(4000, 0.1, 1);
    const auto large = make_moons(8000, 0.1, 1);
    auto best_time = [&](const LabeledDataset& d) {
        double best = INFINITY;
        for (int rep = 0; rep < 7; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            volatile double e = approximation_error(g, net, d);
            (void)e;
            best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        return best;
    };
    const double ratio = best_time(large) / best_time(small);
    EXPECT_GE(ratio, 1.5);
    EXPECT_LE(ratio, 3.0);
}

TEST(LannIo, RoundTripIsBitStable) {
    const auto net = random_net(2, {5, 4}, 2, tanh_act, 3, 1.2);
    const auto data = make_moons(200, 0.1, 3);
    BuildConfig cfg;
    cfg.lambda = 0.05;
    const auto built = build_lann(net, data, cfg);
    lannlab::testing::TempDir dir("lannio");
    save_lann(built, dir / "g.json");
    const auto back = load_lann(dir / "g.json");
    save_lann(back, dir / "g2.json");
    EXPECT_EQ(lannlab::testing::slurp(dir / "g.json"), lannlab::testing::slurp(dir / "g2.json"));
    EXPECT_TRUE(back.model.base == built.model.base);
    EXPECT_EQ(back.trace.errors(), built.trace.errors());
    EXPECT_EQ(back.trace.converged, built.trace.converged);
    const Eigen::MatrixXd a = lann_logits_batch(built.model, data.features());
    const Eigen::MatrixXd b = lann_logits_batch(back.model, data.features());
    EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())));
    for (std::size_t i = 0; i < back.model.distributions.size(); ++i)
        for (std::size_t j = 0; j < back.model.distributions[i].size(); ++j)
            EXPECT_EQ(back.model.distributions[i][j].weights(), built.model.distributions[i][j].weights());

    save_trace_csv(built.trace, dir / "t.csv");
    const auto trace = load_trace_csv(dir / "t.csv");
    EXPECT_EQ(trace.errors(), built.trace.errors());
    ASSERT_EQ(trace.rows.size(), built.trace.rows.size());
    EXPECT_EQ(trace.rows.back().total_pieces, built.trace.rows.back().total_pieces);
}

TEST(LannIo, MalformedFiles) {
    lannlab::testing::TempDir dir("lannio_err");
    EXPECT_THROW(load_lann(dir / "none.json"), IoError);
    {
        std::ofstream(dir / "bad.json") << "{\"model\": 3}";
        std::ofstream(dir / "bad.csv") << "iteration,K,E\n0,5,zz\n";
    }
    EXPECT_ANY_THROW(load_lann(dir / "bad.json"));
    EXPECT_THROW(load_trace_csv(dir / "bad.csv"), ParseError);
}
