#include "lannlab/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>

#include "lannlab/error.hpp"
#include "lannlab/parallel.hpp"

namespace lannlab {

namespace {

// Kernel contributions beyond this many bandwidths are below e^-72 of the
// peak and are skipped.
constexpr double kernel_cutoff = 12.0;

// Midpoints per block of the kernel recurrence, and the largest grid step
// (in bandwidths) for which the recurrence stays clear of underflow.
constexpr std::size_t kde_block = 16;
constexpr double max_recurrence_delta = 0.5;

// Linear-interpolated quantile; reorders `values`.
double quantile_select(std::vector<double>& values, double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto nth = values.begin() + static_cast<std::ptrdiff_t>(lo);
    std::nth_element(values.begin(), nth, values.end());
    const double below = *nth;
    if (lo + 1 >= values.size()) return below;
    const double above = *std::min_element(nth + 1, values.end());
    return below + (pos - static_cast<double>(lo)) * (above - below);
}

}  // namespace

double rule_of_thumb_bandwidth(std::span<const double> samples, double floor) {
    const std::size_t n = samples.size();
    if (n == 0) throw ConfigError("bandwidth of an empty sample");
    double sd = 0.0;
    if (n > 1) {
        const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double x : samples) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / static_cast<double>(n - 1));
    }
    std::vector<double> scratch(samples.begin(), samples.end());
    const double q3 = quantile_select(scratch, 0.75);
    const double q1 = quantile_select(scratch, 0.25);
    const double spread = std::min(sd, (q3 - q1) / 1.34);
    const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    return std::max(h, floor);
}

NeuronDistribution::NeuronDistribution(Activation activation, double lo, double hi, std::vector<double> weights,
                                       double bandwidth, std::size_t sample_count)
    : activation_(activation), lo_(lo), hi_(hi), weights_(std::move(weights)), bandwidth_(bandwidth),
      sample_count_(sample_count) {
    if (weights_.empty()) throw ConfigError("distribution grid must be non-empty");
    if (!(hi_ > lo_) || !std::isfinite(lo_) || !std::isfinite(hi_)) throw ConfigError("invalid distribution range");
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("distribution weights must be finite and >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("distribution weights sum to zero");
    // Already-normalised weights are kept bit-exact so reloads reproduce them.
    if (std::abs(total - 1.0) > 1e-12)
        for (double& w : weights_) w /= total;

    const auto n = weights_.size();
    const double step = (hi_ - lo_) / static_cast<double>(n);
    grid_.resize(n);
    preimages_.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
        grid_[q] = lo_ + (static_cast<double>(q) + 0.5) * step;
        preimages_[q] = activation_.inverse(grid_[q]);
        if (weights_[q] > 0.0) support_.push_back(static_cast<int>(q));
    }
}

NeuronDistribution NeuronDistribution::from_weights(Activation activation, std::vector<double> weights) {
    if (!activation.bounded()) throw ConfigError("an unbounded activation needs an explicit grid range");
    return NeuronDistribution(activation, activation.range_lo(), activation.range_hi(), std::move(weights), 0.0, 0);
}

NeuronDistribution NeuronDistribution::from_weights(Activation activation, std::vector<double> weights, double lo,
                                                    double hi, double bandwidth, std::size_t sample_count) {
    if (activation.bounded() && (lo < activation.range_lo() || hi > activation.range_hi()))
        throw ConfigError("distribution range exceeds the activation's output range");
    return NeuronDistribution(activation, lo, hi, std::move(weights), bandwidth, sample_count);
}

int NeuronDistribution::cell_of(double y) const {
    const double pos = (y - lo_) / spacing();
    const double cell = std::floor(pos);
    if (!(cell >= 0.0)) return 0;
    return static_cast<int>(std::min(cell, static_cast<double>(grid_.size() - 1)));
}

NeuronDistribution NeuronDistribution::fit(Activation activation, std::span<const double> samples, int grid_size) {
    if (samples.empty()) throw ConfigError("cannot fit a distribution to an empty sample");
    if (grid_size < 1) throw ConfigError("grid size must be positive");
    double lo = activation.range_lo();
    double hi = activation.range_hi();
    if (activation.bounded()) {
        for (double y : samples)
            if (!(y >= lo && y <= hi)) throw ConfigError("sample outside the activation's output range");
    } else {
        // Unbounded fixtures: span the observed samples with a 5% margin.
        const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
        double span = *mx - *mn;
        if (!(span > 0.0)) span = 1.0;
        lo = *mn - 0.05 * span;
        hi = *mx + 0.05 * span;
    }

    const double h = rule_of_thumb_bandwidth(samples, 1e-6 * (hi - lo));
    const auto n_t = static_cast<std::size_t>(grid_size);
    const double step = (hi - lo) / static_cast<double>(n_t);
    const auto cell = [&](double y) {
        return static_cast<std::ptrdiff_t>(
            std::clamp(std::floor((y - lo) / step), 0.0, static_cast<double>(n_t - 1)));
    };

    // Samples grouped by grid cell; cells [first[c], first[c + 1]).
    std::vector<std::size_t> first(n_t + 1, 0);
    for (double x : samples) ++first[static_cast<std::size_t>(cell(x)) + 1];
    std::partial_sum(first.begin(), first.end(), first.begin());
    Eigen::ArrayXd grouped(static_cast<Eigen::Index>(samples.size()));
    {
        std::vector<std::size_t> fill(first.begin(), first.end() - 1);
        for (double x : samples) grouped[static_cast<Eigen::Index>(fill[static_cast<std::size_t>(cell(x))]++)] = x;
    }
    // Every sample within the kernel cutoff of [from, to], plus cell slack.
    const auto window = [&](double from, double to) {
        const auto c0 = static_cast<std::size_t>(cell(from - kernel_cutoff * h));
        const auto c1 = static_cast<std::size_t>(cell(to + kernel_cutoff * h));
        return std::pair{static_cast<Eigen::Index>(first[c0]), static_cast<Eigen::Index>(first[c1 + 1] - first[c0])};
    };
    const auto midpoint = [&](std::size_t g) { return lo + (static_cast<double>(g) + 0.5) * step; };

    // Unnormalised Gaussian sums at the grid midpoints. Blocks of midpoints
    // start from exact kernel values and advance by the exact ratio
    // exp(u delta - delta^2 / 2).
    const double delta = step / h;
    std::vector<double> density(n_t, 0.0);
    if (delta > max_recurrence_delta) {
        for (std::size_t g = 0; g < n_t; ++g) {
            const double c = midpoint(g);
            const auto [start, count] = window(c, c);
            if (count > 0) density[g] = (-0.5 * ((grouped.segment(start, count) - c) / h).square()).exp().sum();
        }
    } else {
        const double shrink = std::exp(-delta * delta);
        for (std::size_t g0 = 0; g0 < n_t; g0 += kde_block) {
            const std::size_t g1 = std::min(n_t, g0 + kde_block);
            const auto [start, count] = window(midpoint(g0), midpoint(g1 - 1));
            if (count == 0) continue;
            const Eigen::ArrayXd u = (grouped.segment(start, count) - midpoint(g0)) / h;
            Eigen::ArrayXd v = (-0.5 * u.square()).exp();
            Eigen::ArrayXd ratio = (u * delta - 0.5 * delta * delta).exp();
            for (std::size_t g = g0; g < g1; ++g) {
                density[g] = v.sum();
                v *= ratio;
                ratio *= shrink;
            }
        }
    }

    const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    double total = 0.0;
    for (double& d : density) {
        d *= norm * step;
        total += d;
    }
    if (!(total > 0.0)) {
        // Bandwidth far below the grid spacing: every kernel underflowed.
        // Use the h -> 0 limit, each sample's mass in its own cell.
        std::fill(density.begin(), density.end(), 0.0);
        for (double x : samples) density[static_cast<std::size_t>(cell(x))] += 1.0;
    }
    return NeuronDistribution(activation, lo, hi, std::move(density), h, samples.size());
}

double expected_error(const PiecewiseLinearFn& fn, const NeuronDistribution& dist) {
    if (fn.activation() != dist.activation())
        throw ConfigError("piecewise function and distribution use different activations");
    const auto& grid = dist.grid();
    const auto& pre = dist.preimages();
    const auto& w = dist.weights();
    double sum = 0.0;
    for (int q : dist.support()) {
        const auto i = static_cast<std::size_t>(q);
        sum += std::abs(fn.evaluate(pre[i]) - grid[i]) * w[i];
    }
    return sum;
}

double expected_abs_derivative(const NeuronDistribution& dist) {
    const auto act = dist.activation();
    double sum = 0.0;
    for (int q : dist.support()) {
        const auto i = static_cast<std::size_t>(q);
        sum += std::abs(act.derivative_from_output(dist.grid()[i])) * dist.weights()[i];
    }
    return sum;
}

double nonlinearity_score(const NeuronDistribution& dist) {
    const double centre = dist.activation()(0.0);
    double sum = 0.0;
    for (int q : dist.support()) {
        const auto i = static_cast<std::size_t>(q);
        sum += std::abs(dist.grid()[i] - centre) * dist.weights()[i];
    }
    return sum;
}

std::vector<Eigen::Index> sample_rows(Eigen::Index n, std::size_t cap, std::uint64_t seed) {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    if (cap == 0 || rows.size() <= cap) return rows;
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first `cap` entries become a uniform sample.
    for (std::size_t i = 0; i < cap; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
        std::swap(rows[i], rows[pick(rng)]);
    }
    rows.resize(cap);
    std::sort(rows.begin(), rows.end());
    return rows;
}

LayerDistributions fit_distributions(const DenseNetwork& net, const Eigen::MatrixXd& features, int grid_size,
                                     std::size_t sample_cap, std::uint64_t seed) {
    if (features.rows() == 0) throw ConfigError("cannot fit distributions on an empty dataset");
    const auto rows = sample_rows(features.rows(), sample_cap, seed);
    Eigen::MatrixXd sampled(static_cast<Eigen::Index>(rows.size()), features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) sampled.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    const auto fwd = forward_batch(net, sampled);

    std::vector<NeuronId> ids;
    for (int i = 0; i < net.depth(); ++i)
        for (int j = 0; j < net.width(i); ++j) ids.push_back({i, j});

    std::vector<std::optional<NeuronDistribution>> fitted(ids.size());
    parallel_for(ids.size(), [&](std::size_t k) {
        const auto [layer, j] = ids[k];
        const Eigen::VectorXd col = fwd.hidden[static_cast<std::size_t>(layer)].col(j);
        fitted[k] = NeuronDistribution::fit(net.activation, std::span<const double>(col.data(), col.size()), grid_size);
    });

    LayerDistributions out(static_cast<std::size_t>(net.depth()));
    std::size_t k = 0;
    for (int i = 0; i < net.depth(); ++i) {
        out[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(net.width(i)));
        for (int j = 0; j < net.width(i); ++j) out[static_cast<std::size_t>(i)].push_back(std::move(*fitted[k++]));
    }
    return out;
}

nlohmann::json to_json(const NeuronDistribution& dist) {
    return {
        {"activation", std::string(dist.activation().name())},
        {"lo", dist.lo()},
        {"hi", dist.hi()},
        {"bandwidth", dist.bandwidth()},
        {"sample_count", dist.sample_count()},
        {"weights", dist.weights()},
    };
}

NeuronDistribution distribution_from_json(const nlohmann::json& j) {
    try {
        return NeuronDistribution::from_weights(
            Activation::from_name(j.at("activation").get<std::string>()), j.at("weights").get<std::vector<double>>(),
            j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("bandwidth").get<double>(),
            j.at("sample_count").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed distribution JSON: ") + e.what());
    }
}

}  // namespace lannlab
