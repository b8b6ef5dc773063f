#include "lannlab/lann.hpp"

#include <algorithm>
#include <cmath>

#include "lannlab/error.hpp"
#include "lannlab/parallel.hpp"

namespace lannlab {

LannModel LannModel::fresh(const DenseNetwork& base) {
    base.validate();
    LannModel g;
    g.base = base;
    g.approx.resize(static_cast<std::size_t>(base.depth()));
    for (int i = 0; i < base.depth(); ++i)
        g.approx[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(base.width(i)),
                                                     PiecewiseLinearFn::initial(base.activation));
    return g;
}

long long LannModel::total_pieces() const {
    long long k = 0;
    for (const auto& layer : approx)
        for (const auto& fn : layer) k += fn.piece_count();
    return k;
}

void LannModel::validate() const {
    base.validate();
    if (static_cast<int>(approx.size()) != base.depth()) throw ConfigError("approximation layer count mismatch");
    for (int i = 0; i < base.depth(); ++i) {
        const auto& layer = approx[static_cast<std::size_t>(i)];
        if (static_cast<int>(layer.size()) != base.width(i))
            throw ConfigError("layer " + std::to_string(i) + " needs one approximation per neuron");
        for (const auto& fn : layer)
            if (fn.activation() != base.activation) throw ConfigError("approximation activation mismatch");
    }
    if (!distributions.empty()) {
        if (static_cast<int>(distributions.size()) != base.depth()) throw ConfigError("distribution layer count mismatch");
        for (int i = 0; i < base.depth(); ++i)
            if (static_cast<int>(distributions[static_cast<std::size_t>(i)].size()) != base.width(i))
                throw ConfigError("layer " + std::to_string(i) + " needs one distribution per neuron");
    }
}

LannForward lann_forward(const LannModel& g, const Eigen::VectorXd& x) {
    const auto& net = g.base;
    if (x.size() != net.input_dim)
        throw ConfigError("input has length " + std::to_string(x.size()) + ", network expects " +
                          std::to_string(net.input_dim));
    LannForward out;
    out.pattern.pieces.resize(net.hidden.size());
    const Eigen::VectorXd* prev = &x;
    for (std::size_t i = 0; i < net.hidden.size(); ++i) {
        Eigen::VectorXd h = net.hidden[i].weights * *prev + net.hidden[i].bias;
        auto& pieces = out.pattern.pieces[i];
        pieces.resize(static_cast<std::size_t>(h.size()));
        for (Eigen::Index j = 0; j < h.size(); ++j) {
            const auto& fn = g.approx[i][static_cast<std::size_t>(j)];
            const int s = fn.active_index(h(j));
            pieces[static_cast<std::size_t>(j)] = s;
            h(j) = fn.slopes()[static_cast<std::size_t>(s)] * h(j) + fn.intercepts()[static_cast<std::size_t>(s)];
        }
        out.hidden.push_back(std::move(h));
        prev = &out.hidden.back();
    }
    out.logits = net.output.weights * *prev + net.output.bias;
    return out;
}

BatchForward lann_forward_batch(const LannModel& g, const Eigen::MatrixXd& features) {
    const auto& net = g.base;
    if (features.cols() != net.input_dim)
        throw ConfigError("features have " + std::to_string(features.cols()) + " columns, network expects " +
                          std::to_string(net.input_dim));
    BatchForward out;
    const Eigen::MatrixXd* prev = &features;
    for (std::size_t i = 0; i < net.hidden.size(); ++i) {
        Eigen::MatrixXd h = *prev * net.hidden[i].weights.transpose();
        h.rowwise() += net.hidden[i].bias.transpose();
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
            const auto& fn = g.approx[i][static_cast<std::size_t>(j)];
            if (fn.piece_count() == 1) {
                h.col(j) = (h.col(j).array() * fn.slopes()[0] + fn.intercepts()[0]).matrix();
                continue;
            }
            for (Eigen::Index r = 0; r < h.rows(); ++r) h(r, j) = fn.evaluate(h(r, j));
        }
        out.hidden.push_back(std::move(h));
        prev = &out.hidden.back();
    }
    out.logits = *prev * net.output.weights.transpose();
    out.logits.rowwise() += net.output.bias.transpose();
    return out;
}

Eigen::MatrixXd lann_logits_batch(const LannModel& g, const Eigen::MatrixXd& features) {
    return lann_forward_batch(g, features).logits;
}

AffineMap region_linear_map(const LannModel& g, const ActivationPattern& pattern) {
    const auto& net = g.base;
    if (pattern.pieces.size() != net.hidden.size()) throw ConfigError("pattern layer count mismatch");
    // Homogeneous coordinates: [W b] = [Vo bo] * prod_{i=L..1} (L_i * [V_i b_i; 0 1]).
    Eigen::MatrixXd acc(net.output_dim(), net.output.inputs() + 1);
    acc << net.output.weights, net.output.bias;
    for (int i = net.depth() - 1; i >= 0; --i) {
        const auto& layer = net.hidden[static_cast<std::size_t>(i)];
        const auto& pieces = pattern.pieces[static_cast<std::size_t>(i)];
        const auto m = layer.outputs();
        if (static_cast<Eigen::Index>(pieces.size()) != m) throw ConfigError("pattern width mismatch");
        Eigen::MatrixXd select = Eigen::MatrixXd::Zero(m + 1, m + 1);
        for (Eigen::Index j = 0; j < m; ++j) {
            const auto& fn = g.approx[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const int s = pieces[static_cast<std::size_t>(j)];
            if (s < 0 || s >= fn.piece_count())
                throw ConfigError("piece index " + std::to_string(s) + " invalid for neuron {" + std::to_string(i) +
                                  "," + std::to_string(j) + "}");
            select(j, j) = fn.slopes()[static_cast<std::size_t>(s)];
            select(j, m) = fn.intercepts()[static_cast<std::size_t>(s)];
        }
        select(m, m) = 1.0;
        Eigen::MatrixXd affine = Eigen::MatrixXd::Zero(m + 1, layer.inputs() + 1);
        affine.topLeftCorner(m, layer.inputs()) = layer.weights;
        affine.topRightCorner(m, 1) = layer.bias;
        affine(m, layer.inputs()) = 1.0;
        acc = acc * (select * affine);
    }
    return {acc.leftCols(net.input_dim), acc.col(net.input_dim)};
}

double mean_abs_logit_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ConfigError("logit matrices differ in shape");
    if (a.rows() == 0) throw ConfigError("approximation error over an empty dataset");
    return (a - b).cwiseAbs().mean();
}

double approximation_error(const LannModel& g, const DenseNetwork& f, const LabeledDataset& data) {
    if (g.base.input_dim != f.input_dim || g.base.output_dim() != f.output_dim())
        throw ConfigError("approximation and target network shapes differ");
    return mean_abs_logit_difference(lann_logits_batch(g, data.features()), logits_batch(f, data.features()));
}

std::optional<TangentProposal> next_tangent_point(const PiecewiseLinearFn& fn, const NeuronDistribution& dist) {
    const double current = expected_error(fn, dist);
    std::optional<TangentProposal> best;
    // Candidates ascend in pre-activation, so keeping the first strict
    // minimum breaks ties toward the smaller pre-activation.
    for (double p : dist.preimages()) {
        if (!std::isfinite(p) || fn.has_tangent_near(p)) continue;
        const double after = expected_error(fn.insert_tangent(p), dist);
        if (!best || after < best->error_after - 1e-15 * std::max(1.0, std::abs(best->error_after)))
            best = TangentProposal{p, current - after, after};
    }
    return best;
}

void BuildConfig::validate() const {
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (batch < 1) throw ConfigError("batch size b must be at least 1");
    if (grid_size < 1) throw ConfigError("n_t must be at least 1");
    if (max_iterations < 0) throw ConfigError("max iterations must be non-negative");
}

std::vector<double> BuildTrace::errors() const {
    std::vector<double> e;
    e.reserve(rows.size());
    for (const auto& r : rows) e.push_back(r.error);
    return e;
}

BuildResult build_lann(const DenseNetwork& f, const LabeledDataset& data, const BuildConfig& cfg) {
    cfg.validate();
    return build_lann(f, data, cfg, fit_distributions(f, data.features(), cfg.grid_size, cfg.sample_cap, cfg.seed));
}

BuildResult build_lann(const DenseNetwork& f, const LabeledDataset& data, const BuildConfig& cfg,
                       LayerDistributions distributions) {
    cfg.validate();
    f.validate();
    if (data.dim() != f.input_dim) throw ConfigError("dataset dimension does not match the network input");

    BuildResult result;
    result.model = LannModel::fresh(f);
    result.model.distributions = std::move(distributions);
    result.model.validate();
    if (!result.model.has_distributions()) throw ConfigError("build needs one distribution per hidden neuron");
    auto& g = result.model;
    auto& trace = result.trace;
    trace.config = cfg;

    // Evaluation rows for E(g; f); the reference logits are fixed.
    Eigen::MatrixXd eval_features;
    if (cfg.eval_subsample > 0 && static_cast<std::size_t>(data.size()) > cfg.eval_subsample) {
        const auto rows = sample_rows(data.size(), cfg.eval_subsample, cfg.seed + 1);
        eval_features.resize(static_cast<Eigen::Index>(rows.size()), data.dim());
        for (std::size_t i = 0; i < rows.size(); ++i)
            eval_features.row(static_cast<Eigen::Index>(i)) = data.features().row(rows[i]);
    } else {
        eval_features = data.features();
    }
    const Eigen::MatrixXd reference = logits_batch(f, eval_features);

    std::vector<NeuronId> ids;
    for (int i = 0; i < f.depth(); ++i)
        for (int j = 0; j < f.width(i); ++j) ids.push_back({i, j});
    std::vector<std::optional<TangentProposal>> proposals(ids.size());
    auto propose = [&](std::size_t k) {
        const auto id = ids[k];
        proposals[k] = next_tangent_point(
            g.fn(id), g.distributions[static_cast<std::size_t>(id.layer)][static_cast<std::size_t>(id.index)]);
    };
    parallel_for(ids.size(), propose);

    double error = mean_abs_logit_difference(lann_logits_batch(g, eval_features), reference);
    trace.rows.push_back({0, g.total_pieces(), error, 0});
    if (error <= cfg.lambda) {
        trace.converged = true;
        trace.stop_reason = "reached lambda";
        return result;
    }

    std::vector<std::size_t> order(ids.size());
    for (int iteration = 1; iteration <= cfg.max_iterations; ++iteration) {
        order.clear();
        for (std::size_t k = 0; k < ids.size(); ++k)
            if (proposals[k] && proposals[k]->gain > 0.0) order.push_back(k);
        if (order.empty()) {
            trace.stop_reason = "no positive gain";
            return result;
        }
        // ids are already in (layer, index) order, so a stable sort on gain
        // keeps that order among equal gains.
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return proposals[a]->gain > proposals[b]->gain; });
        if (order.size() > static_cast<std::size_t>(cfg.batch)) order.resize(static_cast<std::size_t>(cfg.batch));

        for (std::size_t k : order) {
            const auto id = ids[k];
            auto& fn = g.approx[static_cast<std::size_t>(id.layer)][static_cast<std::size_t>(id.index)];
            fn = fn.insert_tangent(proposals[k]->point);
        }
        parallel_for(order.size(), [&](std::size_t n) { propose(order[n]); });

        error = mean_abs_logit_difference(lann_logits_batch(g, eval_features), reference);
        trace.rows.push_back({iteration, g.total_pieces(), error, static_cast<int>(order.size())});
        if (error <= cfg.lambda) {
            trace.converged = true;
            trace.stop_reason = "reached lambda";
            return result;
        }
    }
    trace.stop_reason = "iteration limit";
    return result;
}

}  // namespace lannlab
