#include "lannlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lannlab/csv.hpp"
#include "lannlab/distribution.hpp"
#include "lannlab/error.hpp"

namespace lannlab {

std::string to_string(RegularizerKind kind) {
    switch (kind) {
        case RegularizerKind::none: return "none";
        case RegularizerKind::l1: return "l1";
        case RegularizerKind::l2: return "l2";
        case RegularizerKind::custom_l1: return "custom-l1";
        case RegularizerKind::prune: return "prune";
    }
    return "none";
}

RegularizerKind regularizer_from_name(const std::string& name) {
    for (auto kind : {RegularizerKind::none, RegularizerKind::l1, RegularizerKind::l2, RegularizerKind::custom_l1,
                      RegularizerKind::prune})
        if (to_string(kind) == name) return kind;
    throw ConfigError("unknown regularizer '" + name + "' (expected none, l1, l2, custom-l1 or prune)");
}

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (!(penalty >= 0.0) || !std::isfinite(penalty)) throw ConfigError("penalty must be finite and non-negative");
    if (regularizer == RegularizerKind::prune) {
        if (!(prune_percent > 0.0 && prune_percent <= 50.0)) throw ConfigError("prune percent must lie in (0, 50]");
        if (prune_period < 1) throw ConfigError("prune period must be at least 1");
    }
    if (refresh_period < 1) throw ConfigError("refresh period must be at least 1");
    if (grid_size < 1) throw ConfigError("n_t must be at least 1");
    if (accuracy_every < 1) throw ConfigError("accuracy interval must be at least 1");
}

nlohmann::json to_json(const TrainConfig& cfg) {
    return {{"epochs", cfg.epochs},
            {"learning_rate", cfg.learning_rate},
            {"batch_size", cfg.batch_size},
            {"seed", cfg.seed},
            {"regularizer", to_string(cfg.regularizer)},
            {"penalty", cfg.penalty},
            {"prune_percent", cfg.prune_percent},
            {"prune_period", cfg.prune_period},
            {"prune_per_layer", cfg.prune_per_layer},
            {"refresh_period", cfg.refresh_period},
            {"n_t", cfg.grid_size},
            {"sample_cap", cfg.sample_cap},
            {"accuracy_every", cfg.accuracy_every}};
}

double loss_and_gradient(const DenseNetwork& net, const Eigen::MatrixXd& features, std::span<const int> labels,
                         Gradients* grad) {
    const auto n = features.rows();
    if (n == 0 || static_cast<Eigen::Index>(labels.size()) != n) throw ConfigError("batch and labels differ in size");
    const auto fwd = forward_batch(net, features);
    const int c = net.output_dim();

    // Row-wise log-softmax with max shift.
    Eigen::MatrixXd prob = fwd.logits;
    double loss = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const double mx = prob.row(r).maxCoeff();
        prob.row(r).array() -= mx;
        const double lse = std::log(prob.row(r).array().exp().sum());
        const int y = labels[static_cast<std::size_t>(r)];
        if (y < 0 || y >= c) throw ConfigError("label " + std::to_string(y) + " outside the output range");
        loss -= prob(r, y) - lse;
        prob.row(r) = (prob.row(r).array() - lse).exp().matrix();
    }
    loss /= static_cast<double>(n);
    if (grad == nullptr) return loss;

    Eigen::MatrixXd delta = prob;
    for (Eigen::Index r = 0; r < n; ++r) delta(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
    delta /= static_cast<double>(n);

    const int depth = net.depth();
    grad->weights.resize(static_cast<std::size_t>(depth));
    grad->biases.resize(static_cast<std::size_t>(depth));
    const Eigen::MatrixXd& last = fwd.hidden.back();
    grad->output_weights = delta.transpose() * last;
    grad->output_bias = delta.colwise().sum().transpose();
    Eigen::MatrixXd upstream = delta * net.output.weights;  // dLoss/dH_L
    for (int i = depth - 1; i >= 0; --i) {
        const auto& h = fwd.hidden[static_cast<std::size_t>(i)];
        const Eigen::MatrixXd dz =
            upstream.cwiseProduct(h.unaryExpr([&](double y) { return net.activation.derivative_from_output(y); }));
        const Eigen::MatrixXd& input = i == 0 ? features : fwd.hidden[static_cast<std::size_t>(i - 1)];
        grad->weights[static_cast<std::size_t>(i)] = dz.transpose() * input;
        grad->biases[static_cast<std::size_t>(i)] = dz.colwise().sum().transpose();
        if (i > 0) upstream = dz * net.hidden[static_cast<std::size_t>(i)].weights;
    }
    return loss;
}

namespace {

Eigen::MatrixXd sign_of(const Eigen::MatrixXd& w) {
    return w.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
}

}  // namespace

double regularizer_penalty(const DenseNetwork& net, const TrainConfig& cfg, const CustomL1Coefficients* coeffs) {
    const double a = cfg.penalty;
    switch (cfg.regularizer) {
        case RegularizerKind::none:
        case RegularizerKind::prune: return 0.0;
        case RegularizerKind::l1: {
            double s = net.output.weights.cwiseAbs().sum();
            for (const auto& l : net.hidden) s += l.weights.cwiseAbs().sum();
            return a * s;
        }
        case RegularizerKind::l2: {
            double s = net.output.weights.squaredNorm();
            for (const auto& l : net.hidden) s += l.weights.squaredNorm();
            return a * s;
        }
        case RegularizerKind::custom_l1:
            if (coeffs == nullptr) throw ConfigError("custom-l1 needs coefficients");
            return custom_l1_penalty(net, *coeffs) + a * net.output.weights.cwiseAbs().sum();
    }
    return 0.0;
}

void add_regularizer_gradient(const DenseNetwork& net, const TrainConfig& cfg, const CustomL1Coefficients* coeffs,
                              Gradients& grad) {
    const double a = cfg.penalty;
    switch (cfg.regularizer) {
        case RegularizerKind::none:
        case RegularizerKind::prune: return;
        case RegularizerKind::l1:
            for (std::size_t i = 0; i < net.hidden.size(); ++i) grad.weights[i] += a * sign_of(net.hidden[i].weights);
            grad.output_weights += a * sign_of(net.output.weights);
            return;
        case RegularizerKind::l2:
            for (std::size_t i = 0; i < net.hidden.size(); ++i) grad.weights[i] += 2.0 * a * net.hidden[i].weights;
            grad.output_weights += 2.0 * a * net.output.weights;
            return;
        case RegularizerKind::custom_l1: {
            if (coeffs == nullptr) throw ConfigError("custom-l1 needs coefficients");
            const auto g = custom_l1_gradient(net, *coeffs);
            for (std::size_t i = 0; i < g.size(); ++i) grad.weights[i] += g[i];
            grad.output_weights += a * sign_of(net.output.weights);
            return;
        }
    }
}

TrainResult train(const DenseNetwork& init, const LabeledDataset& data, const TrainConfig& cfg,
                  const LabeledDataset* test, const EpochCallback& on_epoch) {
    cfg.validate();
    init.validate();
    if (data.dim() != init.input_dim) throw ConfigError("dataset dimension does not match the network input");
    if (data.num_classes() > init.output_dim()) throw ConfigError("dataset has more classes than network outputs");
    if (test != nullptr && test->dim() != init.input_dim) throw ConfigError("test set dimension mismatch");

    TrainResult result;
    result.net = init;
    auto& net = result.net;
    const auto n = data.size();
    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    Eigen::MatrixXd batch_x;
    std::vector<int> batch_y;
    Gradients grad;
    const CustomL1Coefficients* coeffs = nullptr;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.regularizer == RegularizerKind::custom_l1 && (epoch - 1) % cfg.refresh_period == 0) {
            const auto dists = fit_distributions(net, data.features(), cfg.grid_size, cfg.sample_cap, cfg.seed);
            result.last_coefficients = custom_l1_coefficients(net, dists, cfg.penalty);
            if (result.last_coefficients.fallback) result.fallback_epochs.push_back(epoch);
            coeffs = &result.last_coefficients;
        }

        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int batches = 0;
        for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
            const Eigen::Index len = std::min<Eigen::Index>(cfg.batch_size, n - start);
            batch_x.resize(len, data.dim());
            batch_y.resize(static_cast<std::size_t>(len));
            for (Eigen::Index r = 0; r < len; ++r) {
                const auto row = order[static_cast<std::size_t>(start + r)];
                batch_x.row(r) = data.features().row(row);
                batch_y[static_cast<std::size_t>(r)] = data.labels()[static_cast<std::size_t>(row)];
            }
            const double loss = loss_and_gradient(net, batch_x, batch_y, &grad);
            if (!std::isfinite(loss))
                throw NumericError("training loss is not finite at epoch " + std::to_string(epoch));
            add_regularizer_gradient(net, cfg, coeffs, grad);
            for (std::size_t i = 0; i < net.hidden.size(); ++i) {
                net.hidden[i].weights -= cfg.learning_rate * grad.weights[i];
                net.hidden[i].bias -= cfg.learning_rate * grad.biases[i];
            }
            net.output.weights -= cfg.learning_rate * grad.output_weights;
            net.output.bias -= cfg.learning_rate * grad.output_bias;
            for (const auto& id : result.pruned) zero_neuron(net, id);
            loss_sum += loss;
            ++batches;
        }

        if (cfg.regularizer == RegularizerKind::prune && epoch % cfg.prune_period == 0) {
            const auto dists = fit_distributions(net, data.features(), cfg.grid_size, cfg.sample_cap, cfg.seed);
            auto step = prune_step(net, dists, cfg.prune_percent, result.pruned, cfg.prune_per_layer);
            net = std::move(step.net);
            for (const auto& p : step.pruned) {
                result.pruned.insert(p.id);
                result.prune_log.push_back({epoch, p.id, p.score});
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss_sum / batches;
        if (epoch % cfg.accuracy_every == 0 || epoch == cfg.epochs) {
            rec.train_accuracy = accuracy(net, data.features(), data.labels());
            if (test != nullptr) rec.test_accuracy = accuracy(net, test->features(), test->labels());
        }
        result.records.push_back(rec);
        if (!net.output.weights.allFinite()) throw NumericError("weights diverged at epoch " + std::to_string(epoch));
        if (on_epoch) on_epoch(epoch, net);
    }
    return result;
}

void save_epoch_csv(const std::vector<EpochRecord>& records, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.header({"epoch", "loss", "train_accuracy", "test_accuracy"});
    for (const auto& r : records) {
        auto row = out.row();
        row << r.epoch << r.loss;
        for (const auto& acc : {r.train_accuracy, r.test_accuracy}) {
            if (acc) row << *acc;
            else row << "";
        }
    }
}

void save_prune_log_csv(const std::vector<PruneEvent>& log, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.header({"epoch", "layer", "neuron", "score"});
    for (const auto& e : log) out.row() << e.epoch << e.id.layer + 1 << e.id.index << e.score;
}

}  // namespace lannlab
