#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lannlab/dataset.hpp"
#include "lannlab/network.hpp"
#include "lannlab/regularize.hpp"

namespace lannlab {

enum class RegularizerKind { none, l1, l2, custom_l1, prune };

std::string to_string(RegularizerKind kind);
/// Accepts none, l1, l2, custom-l1, prune.
RegularizerKind regularizer_from_name(const std::string& name);

struct TrainConfig {
    int epochs = 2000;
    double learning_rate = 0.05;
    int batch_size = 32;
    std::uint64_t seed = 0;
    RegularizerKind regularizer = RegularizerKind::none;
    /// L1 or L2 weight; for custom-l1 the mean coefficient.
    double penalty = 0.0;
    double prune_percent = 5.0;
    int prune_period = 100;
    bool prune_per_layer = false;
    /// Epochs between distribution refits for custom-l1 coefficients.
    int refresh_period = 1;
    int grid_size = 200;
    std::size_t sample_cap = 10000;
    /// Accuracies are recorded every this many epochs and at the last one.
    int accuracy_every = 1;
    void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);

/// Gradient buffers shaped like the network.
struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    Eigen::MatrixXd output_weights;
    Eigen::VectorXd output_bias;
};

/// Mean softmax cross-entropy over the rows and its gradient.
double loss_and_gradient(const DenseNetwork& net, const Eigen::MatrixXd& features, std::span<const int> labels,
                         Gradients* grad);

/// Regularization term added to the loss. L1 and L2 cover every weight
/// matrix (not biases); custom-l1 uses `coeffs` on hidden layers and the
/// plain weight on the output layer. Pruning adds no term.
double regularizer_penalty(const DenseNetwork& net, const TrainConfig& cfg, const CustomL1Coefficients* coeffs);
void add_regularizer_gradient(const DenseNetwork& net, const TrainConfig& cfg, const CustomL1Coefficients* coeffs,
                              Gradients& grad);

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;  ///< mean data loss over the epoch's batches
    std::optional<double> train_accuracy;
    std::optional<double> test_accuracy;
};

struct PruneEvent {
    int epoch = 0;
    NeuronId id;
    double score = 0.0;
};

struct TrainResult {
    DenseNetwork net;
    std::vector<EpochRecord> records;
    std::vector<PruneEvent> prune_log;
    std::set<NeuronId> pruned;
    /// Epochs whose custom-l1 coefficients fell back to plain L1.
    std::vector<int> fallback_epochs;
    CustomL1Coefficients last_coefficients;
};

/// Called after every epoch with the epoch number (1-based) and the net.
using EpochCallback = std::function<void(int, const DenseNetwork&)>;

/// Minibatch SGD on the cross-entropy loss plus the configured regularizer.
/// Throws NumericError when the loss stops being finite.
TrainResult train(const DenseNetwork& init, const LabeledDataset& data, const TrainConfig& cfg,
                  const LabeledDataset* test = nullptr, const EpochCallback& on_epoch = {});

void save_epoch_csv(const std::vector<EpochRecord>& records, const std::filesystem::path& path);
void save_prune_log_csv(const std::vector<PruneEvent>& log, const std::filesystem::path& path);

}  // namespace lannlab
