#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lannlab/complexity.hpp"
#include "lannlab/dataset.hpp"
#include "lannlab/lann.hpp"
#include "lannlab/structure.hpp"
#include "lannlab/train.hpp"

namespace lannlab {

struct MeasureResult {
    ComplexityReport report;
    BuildResult build;
};

/// Builds a LANN for `net` on `data` and reports C at cfg.lambda.
MeasureResult measure_complexity(const DenseNetwork& net, const LabeledDataset& data, const BuildConfig& cfg);

/// Fresh network for `structure` on data of the given shape.
DenseNetwork make_network(const NetworkStructure& structure, int input_dim, int output_dim, std::uint64_t seed);

struct TrainingTraceConfig {
    TrainConfig train;
    BuildConfig build;
    /// Complexity is measured every this many epochs and after the last one.
    int measure_every = 100;
    bool measure_initial = true;
};

struct TrainingTraceRow {
    int epoch = 0;
    double complexity = 0.0;
    long long total_pieces = 0;
    bool converged = false;
    double train_accuracy = 0.0;
    std::optional<double> test_accuracy;
    /// train accuracy minus test accuracy when a test set is given.
    std::optional<double> overfit_gap;
};

struct TrainingTrace {
    std::vector<TrainingTraceRow> rows;
    TrainResult training;
};

TrainingTrace trace_training(const DenseNetwork& init, const LabeledDataset& train_data, const LabeledDataset* test,
                             const TrainingTraceConfig& cfg);
void save_training_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path);

struct RegularizerVariant {
    std::string label;
    RegularizerKind kind = RegularizerKind::none;
    double penalty = 0.0;
};

/// NM, L1 (1e-4), L2 (1e-3), C-L1 (1e-4), PR (5% every prune period).
std::vector<RegularizerVariant> default_variants();

struct CompareConfig {
    NetworkStructure structure;
    /// Shared training settings; regularizer and penalty come from each variant.
    TrainConfig train;
    BuildConfig build;
    std::vector<RegularizerVariant> variants = default_variants();
    /// Grid points per input dimension for region counting; 0 skips counting.
    int resolution = 400;
    /// Region-count box: the training bounding box grown by this fraction.
    double box_margin = 0.1;
    std::uint64_t init_seed = 0;
};

struct CompareRow {
    std::string label;
    double complexity = 0.0;
    long long total_pieces = 0;
    bool converged = false;
    std::optional<std::uint64_t> regions;
    double train_accuracy = 0.0;
    std::optional<double> test_accuracy;
};

/// Trains one network per variant from the same initial weights and
/// measures each.
std::vector<CompareRow> compare_regularizers(const LabeledDataset& train_data, const LabeledDataset* test,
                                             const CompareConfig& cfg);
void save_compare_csv(const std::vector<CompareRow>& rows, const std::filesystem::path& path);

}  // namespace lannlab
