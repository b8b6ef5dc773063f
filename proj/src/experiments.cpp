#include "lannlab/experiments.hpp"

#include <algorithm>

#include "lannlab/csv.hpp"
#include "lannlab/error.hpp"
#include "lannlab/network.hpp"

namespace lannlab {

MeasureResult measure_complexity(const DenseNetwork& net, const LabeledDataset& data, const BuildConfig& cfg) {
    MeasureResult m;
    m.build = build_lann(net, data, cfg);
    m.report = complexity_measure(m.build.model, cfg.lambda, m.build.trace.converged);
    return m;
}

DenseNetwork make_network(const NetworkStructure& structure, int input_dim, int output_dim, std::uint64_t seed) {
    return make_network(input_dim, structure.widths, output_dim, structure.activation, seed);
}

TrainingTrace trace_training(const DenseNetwork& init, const LabeledDataset& train_data, const LabeledDataset* test,
                             const TrainingTraceConfig& cfg) {
    if (cfg.measure_every < 1) throw ConfigError("measure interval must be at least 1");
    TrainingTrace trace;
    auto measure = [&](int epoch, const DenseNetwork& net) {
        const auto m = measure_complexity(net, train_data, cfg.build);
        TrainingTraceRow row;
        row.epoch = epoch;
        row.complexity = m.report.measure;
        row.total_pieces = m.report.total_pieces;
        row.converged = m.report.converged;
        row.train_accuracy = accuracy(net, train_data.features(), train_data.labels());
        if (test != nullptr) {
            row.test_accuracy = accuracy(net, test->features(), test->labels());
            row.overfit_gap = row.train_accuracy - *row.test_accuracy;
        }
        trace.rows.push_back(row);
    };
    if (cfg.measure_initial) measure(0, init);
    trace.training = train(init, train_data, cfg.train, test, [&](int epoch, const DenseNetwork& net) {
        if (epoch % cfg.measure_every == 0 || epoch == cfg.train.epochs) measure(epoch, net);
    });
    return trace;
}

void save_training_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.header({"epoch", "complexity", "K", "converged", "train_accuracy", "test_accuracy", "overfit_gap"});
    for (const auto& r : trace.rows) {
        auto row = out.row();
        row << r.epoch << r.complexity << r.total_pieces << r.converged << r.train_accuracy;
        if (r.test_accuracy) row << *r.test_accuracy << *r.overfit_gap;
        else row << "" << "";
    }
}

std::vector<RegularizerVariant> default_variants() {
    return {{"NM", RegularizerKind::none, 0.0},
            {"L1", RegularizerKind::l1, 1e-4},
            {"L2", RegularizerKind::l2, 1e-3},
            {"C-L1", RegularizerKind::custom_l1, 1e-4},
            {"PR", RegularizerKind::prune, 0.0}};
}

std::vector<CompareRow> compare_regularizers(const LabeledDataset& train_data, const LabeledDataset* test,
                                             const CompareConfig& cfg) {
    if (cfg.variants.empty()) throw ConfigError("no regularizer variants to compare");
    if (cfg.resolution < 0) throw ConfigError("grid resolution must be non-negative");
    const int classes = std::max(train_data.num_classes(), test != nullptr ? test->num_classes() : 0);
    const auto init = make_network(cfg.structure, train_data.dim(), classes, cfg.init_seed);
    const auto box = expand_box(train_data.bounding_box(), cfg.box_margin);
    const std::vector<int> resolution(static_cast<std::size_t>(train_data.dim()), cfg.resolution);

    std::vector<CompareRow> rows;
    for (const auto& v : cfg.variants) {
        TrainConfig tc = cfg.train;
        tc.accuracy_every = std::max(1, tc.epochs);
        tc.regularizer = v.kind;
        tc.penalty = v.penalty;
        const auto trained = train(init, train_data, tc, test);
        const auto m = measure_complexity(trained.net, train_data, cfg.build);
        CompareRow row;
        row.label = v.label;
        row.complexity = m.report.measure;
        row.total_pieces = m.report.total_pieces;
        row.converged = m.report.converged;
        if (cfg.resolution > 0) row.regions = count_regions_grid(m.build.model, box, resolution);
        row.train_accuracy = accuracy(trained.net, train_data.features(), train_data.labels());
        if (test != nullptr) row.test_accuracy = accuracy(trained.net, test->features(), test->labels());
        rows.push_back(row);
    }
    return rows;
}

void save_compare_csv(const std::vector<CompareRow>& rows, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.header({"variant", "complexity", "K", "converged", "regions", "train_accuracy", "test_accuracy"});
    for (const auto& r : rows) {
        auto row = out.row();
        row << r.label << r.complexity << r.total_pieces << r.converged;
        if (r.regions) row << static_cast<unsigned long>(*r.regions);
        else row << "";
        row << r.train_accuracy;
        if (r.test_accuracy) row << *r.test_accuracy;
        else row << "";
    }
}

}  // namespace lannlab
