#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lannlab {

/// Per-dimension closed interval [lo, hi].
using Box = std::vector<std::pair<double, double>>;

/// Feature matrix (one sample per row) with integer class labels.
class LabeledDataset {
public:
    /// `num_classes` of 0 means "max label + 1".
    LabeledDataset(Eigen::MatrixXd features, std::vector<int> labels, int num_classes = 0);

    const Eigen::MatrixXd& features() const { return features_; }
    const std::vector<int>& labels() const { return labels_; }
    Eigen::Index size() const { return features_.rows(); }
    int dim() const { return static_cast<int>(features_.cols()); }
    int num_classes() const { return num_classes_; }
    const Box& bounding_box() const { return box_; }

    LabeledDataset subset(std::span<const Eigen::Index> rows) const;

private:
    Eigen::MatrixXd features_;
    std::vector<int> labels_;
    int num_classes_ = 0;
    Box box_;
};

/// Two interleaving half circles; the first ceil(n/2) points are class 0.
LabeledDataset make_moons(Eigen::Index n, double noise, std::uint64_t seed);

/// MNIST-style IDX pair (ubyte images 0x00000803, labels 0x00000801).
/// Pixels are scaled to [0, 1].
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Numeric CSV with a header row. `label_column` selects the class column;
/// the remaining columns become features in file order. Negative values
/// count from the last column (-1 is the last).
LabeledDataset load_csv(const std::filesystem::path& path, int label_column);
void save_csv(const LabeledDataset& data, const std::filesystem::path& path);

/// Box grown by `fraction` of its extent on every side.
Box expand_box(const Box& box, double fraction);

/// Affine map of every feature from `box` onto [-1, 1]. Degenerate
/// dimensions map to 0.
LabeledDataset minmax_scale(const LabeledDataset& data, const Box& box);

}  // namespace lannlab
