#include "lannlab/dataset.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "lannlab/csv.hpp"
#include "lannlab/error.hpp"

namespace lannlab {

LabeledDataset::LabeledDataset(Eigen::MatrixXd features, std::vector<int> labels, int num_classes)
    : features_(std::move(features)), labels_(std::move(labels)) {
    if (features_.rows() < 1) throw ConfigError("dataset must contain at least one sample");
    if (static_cast<std::size_t>(features_.rows()) != labels_.size())
        throw ConfigError("dataset has " + std::to_string(features_.rows()) + " feature rows but " +
                          std::to_string(labels_.size()) + " labels");
    if (features_.hasNaN()) throw ConfigError("dataset contains NaN features");
    int max_label = -1;
    for (int y : labels_) {
        if (y < 0) throw ConfigError("negative class label " + std::to_string(y));
        max_label = std::max(max_label, y);
    }
    num_classes_ = num_classes > 0 ? num_classes : max_label + 1;
    if (max_label >= num_classes_)
        throw ConfigError("label " + std::to_string(max_label) + " outside [0, " + std::to_string(num_classes_) + ")");
    box_.reserve(static_cast<std::size_t>(features_.cols()));
    for (Eigen::Index c = 0; c < features_.cols(); ++c)
        box_.emplace_back(features_.col(c).minCoeff(), features_.col(c).maxCoeff());
}

LabeledDataset LabeledDataset::subset(std::span<const Eigen::Index> rows) const {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(rows.size()), features_.cols());
    std::vector<int> y;
    y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        f.row(static_cast<Eigen::Index>(i)) = features_.row(rows[i]);
        y.push_back(labels_.at(static_cast<std::size_t>(rows[i])));
    }
    return LabeledDataset(std::move(f), std::move(y), num_classes_);
}

LabeledDataset make_moons(Eigen::Index n, double noise, std::uint64_t seed) {
    if (n < 2) throw ConfigError("make_moons needs n >= 2");
    if (!(noise >= 0.0)) throw ConfigError("make_moons noise must be non-negative");
    const Eigen::Index n_upper = (n + 1) / 2;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::normal_distribution<double> jitter(0.0, 1.0);

    Eigen::MatrixXd x(n, 2);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = angle(rng);
        if (i < n_upper) {
            x(i, 0) = std::cos(t);
            x(i, 1) = std::sin(t);
            y[static_cast<std::size_t>(i)] = 0;
        } else {
            x(i, 0) = 1.0 - std::cos(t);
            x(i, 1) = 0.5 - std::sin(t);
            y[static_cast<std::size_t>(i)] = 1;
        }
    }
    if (noise > 0.0) {
        for (Eigen::Index i = 0; i < n; ++i) {
            x(i, 0) += noise * jitter(rng);
            x(i, 1) += noise * jitter(rng);
        }
    }
    return LabeledDataset(std::move(x), std::move(y), 2);
}

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::string& what) {
    if (offset + 4 > buf.size()) throw ParseError(what + ": truncated header", buf.size());
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const auto img = read_all(images);
    const auto lab = read_all(labels);
    const std::string img_name = images.string();
    const std::string lab_name = labels.string();

    if (read_be32(img, 0, img_name) != 0x00000803u) throw ParseError(img_name + ": bad IDX image magic", 0);
    if (read_be32(lab, 0, lab_name) != 0x00000801u) throw ParseError(lab_name + ": bad IDX label magic", 0);
    const std::size_t n = read_be32(img, 4, img_name);
    const std::size_t rows = read_be32(img, 8, img_name);
    const std::size_t cols = read_be32(img, 12, img_name);
    const std::size_t n_labels = read_be32(lab, 4, lab_name);
    if (n != n_labels)
        throw ParseError("image count " + std::to_string(n) + " does not match label count " +
                             std::to_string(n_labels),
                         4);
    const std::size_t d = rows * cols;
    constexpr std::size_t img_header = 16;
    constexpr std::size_t lab_header = 8;
    if (img.size() < img_header + n * d) throw ParseError(img_name + ": truncated pixel data", img.size());
    if (lab.size() < lab_header + n) throw ParseError(lab_name + ": truncated label data", lab.size());
    if (n == 0) throw ConfigError("IDX files contain no samples");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < d; ++p)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = img[img_header + i * d + p] / 255.0;
        y[i] = lab[lab_header + i];
    }
    return LabeledDataset(std::move(x), std::move(y));
}

LabeledDataset load_csv(const std::filesystem::path& path, int label_column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string name = path.string();

    std::string line;
    std::size_t offset = 0;
    if (!std::getline(in, line)) throw ParseError(name + ": empty file, expected a header row", 0);
    const auto header = split_csv_line(line);
    // A header is required; a first row that parses entirely as numbers is data.
    bool numeric_header = true;
    for (const auto& cell : header) {
        double dummy = 0.0;
        if (!parse_double(cell, dummy)) {
            numeric_header = false;
            break;
        }
    }
    if (numeric_header) throw ParseError(name + ": missing header row", 0);
    const std::size_t ncols = header.size();
    const int requested = label_column;
    if (label_column < 0) label_column += static_cast<int>(ncols);
    if (label_column < 0 || static_cast<std::size_t>(label_column) >= ncols)
        throw ConfigError("label column " + std::to_string(requested) + " outside the " + std::to_string(ncols) +
                          " CSV columns");
    offset += line.size() + 1;

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            offset += 1;
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != ncols)
            throw ParseError(name + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                 " cells, header has " + std::to_string(ncols),
                             offset);
        std::vector<double> row;
        row.reserve(ncols - 1);
        for (std::size_t c = 0; c < ncols; ++c) {
            double v = 0.0;
            if (!parse_double(cells[c], v))
                throw ParseError(name + ": non-numeric cell '" + cells[c] + "' on line " + std::to_string(line_no),
                                 offset);
            if (static_cast<int>(c) == label_column) {
                if (v != std::floor(v) || v < 0)
                    throw ParseError(name + ": label '" + cells[c] + "' is not a class index", offset);
                labels.push_back(static_cast<int>(v));
            } else {
                row.push_back(v);
            }
        }
        rows.push_back(std::move(row));
        offset += line.size() + 1;
    }
    if (rows.empty()) throw ConfigError(name + ": CSV has no data rows");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols - 1));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c + 1 < ncols; ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return LabeledDataset(std::move(x), std::move(labels));
}

void save_csv(const LabeledDataset& data, const std::filesystem::path& path) {
    CsvWriter out(path);
    std::vector<std::string> header;
    for (int c = 0; c < data.dim(); ++c) header.push_back("x" + std::to_string(c));
    header.emplace_back("label");
    out.header(header);
    for (Eigen::Index r = 0; r < data.size(); ++r) {
        auto row = out.row();
        for (int c = 0; c < data.dim(); ++c) row << data.features()(r, c);
        row << data.labels()[static_cast<std::size_t>(r)];
    }
}

Box expand_box(const Box& box, double fraction) {
    Box out = box;
    for (auto& [lo, hi] : out) {
        const double pad = (hi - lo) * fraction;
        lo -= pad;
        hi += pad;
    }
    return out;
}

LabeledDataset minmax_scale(const LabeledDataset& data, const Box& box) {
    if (static_cast<int>(box.size()) != data.dim()) throw ConfigError("scaling box dimension mismatch");
    Eigen::MatrixXd x = data.features();
    for (int c = 0; c < data.dim(); ++c) {
        const auto [lo, hi] = box[static_cast<std::size_t>(c)];
        if (hi > lo)
            x.col(c) = ((x.col(c).array() - lo) * (2.0 / (hi - lo)) - 1.0).matrix();
        else
            x.col(c).setZero();
    }
    return LabeledDataset(std::move(x), data.labels(), data.num_classes());
}

}  // namespace lannlab
