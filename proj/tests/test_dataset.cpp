#include <cmath>
#include <cstdint>
#include <fstream>

#include <gtest/gtest.h>

#include "lannlab/dataset.hpp"
#include "lannlab/error.hpp"
#include "test_util.hpp"

using namespace lannlab;
using lannlab::testing::TempDir;

TEST(Moons, ZeroNoisePointsLieOnHalfCircles) {
    const auto data = make_moons(4, 0.0, 1);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const double x = data.features()(i, 0);
        const double y = data.features()(i, 1);
        if (data.labels()[static_cast<std::size_t>(i)] == 0) {
            EXPECT_NEAR(x * x + y * y, 1.0, 1e-12);
            EXPECT_GE(y, -1e-12);
        } else {
            EXPECT_NEAR((x - 1) * (x - 1) + (y - 0.5) * (y - 0.5), 1.0, 1e-12);
            EXPECT_LE(y, 0.5 + 1e-12);
        }
    }
}

TEST(Moons, SeedDeterminesDataset) {
    EXPECT_EQ(make_moons(300, 0.1, 7).features(), make_moons(300, 0.1, 7).features());
    EXPECT_NE(make_moons(300, 0.1, 7).features(), make_moons(300, 0.1, 8).features());
}

TEST(Moons, LabelBalanceAndBoundingBox) {
    for (Eigen::Index n : {2, 3, 101, 2000}) {
        const auto data = make_moons(n, 0.1, 3);
        long ones = 0;
        for (int y : data.labels()) ones += y;
        EXPECT_LE(std::abs(static_cast<long>(n) - 2 * ones), 1);
        const auto& box = data.bounding_box();
        ASSERT_EQ(box.size(), 2u);
        for (Eigen::Index i = 0; i < data.size(); ++i)
            for (int d = 0; d < 2; ++d) {
                EXPECT_GE(data.features()(i, d), box[static_cast<std::size_t>(d)].first);
                EXPECT_LE(data.features()(i, d), box[static_cast<std::size_t>(d)].second);
            }
    }
}

TEST(Moons, NotLinearlySeparable) {
    const auto data = make_moons(2000, 0.1, 0);
    const auto& x = data.features();
    Eigen::Vector2d mean0 = Eigen::Vector2d::Zero(), mean1 = Eigen::Vector2d::Zero();
    int n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (data.labels()[static_cast<std::size_t>(i)] == 0) {
            mean0 += x.row(i).transpose();
            ++n0;
        } else {
            mean1 += x.row(i).transpose();
            ++n1;
        }
    }
    mean0 /= n0;
    mean1 /= n1;
    EXPECT_GT(std::abs(mean0[0] - mean1[0]), 0.1);
    EXPECT_GT(std::abs(mean0[1] - mean1[1]), 0.1);

    // Logistic regression by full-batch gradient descent.
    Eigen::Vector3d w = Eigen::Vector3d::Zero();
    for (int it = 0; it < 5000; ++it) {
        Eigen::Vector3d g = Eigen::Vector3d::Zero();
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double z = w[0] * x(i, 0) + w[1] * x(i, 1) + w[2];
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double r = p - data.labels()[static_cast<std::size_t>(i)];
            g += r * Eigen::Vector3d(x(i, 0), x(i, 1), 1.0);
        }
        w -= 0.5 * g / static_cast<double>(x.rows());
    }
    int correct = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double z = w[0] * x(i, 0) + w[1] * x(i, 1) + w[2];
        correct += (z > 0) == (data.labels()[static_cast<std::size_t>(i)] == 1);
    }
    EXPECT_LT(correct, x.rows());
}

namespace {

void put_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_pair(const TempDir& dir, bool truncate_pixels) {
    std::ofstream img(dir / "img.idx", std::ios::binary);
    put_be32(img, 0x00000803u);
    put_be32(img, 2);
    put_be32(img, 2);
    put_be32(img, 2);
    const unsigned char px[8] = {0, 255, 51, 102, 255, 0, 0, 255};
    img.write(reinterpret_cast<const char*>(px), truncate_pixels ? 6 : 8);
    std::ofstream lab(dir / "lab.idx", std::ios::binary);
    put_be32(lab, 0x00000801u);
    put_be32(lab, 2);
    const unsigned char y[2] = {3, 7};
    lab.write(reinterpret_cast<const char*>(y), 2);
}

}  // namespace

TEST(Idx, ScalesPixelsToUnitInterval) {
    TempDir dir("idx");
    write_idx_pair(dir, false);
    const auto data = load_idx(dir / "img.idx", dir / "lab.idx");
    ASSERT_EQ(data.size(), 2);
    ASSERT_EQ(data.dim(), 4);
    EXPECT_EQ(data.features()(0, 0), 0.0);
    EXPECT_EQ(data.features()(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(data.features()(0, 2), 0.2);
    EXPECT_DOUBLE_EQ(data.features()(0, 3), 0.4);
    EXPECT_EQ(data.labels(), (std::vector<int>{3, 7}));
}

TEST(Idx, TruncatedFileReportsOffset) {
    TempDir dir("idx_trunc");
    write_idx_pair(dir, true);
    try {
        load_idx(dir / "img.idx", dir / "lab.idx");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 22u);
        EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    }
    EXPECT_THROW(load_idx(dir / "none.idx", dir / "lab.idx"), IoError);
}

TEST(Csv, ThreeRowFixture) {
    TempDir dir("csv");
    {
        std::ofstream(dir / "d.csv") << "x1,x2,label\n0.5,1,0\n-2,3.25,1\n4,5,2\n";
    }
    const auto data = load_csv(dir / "d.csv", 2);
    Eigen::MatrixXd expected(3, 2);
    expected << 0.5, 1, -2, 3.25, 4, 5;
    EXPECT_EQ(data.features(), expected);
    EXPECT_EQ(data.labels(), (std::vector<int>{0, 1, 2}));
    const auto same = load_csv(dir / "d.csv", -1);
    EXPECT_EQ(same.features(), expected);
    EXPECT_THROW(load_csv(dir / "d.csv", 0), ParseError);
}

TEST(Csv, ErrorPaths) {
    TempDir dir("csv_err");
    {
        std::ofstream(dir / "nohdr.csv") << "1,2,0\n3,4,1\n";
        std::ofstream(dir / "ragged.csv") << "a,b,y\n1,2,0\n3,1\n";
        std::ofstream(dir / "text.csv") << "a,b,y\n1,x,0\n";
    }
    EXPECT_THROW(load_csv(dir / "nohdr.csv", 2), ParseError);
    EXPECT_THROW(load_csv(dir / "ragged.csv", 2), ParseError);
    EXPECT_THROW(load_csv(dir / "text.csv", 2), ParseError);
    EXPECT_THROW(load_csv(dir / "ragged.csv", 5), ConfigError);
    EXPECT_THROW(load_csv(dir / "missing.csv", 0), IoError);
}

TEST(Csv, RoundTrip) {
    TempDir dir("csv_rt");
    const auto data = make_moons(57, 0.2, 4);
    save_csv(data, dir / "m.csv");
    const auto back = load_csv(dir / "m.csv", -1);
    EXPECT_EQ(back.labels(), data.labels());
    EXPECT_LE((back.features() - data.features()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dataset, ExpandAndScaleBox) {
    const Box box{{0.0, 2.0}, {-1.0, 1.0}};
    const auto grown = expand_box(box, 0.1);
    EXPECT_DOUBLE_EQ(grown[0].first, -0.2);
    EXPECT_DOUBLE_EQ(grown[0].second, 2.2);
    EXPECT_DOUBLE_EQ(grown[1].first, -1.2);
    Eigen::MatrixXd x(2, 2);
    x << 0, -1, 2, 1;
    const auto scaled = minmax_scale(LabeledDataset(x, {0, 1}), box);
    EXPECT_EQ(scaled.features()(0, 0), -1.0);
    EXPECT_EQ(scaled.features()(1, 1), 1.0);
}

TEST(Dataset, RejectsInvalidInputs) {
    EXPECT_THROW(make_moons(1, 0.1, 0), ConfigError);
    EXPECT_THROW(make_moons(10, -0.1, 0), ConfigError);
    Eigen::MatrixXd nan_x(1, 1);
    nan_x(0, 0) = std::nan("");
    EXPECT_THROW(LabeledDataset(nan_x, {0}), ConfigError);
    EXPECT_THROW(LabeledDataset(Eigen::MatrixXd::Zero(2, 1), {0}), ConfigError);
    EXPECT_THROW(LabeledDataset(Eigen::MatrixXd::Zero(1, 1), {-1}), ConfigError);
}
