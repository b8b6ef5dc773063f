#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lannlab/lann.hpp"
#include "lannlab/network.hpp"

namespace lannlab::testing {

/// Network with N(0, scale^2) weights and biases.
inline DenseNetwork random_net(int input_dim, std::vector<int> widths, int output_dim, Activation act,
                               std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    auto fill = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
        return m;
    };
    DenseNetwork net;
    net.activation = act;
    net.input_dim = input_dim;
    int prev = input_dim;
    for (int w : widths) {
        net.hidden.push_back({fill(w, prev), fill(w, 1).col(0)});
        prev = w;
    }
    net.output = {fill(output_dim, prev), fill(output_dim, 1).col(0)};
    return net;
}

/// LANN whose neuron {i, j} holds 1..max_pieces tangents at random points.
inline LannModel random_lann(const DenseNetwork& net, int max_pieces, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pieces(1, max_pieces);
    std::uniform_real_distribution<double> point(-2.5, 2.5);
    LannModel g = LannModel::fresh(net);
    for (auto& layer : g.approx)
        for (auto& fn : layer) {
            const int k = pieces(rng);
            std::vector<double> pts;
            while (static_cast<int>(pts.size()) < k) pts.push_back(point(rng));
            fn = PiecewiseLinearFn::from_tangent_points(net.activation, pts);
        }
    return g;
}

inline Eigen::MatrixXd random_points(Eigen::Index n, int d, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    return x;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("lannlab_test_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace lannlab::testing
