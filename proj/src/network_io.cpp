#include "lannlab/network_io.hpp"

#include <fstream>

#include "lannlab/error.hpp"

namespace lannlab {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("expected a 2D array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError("ragged weight matrix at row " + std::to_string(r));
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (double x : v) arr.push_back(x);
    return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

json to_json(const DenseNetwork& net) {
    json layers = json::array();
    for (const auto& layer : net.hidden)
        layers.push_back({{"weights", matrix_to_json(layer.weights)}, {"bias", vector_to_json(layer.bias)}});
    return {
        {"input_dim", net.input_dim},
        {"output_dim", net.output_dim()},
        {"activation", std::string(net.activation.name())},
        {"layers", std::move(layers)},
        {"output", {{"weights", matrix_to_json(net.output.weights)}, {"bias", vector_to_json(net.output.bias)}}},
    };
}

DenseNetwork network_from_json(const json& j) {
    try {
        DenseNetwork net;
        net.input_dim = j.at("input_dim").get<int>();
        net.activation = Activation::from_name(j.at("activation").get<std::string>());
        for (const auto& layer : j.at("layers"))
            net.hidden.push_back({matrix_from_json(layer.at("weights")), vector_from_json(layer.at("bias"))});
        net.output = {matrix_from_json(j.at("output").at("weights")), vector_from_json(j.at("output").at("bias"))};
        if (j.at("output_dim").get<int>() != net.output_dim())
            throw ConfigError("output_dim does not match the output layer");
        net.validate();
        return net;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed model JSON: ") + e.what());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

void save_network(const DenseNetwork& net, const std::filesystem::path& path) {
    write_json_file(to_json(net), path);
}

DenseNetwork load_network(const std::filesystem::path& path) {
    return network_from_json(read_json_file(path));
}

}  // namespace lannlab
