#include <fstream>
#include <string>

#include "lannlab/csv.hpp"
#include "lannlab/error.hpp"
#include "lannlab/lann.hpp"
#include "lannlab/network_io.hpp"

namespace lannlab {

using nlohmann::json;

namespace {
constexpr const char* lann_format = "lannlab-lann/1";
}

json to_json(const BuildConfig& cfg) {
    return {
        {"lambda", cfg.lambda},
        {"batch", cfg.batch},
        {"n_t", cfg.grid_size},
        {"max_iterations", cfg.max_iterations},
        {"seed", cfg.seed},
        {"sample_cap", cfg.sample_cap},
        {"eval_subsample", cfg.eval_subsample},
    };
}

BuildConfig build_config_from_json(const json& j) {
    BuildConfig cfg;
    cfg.lambda = j.at("lambda").get<double>();
    cfg.batch = j.at("batch").get<int>();
    cfg.grid_size = j.at("n_t").get<int>();
    cfg.max_iterations = j.at("max_iterations").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.sample_cap = j.at("sample_cap").get<std::size_t>();
    cfg.eval_subsample = j.value("eval_subsample", std::size_t{0});
    cfg.validate();
    return cfg;
}

json to_json(const LannModel& g) {
    json approx = json::array();
    for (const auto& layer : g.approx) {
        json fns = json::array();
        for (const auto& fn : layer) fns.push_back(to_json(fn));
        approx.push_back(std::move(fns));
    }
    json dists = json::array();
    for (const auto& layer : g.distributions) {
        json ds = json::array();
        for (const auto& d : layer) ds.push_back(to_json(d));
        dists.push_back(std::move(ds));
    }
    return {{"model", to_json(g.base)}, {"approx", std::move(approx)}, {"distributions", std::move(dists)}};
}

LannModel lann_from_json(const json& j) {
    try {
        LannModel g;
        g.base = network_from_json(j.at("model"));
        for (const auto& layer : j.at("approx")) {
            std::vector<PiecewiseLinearFn> fns;
            for (const auto& fn : layer) fns.push_back(pwl_from_json(fn));
            g.approx.push_back(std::move(fns));
        }
        if (j.contains("distributions")) {
            for (const auto& layer : j.at("distributions")) {
                std::vector<NeuronDistribution> ds;
                for (const auto& d : layer) ds.push_back(distribution_from_json(d));
                g.distributions.push_back(std::move(ds));
            }
        }
        g.validate();
        return g;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed LANN JSON: ") + e.what());
    }
}

void save_lann(const BuildResult& result, const std::filesystem::path& path) {
    json trace = json::array();
    for (const auto& r : result.trace.rows)
        trace.push_back({{"iteration", r.iteration}, {"K", r.total_pieces}, {"E", r.error}, {"updated", r.updated}});
    json j = to_json(result.model);
    j["format"] = lann_format;
    j["build_config"] = to_json(result.trace.config);
    j["trace"] = std::move(trace);
    j["converged"] = result.trace.converged;
    j["stop_reason"] = result.trace.stop_reason;
    write_json_file(j, path);
}

BuildResult load_lann(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    if (j.value("format", std::string{}) != lann_format)
        throw ConfigError(path.string() + " is not a " + std::string(lann_format) + " file");
    try {
        BuildResult result;
        result.model = lann_from_json(j);
        result.trace.config = build_config_from_json(j.at("build_config"));
        for (const auto& r : j.at("trace"))
            result.trace.rows.push_back({r.at("iteration").get<int>(), r.at("K").get<long long>(),
                                         r.at("E").get<double>(), r.value("updated", 0)});
        result.trace.converged = j.at("converged").get<bool>();
        result.trace.stop_reason = j.value("stop_reason", std::string{});
        return result;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed LANN JSON: ") + e.what());
    }
}

void save_trace_csv(const BuildTrace& trace, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.header({"iteration", "K", "E", "updated"});
    for (const auto& r : trace.rows) out.row() << r.iteration << r.total_pieces << r.error << r.updated;
}

BuildTrace load_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty trace file", 0);
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return static_cast<int>(c);
        throw ParseError(path.string() + ": trace CSV lacks column '" + name + "'", 0);
    };
    const int c_iter = column("iteration");
    const int c_k = column("K");
    const int c_e = column("E");
    BuildTrace trace;
    std::size_t offset = line.size() + 1;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        double it = 0, k = 0, e = 0;
        if (cells.size() != header.size() || !parse_double(cells[static_cast<std::size_t>(c_iter)], it) ||
            !parse_double(cells[static_cast<std::size_t>(c_k)], k) || !parse_double(cells[static_cast<std::size_t>(c_e)], e))
            throw ParseError(path.string() + ": malformed trace row", offset);
        trace.rows.push_back({static_cast<int>(it), static_cast<long long>(k), e, 0});
        offset += line.size() + 1;
    }
    return trace;
}

}  // namespace lannlab
