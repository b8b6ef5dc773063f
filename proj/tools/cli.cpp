#include "cli.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lannlab/complexity.hpp"
#include "lannlab/csv.hpp"
#include "lannlab/error.hpp"
#include "lannlab/experiments.hpp"
#include "lannlab/network_io.hpp"
#include "lannlab/parallel.hpp"
#include "lannlab/propagation.hpp"
#include "lannlab/regularize.hpp"
#include "lannlab/structure.hpp"

#ifndef LANNLAB_VERSION
#define LANNLAB_VERSION "0.0.0"
#endif

namespace lannlab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t test_split_stream = 0x7e57;

struct Common {
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string out;
};

struct DataOptions {
    std::string dataset = "moons:2000:0.1";
    std::string test_dataset;
    int label_col = -1;
};

struct LoadedData {
    std::string descriptor;
    LabeledDataset train;
    std::optional<LabeledDataset> test;
};

std::uint64_t resolve_seed(const Common& c) {
    if (c.seed) return *c.seed;
    if (const char* env = std::getenv("LANNLAB_SEED"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        errno = 0;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (errno != 0 || *end != '\0' || env[0] == '-') throw ConfigError("LANNLAB_SEED is not an unsigned integer");
        return v;
    }
    return 0;
}

/// "moons[:N[:NOISE]]", "idx:IMAGES,LABELS" or a CSV path.
LabeledDataset load_one(const std::string& spec, int label_col, std::uint64_t seed, std::string& descriptor) {
    if (spec.empty()) throw ConfigError("empty dataset path");
    if (spec == "moons" || spec.starts_with("moons:")) {
        long long n = 2000;
        double noise = 0.1;
        std::stringstream parts(spec.size() > 5 ? spec.substr(6) : std::string());
        std::string item;
        int field = 0;
        while (std::getline(parts, item, ':')) {
            double v = 0.0;
            if (!parse_double(item, v)) throw ConfigError("bad moons dataset field '" + item + "'");
            if (field == 0) {
                if (v < 2 || v != std::floor(v)) throw ConfigError("moons sample count must be an integer >= 2");
                n = static_cast<long long>(v);
            } else if (field == 1) {
                noise = v;
            } else {
                throw ConfigError("moons dataset takes at most N and NOISE");
            }
            ++field;
        }
        descriptor = "moons:" + std::to_string(n) + ":" + format_double(noise) + " seed=" + std::to_string(seed);
        return make_moons(n, noise, seed);
    }
    if (spec.starts_with("idx:")) {
        const auto rest = spec.substr(4);
        const auto comma = rest.find(',');
        if (comma == std::string::npos) throw ConfigError("idx dataset needs IMAGES,LABELS");
        descriptor = spec;
        return load_idx(rest.substr(0, comma), rest.substr(comma + 1));
    }
    descriptor = "csv:" + spec + " label_col=" + std::to_string(label_col);
    return load_csv(spec, label_col);
}

LoadedData load_data(const DataOptions& d, std::uint64_t seed, bool want_test) {
    std::string descriptor;
    auto train = load_one(d.dataset, d.label_col, seed, descriptor);
    LoadedData data{descriptor, std::move(train), std::nullopt};
    if (!d.test_dataset.empty()) {
        std::string test_descriptor;
        data.test = load_one(d.test_dataset, d.label_col, derive_seed(seed, test_split_stream), test_descriptor);
        data.descriptor += "; test " + test_descriptor;
    } else if (want_test && (d.dataset == "moons" || d.dataset.starts_with("moons:"))) {
        std::string test_descriptor;
        data.test = load_one(d.dataset, d.label_col, derive_seed(seed, test_split_stream), test_descriptor);
        data.descriptor += "; test " + test_descriptor;
    }
    return data;
}

NetworkStructure structure_option(const std::string& text) {
    try {
        return parse_structure(text);
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        if (!parse_double(item, v) || v != std::floor(v) || v < 1 || v > 1e9)
            throw ConfigError(std::string("bad ") + what + " entry '" + item + "'");
        out.push_back(static_cast<int>(v));
    }
    if (out.empty()) throw ConfigError(std::string("empty ") + what);
    return out;
}

/// "lo:hi,lo:hi"
Box parse_box(const std::string& text) {
    Box box;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        double lo = 0.0;
        double hi = 0.0;
        if (colon == std::string::npos || !parse_double(item.substr(0, colon), lo) ||
            !parse_double(item.substr(colon + 1), hi) || !(lo <= hi))
            throw ConfigError("bad box entry '" + item + "' (expected lo:hi)");
        box.emplace_back(lo, hi);
    }
    if (box.empty()) throw ConfigError("empty box");
    return box;
}

json box_json(const Box& box) {
    json j = json::array();
    for (const auto& [lo, hi] : box) j.push_back({lo, hi});
    return j;
}

std::string iso_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

/// Shared state of one invocation: output directory, manifest fields.
struct Run {
    std::string command;
    std::vector<std::string> argv;
    fs::path out_dir;
    std::uint64_t seed = 0;
    std::string dataset;
    json config = json::object();
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    fs::path file(const std::string& name) {
        outputs.push_back(name);
        return out_dir / name;
    }

    void open_dir() {
        if (out_dir.empty()) throw ConfigError("--out DIR is required");
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    }

    void write_manifest(int exit_code) {
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json m = {{"tool", "lannlab"},
                  {"version", LANNLAB_VERSION},
                  {"command", command},
                  {"argv", argv},
                  {"config", config},
                  {"seed", seed},
                  {"dataset", dataset},
                  {"csv_schema_version", csv_schema_version},
                  {"outputs", outputs},
                  {"exit_code", exit_code},
                  {"started_at", iso_now()},
                  {"wall_clock_seconds", seconds}};
        write_json_file(m, out_dir / "manifest.json");
    }
};

void add_common(CLI::App* app, Common& c, bool needs_out = true) {
    app->add_option("--seed", c.seed, "Run seed (falls back to LANNLAB_SEED, then 0)");
    app->add_option("--threads", c.threads, "Worker thread cap")->check(CLI::Range(1, 1024));
    auto* out = app->add_option("--out", c.out, "Output directory");
    if (needs_out) out->required();
}

void add_data(CLI::App* app, DataOptions& d) {
    app->add_option("--dataset", d.dataset, "moons[:N[:NOISE]], idx:IMAGES,LABELS or a CSV path")
        ->capture_default_str();
    app->add_option("--test-dataset", d.test_dataset, "Held-out set in the same forms (moons derive a test seed)");
    app->add_option("--label-col", d.label_col, "CSV label column; negative counts from the end")
        ->capture_default_str();
}

json data_json(const DataOptions& d) {
    return {{"dataset", d.dataset}, {"test_dataset", d.test_dataset}, {"label_col", d.label_col}};
}

struct BuildOptions {
    double lambda = 0.1;
    int batch = 8;
    int nt = NeuronDistribution::default_grid_size;
    int max_iterations = 10000;
    std::size_t sample_cap = 10000;
    std::size_t eval_subsample = 0;
};

void add_build(CLI::App* app, BuildOptions& b) {
    app->add_option("--lambda", b.lambda, "Approximation degree")->capture_default_str();
    app->add_option("--batch", b.batch, "Neurons refined per build iteration")->capture_default_str();
    app->add_option("--nt", b.nt, "Distribution grid size")->capture_default_str();
    app->add_option("--max-iterations", b.max_iterations, "Build iteration cap")->capture_default_str();
    app->add_option("--sample-cap", b.sample_cap, "Rows per neuron for density fits")->capture_default_str();
    app->add_option("--eval-subsample", b.eval_subsample, "Rows used for E(g;f); 0 = all")->capture_default_str();
}

BuildConfig build_config(const BuildOptions& b, std::uint64_t seed) {
    BuildConfig cfg;
    cfg.lambda = b.lambda;
    cfg.batch = b.batch;
    cfg.grid_size = b.nt;
    cfg.max_iterations = b.max_iterations;
    cfg.seed = seed;
    cfg.sample_cap = b.sample_cap;
    cfg.eval_subsample = b.eval_subsample;
    cfg.validate();
    return cfg;
}

struct TrainOptions {
    std::string structure = "L3M(32,128,16)_T";
    int epochs = 2000;
    double lr = 0.05;
    int train_batch = 32;
    std::string reg = "none";
    double penalty = 0.0;
    double prune_percent = 5.0;
    int prune_period = 100;
    bool prune_per_layer = false;
};

void add_train(CLI::App* app, TrainOptions& t, bool with_reg) {
    app->add_option("--structure", t.structure, "Network shape, e.g. L3M(32,128,16)_T")->capture_default_str();
    app->add_option("--epochs", t.epochs, "Training epochs")->capture_default_str();
    app->add_option("--lr", t.lr, "SGD learning rate")->capture_default_str();
    app->add_option("--train-batch", t.train_batch, "SGD minibatch size")->capture_default_str();
    app->add_option("--prune-percent", t.prune_percent, "Percent of remaining neurons pruned per period")
        ->capture_default_str();
    app->add_option("--prune-period", t.prune_period, "Epochs between pruning steps")->capture_default_str();
    app->add_flag("--prune-per-layer", t.prune_per_layer, "Apply the pruning quota within each layer");
    if (with_reg) {
        app->add_option("--reg", t.reg, "none, l1, l2, custom-l1 or prune")->capture_default_str();
        app->add_option("--penalty", t.penalty, "Regularizer weight")->capture_default_str();
    }
}

TrainConfig train_config(const TrainOptions& t, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = t.epochs;
    cfg.learning_rate = t.lr;
    cfg.batch_size = t.train_batch;
    cfg.seed = derive_seed(seed, 1);
    cfg.regularizer = regularizer_from_name(t.reg);
    cfg.penalty = t.penalty;
    cfg.prune_percent = t.prune_percent;
    cfg.prune_period = t.prune_period;
    cfg.prune_per_layer = t.prune_per_layer;
    cfg.validate();
    return cfg;
}

json train_json(const TrainOptions& t) {
    return {{"structure", t.structure},         {"epochs", t.epochs},
            {"lr", t.lr},                       {"train_batch", t.train_batch},
            {"reg", t.reg},                     {"penalty", t.penalty},
            {"prune_percent", t.prune_percent}, {"prune_period", t.prune_period},
            {"prune_per_layer", t.prune_per_layer}};
}

json build_json(const BuildOptions& b) {
    return {{"lambda", b.lambda},
            {"batch", b.batch},
            {"nt", b.nt},
            {"max_iterations", b.max_iterations},
            {"sample_cap", b.sample_cap},
            {"eval_subsample", b.eval_subsample}};
}

int output_classes(const LoadedData& data) {
    return std::max(data.train.num_classes(), data.test ? data.test->num_classes() : 0);
}

int run_args(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return run_args(args, out, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return exit_not_converged;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    }
}

namespace {

int run_args(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Complexity measurement of curve-activation networks via linear approximation networks", "lannlab"};
    app.set_version_flag("--version", LANNLAB_VERSION);
    app.require_subcommand(1);

    Common common;
    DataOptions data_opts;
    TrainOptions train_opts;
    BuildOptions build_opts;
    std::string model_path;
    std::string lann_path;
    std::string trace_path;
    std::string manifest_path;
    std::string box_text;
    std::string resolution_text = "400";
    int window = 5;
    int measure_every = 100;
    int layer = 0;
    double fraction = default_ablation_fraction;
    int trials = default_ablation_trials;
    double l1 = 1e-4;
    double l2 = 1e-3;
    double custom_l1 = 1e-4;

    auto* train_cmd = app.add_subcommand("train", "Train a network and write model.json and metrics.csv");
    add_common(train_cmd, common);
    add_data(train_cmd, data_opts);
    add_train(train_cmd, train_opts, true);

    auto* build_cmd = app.add_subcommand("build-lann", "Build a LANN for a trained model");
    add_common(build_cmd, common);
    add_data(build_cmd, data_opts);
    add_build(build_cmd, build_opts);
    build_cmd->add_option("--model", model_path, "Model JSON")->required();

    auto* complexity_cmd = app.add_subcommand("complexity", "Report the complexity measure of a LANN");
    add_common(complexity_cmd, common);
    complexity_cmd->add_option("--lann", lann_path, "LANN JSON")->required();

    auto* trace_cmd = app.add_subcommand("trace-training", "Measure complexity while training");
    add_common(trace_cmd, common);
    add_data(trace_cmd, data_opts);
    add_train(trace_cmd, train_opts, true);
    add_build(trace_cmd, build_opts);
    trace_cmd->add_option("--measure-every", measure_every, "Epochs between measurements")->capture_default_str();

    auto* ablate_cmd = app.add_subcommand("ablate", "Prediction flip rate under random neuron ablation");
    add_common(ablate_cmd, common);
    add_data(ablate_cmd, data_opts);
    ablate_cmd->add_option("--model", model_path, "Model JSON")->required();
    ablate_cmd->add_option("--layer", layer, "Hidden layer (1-based); 0 runs every layer")->capture_default_str();
    ablate_cmd->add_option("--fraction", fraction, "Fraction of the layer ablated per trial")->capture_default_str();
    ablate_cmd->add_option("--trials", trials, "Trials per layer")->capture_default_str();

    auto* regions_cmd = app.add_subcommand("regions", "Count activation patterns on a grid and report the bound");
    add_common(regions_cmd, common);
    add_data(regions_cmd, data_opts);
    regions_cmd->add_option("--lann", lann_path, "LANN JSON")->required();
    regions_cmd->add_option("--box", box_text, "lo:hi per input dimension; default: dataset box grown by 10%");
    regions_cmd->add_option("--resolution", resolution_text, "Grid points per dimension (one value or a list)")
        ->capture_default_str();

    auto* diag_cmd = app.add_subcommand("diagnostics", "Approximation-gain diagnostics and suggested lambda0");
    add_common(diag_cmd, common);
    diag_cmd->add_option("--trace", trace_path, "Build trace CSV");
    diag_cmd->add_option("--lann", lann_path, "LANN JSON (uses its stored trace)");
    diag_cmd->add_option("--window", window, "Moving-average window")->capture_default_str();

    auto* prop_cmd = app.add_subcommand("propagation", "Error propagation report of a LANN");
    add_common(prop_cmd, common);
    prop_cmd->add_option("--lann", lann_path, "LANN JSON")->required();

    auto* compare_cmd = app.add_subcommand("compare-regularizers", "Train NM, L1, L2, C-L1 and PR variants and measure");
    add_common(compare_cmd, common);
    add_data(compare_cmd, data_opts);
    add_train(compare_cmd, train_opts, false);
    add_build(compare_cmd, build_opts);
    compare_cmd->add_option("--l1", l1, "L1 weight")->capture_default_str();
    compare_cmd->add_option("--l2", l2, "L2 weight")->capture_default_str();
    compare_cmd->add_option("--custom-l1", custom_l1, "Mean customized L1 weight")->capture_default_str();
    compare_cmd->add_option("--resolution", resolution_text, "Grid points per dimension for region counts")
        ->capture_default_str();

    auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    replay_cmd->add_option("--manifest", manifest_path, "manifest.json to replay")->required();
    replay_cmd->add_option("--out", common.out, "New output directory")->required();

    std::vector<const char*> argv{"lannlab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::CallForVersion& e) {
        out << LANNLAB_VERSION << '\n';
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        for (auto* sub : app.get_subcommands())
            if (sub->parsed()) {
                err << "error: " << e.what() << "\n" << sub->help();
                return exit_config;
            }
        err << "error: " << e.what() << "\n" << app.help();
        return exit_config;
    }

    if (replay_cmd->parsed()) {
        const auto manifest = read_json_file(manifest_path);
        if (!manifest.contains("argv") || !manifest["argv"].is_array())
            throw ConfigError(manifest_path + ": manifest has no argv");
        std::vector<std::string> replay;
        const auto recorded = manifest["argv"].get<std::vector<std::string>>();
        bool has_seed = false;
        for (std::size_t i = 0; i < recorded.size(); ++i) {
            const auto& a = recorded[i];
            if (a == "--out") {
                ++i;
                continue;
            }
            if (a.starts_with("--out=")) continue;
            if (a == "--seed" || a.starts_with("--seed=")) has_seed = true;
            replay.push_back(a);
        }
        if (!has_seed && manifest.contains("seed")) {
            replay.push_back("--seed");
            replay.push_back(std::to_string(manifest["seed"].get<std::uint64_t>()));
        }
        replay.push_back("--out");
        replay.push_back(common.out);
        return run_args(replay, out, err);
    }

    set_max_threads(common.threads);
    Run run;
    run.argv = args;
    run.out_dir = common.out;
    run.seed = resolve_seed(common);
    run.config["threads"] = common.threads;
    int code = exit_ok;

    if (train_cmd->parsed()) {
        run.command = "train";
        const auto structure = structure_option(train_opts.structure);
        const auto cfg = train_config(train_opts, run.seed);
        auto data = load_data(data_opts, run.seed, true);
        run.dataset = data.descriptor;
        run.config.update(data_json(data_opts));
        run.config.update(train_json(train_opts));
        run.open_dir();
        const auto init = make_network(structure, data.train.dim(), output_classes(data), run.seed);
        const auto result = train(init, data.train, cfg, data.test ? &*data.test : nullptr);
        save_network(result.net, run.file("model.json"));
        save_epoch_csv(result.records, run.file("metrics.csv"));
        if (cfg.regularizer == RegularizerKind::prune) save_prune_log_csv(result.prune_log, run.file("prune_log.csv"));
        if (cfg.regularizer == RegularizerKind::custom_l1) {
            write_json_file(to_json(result.last_coefficients), run.file("coefficients.json"));
            if (!result.fallback_epochs.empty())
                err << "warning: customized L1 fell back to plain L1 in " << result.fallback_epochs.size()
                    << " epoch(s) (all neurons saturated)\n";
        }
        const auto& last = result.records.empty() ? EpochRecord{} : result.records.back();
        out << "epochs=" << cfg.epochs << " loss=" << format_double(last.loss)
            << " train_acc=" << (last.train_accuracy ? format_double(*last.train_accuracy) : "-")
            << " test_acc=" << (last.test_accuracy ? format_double(*last.test_accuracy) : "-") << '\n';
    } else if (build_cmd->parsed()) {
        run.command = "build-lann";
        const auto cfg = build_config(build_opts, run.seed);
        const auto net = load_network(model_path);
        auto data = load_data(data_opts, run.seed, false);
        run.dataset = data.descriptor;
        run.config.update(data_json(data_opts));
        run.config.update(build_json(build_opts));
        run.config["model"] = model_path;
        run.open_dir();
        const auto result = build_lann(net, data.train, cfg);
        save_lann(result, run.file("lann.json"));
        save_trace_csv(result.trace, run.file("trace.csv"));
        const auto report = complexity_measure(result.model, cfg.lambda, result.trace.converged);
        write_json_file(to_json(report), run.file("complexity.json"));
        out << summary_line(report) << '\n';
        if (!result.trace.converged) {
            err << "warning: build stopped before reaching lambda (" << result.trace.stop_reason << ")\n";
            code = exit_not_converged;
        }
    } else if (complexity_cmd->parsed()) {
        run.command = "complexity";
        run.config["lann"] = lann_path;
        const auto loaded = load_lann(lann_path);
        run.open_dir();
        const auto report =
            complexity_measure(loaded.model, loaded.trace.config.lambda, loaded.trace.converged);
        write_json_file(to_json(report), run.file("complexity.json"));
        out << summary_line(report) << '\n';
    } else if (trace_cmd->parsed()) {
        run.command = "trace-training";
        const auto structure = structure_option(train_opts.structure);
        TrainingTraceConfig cfg;
        cfg.train = train_config(train_opts, run.seed);
        cfg.build = build_config(build_opts, run.seed);
        cfg.measure_every = measure_every;
        cfg.train.accuracy_every = std::max(1, measure_every);
        auto data = load_data(data_opts, run.seed, true);
        run.dataset = data.descriptor;
        run.config.update(data_json(data_opts));
        run.config.update(train_json(train_opts));
        run.config.update(build_json(build_opts));
        run.config["measure_every"] = measure_every;
        run.open_dir();
        const auto init = make_network(structure, data.train.dim(), output_classes(data), run.seed);
        const auto trace = trace_training(init, data.train, data.test ? &*data.test : nullptr, cfg);
        save_training_trace_csv(trace, run.file("complexity_trace.csv"));
        save_epoch_csv(trace.training.records, run.file("metrics.csv"));
        save_network(trace.training.net, run.file("model.json"));
        for (const auto& r : trace.rows)
            out << "epoch=" << r.epoch << " C=" << format_double(r.complexity) << " K=" << r.total_pieces
                << " converged=" << (r.converged ? "yes" : "no") << '\n';
    } else if (ablate_cmd->parsed()) {
        run.command = "ablate";
        const auto net = load_network(model_path);
        auto data = load_data(data_opts, run.seed, false);
        run.dataset = data.descriptor;
        run.config.update(data_json(data_opts));
        run.config.update({{"model", model_path}, {"layer", layer}, {"fraction", fraction}, {"trials", trials}});
        if (layer < 0 || layer > net.depth()) throw ConfigError("--layer must lie in [0, " + std::to_string(net.depth()) + "]");
        run.open_dir();
        std::vector<AblationResult> results;
        for (int i = 0; i < net.depth(); ++i) {
            if (layer != 0 && i != layer - 1) continue;
            results.push_back(ablation_flip_rate(net, i, fraction, trials, data.train.features(),
                                                 derive_seed(run.seed, static_cast<std::uint64_t>(i))));
            out << "layer=" << i + 1 << " ablated=" << results.back().ablated
                << " mean_flip_rate=" << format_double(results.back().mean_rate) << '\n';
        }
        save_ablation_csv(results, run.file("ablation.csv"));
    } else if (regions_cmd->parsed()) {
        run.command = "regions";
        const auto loaded = load_lann(lann_path);
        const int d = loaded.model.base.input_dim;
        Box box;
        if (!box_text.empty()) {
            box = parse_box(box_text);
        } else {
            auto data = load_data(data_opts, run.seed, false);
            run.dataset = data.descriptor;
            run.config.update(data_json(data_opts));
            box = expand_box(data.train.bounding_box(), 0.1);
        }
        auto res = parse_int_list(resolution_text, "resolution");
        if (res.size() == 1) res.assign(static_cast<std::size_t>(d), res.front());
        run.config.update({{"lann", lann_path}, {"box", box_json(box)}, {"resolution", res}});
        run.open_dir();
        const auto count = count_regions_grid(loaded.model, box, res);
        const auto bound = region_upper_bound(loaded.model);
        write_json_file({{"regions_counted", count},
                         {"count_is_lower_bound", true},
                         {"upper_bound_log", bound.log_bound},
                         {"log_base", "e"},
                         {"layer_sums", bound.layer_sums},
                         {"box", box_json(box)},
                         {"resolution", res}},
                        run.file("regions.json"));
        out << "regions=" << count << " upper_bound_log=" << format_double(bound.log_bound) << '\n';
    } else if (diag_cmd->parsed()) {
        run.command = "diagnostics";
        if (trace_path.empty() == lann_path.empty()) throw ConfigError("give exactly one of --trace or --lann");
        const auto trace = trace_path.empty() ? load_lann(lann_path).trace : load_trace_csv(trace_path);
        run.config.update({{"trace", trace_path}, {"lann", lann_path}, {"window", window}});
        run.open_dir();
        const auto diag = lambda_diagnostics(trace, window);
        save_diagnostics_csv(diag, run.file("diagnostics.csv"));
        write_json_file(to_json(diag), run.file("diagnostics.json"));
        if (diag.lambda0) out << "lambda0=" << format_double(*diag.lambda0) << '\n';
        else out << "lambda0=unavailable (" << diag.note << ")\n";
    } else if (prop_cmd->parsed()) {
        run.command = "propagation";
        run.config["lann"] = lann_path;
        const auto loaded = load_lann(lann_path);
        run.open_dir();
        const auto report = propagation_report(loaded.model);
        write_json_file(to_json(report), run.file("propagation.json"));
        save_propagation_csv(report, run.file("propagation.csv"));
        for (std::size_t i = 0; i < report.amplification.size(); ++i)
            out << "layer=" << i + 1 << " mean_amplification=" << format_double(report.amplification[i].mean())
                << " mean_accumulation=" << format_double(report.accumulation[i].mean()) << '\n';
    } else if (compare_cmd->parsed()) {
        run.command = "compare-regularizers";
        CompareConfig cfg;
        cfg.structure = structure_option(train_opts.structure);
        cfg.train = train_config(train_opts, run.seed);
        cfg.build = build_config(build_opts, run.seed);
        cfg.variants = {{"NM", RegularizerKind::none, 0.0},
                        {"L1", RegularizerKind::l1, l1},
                        {"L2", RegularizerKind::l2, l2},
                        {"C-L1", RegularizerKind::custom_l1, custom_l1},
                        {"PR", RegularizerKind::prune, 0.0}};
        const auto res = parse_int_list(resolution_text, "resolution");
        if (res.size() != 1) throw ConfigError("compare-regularizers takes one resolution value");
        cfg.resolution = res.front();
        cfg.init_seed = run.seed;
        auto data = load_data(data_opts, run.seed, true);
        run.dataset = data.descriptor;
        run.config.update(data_json(data_opts));
        run.config.update(train_json(train_opts));
        run.config.update(build_json(build_opts));
        run.config.update({{"l1", l1}, {"l2", l2}, {"custom_l1", custom_l1}, {"resolution", cfg.resolution}});
        run.open_dir();
        const auto rows = compare_regularizers(data.train, data.test ? &*data.test : nullptr, cfg);
        save_compare_csv(rows, run.file("compare.csv"));
        for (const auto& r : rows)
            out << r.label << " C=" << format_double(r.complexity) << " K=" << r.total_pieces
                << " regions=" << (r.regions ? std::to_string(*r.regions) : "-")
                << " train_acc=" << format_double(r.train_accuracy)
                << " test_acc=" << (r.test_accuracy ? format_double(*r.test_accuracy) : "-") << '\n';
    }

    run.write_manifest(code);
    return code;
}

}  // namespace

}  // namespace lannlab::cli
