// fcc command-line tool. Subcommands:
//
//   train         fit an input-convex classifier, balance τ, save the model
//   certify       closed-form robustness certificates for every input
//   curve         certified-accuracy curve Γ(r) at the model threshold
//   surface       Γ(r) across a τ grid (accuracy/robustness tradeoff)
//   separability  convex-separability report for a two-class dataset, or a
//                 Monte-Carlo frequency estimate over random point sets
//   bound         closed-form separability lower-bound table over dimensions
//   attack        PGD soundness audit inside scaled certified radii
//   sweep         train and evaluate every class pair of a labeled dataset
//
// Shared conventions:
//   - configuration merges three layers: built-in defaults, then a --config
//     JSON file, then command-line flags (flags win); the fully resolved
//     result is echoed to <subcommand>_config.json next to the outputs
//   - the output directory resolves as --out flag, else FCC_OUT_DIR env var,
//     else the config "out" key, else "."; it is created when missing
//   - CSV bodies are byte-reproducible for a fixed config and seed; the only
//     timestamp lives in the run_meta.json sidecar
//   - exit 0 on success, 2 for usage/config mistakes, 1 for runtime
//     failures; errors print one machine-readable JSON line on stderr

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fcc/certify.hpp"
#include "fcc/csv.hpp"
#include "fcc/data.hpp"
#include "fcc/eval.hpp"
#include "fcc/separability.hpp"
#include "fcc/train.hpp"

namespace {

using nlohmann::json;
using namespace fcc;
namespace fs = std::filesystem;

// ---- error reporting -------------------------------------------------------

void print_error(const std::string& type, const std::string& message) {
    std::cerr << json{{"error", json{{"type", type}, {"message", message}}}}.dump() << "\n";
}

void require(bool ok, const std::string& message) {
    if (!ok) throw contract_error(message);
}

// ---- config file layer ------------------------------------------------------

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw contract_error("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw contract_error("config: bad JSON in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw contract_error("config: top level must be a JSON object");
    return j;
}

// Applies config values to the variables bound to the active subcommand's
// flags. A value is used only when the flag was not given on the command
// line, so the precedence is defaults < config file < flags. finish()
// rejects keys the subcommand does not understand.
struct ConfigLayer {
    json values;
    CLI::App* cmd;
    std::set<std::string> known;

    template <class T>
    void merge(const std::string& flag, const std::string& key, T& var) {
        known.insert(key);
        if (!values.contains(key)) return;
        if (cmd->count(flag) > 0) return;
        try {
            var = values.at(key).get<T>();
        } catch (const json::exception& e) {
            throw contract_error("config: bad value for '" + key + "': " + e.what());
        }
    }

    void finish() const {
        for (auto it = values.begin(); it != values.end(); ++it) {
            if (known.find(it.key()) == known.end()) {
                throw contract_error("config: unknown key '" + it.key() + "'");
            }
        }
    }
};

// ---- shared option groups ---------------------------------------------------

struct CommonArgs {
    std::string config_path;
    std::string out_flag;
    std::string out_config; // "out" key of the config file
    int threads = 0;        // 0 = all available cores
};

void add_common(CLI::App* cmd, CommonArgs& c) {
    cmd->add_option("--config", c.config_path, "JSON config file; flags override its values");
    cmd->add_option("--out", c.out_flag,
                    "output directory (default: FCC_OUT_DIR env var, config 'out', else .)");
    cmd->add_option("--threads", c.threads, "worker threads for parallel kernels, 0 = all cores");
}

void merge_common(ConfigLayer& layer, CommonArgs& c) {
    layer.merge("--out", "out", c.out_config);
    layer.merge("--threads", "threads", c.threads);
    require(c.threads >= 0, "threads: must be >= 0");
}

std::string resolve_out(const CommonArgs& c) {
    if (!c.out_flag.empty()) return c.out_flag;
    if (const char* env = std::getenv("FCC_OUT_DIR"); env != nullptr && *env != '\0') return env;
    if (!c.out_config.empty()) return c.out_config;
    return ".";
}

struct DataArgs {
    std::string images;
    std::string labels;
    std::string csv;
    int class_a = -1; // both >= 0 selects a class pair (a -> 1, b -> 2)
    int class_b = -1;
};

void add_data(CLI::App* cmd, DataArgs& d, const std::string& prefix = "") {
    const std::string dash = "--" + prefix;
    cmd->add_option(dash + "images", d.images, "IDX image file (with " + dash + "labels)");
    cmd->add_option(dash + "labels", d.labels, "IDX label file");
    cmd->add_option(dash + "csv", d.csv, "dataset CSV (label, then value columns)");
    if (prefix.empty()) {
        cmd->add_option("--class-a", d.class_a, "digit relabeled to class 1 (the certified one)");
        cmd->add_option("--class-b", d.class_b, "digit relabeled to class 2");
    }
}

void merge_data(ConfigLayer& layer, DataArgs& d, const std::string& prefix = "") {
    const std::string dash = "--" + prefix;
    const std::string key = prefix.empty() ? "" : "test_";
    layer.merge(dash + "images", key + "images", d.images);
    layer.merge(dash + "labels", key + "labels", d.labels);
    layer.merge(dash + "csv", key + "csv", d.csv);
    if (prefix.empty()) {
        layer.merge("--class-a", "class_a", d.class_a);
        layer.merge("--class-b", "class_b", d.class_b);
    }
}

void validate_data(const DataArgs& d, const std::string& what) {
    const bool idx = !d.images.empty() || !d.labels.empty();
    const bool csv = !d.csv.empty();
    require(idx != csv, what + ": give either an IDX images/labels pair or a CSV, not both");
    if (idx) {
        require(!d.images.empty() && !d.labels.empty(),
                what + ": IDX input needs both the images and the labels file");
    }
    require((d.class_a >= 0) == (d.class_b >= 0),
            what + ": class-a and class-b must be given together");
    if (d.class_a >= 0) require(d.class_a != d.class_b, what + ": class pair must differ");
}

Dataset load_data(const DataArgs& d) {
    Dataset ds = d.csv.empty() ? load_idx(d.images, d.labels) : load_dataset_csv(d.csv);
    if (d.class_a >= 0) ds = select_pair(ds, d.class_a, d.class_b);
    return ds;
}

json data_echo(const DataArgs& d) {
    return json{{"images", d.images},
                {"labels", d.labels},
                {"csv", d.csv},
                {"class_a", d.class_a},
                {"class_b", d.class_b}};
}

struct NetArgs {
    std::string map_kind = "concat"; // "identity" or "concat"
    std::vector<std::size_t> hidden = {200, 50};
    bool passthrough = true;
    std::uint64_t icnn_seed = 1;
};

void add_net(CLI::App* cmd, NetArgs& n) {
    cmd->add_option("--map", n.map_kind, "feature map: identity | concat (signed offsets + |offsets|)");
    cmd->add_option("--hidden", n.hidden, "hidden layer widths")->delimiter(',');
    cmd->add_option("--passthrough", n.passthrough, "input feeds every layer (true/false)");
    cmd->add_option("--icnn-seed", n.icnn_seed, "weight initialization seed");
}

void merge_net(ConfigLayer& layer, NetArgs& n) {
    layer.merge("--map", "map", n.map_kind);
    layer.merge("--hidden", "hidden", n.hidden);
    layer.merge("--passthrough", "passthrough", n.passthrough);
    layer.merge("--icnn-seed", "icnn_seed", n.icnn_seed);
    require(n.map_kind == "identity" || n.map_kind == "concat",
            "map: must be 'identity' or 'concat'");
    require(!n.hidden.empty(), "hidden: at least one hidden width");
    for (std::size_t w : n.hidden) require(w >= 1, "hidden: widths must be >= 1");
}

json net_echo(const NetArgs& n) {
    return json{{"map", n.map_kind},
                {"hidden", n.hidden},
                {"passthrough", n.passthrough},
                {"icnn_seed", n.icnn_seed}};
}

void add_train_config(CLI::App* cmd, TrainConfig& cfg) {
    cmd->add_option("--epochs", cfg.epochs, "training epochs");
    cmd->add_option("--batch-size", cfg.batch_size, "minibatch size");
    cmd->add_option("--lr", cfg.learning_rate, "initial learning rate");
    cmd->add_option("--momentum", cfg.momentum, "heavy-ball momentum");
    cmd->add_option("--lr-decay", cfg.lr_decay_gamma, "per-epoch learning-rate decay factor");
    cmd->add_option("--lambda", cfg.jacobian_lambda, "gradient-norm penalty weight (0 disables)");
    cmd->add_option("--fd-step", cfg.jacobian_fd_step, "finite-difference step of the penalty");
    cmd->add_option("--seed", cfg.seed, "training seed (split, shuffles, augmentation)");
    cmd->add_option("--augment", cfg.augment, "pad-and-crop augmentation on square images");
    cmd->add_option("--augment-pad", cfg.augment_pad, "augmentation padding in pixels");
    cmd->add_option("--val-fraction", cfg.val_fraction, "stratified validation fraction");
}

void merge_train_config(ConfigLayer& layer, TrainConfig& cfg) {
    layer.merge("--epochs", "epochs", cfg.epochs);
    layer.merge("--batch-size", "batch_size", cfg.batch_size);
    layer.merge("--lr", "lr", cfg.learning_rate);
    layer.merge("--momentum", "momentum", cfg.momentum);
    layer.merge("--lr-decay", "lr_decay", cfg.lr_decay_gamma);
    layer.merge("--lambda", "lambda", cfg.jacobian_lambda);
    layer.merge("--fd-step", "fd_step", cfg.jacobian_fd_step);
    layer.merge("--seed", "seed", cfg.seed);
    layer.merge("--augment", "augment", cfg.augment);
    layer.merge("--augment-pad", "augment_pad", cfg.augment_pad);
    layer.merge("--val-fraction", "val_fraction", cfg.val_fraction);
    cfg.validate();
    require(cfg.epochs >= 1, "epochs: must be >= 1");
}

json train_config_echo(const TrainConfig& cfg) {
    return json{{"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"lr", cfg.learning_rate},
                {"momentum", cfg.momentum},
                {"lr_decay", cfg.lr_decay_gamma},
                {"lambda", cfg.jacobian_lambda},
                {"fd_step", cfg.jacobian_fd_step},
                {"seed", cfg.seed},
                {"augment", cfg.augment},
                {"augment_pad", cfg.augment_pad},
                {"val_fraction", cfg.val_fraction}};
}

struct GridArgs {
    std::vector<float> radii; // explicit grid; wins over r_max/r_count
    float r_max = 1.0f;
    std::size_t r_count = 41;
};

void add_grid(CLI::App* cmd, GridArgs& g) {
    cmd->add_option("--radii", g.radii, "explicit radius grid (ascending, starting at 0)")
        ->delimiter(',');
    cmd->add_option("--r-max", g.r_max, "largest radius of the generated grid");
    cmd->add_option("--r-count", g.r_count, "number of grid radii");
}

void merge_grid(ConfigLayer& layer, GridArgs& g) {
    layer.merge("--radii", "radii", g.radii);
    layer.merge("--r-max", "r_max", g.r_max);
    layer.merge("--r-count", "r_count", g.r_count);
}

std::vector<float> resolve_radii(const GridArgs& g) {
    if (!g.radii.empty()) {
        require(g.radii.front() == 0.0f, "radii: grid must start at 0");
        for (std::size_t i = 1; i < g.radii.size(); ++i) {
            require(g.radii[i] >= g.radii[i - 1] && std::isfinite(g.radii[i]),
                    "radii: grid must be ascending and finite");
        }
        return g.radii;
    }
    require(g.r_count >= 2, "radii: r-count must be >= 2");
    require(g.r_max > 0.0f && std::isfinite(g.r_max), "radii: r-max must be positive and finite");
    std::vector<float> out(g.r_count);
    for (std::size_t i = 0; i < g.r_count; ++i) {
        out[i] = g.r_max * static_cast<float>(i) / static_cast<float>(g.r_count - 1);
    }
    out.front() = 0.0f;
    return out;
}

// ---- small shared helpers ---------------------------------------------------

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    out.flush();
    if (!out) throw parse_error("write failed: " + path);
}

std::string timestamp_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// The one place timestamps are allowed: a sidecar, never a CSV body.
void write_meta(const std::string& out_dir, const std::string& subcommand, int threads) {
    write_json_file(out_dir + "/run_meta.json",
                    json{{"subcommand", subcommand},
                         {"timestamp_utc", timestamp_utc()},
                         {"threads_requested", threads},
                         {"threads_effective", effective_threads(ExecPolicy{threads})}});
}

void write_echo(const std::string& out_dir, const std::string& subcommand, json echo,
                const std::string& out_value, int threads) {
    echo["out"] = out_value;
    echo["threads"] = threads;
    write_json_file(out_dir + "/" + subcommand + "_config.json", echo);
}

std::vector<float> raw_logits(const FeatureConvexClassifier& clf, const Dataset& ds) {
    std::vector<float> logits(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) logits[i] = raw_logit(clf, ds.inputs[i]);
    return logits;
}

float median(std::vector<float> v) {
    if (v.empty()) return std::numeric_limits<float>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5f * (v[n / 2 - 1] + v[n / 2]);
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
    DataArgs data;
    NetArgs net;
    TrainConfig cfg;
    std::string model_name = "model.fcm";
};

void run_train(const TrainArgs& args, const CommonArgs& common, const std::string& out_dir) {
    const Dataset ds = load_data(args.data);
    const FeatureMap map = args.net.map_kind == "identity" ? identity_map(ds.dim())
                                                           : concat_map_from_mean(ds.inputs);
    IcnnSpec spec;
    spec.input_dim = map.output_dim();
    spec.hidden_dims = args.net.hidden;
    spec.passthrough = args.net.passthrough;
    spec.seed = args.net.icnn_seed;

    const TrainResult result = train(spec, map, ds, args.cfg, ExecPolicy{common.threads});
    const std::string model_path = out_dir + "/" + args.model_name;
    model_save(result.classifier, model_path);
    write_history_csv(out_dir + "/history.csv", result.history);

    json echo = data_echo(args.data);
    echo.update(net_echo(args.net));
    echo.update(train_config_echo(args.cfg));
    echo["model"] = args.model_name;
    write_echo(out_dir, "train", echo, out_dir, common.threads);

    const EpochStats& last = result.history.back();
    std::cout << "trained on " << ds.size() << " samples, " << args.cfg.epochs
              << " epochs: train_acc " << csv_num(last.train_acc) << ", val_balanced_acc "
              << csv_num(last.val_balanced_acc) << ", tau " << csv_num(result.classifier.tau)
              << " -> " << model_path << "\n";
}

// ---- certify ----------------------------------------------------------------

struct CertifyArgs {
    DataArgs data;
    std::string model;
};

void run_certify(const CertifyArgs& args, const CommonArgs& common, const std::string& out_dir) {
    const FeatureConvexClassifier clf = model_load(args.model);
    const Dataset ds = load_data(args.data);
    const auto certs = certify_batch(clf, ds.inputs, ExecPolicy{common.threads});
    const std::string csv_path = out_dir + "/certificates.csv";
    write_certificates_csv(csv_path, ds.labels, certs);

    json echo = data_echo(args.data);
    echo["model"] = args.model;
    write_echo(out_dir, "certify", echo, out_dir, common.threads);

    std::size_t certified = 0;
    for (const Certificate& c : certs) certified += c.predicted_class == 1 ? 1 : 0;
    std::cout << "certified " << certs.size() << " inputs (" << certified
              << " predicted class 1) -> " << csv_path << "\n";
}

// ---- curve ------------------------------------------------------------------

struct CurveArgs {
    DataArgs data;
    std::string model;
    std::string norm = "2";
    GridArgs grid;
    bool rebalance = false;
};

void run_curve(const CurveArgs& args, const CommonArgs& common, const std::string& out_dir) {
    FeatureConvexClassifier clf = model_load(args.model);
    const Dataset ds = load_data(args.data);
    if (args.rebalance) clf.tau = balance_threshold(raw_logits(clf, ds), ds.labels);

    const Norm p = norm_from_string(args.norm);
    const std::vector<float> radii = resolve_radii(args.grid);
    const auto curve = certified_accuracy_curve(clf, ds, p, radii, ExecPolicy{common.threads});
    const std::string csv_path = out_dir + "/curve.csv";
    write_curve_csv(csv_path, curve);

    json echo = data_echo(args.data);
    echo["model"] = args.model;
    echo["norm"] = args.norm;
    echo["radii"] = args.grid.radii;
    echo["r_max"] = args.grid.r_max;
    echo["r_count"] = args.grid.r_count;
    echo["rebalance"] = args.rebalance;
    echo["radii_resolved"] = radii;
    write_echo(out_dir, "curve", echo, out_dir, common.threads);

    const auto [a1, a2] = clean_accuracies(clf, ds);
    std::cout << "alpha1 " << csv_num(a1) << ", alpha2 " << csv_num(a2) << ", tau "
              << csv_num(clf.tau) << " -> " << csv_path << "\n";
}

// ---- surface ----------------------------------------------------------------

struct SurfaceArgs {
    DataArgs data;
    std::string model;
    std::string norm = "2";
    GridArgs grid;
    std::vector<float> taus; // explicit; else a logit-quantile grid
    std::size_t tau_count = 41;
};

void run_surface(const SurfaceArgs& args, const CommonArgs& common, const std::string& out_dir) {
    const FeatureConvexClassifier clf = model_load(args.model);
    const Dataset ds = load_data(args.data);
    const Norm p = norm_from_string(args.norm);
    const std::vector<float> radii = resolve_radii(args.grid);
    const std::vector<float> taus =
        args.taus.empty() ? quantile_tau_grid(raw_logits(clf, ds), args.tau_count) : args.taus;

    const SurfaceGrid grid = robustness_surface(clf, ds, p, taus, radii, ExecPolicy{common.threads});
    const std::string csv_path = out_dir + "/surface.csv";
    write_surface_csv(csv_path, grid);

    json echo = data_echo(args.data);
    echo["model"] = args.model;
    echo["norm"] = args.norm;
    echo["radii"] = args.grid.radii;
    echo["r_max"] = args.grid.r_max;
    echo["r_count"] = args.grid.r_count;
    echo["taus"] = args.taus;
    echo["tau_count"] = args.tau_count;
    echo["radii_resolved"] = radii;
    echo["taus_resolved"] = taus;
    write_echo(out_dir, "surface", echo, out_dir, common.threads);

    std::cout << grid.rows.size() << " tau rows x " << radii.size() << " radii -> " << csv_path
              << "\n";
}

// ---- separability -----------------------------------------------------------

struct SepArgs {
    DataArgs data;
    double tol = 1e-6;
    int M = -1; // the Monte-Carlo trio; all three set selects MC mode
    int N = -1;
    int d = -1;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    bool mc_mode = false; // derived during validation
};

void run_separability(const SepArgs& args, const CommonArgs& common, const std::string& out_dir) {
    json echo;
    if (args.mc_mode) {
        const double freq =
            mc_separability(args.M, args.N, args.d, args.trials, args.seed, ExecPolicy{common.threads});
        const double bound = thm4_bound(args.M, args.N, args.d);
        const std::string json_path = out_dir + "/mc_summary.json";
        write_mc_summary_json(json_path, args.M, args.N, args.d, args.trials, freq, bound);
        echo = json{{"M", args.M},     {"N", args.N},       {"d", args.d},
                    {"trials", args.trials}, {"seed", args.seed}, {"tol", args.tol}};
        write_echo(out_dir, "separability", echo, out_dir, common.threads);
        std::cout << "frequency " << csv_num(freq) << ", bound " << csv_num(bound) << " (M=" << args.M
                  << ", N=" << args.N << ", d=" << args.d << ", trials=" << args.trials << ") -> "
                  << json_path << "\n";
        return;
    }

    const Dataset ds = load_data(args.data);
    std::vector<Tensor> X1, X2;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] == 1) {
            X1.push_back(ds.inputs[i]);
        } else if (ds.labels[i] == 2) {
            X2.push_back(ds.inputs[i]);
        } else {
            throw contract_error("separability: dataset labels must be 1 or 2 (use --class-a/b)");
        }
    }
    const SeparabilityReport report =
        is_convexly_separable(X1, X2, args.tol, ExecPolicy{common.threads});
    const std::string csv_path = out_dir + "/separability.csv";
    write_separability_csv(csv_path, report);

    echo = data_echo(args.data);
    echo["tol"] = args.tol;
    write_echo(out_dir, "separability", echo, out_dir, common.threads);

    std::cout << "separable: " << (report.separable ? "yes" : "no") << ", min_error "
              << csv_num(report.min_error);
    if (report.witness) std::cout << ", witness " << *report.witness;
    std::cout << " -> " << csv_path << "\n";
}

// ---- bound ------------------------------------------------------------------

struct BoundArgs {
    int M = 1;
    int N = 1;
    int d_max = 1;
};

void run_bound(const BoundArgs& args, const CommonArgs& common, const std::string& out_dir) {
    std::string table = "d,bound\n";
    for (int d = 1; d <= args.d_max; ++d) {
        table += std::to_string(d) + "," + csv_num(thm4_bound(args.M, args.N, d)) + "\n";
    }
    std::cout << table;
    const std::string csv_path = out_dir + "/bound.csv";
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw parse_error("bound csv: cannot open for writing: " + csv_path);
    out << table;
    out.flush();
    if (!out) throw parse_error("bound csv: write failed: " + csv_path);

    write_echo(out_dir, "bound", json{{"M", args.M}, {"N", args.N}, {"d_max", args.d_max}},
               out_dir, common.threads);
}

// ---- attack -----------------------------------------------------------------

struct AttackArgs {
    DataArgs data;
    std::string model;
    std::string norm = "2";
    float factor = 0.999f;
    int steps = 50;
    int restarts = 5;
    float step_size = -1.0f; // <= 0 selects the default 2·budget/steps
    std::uint64_t seed = 0;
};

void run_attack(const AttackArgs& args, const CommonArgs& common, const std::string& out_dir) {
    const FeatureConvexClassifier clf = model_load(args.model);
    const Dataset ds = load_data(args.data);
    const Norm p = norm_from_string(args.norm);
    const auto certs = certify_batch(clf, ds.inputs, ExecPolicy{common.threads});

    // Audit every certified point with a finite radius at the scaled budget.
    std::vector<std::size_t> index;
    std::vector<Tensor> inputs;
    std::vector<float> budgets;
    for (std::size_t i = 0; i < certs.size(); ++i) {
        const float r = certs[i].radii[norm_index(p)];
        if (certs[i].predicted_class != 1 || !std::isfinite(r)) continue;
        index.push_back(i);
        inputs.push_back(ds.inputs[i]);
        budgets.push_back(args.factor * r);
    }
    const auto results = attack_batch(clf, inputs, budgets, p, args.steps, args.step_size,
                                      args.restarts, args.seed, ExecPolicy{common.threads});

    const std::string csv_path = out_dir + "/attack.csv";
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw parse_error("attack csv: cannot open for writing: " + csv_path);
        out << "index,radius,budget,success,steps,delta_norm\n";
        for (std::size_t k = 0; k < results.size(); ++k) {
            out << index[k] << "," << csv_num(certs[index[k]].radii[norm_index(p)]) << ","
                << csv_num(budgets[k]) << "," << (results[k].success ? 1 : 0) << ","
                << results[k].steps << "," << csv_num(results[k].norm) << "\n";
        }
        out.flush();
        if (!out) throw parse_error("attack csv: write failed: " + csv_path);
    }

    std::size_t successes = 0;
    for (const AttackResult& r : results) successes += r.success ? 1 : 0;
    write_json_file(out_dir + "/attack_summary.json",
                    json{{"points", results.size()},
                         {"successes", successes},
                         {"factor", args.factor},
                         {"norm", args.norm}});

    json echo = data_echo(args.data);
    echo["model"] = args.model;
    echo["norm"] = args.norm;
    echo["factor"] = args.factor;
    echo["steps"] = args.steps;
    echo["restarts"] = args.restarts;
    echo["step_size"] = args.step_size;
    echo["seed"] = args.seed;
    write_echo(out_dir, "attack", echo, out_dir, common.threads);

    std::cout << "audited " << results.size() << " certified points at factor "
              << csv_num(args.factor) << " (l" << args.norm << "): " << successes << " flips -> "
              << csv_path << "\n";
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
    DataArgs train_data;
    DataArgs test_data;
    NetArgs net;
    TrainConfig cfg;
};

void run_sweep(const SweepArgs& args, const CommonArgs& common, const std::string& out_dir) {
    const Dataset train_all = load_data(args.train_data);
    const Dataset test_all = load_data(args.test_data);

    std::set<int> classes(train_all.labels.begin(), train_all.labels.end());
    require(classes.size() >= 2, "sweep: need at least two classes");

    std::string table =
        "class_a,class_b,alpha1,alpha2,balanced_acc,tau,certified_count,"
        "median_radius_l1,median_radius_l2,median_radius_linf\n";
    const ExecPolicy policy{common.threads};
    for (auto a = classes.begin(); a != classes.end(); ++a) {
        for (auto b = std::next(a); b != classes.end(); ++b) {
            const Dataset tr = select_pair(train_all, *a, *b);
            const Dataset te = select_pair(test_all, *a, *b);
            const FeatureMap map = args.net.map_kind == "identity"
                                       ? identity_map(tr.dim())
                                       : concat_map_from_mean(tr.inputs);
            IcnnSpec spec;
            spec.input_dim = map.output_dim();
            spec.hidden_dims = args.net.hidden;
            spec.passthrough = args.net.passthrough;
            spec.seed = args.net.icnn_seed;

            const TrainResult result = train(spec, map, tr, args.cfg, policy);
            const FeatureConvexClassifier& clf = result.classifier;
            const auto [a1, a2] = clean_accuracies(clf, te);
            const auto certs = certify_batch(clf, te.inputs, policy);
            std::array<std::vector<float>, 3> radii;
            for (const Certificate& c : certs) {
                if (c.predicted_class != 1) continue;
                for (std::size_t k = 0; k < 3; ++k) radii[k].push_back(c.radii[k]);
            }
            table += std::to_string(*a) + "," + std::to_string(*b) + "," + csv_num(a1) + "," +
                     csv_num(a2) + "," + csv_num(0.5 * (a1 + a2)) + "," + csv_num(clf.tau) + "," +
                     std::to_string(radii[0].size());
            for (std::size_t k = 0; k < 3; ++k) table += "," + csv_num(median(radii[k]));
            table += "\n";
            std::cout << "pair (" << *a << ", " << *b << "): balanced_acc "
                      << csv_num(0.5 * (a1 + a2)) << ", certified " << radii[0].size() << "/"
                      << te.size() << "\n";
        }
    }

    const std::string csv_path = out_dir + "/sweep.csv";
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw parse_error("sweep csv: cannot open for writing: " + csv_path);
    out << table;
    out.flush();
    if (!out) throw parse_error("sweep csv: write failed: " + csv_path);

    json echo = data_echo(args.train_data);
    echo["test_images"] = args.test_data.images;
    echo["test_labels"] = args.test_data.labels;
    echo["test_csv"] = args.test_data.csv;
    echo.update(net_echo(args.net));
    echo.update(train_config_echo(args.cfg));
    write_echo(out_dir, "sweep", echo, out_dir, common.threads);

    std::cout << "-> " << csv_path << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"feature-convex classifiers: training, certification, attacks, convex geometry"};
    app.require_subcommand(1);

    CommonArgs common;

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "fit a classifier and save the model");
    add_common(train_cmd, common);
    add_data(train_cmd, train_args.data);
    add_net(train_cmd, train_args.net);
    add_train_config(train_cmd, train_args.cfg);
    train_cmd->add_option("--model", train_args.model_name,
                          "model file name inside the output directory");

    CertifyArgs certify_args;
    CLI::App* certify_cmd = app.add_subcommand("certify", "emit robustness certificates as CSV");
    add_common(certify_cmd, common);
    add_data(certify_cmd, certify_args.data);
    certify_cmd->add_option("--model", certify_args.model, "saved classifier file");

    CurveArgs curve_args;
    CLI::App* curve_cmd = app.add_subcommand("curve", "certified-accuracy curve at one threshold");
    add_common(curve_cmd, common);
    add_data(curve_cmd, curve_args.data);
    curve_cmd->add_option("--model", curve_args.model, "saved classifier file");
    curve_cmd->add_option("--norm", curve_args.norm, "perturbation norm: 1 | 2 | inf");
    add_grid(curve_cmd, curve_args.grid);
    curve_cmd->add_option("--rebalance", curve_args.rebalance,
                          "re-balance tau on this dataset before the curve (true/false)");

    SurfaceArgs surface_args;
    CLI::App* surface_cmd = app.add_subcommand("surface", "certified-accuracy across a tau grid");
    add_common(surface_cmd, common);
    add_data(surface_cmd, surface_args.data);
    surface_cmd->add_option("--model", surface_args.model, "saved classifier file");
    surface_cmd->add_option("--norm", surface_args.norm, "perturbation norm: 1 | 2 | inf");
    add_grid(surface_cmd, surface_args.grid);
    surface_cmd->add_option("--taus", surface_args.taus, "explicit ascending tau grid")
        ->delimiter(',');
    surface_cmd->add_option("--tau-count", surface_args.tau_count,
                            "tau grid size when generated from logit quantiles");

    SepArgs sep_args;
    CLI::App* sep_cmd = app.add_subcommand(
        "separability", "convex-separability report, or Monte-Carlo frequency with --M/--N/--d");
    add_common(sep_cmd, common);
    add_data(sep_cmd, sep_args.data);
    sep_cmd->add_option("--tol", sep_args.tol, "reconstruction-residual verdict tolerance");
    sep_cmd->add_option("--M", sep_args.M, "Monte-Carlo: class-1 points per trial");
    sep_cmd->add_option("--N", sep_args.N, "Monte-Carlo: class-2 points per trial");
    sep_cmd->add_option("--d", sep_args.d, "Monte-Carlo: dimension");
    sep_cmd->add_option("--trials", sep_args.trials, "Monte-Carlo: number of trials");
    sep_cmd->add_option("--seed", sep_args.seed, "Monte-Carlo: seed");

    BoundArgs bound_args;
    CLI::App* bound_cmd =
        app.add_subcommand("bound", "separability lower-bound table over dimensions");
    add_common(bound_cmd, common);
    bound_cmd->add_option("--M", bound_args.M, "class-1 points");
    bound_cmd->add_option("--N", bound_args.N, "class-2 points");
    bound_cmd->add_option("--d-max", bound_args.d_max, "table covers d = 1..d-max");

    AttackArgs attack_args;
    CLI::App* attack_cmd =
        app.add_subcommand("attack", "PGD audit inside scaled certified radii");
    add_common(attack_cmd, common);
    add_data(attack_cmd, attack_args.data);
    attack_cmd->add_option("--model", attack_args.model, "saved classifier file");
    attack_cmd->add_option("--norm", attack_args.norm, "perturbation norm: 1 | 2 | inf");
    attack_cmd->add_option("--factor", attack_args.factor,
                           "budget = factor x certified radius (sound below 1)");
    attack_cmd->add_option("--steps", attack_args.steps, "gradient steps per restart");
    attack_cmd->add_option("--restarts", attack_args.restarts, "attack restarts per point");
    attack_cmd->add_option("--step-size", attack_args.step_size,
                           "step size; <= 0 selects 2*budget/steps");
    attack_cmd->add_option("--seed", attack_args.seed, "attack seed");

    SweepArgs sweep_args;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "train and evaluate every class pair of a dataset");
    add_common(sweep_cmd, common);
    add_data(sweep_cmd, sweep_args.train_data);
    add_data(sweep_cmd, sweep_args.test_data, "test-");
    add_net(sweep_cmd, sweep_args.net);
    add_train_config(sweep_cmd, sweep_args.cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
            return app.exit(e); // --help and friends
        }
        print_error("usage", e.what());
        return 2;
    }

    CLI::App* active = app.get_subcommands().front();
    const std::string sub = active->get_name();

    // Resolve phase: merge the config file under the flags and validate
    // everything cheap before any real work. Mistakes here are exit code 2.
    try {
        ConfigLayer layer{load_config(common.config_path), active, {}};
        layer.known.insert("config"); // reserved; never read from the file
        merge_common(layer, common);
        if (sub == "train") {
            merge_data(layer, train_args.data);
            merge_net(layer, train_args.net);
            merge_train_config(layer, train_args.cfg);
            layer.merge("--model", "model", train_args.model_name);
            validate_data(train_args.data, "train");
            require(!train_args.model_name.empty(), "train: model name must be nonempty");
        } else if (sub == "certify") {
            merge_data(layer, certify_args.data);
            layer.merge("--model", "model", certify_args.model);
            validate_data(certify_args.data, "certify");
            require(!certify_args.model.empty(), "certify: --model is required");
        } else if (sub == "curve") {
            merge_data(layer, curve_args.data);
            layer.merge("--model", "model", curve_args.model);
            layer.merge("--norm", "norm", curve_args.norm);
            merge_grid(layer, curve_args.grid);
            layer.merge("--rebalance", "rebalance", curve_args.rebalance);
            validate_data(curve_args.data, "curve");
            require(!curve_args.model.empty(), "curve: --model is required");
            norm_from_string(curve_args.norm);
            resolve_radii(curve_args.grid);
        } else if (sub == "surface") {
            merge_data(layer, surface_args.data);
            layer.merge("--model", "model", surface_args.model);
            layer.merge("--norm", "norm", surface_args.norm);
            merge_grid(layer, surface_args.grid);
            layer.merge("--taus", "taus", surface_args.taus);
            layer.merge("--tau-count", "tau_count", surface_args.tau_count);
            validate_data(surface_args.data, "surface");
            require(!surface_args.model.empty(), "surface: --model is required");
            norm_from_string(surface_args.norm);
            resolve_radii(surface_args.grid);
            for (std::size_t i = 1; i < surface_args.taus.size(); ++i) {
                require(surface_args.taus[i] >= surface_args.taus[i - 1],
                        "surface: taus must be ascending");
            }
            if (surface_args.taus.empty()) {
                require(surface_args.tau_count >= 2, "surface: tau-count must be >= 2");
            }
        } else if (sub == "separability") {
            merge_data(layer, sep_args.data);
            layer.merge("--tol", "tol", sep_args.tol);
            layer.merge("--M", "M", sep_args.M);
            layer.merge("--N", "N", sep_args.N);
            layer.merge("--d", "d", sep_args.d);
            layer.merge("--trials", "trials", sep_args.trials);
            layer.merge("--seed", "seed", sep_args.seed);
            require(sep_args.tol > 0.0, "separability: tol must be positive");
            const bool any_mc = sep_args.M >= 0 || sep_args.N >= 0 || sep_args.d >= 0 ||
                                sep_args.trials > 0;
            const bool has_data = !sep_args.data.images.empty() || !sep_args.data.csv.empty();
            if (any_mc) {
                require(!has_data, "separability: Monte-Carlo mode takes no dataset");
                require(sep_args.M >= 1 && sep_args.N >= 1 && sep_args.d >= 1 &&
                            sep_args.trials >= 1,
                        "separability: Monte-Carlo mode needs --M, --N, --d, --trials all >= 1");
                sep_args.mc_mode = true;
            } else {
                validate_data(sep_args.data, "separability");
            }
        } else if (sub == "bound") {
            layer.merge("--M", "M", bound_args.M);
            layer.merge("--N", "N", bound_args.N);
            layer.merge("--d-max", "d_max", bound_args.d_max);
            require(bound_args.M >= 1 && bound_args.N >= 1, "bound: M and N must be >= 1");
            require(bound_args.d_max >= 1, "bound: d-max must be >= 1");
        } else if (sub == "attack") {
            merge_data(layer, attack_args.data);
            layer.merge("--model", "model", attack_args.model);
            layer.merge("--norm", "norm", attack_args.norm);
            layer.merge("--factor", "factor", attack_args.factor);
            layer.merge("--steps", "steps", attack_args.steps);
            layer.merge("--restarts", "restarts", attack_args.restarts);
            layer.merge("--step-size", "step_size", attack_args.step_size);
            layer.merge("--seed", "seed", attack_args.seed);
            validate_data(attack_args.data, "attack");
            require(!attack_args.model.empty(), "attack: --model is required");
            norm_from_string(attack_args.norm);
            require(attack_args.factor > 0.0f && std::isfinite(attack_args.factor),
                    "attack: factor must be positive and finite");
            require(attack_args.steps >= 1, "attack: steps must be >= 1");
            require(attack_args.restarts >= 1, "attack: restarts must be >= 1");
        } else if (sub == "sweep") {
            merge_data(layer, sweep_args.train_data);
            merge_data(layer, sweep_args.test_data, "test-");
            merge_net(layer, sweep_args.net);
            merge_train_config(layer, sweep_args.cfg);
            validate_data(sweep_args.train_data, "sweep");
            validate_data(sweep_args.test_data, "sweep (test)");
            require(sweep_args.train_data.class_a < 0,
                    "sweep: enumerates class pairs itself; class-a/b are not accepted");
        }
        layer.finish();
    } catch (const contract_error& e) {
        print_error("config", e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error("config", e.what());
        return 2;
    }

    // Run phase: anything thrown past here is a runtime failure, exit code 1.
    try {
        const std::string out_dir = resolve_out(common);
        fs::create_directories(out_dir);
        if (sub == "train") {
            run_train(train_args, common, out_dir);
        } else if (sub == "certify") {
            run_certify(certify_args, common, out_dir);
        } else if (sub == "curve") {
            run_curve(curve_args, common, out_dir);
        } else if (sub == "surface") {
            run_surface(surface_args, common, out_dir);
        } else if (sub == "separability") {
            run_separability(sep_args, common, out_dir);
        } else if (sub == "bound") {
            run_bound(bound_args, common, out_dir);
        } else if (sub == "attack") {
            run_attack(attack_args, common, out_dir);
        } else if (sub == "sweep") {
            run_sweep(sweep_args, common, out_dir);
        }
        write_meta(out_dir, sub, common.threads);
    } catch (const std::exception& e) {
        print_error("runtime", e.what());
        return 1;
    }
    return 0;
}
