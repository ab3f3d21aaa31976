#include "saliency/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "saliency/attribution.hpp"
#include "saliency/dataset.hpp"
#include "saliency/render.hpp"
#include "saliency/rng.hpp"
#include "saliency/sanity.hpp"
#include "saliency/serialize.hpp"
#include "saliency/theory.hpp"
#include "saliency/train.hpp"

namespace saliency {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

std::size_t parse_positive(const std::string& text, const std::string& what) {
    std::size_t value = 0;
    try {
        value = std::stoul(text);
    } catch (...) {
        throw Error("architecture: bad " + what + " '" + text + "'");
    }
    if (value == 0) throw Error("architecture: " + what + " must be positive");
    return value;
}

} // namespace

Shape parse_shape(const std::string& text) {
    Shape shape;
    for (const std::string& part : split(text, 'x')) {
        shape.push_back(parse_positive(part, "dimension"));
    }
    return shape;
}

Network parse_architecture(const std::string& arch, const Shape& input_shape,
                           bool bias_enabled) {
    Network net;
    net.input_shape = input_shape;
    Shape cur = input_shape;
    for (const std::string& token : split(arch, ',')) {
        if (token.empty()) throw Error("architecture: empty token");
        const std::vector<std::string> f = split(token, ':');
        if (f[0] == "relu" && f.size() == 1) {
            net.layers.push_back(Layer::relu());
        } else if (f[0] == "flatten" && f.size() == 1) {
            net.layers.push_back(Layer::flatten());
        } else if (f[0] == "dense" && f.size() == 2) {
            if (cur.size() != 1) {
                throw Error("architecture: dense needs a flat input, got " + shape_str(cur) +
                            " (insert flatten)");
            }
            net.layers.push_back(
                Layer::dense(parse_positive(f[1], "width"), cur[0], bias_enabled));
        } else if (f[0] == "conv" && f.size() == 3) {
            if (cur.size() != 3) {
                throw Error("architecture: conv needs a (channels,h,w) input, got " +
                            shape_str(cur));
            }
            const std::vector<std::string> k = split(f[2], 'x');
            if (k.size() != 2) throw Error("architecture: conv kernel must be KHxKW");
            net.layers.push_back(Layer::conv2d(parse_positive(f[1], "channels"), cur[0],
                                               parse_positive(k[0], "kernel height"),
                                               parse_positive(k[1], "kernel width"),
                                               bias_enabled));
        } else {
            throw Error("architecture: unknown token '" + token + "'");
        }
        cur = net.layers.back().output_shape(cur, net.layers.size() - 1);
    }
    if (cur.size() != 1) {
        throw Error("architecture: final output must be a vector of logits, got " +
                    shape_str(cur));
    }
    net.num_classes = cur[0];
    net.validate();
    return net;
}

namespace {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());
}

Method parse_method(const std::string& name) {
    const std::optional<Method> m = method_from_name(name);
    if (!m) throw Error("unknown method '" + name + "'");
    return *m;
}

std::vector<Method> parse_methods(const std::string& csv) {
    std::vector<Method> methods;
    for (const std::string& name : split(csv, ',')) methods.push_back(parse_method(name));
    return methods;
}

LabeledDataset load_dataset(std::size_t synthetic_n, const std::string& images,
                            const std::string& labels, std::uint64_t seed) {
    if (synthetic_n > 0) return synthetic_digits(synthetic_n, seed);
    if (images.empty() || labels.empty()) {
        throw Error("provide either --synthetic N or both --images and --labels");
    }
    return load_idx(images, labels);
}

void write_train_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("csv: cannot open " + path + " for writing");
    out.precision(17);
    out << "epoch,loss\n";
    for (std::size_t e = 0; e < report.epoch_losses.size(); ++e) {
        out << e << "," << report.epoch_losses[e] << "\n";
    }
    out << "# final_train_accuracy=" << report.final_train_accuracy << "\n";
}

struct CommonFlags {
    std::uint64_t seed = 0;
    std::string out = ".";
    std::string config;
};

/// Config-file or flag misuse that should exit with the usage code.
struct UsageError : Error {
    using Error::Error;
};

void add_common(CLI::App* cmd, CommonFlags& common) {
    cmd->add_option("--seed", common.seed, "Random seed (env SF_SEED used when flag absent)")
        ->envname("SF_SEED");
    cmd->add_option("--out", common.out, "Output directory");
    cmd->add_option("--config", common.config,
                    "Config file: one 'key = value' per line, '#' comments; "
                    "command-line flags win");
}

std::string trim(const std::string& s) {
    std::size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

/// Applies `key = value` lines to the subcommand's options. Keys name long
/// flags without the leading dashes; unknown keys are usage errors; options
/// given on the command line keep their values.
void apply_config_file(CLI::App* cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config: cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config: line " + std::to_string(lineno) + " is not 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config") {
            throw UsageError("config: unknown key '" + key + "'");
        }
        if (opt->count() > 0) continue; // flag wins
        opt->add_result(value);
        opt->run_callback();
    }
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"saliency attribution laboratory"};
    app.require_subcommand(1);

    // ------------------------------------------------------------------ train
    auto* cmd_train = app.add_subcommand("train", "Train a network and save it");
    CommonFlags train_common;
    std::string train_arch = "flatten,dense:128,relu,dense:10";
    std::string train_input = "16x16";
    std::size_t train_synthetic = 0;
    std::string train_images, train_labels;
    bool train_no_bias = false;
    std::size_t train_epochs = 40, train_batch = 32;
    double train_lr = 0.1;
    cmd_train->add_option("--arch", train_arch, "Layer list, e.g. flatten,dense:128,relu,dense:10");
    cmd_train->add_option("--input", train_input, "Input shape, e.g. 16x16 or 1x16x16");
    cmd_train->add_option("--synthetic", train_synthetic, "Generate N synthetic digit images");
    cmd_train->add_option("--images", train_images, "IDX image file");
    cmd_train->add_option("--labels", train_labels, "IDX label file");
    cmd_train->add_flag("--no-bias", train_no_bias, "Disable biases (pinned to 0)");
    cmd_train->add_option("--epochs", train_epochs, "Training epochs");
    cmd_train->add_option("--batch", train_batch, "Mini-batch size");
    cmd_train->add_option("--lr", train_lr, "Learning rate");
    add_common(cmd_train, train_common);

    // -------------------------------------------------------------- attribute
    auto* cmd_attr = app.add_subcommand("attribute", "Compute a saliency map for one image");
    CommonFlags attr_common;
    std::string attr_net, attr_image, attr_method = "cgi";
    std::size_t attr_index = 0;
    int attr_node = -1;
    double attr_epsilon = 1e-6;
    cmd_attr->add_option("--net", attr_net, "Network file (.sfn)")->required();
    cmd_attr->add_option("--image", attr_image, "IDX image file")->required();
    cmd_attr->add_option("--index", attr_index, "Image index within the file");
    cmd_attr->add_option("--method", attr_method, "gradinput|cgi|lrp|clrp")
        ->check(CLI::IsMember({"gradinput", "cgi", "lrp", "clrp"}));
    cmd_attr->add_option("--node", attr_node, "Output node to explain (default: argmax logit)");
    cmd_attr->add_option("--epsilon", attr_epsilon, "LRP stabilizer");
    add_common(cmd_attr, attr_common);

    // ----------------------------------------------------------- sanity-params
    auto* cmd_sp = app.add_subcommand("sanity-params", "Parameter-randomization check");
    CommonFlags sp_common;
    std::string sp_net, sp_mode = "layerwise";
    std::size_t sp_synthetic = 0, sp_count = 64;
    std::string sp_images, sp_labels, sp_methods = "gradinput,cgi";
    bool sp_heatmaps = false;
    double sp_epsilon = 1e-6;
    cmd_sp->add_option("--net", sp_net, "Trained network file (.sfn)")->required();
    cmd_sp->add_option("--mode", sp_mode, "layerwise|cascading")
        ->check(CLI::IsMember({"layerwise", "cascading"}));
    cmd_sp->add_option("--synthetic", sp_synthetic, "Generate N synthetic digit images");
    cmd_sp->add_option("--images", sp_images, "IDX image file");
    cmd_sp->add_option("--labels", sp_labels, "IDX label file");
    cmd_sp->add_option("--count", sp_count, "Evaluation images per condition");
    cmd_sp->add_option("--methods", sp_methods, "Comma-separated method list");
    cmd_sp->add_option("--epsilon", sp_epsilon, "LRP stabilizer");
    cmd_sp->add_flag("--heatmaps", sp_heatmaps, "Also write per-condition heatmaps");
    add_common(cmd_sp, sp_common);

    // ------------------------------------------------------------- sanity-data
    auto* cmd_sd = app.add_subcommand("sanity-data", "Data-randomization (permuted labels) check");
    CommonFlags sd_common;
    std::string sd_arch = "flatten,dense:1024,relu,dense:10";
    std::string sd_input = "16x16";
    std::size_t sd_synthetic = 0, sd_count = 64;
    std::string sd_images, sd_labels, sd_methods = "gradinput,cgi";
    std::size_t sd_epochs = 200, sd_batch = 32;
    double sd_lr = 0.2, sd_epsilon = 1e-6;
    cmd_sd->add_option("--arch", sd_arch, "Layer list");
    cmd_sd->add_option("--input", sd_input, "Input shape");
    cmd_sd->add_option("--synthetic", sd_synthetic, "Generate N synthetic digit images");
    cmd_sd->add_option("--images", sd_images, "IDX image file");
    cmd_sd->add_option("--labels", sd_labels, "IDX label file");
    cmd_sd->add_option("--count", sd_count, "Held-out evaluation images");
    cmd_sd->add_option("--methods", sd_methods, "Comma-separated method list");
    cmd_sd->add_option("--epochs", sd_epochs, "Training epochs");
    cmd_sd->add_option("--batch", sd_batch, "Mini-batch size");
    cmd_sd->add_option("--lr", sd_lr, "Learning rate");
    cmd_sd->add_option("--epsilon", sd_epsilon, "LRP stabilizer");
    add_common(cmd_sd, sd_common);

    // ----------------------------------------------------------------- theory
    auto* cmd_theory = app.add_subcommand("theory", "Correlated-gradient competition model");
    CommonFlags theory_common;
    double theory_delta = 0.0, theory_overlap = 0.5;
    std::string theory_grid;
    std::size_t theory_trials = 100, theory_n = 10000;
    bool theory_svg = false;
    cmd_theory->add_option("--delta", theory_delta, "Single delta value");
    cmd_theory->add_option("--grid", theory_grid, "Comma-separated delta grid");
    cmd_theory->add_option("--trials", theory_trials, "Trials per delta");
    cmd_theory->add_option("--n", theory_n, "Model dimension (even)");
    cmd_theory->add_option("--overlap", theory_overlap, "Shared-half overlap h1.h2");
    cmd_theory->add_flag("--svg", theory_svg, "Also emit an SVG plot");
    add_common(cmd_theory, theory_common);

    // ----------------------------------------------------------------- render
    auto* cmd_render = app.add_subcommand("render", "Render a stored map as PPM/PGM");
    CommonFlags render_common;
    std::string render_map, render_style = "diverging";
    cmd_render->add_option("--map", render_map, "Saliency map file (.smap)")->required();
    cmd_render->add_option("--style", render_style, "diverging|absolute")
        ->check(CLI::IsMember({"diverging", "absolute"}));
    add_common(cmd_render, render_common);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        for (CLI::App* cmd : app.get_subcommands()) {
            const CLI::Option* copt = cmd->get_option_no_throw("--config");
            if (copt != nullptr && copt->count() > 0) {
                apply_config_file(cmd, copt->as<std::string>());
            }
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    } catch (const UsageError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (*cmd_train) {
            ensure_dir(train_common.out);
            const LabeledDataset ds =
                load_dataset(train_synthetic, train_images, train_labels, train_common.seed);
            Network net = parse_architecture(train_arch, parse_shape(train_input), !train_no_bias);
            initialize_parameters(net, train_common.seed);
            TrainConfig cfg;
            cfg.epochs = train_epochs;
            cfg.batch_size = train_batch;
            cfg.learning_rate = train_lr;
            cfg.seed = train_common.seed;
            const TrainReport report = train(net, ds, cfg);
            save_network(net, train_common.out + "/net.sfn");
            write_train_csv(report, train_common.out + "/train_report.csv");
            std::cout << "trained " << ds.size() << " samples, final accuracy "
                      << report.final_train_accuracy << "\n";
        } else if (*cmd_attr) {
            ensure_dir(attr_common.out);
            const Network net = load_network(attr_net);
            const LabeledDataset images = load_idx_images(attr_image);
            if (attr_index >= images.size()) {
                throw Error("image index " + std::to_string(attr_index) + " out of range");
            }
            const Tensor x = images.image(attr_index).reshaped(net.input_shape);
            std::optional<std::size_t> node;
            if (attr_node >= 0) node = static_cast<std::size_t>(attr_node);
            const Method method = parse_method(attr_method);
            const SaliencyMap map = compute_map(net, x, method, node, attr_epsilon);
            const std::string stem = attr_common.out + "/" + method_name(method) + "_node" +
                                     std::to_string(map.node);
            save_map(map, stem + ".smap");
            render_heatmap(map, HeatmapStyle::Diverging, stem + ".ppm");
            std::cout << "wrote " << stem << ".smap and " << stem << ".ppm\n";
        } else if (*cmd_sp) {
            ensure_dir(sp_common.out);
            const Network net = load_network(sp_net);
            const LabeledDataset images =
                load_dataset(sp_synthetic, sp_images, sp_labels, derive_seed(sp_common.seed, 1));
            const RandomizationPlan plan = sp_mode == "layerwise"
                                               ? layerwise_plan(net, sp_common.seed)
                                               : cascading_plan(net, sp_common.seed);
            SanityOptions opts;
            opts.num_images = sp_count;
            opts.lrp_epsilon = sp_epsilon;
            if (sp_heatmaps) {
                opts.heatmap_dir = sp_common.out + "/heatmaps";
                ensure_dir(opts.heatmap_dir);
            }
            const SanityReport report =
                run_parameter_randomization(net, images, plan, parse_methods(sp_methods), opts);
            write_sanity_csv(report, sp_common.out + "/sanity_params.csv");
            std::ofstream(sp_common.out + "/summary.txt") << sanity_summary(report);
            std::cout << sanity_summary(report);
        } else if (*cmd_sd) {
            ensure_dir(sd_common.out);
            const LabeledDataset ds =
                load_dataset(sd_synthetic, sd_images, sd_labels, derive_seed(sd_common.seed, 1));
            const Network arch = parse_architecture(sd_arch, parse_shape(sd_input), true);
            TrainConfig cfg;
            cfg.epochs = sd_epochs;
            cfg.batch_size = sd_batch;
            cfg.learning_rate = sd_lr;
            cfg.seed = sd_common.seed;
            SanityOptions opts;
            opts.num_images = sd_count;
            opts.lrp_epsilon = sd_epsilon;
            const SanityReport report =
                run_data_randomization(arch, ds, cfg, parse_methods(sd_methods), opts);
            write_sanity_csv(report, sd_common.out + "/sanity_data.csv");
            std::ofstream(sd_common.out + "/summary.txt") << sanity_summary(report);
            std::cout << sanity_summary(report);
        } else if (*cmd_theory) {
            ensure_dir(theory_common.out);
            std::vector<double> deltas;
            if (!theory_grid.empty()) {
                for (const std::string& d : split(theory_grid, ',')) deltas.push_back(std::stod(d));
            } else if (theory_delta > 0.0) {
                deltas.push_back(theory_delta);
            } else {
                deltas = {0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
            }
            std::vector<std::pair<double, TheoryResult>> rows;
            for (double delta : deltas) {
                TheoryConfig cfg;
                cfg.n = theory_n;
                cfg.delta = delta;
                cfg.overlap = theory_overlap;
                cfg.trials = theory_trials;
                cfg.seed = theory_common.seed;
                rows.emplace_back(delta, run_theory(cfg));
            }
            write_theory_csv(rows, theory_common.out + "/theory.csv");
            if (theory_svg) write_theory_svg(rows, theory_common.out + "/theory.svg");
            for (const auto& [delta, r] : rows) {
                std::cout << "delta=" << delta << " c1=" << r.c1.mean << "±" << r.c1.stderr_
                          << " c2=" << r.c2.mean << "±" << r.c2.stderr_ << "\n";
            }
        } else if (*cmd_render) {
            ensure_dir(render_common.out);
            const SaliencyMap map = load_map(render_map);
            const bool diverging = render_style == "diverging";
            const std::string path =
                render_common.out + (diverging ? "/heatmap.ppm" : "/heatmap.pgm");
            render_heatmap(map, diverging ? HeatmapStyle::Diverging : HeatmapStyle::AbsoluteValue,
                           path);
            std::cout << "wrote " << path << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int cli_main(const std::vector<std::string>& args) {
    return run_cli(args);
}

int cli_main(int argc, const char* const* argv) {
    return run_cli(std::vector<std::string>(argv, argv + argc));
}

} // namespace saliency
