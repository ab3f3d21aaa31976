#include "saliency/sanity.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "saliency/render.hpp"
#include "saliency/rng.hpp"
#include "saliency/stats.hpp"

namespace saliency {

namespace {

constexpr double kNonzeroThreshold = 1e-12;

std::vector<double> abs_values(const Tensor& t) {
    std::vector<double> v(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) v[i] = std::abs(t[i]);
    return v;
}

} // namespace

void RandomizationPlan::validate(const Network& net) const {
    if (targets.empty()) throw Error("randomization plan: no targets");
    const std::vector<std::size_t> params = net.parameterized_indices();
    for (std::size_t t : targets) {
        if (mode == RandomizationMode::Layerwise) {
            if (t >= net.layers.size() || !net.layers[t].parameterized()) {
                throw Error("randomization plan: layer " + std::to_string(t) +
                            " is not a parameterized layer");
            }
        } else {
            if (t < 1 || t > params.size()) {
                throw Error("randomization plan: depth " + std::to_string(t) +
                            " out of range [1, " + std::to_string(params.size()) + "]");
            }
        }
    }
}

RandomizationPlan layerwise_plan(const Network& net, std::uint64_t seed) {
    RandomizationPlan plan;
    plan.mode = RandomizationMode::Layerwise;
    plan.targets = net.parameterized_indices();
    plan.seed = seed;
    return plan;
}

RandomizationPlan cascading_plan(const Network& net, std::uint64_t seed) {
    RandomizationPlan plan;
    plan.mode = RandomizationMode::Cascading;
    const std::size_t count = net.parameterized_indices().size();
    for (std::size_t k = 1; k <= count; ++k) plan.targets.push_back(k);
    plan.seed = seed;
    return plan;
}

double nonzero_fraction(const SaliencyMap& map) {
    std::size_t nonzero = 0;
    for (double v : map.scores.data) {
        if (std::abs(v) > kNonzeroThreshold) ++nonzero;
    }
    return static_cast<double>(nonzero) / static_cast<double>(map.scores.size());
}

SimilarityResult map_similarity(const SaliencyMap& a, const SaliencyMap& b) {
    if (!same_shape(a.scores.shape, b.scores.shape)) {
        throw Error("map_similarity: shape mismatch " + shape_str(a.scores.shape) + " vs " +
                    shape_str(b.scores.shape));
    }
    SimilarityResult r;
    r.spearman_abs = spearman(abs_values(a.scores), abs_values(b.scores));
    r.nonzero_a = nonzero_fraction(a);
    r.nonzero_b = nonzero_fraction(b);
    return r;
}

const SanityRow& SanityReport::row(const std::string& condition, Method method) const {
    for (const SanityRow& r : rows) {
        if (r.condition == condition && r.method == method) return r;
    }
    throw Error("sanity report: no row for " + condition + "/" + method_name(method));
}

namespace {

struct Condition {
    std::string name;
    Network net;
};

/// Shared metric loop: one report row per condition x method, averaged over
/// eval images. reference holds the trained-model maps.
std::vector<SanityRow> evaluate_conditions(const std::vector<Condition>& conditions,
                                           const Network& reference_net,
                                           const LabeledDataset& eval_images,
                                           const std::vector<Method>& methods,
                                           const SanityOptions& opts) {
    if (eval_images.size() == 0) throw Error("sanity: empty image set");
    if (methods.empty()) throw Error("sanity: no methods");

    const std::size_t count = eval_images.size();

    // Explained node per image: the reference (trained) model's prediction.
    std::vector<std::size_t> chosen(count);
    std::vector<Tensor> inputs;
    inputs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Tensor x = eval_images.image(i).reshaped(reference_net.input_shape);
        chosen[i] = argmax_logit(forward(reference_net, x));
        inputs.push_back(std::move(x));
    }

    // Reference maps per method per image.
    std::vector<std::vector<SaliencyMap>> reference(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        reference[m].reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            reference[m].push_back(
                compute_map(reference_net, inputs[i], methods[m], chosen[i], opts.lrp_epsilon));
        }
    }

    std::vector<SanityRow> rows;
    for (const Condition& cond : conditions) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
            double sum_nonzero = 0.0, sum_vs_trained = 0.0, sum_vs_input = 0.0;
            for (std::size_t i = 0; i < count; ++i) {
                const SaliencyMap map =
                    compute_map(cond.net, inputs[i], methods[m], chosen[i], opts.lrp_epsilon);
                sum_nonzero += nonzero_fraction(map);
                sum_vs_trained += map_similarity(map, reference[m][i]).spearman_abs;
                sum_vs_input += spearman(abs_values(map.scores), abs_values(inputs[i]));
                if (i == 0 && !opts.heatmap_dir.empty()) {
                    render_heatmap(map, HeatmapStyle::Diverging,
                                   opts.heatmap_dir + "/" + cond.name + "_" +
                                       method_name(methods[m]) + ".ppm");
                }
            }
            SanityRow row;
            row.condition = cond.name;
            row.method = methods[m];
            row.nonzero_fraction = sum_nonzero / static_cast<double>(count);
            row.spearman_vs_trained = sum_vs_trained / static_cast<double>(count);
            row.spearman_abs_vs_input = sum_vs_input / static_cast<double>(count);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace

SanityReport run_parameter_randomization(const Network& net, const LabeledDataset& images,
                                         const RandomizationPlan& plan,
                                         const std::vector<Method>& methods,
                                         const SanityOptions& opts) {
    if (images.size() == 0) throw Error("sanity: empty image set");
    plan.validate(net);

    const LabeledDataset eval_images =
        slice(images, 0, std::min(opts.num_images, images.size()));

    std::vector<Condition> conditions;
    conditions.push_back({"original", net});
    for (std::size_t t : plan.targets) {
        if (plan.mode == RandomizationMode::Layerwise) {
            conditions.push_back({"layer" + std::to_string(t),
                                  randomize_layer(net, t, plan.seed)});
        } else {
            conditions.push_back({"top" + std::to_string(t),
                                  cascading_randomize(net, t, plan.seed)});
        }
    }

    SanityReport report;
    report.rows = evaluate_conditions(conditions, net, eval_images, methods, opts);
    return report;
}

SanityReport run_data_randomization(const Network& arch, const LabeledDataset& ds,
                                    const TrainConfig& cfg,
                                    const std::vector<Method>& methods,
                                    const SanityOptions& opts) {
    if (ds.size() <= opts.num_images) {
        throw Error("sanity: dataset too small to hold out " + std::to_string(opts.num_images) +
                    " images");
    }
    const std::size_t train_count = ds.size() - opts.num_images;
    const LabeledDataset train_set = slice(ds, 0, train_count);
    const LabeledDataset eval_images = slice(ds, train_count, opts.num_images);

    Network net_true = arch;
    initialize_parameters(net_true, cfg.seed);
    Network net_permuted = net_true; // identical starting weights

    SanityReport report;
    report.train_accuracy_true = train(net_true, train_set, cfg).final_train_accuracy;

    const LabeledDataset permuted = permute_labels(train_set, derive_seed(cfg.seed, 0xda7aULL));
    report.train_accuracy_permuted =
        train(net_permuted, permuted, cfg).final_train_accuracy;

    const std::vector<Condition> conditions = {
        {"true_labels", net_true},
        {"permuted_labels", net_permuted},
    };
    report.rows = evaluate_conditions(conditions, net_true, eval_images, methods, opts);
    return report;
}

void write_sanity_csv(const SanityReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("csv: cannot open " + path + " for writing");
    out.precision(17);
    out << "condition,method,nonzero_fraction,spearman_vs_trained,spearman_abs_vs_input\n";
    for (const SanityRow& r : report.rows) {
        out << r.condition << "," << method_name(r.method) << "," << r.nonzero_fraction << ","
            << r.spearman_vs_trained << "," << r.spearman_abs_vs_input << "\n";
    }
    if (!std::isnan(report.train_accuracy_true)) {
        out << "# train_accuracy_true=" << report.train_accuracy_true
            << " train_accuracy_permuted=" << report.train_accuracy_permuted << "\n";
    }
}

std::string sanity_summary(const SanityReport& report) {
    std::ostringstream os;
    os.precision(4);
    os << "condition            method     nonzero  vs_trained  vs_input\n";
    for (const SanityRow& r : report.rows) {
        os.width(20);
        os << std::left << r.condition;
        os << " ";
        os.width(10);
        os << std::left << method_name(r.method);
        os << " ";
        os.width(8);
        os << r.nonzero_fraction;
        os << " ";
        os.width(10);
        os << r.spearman_vs_trained;
        os << "  " << r.spearman_abs_vs_input << "\n";
    }
    if (!std::isnan(report.train_accuracy_true)) {
        os << "train accuracy: true=" << report.train_accuracy_true
           << " permuted=" << report.train_accuracy_permuted << "\n";
    }
    return os.str();
}

} // namespace saliency
