#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "saliency/attribution.hpp"
#include "saliency/dataset.hpp"
#include "saliency/train.hpp"

namespace saliency {

enum class RandomizationMode { Layerwise, Cascading };

/// Which layers get re-initialized. Layerwise targets are layer indices into
/// the full layer list; cascading targets are top-k depths (1 = output layer
/// only).
struct RandomizationPlan {
    RandomizationMode mode = RandomizationMode::Layerwise;
    std::vector<std::size_t> targets;
    std::uint64_t seed = 0;

    void validate(const Network& net) const;
};

RandomizationPlan layerwise_plan(const Network& net, std::uint64_t seed);
RandomizationPlan cascading_plan(const Network& net, std::uint64_t seed);

struct SimilarityResult {
    double spearman_abs = 0.0;
    double nonzero_a = 0.0;
    double nonzero_b = 0.0;
};

/// Spearman rank correlation of |scores| (average-rank ties) plus nonzero
/// fractions at threshold |s| > 1e-12.
SimilarityResult map_similarity(const SaliencyMap& a, const SaliencyMap& b);

double nonzero_fraction(const SaliencyMap& map);

struct SanityRow {
    std::string condition;
    Method method = Method::GradInput;
    double nonzero_fraction = 0.0;
    double spearman_vs_trained = 0.0;
    double spearman_abs_vs_input = 0.0;
};

struct SanityReport {
    std::vector<SanityRow> rows;
    // Populated by the data-randomization run only.
    double train_accuracy_true = std::numeric_limits<double>::quiet_NaN();
    double train_accuracy_permuted = std::numeric_limits<double>::quiet_NaN();

    const SanityRow& row(const std::string& condition, Method method) const;
};

struct SanityOptions {
    std::size_t num_images = 64;   // evaluation images per condition
    double lrp_epsilon = 1e-6;
    std::string heatmap_dir;       // when set, first-image heatmaps land here
};

/// Parameter-randomization check: metrics for the trained net ("original")
/// and for each randomization condition, averaged over the evaluation
/// images. The explained node per image is the trained net's prediction and
/// stays fixed across conditions.
SanityReport run_parameter_randomization(const Network& net, const LabeledDataset& images,
                                         const RandomizationPlan& plan,
                                         const std::vector<Method>& methods,
                                         const SanityOptions& opts = {});

/// Data-randomization check: trains arch twice from identical initial
/// weights (true labels vs permuted labels), then compares maps on the
/// held-out tail of ds (the last opts.num_images samples; the rest trains).
SanityReport run_data_randomization(const Network& arch, const LabeledDataset& ds,
                                    const TrainConfig& cfg,
                                    const std::vector<Method>& methods,
                                    const SanityOptions& opts = {});

void write_sanity_csv(const SanityReport& report, const std::string& path);
std::string sanity_summary(const SanityReport& report);

} // namespace saliency
