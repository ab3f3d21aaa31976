#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saliency/network.hpp"
#include "saliency/tensor.hpp"

namespace saliency {

enum class Method { GradInput, CGI, LRP, CLRP };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

/// Per-input-element scores explaining one output node.
struct SaliencyMap {
    Tensor scores;     // shaped like the network input
    Method method = Method::GradInput;
    std::size_t node = 0;
};

/// One saliency map per output node, all of the same base method, plus the
/// label whose map competes.
struct MapStack {
    std::vector<SaliencyMap> maps; // maps[i].node == i
    std::size_t chosen = 0;

    std::size_t classes() const { return maps.size(); }
    const SaliencyMap& chosen_map() const { return maps[chosen]; }
    Method method() const { return maps.front().method; }

    void validate() const;
};

/// Gradient-times-input map for every output node. chosen defaults to the
/// argmax logit.
MapStack grad_input_stack(const Network& net, const Tensor& x,
                          std::optional<std::size_t> chosen = std::nullopt);

/// Epsilon-rule relevance propagation for every output node: relevance of
/// input j at a linear layer is sum_k (a_j w_jk / (z_k + eps*sign(z_k))) R_k;
/// ReLU and Flatten pass relevance through; conv acts as its unrolled linear
/// map. Relevance starts at the explained node's logit value. The bias share
/// of relevance is absorbed (dropped).
MapStack lrp_stack(const Network& net, const Tensor& x, double epsilon,
                   std::optional<std::size_t> chosen = std::nullopt);

/// Per-layer relevance vectors for one node, ordered from the output
/// (index 0 = relevance at the logits) down to the input; the last entry is
/// the saliency map. Exposed so conservation can be audited layer by layer.
std::vector<Tensor> lrp_relevances(const Network& net, const ForwardTrace& trace,
                                   std::size_t node, double epsilon);

/// Competition over a gradient-times-input stack: the chosen label keeps an
/// element only when its score is the (non-strictly) largest positive or
/// (non-strictly) smallest negative across all labels; everything else is 0.
/// Ties go to the chosen label; an exactly-zero score emits 0.
SaliencyMap cgi(const MapStack& stack);

/// The same competition applied to an LRP stack.
SaliencyMap clrp(const MapStack& stack);

/// Single map for any method: GradInput/LRP take the chosen row of their
/// stack, CGI/CLRP run the competition over it.
SaliencyMap compute_map(const Network& net, const Tensor& x, Method method,
                        std::optional<std::size_t> chosen = std::nullopt,
                        double lrp_epsilon = 1e-6);

/// Score-sum vs logit diagnostics for one stack.
struct CompletenessReport {
    std::vector<double> logits;
    std::vector<double> score_sums;
    std::vector<double> residuals;   // logit - score_sum
    bool has_fit = false;            // false when C < 2 or degenerate
    double slope = 0.0;
    double intercept = 0.0;
    double pearson_r = 0.0;
};

CompletenessReport completeness_report(const Network& net, const Tensor& x,
                                       const MapStack& stack);

void write_completeness_csv(const CompletenessReport& report, const std::string& path);

/// Score-concentration diagnostics: top_mass_fraction[i] is the smallest
/// fraction of elements of map i carrying at least `mass` of its total
/// absolute score; pairwise_overlap averages, over label pairs, the fraction
/// of elements inside both labels' top-mass sets. Reported only; no
/// threshold is asserted.
struct StackDiagnostics {
    std::vector<double> top_mass_fraction;
    double pairwise_overlap = 0.0;
};

StackDiagnostics stack_diagnostics(const MapStack& stack, double mass = 0.5);

} // namespace saliency
