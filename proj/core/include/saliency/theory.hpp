#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace saliency {

/// Parameters for one run of the correlated-gradient competition model.
/// n is the total dimension (two halves of n/2: shared and non-shared
/// features); delta is the conditioning level for g1.x; overlap is the
/// target inner product h1.h2 of the shared halves.
struct TheoryConfig {
    std::size_t n = 10000;
    double delta = 0.15;
    double overlap = 0.5;
    std::size_t trials = 100;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TheorySample {
    std::vector<double> g1, g2, x;
};

/// Draws one model instance: g1 = (h1, xi1), g2 = (h2, xi2) with each half a
/// unit vector, h1.h2 == overlap exactly, and x Gaussian conditioned on
/// g1.x == delta (boundary slice of the >= delta event; the mass of the
/// conditional concentrates there).
TheorySample sample_model(const TheoryConfig& cfg, std::uint64_t trial_seed);

struct CompeteResult {
    double c1 = 0.0; // retained first-half sum of g1*x, in units of delta/2
    double c2 = 0.0; // retained second-half sum, same units
    double survived_first = 0.0;  // surviving fraction, first half
    double survived_second = 0.0; // surviving fraction, second half
    double retained_sum = 0.0;    // sum of surviving scores
};

/// Applies the competition rule to s = g1*x against t = g2*x: coordinate i
/// survives iff (s_i > 0 and s_i >= t_i) or (s_i < 0 and s_i <= t_i).
CompeteResult compete_and_score(std::span<const double> g1, std::span<const double> g2,
                                std::span<const double> x, double delta);

struct TheoryStat {
    double mean = 0.0;
    double stderr_ = 0.0;
};

struct TheoryResult {
    TheoryStat shared_dot_g1; // (h1,0).x, concentrates near delta/2
    TheoryStat shared_dot_g2; // (h2,0).x, near overlap*delta/2
    TheoryStat c1, c2;
    TheoryStat survived_first, survived_second;
    std::size_t trials = 0;
};

/// Monte-Carlo over cfg.trials independent samples (per-trial derived seeds).
TheoryResult run_theory(const TheoryConfig& cfg);

/// The blanking model: every label's score is an i.i.d. standard Gaussian
/// and a coordinate survives for label 0 when its score is the highest of
/// the k, which happens with probability exactly 1/k. Returns the surviving
/// fraction over d coordinates averaged across trials. (The full two-sided
/// competition rule applied to sign-symmetric scores keeps roughly 2/k; on
/// positive scores it coincides with this argmax model.)
double survival_fraction_iid(std::size_t k, std::size_t d, std::size_t trials,
                             std::uint64_t seed);

/// CSV rows "delta,c1_mean,c1_stderr,c2_mean,c2_stderr".
void write_theory_csv(const std::vector<std::pair<double, TheoryResult>>& rows,
                      const std::string& path);

} // namespace saliency
