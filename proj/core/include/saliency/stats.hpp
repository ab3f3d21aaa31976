#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace saliency {

/// Average ranks (1-based); tied values share the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation. Both sequences constant -> 1 if elementwise equal
/// else 0; exactly one constant -> 0.
double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation with average-rank tie handling.
double spearman(std::span<const double> a, std::span<const double> b);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);

/// Standard error of the mean (sample stddev / sqrt(n)); 0 for n < 2.
double stderr_of_mean(std::span<const double> v);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double pearson_r = 0.0;
    bool defined = false; // false when x has zero variance
};

/// Least-squares line y = slope*x + intercept.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

} // namespace saliency
