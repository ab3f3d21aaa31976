#include "saliency/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace saliency {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // positions i..j (0-based) share rank mean of (i+1)..(j+1)
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (n == 0) return 0.0;
    double ma = mean(a), mb = mean(b);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 && sbb == 0.0) {
        return std::equal(a.begin(), a.end(), b.begin()) ? 1.0 : 0.0;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

double spearman(std::span<const double> a, std::span<const double> b) {
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    return pearson(ra, rb);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa += a[i] * a[i];
        bb += b[i] * b[i];
        ab += a[i] * b[i];
    }
    if (aa == 0.0 && bb == 0.0) return 1.0;
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / std::sqrt(aa * bb);
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stderr_of_mean(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double var = ss / static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    LinearFit fit;
    const std::size_t n = x.size();
    if (n < 2) return fit;
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return fit; // vertical: slope undefined
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.pearson_r = pearson(x, y);
    fit.defined = true;
    return fit;
}

} // namespace saliency
