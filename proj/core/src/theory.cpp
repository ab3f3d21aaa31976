#include "saliency/theory.hpp"

#include <cmath>
#include <fstream>

#include "saliency/error.hpp"
#include "saliency/rng.hpp"
#include "saliency/stats.hpp"

namespace saliency {

void TheoryConfig::validate() const {
    if (n < 2 || n % 2 != 0) throw Error("theory: n must be even and >= 2");
    if (delta <= 0.0) throw Error("theory: delta must be > 0");
    if (overlap < 0.0 || overlap > 1.0) throw Error("theory: overlap must be in [0,1]");
    if (trials < 1) throw Error("theory: trials must be >= 1");
}

namespace {

std::vector<double> unit_gaussian_direction(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (double& e : v) {
            e = rng.normal();
            norm2 += e * e;
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& e : v) e *= inv;
    return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

TheorySample sample_model(const TheoryConfig& cfg, std::uint64_t trial_seed) {
    cfg.validate();
    const std::size_t half = cfg.n / 2;
    Rng rng(trial_seed);

    const std::vector<double> h1 = unit_gaussian_direction(rng, half);

    // h2 = overlap*h1 + sqrt(1-overlap^2)*u with u a unit direction
    // orthogonal to h1, so h1.h2 == overlap exactly.
    std::vector<double> u = unit_gaussian_direction(rng, half);
    const double proj = dot(u, h1);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
        u[i] -= proj * h1[i];
        norm2 += u[i] * u[i];
    }
    if (norm2 == 0.0) throw Error("theory: degenerate orthogonal draw");
    const double inv = 1.0 / std::sqrt(norm2);
    const double ortho = std::sqrt(std::max(0.0, 1.0 - cfg.overlap * cfg.overlap));
    std::vector<double> h2(half);
    for (std::size_t i = 0; i < half; ++i) {
        h2[i] = cfg.overlap * h1[i] + ortho * u[i] * inv;
    }

    const std::vector<double> xi1 = unit_gaussian_direction(rng, half);
    const std::vector<double> xi2 = unit_gaussian_direction(rng, half);

    TheorySample s;
    s.g1.reserve(cfg.n);
    s.g2.reserve(cfg.n);
    s.g1.insert(s.g1.end(), h1.begin(), h1.end());
    s.g1.insert(s.g1.end(), xi1.begin(), xi1.end());
    s.g2.insert(s.g2.end(), h2.begin(), h2.end());
    s.g2.insert(s.g2.end(), xi2.begin(), xi2.end());

    // x = z - (g1.z) g1/|g1|^2 + delta g1/|g1|^2 with z ~ N(0, 1/n)^n:
    // a Gaussian slice with g1.x == delta exactly.
    const double sigma = 1.0 / std::sqrt(static_cast<double>(cfg.n));
    std::vector<double> z(cfg.n);
    for (double& e : z) e = sigma * rng.normal();
    const double g1_norm2 = dot(s.g1, s.g1); // == 2 up to rounding
    const double shift = (cfg.delta - dot(s.g1, z)) / g1_norm2;
    s.x.resize(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        s.x[i] = z[i] + shift * s.g1[i];
    }
    return s;
}

CompeteResult compete_and_score(std::span<const double> g1, std::span<const double> g2,
                                std::span<const double> x, double delta) {
    if (g1.size() != g2.size() || g1.size() != x.size()) {
        throw Error("compete_and_score: dimension mismatch");
    }
    if (delta <= 0.0) throw Error("compete_and_score: delta must be > 0");
    const std::size_t n = x.size();
    const std::size_t half = n / 2;

    CompeteResult r;
    double sum_first = 0.0, sum_second = 0.0;
    std::size_t surv_first = 0, surv_second = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = g1[i] * x[i];
        const double t = g2[i] * x[i];
        const bool survives = (s > 0.0 && s >= t) || (s < 0.0 && s <= t);
        if (!survives) continue;
        r.retained_sum += s;
        if (i < half) {
            sum_first += s;
            ++surv_first;
        } else {
            sum_second += s;
            ++surv_second;
        }
    }
    const double unit = delta / 2.0;
    r.c1 = sum_first / unit;
    r.c2 = sum_second / unit;
    r.survived_first = static_cast<double>(surv_first) / static_cast<double>(half);
    r.survived_second = static_cast<double>(surv_second) / static_cast<double>(n - half);
    return r;
}

TheoryResult run_theory(const TheoryConfig& cfg) {
    cfg.validate();
    const std::size_t half = cfg.n / 2;

    std::vector<double> sdot1(cfg.trials), sdot2(cfg.trials);
    std::vector<double> c1(cfg.trials), c2(cfg.trials);
    std::vector<double> sf(cfg.trials), ss(cfg.trials);

    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const TheorySample sample = sample_model(cfg, derive_seed(cfg.seed, t));
        double d1 = 0.0, d2 = 0.0;
        for (std::size_t i = 0; i < half; ++i) {
            d1 += sample.g1[i] * sample.x[i];
            d2 += sample.g2[i] * sample.x[i];
        }
        sdot1[t] = d1;
        sdot2[t] = d2;
        const CompeteResult r = compete_and_score(sample.g1, sample.g2, sample.x, cfg.delta);
        c1[t] = r.c1;
        c2[t] = r.c2;
        sf[t] = r.survived_first;
        ss[t] = r.survived_second;
    }

    auto stat = [](const std::vector<double>& v) {
        return TheoryStat{mean(v), stderr_of_mean(v)};
    };
    TheoryResult result;
    result.shared_dot_g1 = stat(sdot1);
    result.shared_dot_g2 = stat(sdot2);
    result.c1 = stat(c1);
    result.c2 = stat(c2);
    result.survived_first = stat(sf);
    result.survived_second = stat(ss);
    result.trials = cfg.trials;
    return result;
}

double survival_fraction_iid(std::size_t k, std::size_t d, std::size_t trials,
                             std::uint64_t seed) {
    if (k < 1) throw Error("survival_fraction_iid: k must be >= 1");
    if (d < 1) throw Error("survival_fraction_iid: d must be >= 1");
    if (trials < 1) throw Error("survival_fraction_iid: trials must be >= 1");

    double fraction_sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, t));
        std::size_t won = 0;
        for (std::size_t j = 0; j < d; ++j) {
            const double s = rng.normal();
            bool wins = true;
            for (std::size_t i = 1; i < k; ++i) {
                if (rng.normal() > s) wins = false; // keep draining the stream
            }
            if (wins) ++won;
        }
        fraction_sum += static_cast<double>(won) / static_cast<double>(d);
    }
    return fraction_sum / static_cast<double>(trials);
}

void write_theory_csv(const std::vector<std::pair<double, TheoryResult>>& rows,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("csv: cannot open " + path + " for writing");
    out.precision(17);
    out << "delta,c1_mean,c1_stderr,c2_mean,c2_stderr\n";
    for (const auto& [delta, result] : rows) {
        out << delta << "," << result.c1.mean << "," << result.c1.stderr_ << ","
            << result.c2.mean << "," << result.c2.stderr_ << "\n";
    }
}

} // namespace saliency
