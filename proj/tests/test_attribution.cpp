#include "doctest.h"

#include <cmath>

#include "saliency/attribution.hpp"
#include "saliency/stats.hpp"

#include "test_helpers.hpp"

using namespace saliency;
using testutil::random_net_and_input;

namespace {

MapStack make_stack(const std::vector<std::vector<double>>& rows, std::size_t chosen,
                    Method method = Method::GradInput) {
    MapStack stack;
    stack.chosen = chosen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        stack.maps.push_back({Tensor({rows[i].size()}, rows[i]), method, i});
    }
    stack.validate();
    return stack;
}

MapStack random_stack(Rng& rng, std::size_t classes, std::size_t d,
                      Method method = Method::GradInput) {
    std::vector<std::vector<double>> rows(classes, std::vector<double>(d));
    for (auto& row : rows) {
        for (double& v : row) v = rng.normal();
    }
    return make_stack(rows, rng.below(classes), method);
}

// All-positive scores: only the max branch of the rule can fire, so the
// surviving fraction is exactly the argmax probability 1/C.
MapStack random_positive_stack(Rng& rng, std::size_t classes, std::size_t d, Method method) {
    std::vector<std::vector<double>> rows(classes, std::vector<double>(d));
    for (auto& row : rows) {
        for (double& v : row) v = rng.uniform(0.001, 1.0);
    }
    return make_stack(rows, rng.below(classes), method);
}

double survivor_fraction(const SaliencyMap& map) {
    std::size_t nonzero = 0;
    for (double v : map.scores.data) {
        if (v != 0.0) ++nonzero;
    }
    return static_cast<double>(nonzero) / static_cast<double>(map.scores.size());
}

} // namespace

TEST_SUITE("attribution") {

TEST_CASE("grad-input stack on a linear net is rows of W times x") {
    Network net;
    net.input_shape = {2};
    net.layers.push_back(Layer::dense(Tensor({2, 2}, {1, 2, 3, 4}), Tensor({2}, {0, 0}), false));
    net.num_classes = 2;
    const Tensor x({2}, {0.5, -1.5});

    const MapStack stack = grad_input_stack(net, x);
    CHECK(stack.maps[0].scores.data == std::vector<double>{0.5, -3.0});
    CHECK(stack.maps[1].scores.data == std::vector<double>{1.5, -6.0});
    CHECK(stack.maps[0].method == Method::GradInput);
    // logits are [-2.5, -4.5]; argmax is node 0
    CHECK(stack.chosen == 0);
}

TEST_CASE("zero input gives all-zero maps") {
    const auto [net, x] = random_net_and_input(5, false);
    const MapStack stack = grad_input_stack(net, Tensor::zeros(net.input_shape));
    for (const SaliencyMap& map : stack.maps) {
        for (double v : map.scores.data) CHECK(v == 0.0);
    }
}

TEST_CASE("grad-input satisfies completeness on zero-bias relu nets") {
    for (std::uint64_t seed = 40; seed < 52; ++seed) {
        const auto [net, x] = random_net_and_input(seed, /*zero_bias=*/true);
        const MapStack stack = grad_input_stack(net, x);
        const Tensor logits = forward(net, x);
        for (std::size_t c = 0; c < net.num_classes; ++c) {
            double sum = 0.0;
            for (double v : stack.maps[c].scores.data) sum += v;
            CHECK(std::abs(sum - logits[c]) <= 1e-6 * std::max(1.0, std::abs(logits[c])));
        }
    }
}

TEST_CASE("cgi reproduces the three-element hand trace") {
    // chosen wins element 0 (positive max), loses 1 (not the minimum) and
    // 2 (not the maximum)
    const MapStack stack = make_stack({{2, -1, 0.5}, {1, -2, 0.7}}, 0);
    const SaliencyMap map = cgi(stack);
    CHECK(map.scores.data == std::vector<double>{2, 0, 0});
    CHECK(map.method == Method::CGI);
    CHECK(map.node == 0);
}

TEST_CASE("identical maps tie and the chosen map survives whole") {
    const std::vector<double> row = {1.5, -2.0, 0.0, 3.25};
    const MapStack stack = make_stack({row, row, row}, 1);
    const SaliencyMap map = cgi(stack);
    CHECK(map.scores.data == row);
}

TEST_CASE("cgi on iid stacks keeps about 1/C of the elements") {
    Rng rng(2024);
    double fraction_sum = 0.0;
    constexpr int kStacks = 20;
    for (int s = 0; s < kStacks; ++s) {
        const MapStack stack = random_positive_stack(rng, 10, 10000, Method::GradInput);
        fraction_sum += survivor_fraction(cgi(stack));
    }
    CHECK(std::abs(fraction_sum / kStacks - 0.1) <= 0.02);

    // with sign-symmetric scores both branches fire, keeping roughly 2/C
    double signed_sum = 0.0;
    for (int s = 0; s < kStacks; ++s) {
        signed_sum += survivor_fraction(cgi(random_stack(rng, 10, 10000)));
    }
    CHECK(std::abs(signed_sum / kStacks - 0.2) <= 0.02);
}

TEST_CASE("cgi properties over random stacks") {
    Rng rng(99);
    for (int iter = 0; iter < 10000; ++iter) {
        const std::size_t classes = 1 + rng.below(6);
        const std::size_t d = 1 + rng.below(16);
        const MapStack stack = random_stack(rng, classes, d);
        const SaliencyMap out = cgi(stack);
        const SaliencyMap& own = stack.chosen_map();

        // support subset: survivors keep their value, losers go to zero
        for (std::size_t j = 0; j < d; ++j) {
            if (out.scores[j] != 0.0) CHECK(out.scores[j] == own.scores[j]);
        }

        // C == 1: no competitor, map passes through
        if (classes == 1) CHECK(out.scores.data == own.scores.data);

        // idempotence: feeding the competition output back as the chosen map
        // changes nothing
        MapStack again = stack;
        again.maps[stack.chosen].scores = out.scores;
        const SaliencyMap out2 = cgi(again);
        CHECK(out2.scores.data == out.scores.data);
    }
}

TEST_CASE("ties are kept: a duplicated chosen map never loses its elements") {
    Rng rng(123);
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t d = 8;
        MapStack stack = random_stack(rng, 4, d);
        // competitor 2 duplicates the chosen map exactly: every comparison is
        // a tie, which the non-strict rule resolves in favour of chosen
        stack.maps[2].scores = stack.chosen_map().scores;
        if (stack.chosen == 2) continue;
        const SaliencyMap out = cgi(stack);
        for (std::size_t j = 0; j < d; ++j) {
            const double s = stack.chosen_map().scores[j];
            bool beaten = false;
            for (std::size_t i = 0; i < stack.maps.size(); ++i) {
                if (i == stack.chosen || i == 2) continue;
                if ((s > 0 && stack.maps[i].scores[j] > s) ||
                    (s < 0 && stack.maps[i].scores[j] < s)) {
                    beaten = true;
                }
            }
            if (!beaten) CHECK(out.scores[j] == s);
        }
    }
}

TEST_CASE("competition commutes with element permutation") {
    Rng rng(7);
    const std::size_t d = 32;
    const MapStack stack = random_stack(rng, 5, d);
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle(perm, rng);

    MapStack permuted = stack;
    for (std::size_t i = 0; i < stack.maps.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            permuted.maps[i].scores[j] = stack.maps[i].scores[perm[j]];
        }
    }
    const SaliencyMap a = cgi(stack);
    const SaliencyMap b = cgi(permuted);
    for (std::size_t j = 0; j < d; ++j) CHECK(b.scores[j] == a.scores[perm[j]]);
}

TEST_CASE("scaling the input scales maps linearly and keeps the selection") {
    // zero-bias relu nets are 1-homogeneous, so gradients are scale-invariant
    // and each map picks up exactly one factor of lambda
    for (std::uint64_t seed = 70; seed < 76; ++seed) {
        const auto [net, x] = random_net_and_input(seed, /*zero_bias=*/true);
        const double lambda = 2.5;
        Tensor scaled = x;
        for (double& v : scaled.data) v *= lambda;

        const MapStack base = grad_input_stack(net, x, 0);
        const MapStack big = grad_input_stack(net, scaled, 0);
        for (std::size_t c = 0; c < net.num_classes; ++c) {
            for (std::size_t j = 0; j < x.size(); ++j) {
                CHECK(big.maps[c].scores[j] ==
                      doctest::Approx(lambda * base.maps[c].scores[j]).epsilon(1e-9));
            }
        }

        const SaliencyMap a = cgi(base);
        const SaliencyMap b = cgi(big);
        for (std::size_t j = 0; j < x.size(); ++j) {
            CHECK((a.scores[j] != 0.0) == (b.scores[j] != 0.0));
        }
    }
}

TEST_CASE("lrp on a single zero-bias linear layer recovers W times x") {
    Network net;
    net.input_shape = {3};
    net.layers.push_back(Layer::dense(Tensor({2, 3}, {1, -2, 3, 0.5, 4, -1}),
                                      Tensor({2}, {0, 0}), false));
    net.num_classes = 2;
    const Tensor x({3}, {0.2, -0.4, 1.0});

    const MapStack stack = lrp_stack(net, x, 1e-12);
    const MapStack gi = grad_input_stack(net, x);
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(stack.maps[c].scores[j] ==
                  doctest::Approx(gi.maps[c].scores[j]).epsilon(1e-9));
        }
    }
}

TEST_CASE("lrp rejects a non-positive stabilizer") {
    const auto [net, x] = random_net_and_input(1, true);
    CHECK_THROWS_AS(lrp_stack(net, x, 0.0), Error);
    CHECK_THROWS_AS(lrp_stack(net, x, -1e-9), Error);
}

TEST_CASE("epsilon-lrp matches grad-input on zero-bias relu nets") {
    for (std::uint64_t seed = 80; seed < 92; ++seed) {
        const auto [net, x] = random_net_and_input(seed, /*zero_bias=*/true);
        const MapStack lrp = lrp_stack(net, x, 1e-9);
        const MapStack gi = grad_input_stack(net, x);
        for (std::size_t c = 0; c < net.num_classes; ++c) {
            CHECK(cosine_similarity(lrp.maps[c].scores.data, gi.maps[c].scores.data) >= 0.999);
        }
    }
}

TEST_CASE("lrp conserves relevance per layer on zero-bias nets") {
    for (std::uint64_t seed = 60; seed < 66; ++seed) {
        const auto [net, x] = random_net_and_input(seed, /*zero_bias=*/true);
        const ForwardTrace trace = forward_trace(net, x);
        for (std::size_t node = 0; node < net.num_classes; ++node) {
            const std::vector<Tensor> relevances = lrp_relevances(net, trace, node, 1e-9);
            const double logit = trace.logits()[node];
            const double tol = 1e-6 * std::max(1.0, std::abs(logit));
            double prev = 0.0;
            for (double v : relevances.front().data) prev += v;
            for (std::size_t l = 1; l < relevances.size(); ++l) {
                double sum = 0.0;
                for (double v : relevances[l].data) sum += v;
                CHECK(std::abs(sum - prev) <= tol);
                prev = sum;
            }
        }
    }
}

TEST_CASE("clrp applies the identical rule to lrp stacks") {
    const MapStack stack = make_stack({{2, -1, 0.5}, {1, -2, 0.7}}, 0, Method::LRP);
    const SaliencyMap map = clrp(stack);
    CHECK(map.scores.data == std::vector<double>{2, 0, 0});
    CHECK(map.method == Method::CLRP);

    const std::vector<double> row = {0.1, -0.2, 0.3};
    const MapStack same = make_stack({row, row, row}, 2, Method::LRP);
    CHECK(clrp(same).scores.data == row);

    CHECK_THROWS_AS(clrp(make_stack({{1}, {2}}, 0, Method::GradInput)), Error);
    CHECK_THROWS_AS(cgi(make_stack({{1}, {2}}, 0, Method::LRP)), Error);
}

TEST_CASE("clrp on iid stacks also keeps about 1/C") {
    Rng rng(31);
    double fraction_sum = 0.0;
    constexpr int kStacks = 20;
    for (int s = 0; s < kStacks; ++s) {
        fraction_sum +=
            survivor_fraction(clrp(random_positive_stack(rng, 10, 10000, Method::LRP)));
    }
    CHECK(std::abs(fraction_sum / kStacks - 0.1) <= 0.02);
}

TEST_CASE("completeness report on zero-bias nets is exact") {
    const auto [net, x] = random_net_and_input(110, /*zero_bias=*/true);
    const MapStack stack = grad_input_stack(net, x);
    const CompletenessReport report = completeness_report(net, x, stack);
    REQUIRE(report.logits.size() == net.num_classes);
    for (std::size_t c = 0; c < net.num_classes; ++c) {
        CHECK(std::abs(report.residuals[c]) <= 1e-6 * std::max(1.0, std::abs(report.logits[c])));
    }
    if (report.has_fit) {
        CHECK(report.slope == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(report.intercept == doctest::Approx(0.0).epsilon(1e-6));
    }
}

TEST_CASE("degenerate completeness fit is flagged") {
    // all-zero weights: constant logits, constant maps
    Network net;
    net.input_shape = {3};
    net.layers.push_back(Layer::dense(2, 3, false));
    net.num_classes = 2;
    const Tensor x({3}, {1, 2, 3});
    const MapStack stack = grad_input_stack(net, x);
    const CompletenessReport report = completeness_report(net, x, stack);
    CHECK_FALSE(report.has_fit);
    CHECK(report.residuals.size() == 2);
    for (double r : report.residuals) CHECK(r == 0.0);
}

TEST_CASE("stack diagnostics report concentration without asserting thresholds") {
    // one spiky map, one uniform map
    const MapStack stack = make_stack({{10, 0.1, 0.1, 0.1}, {1, 1, 1, 1}}, 0);
    const StackDiagnostics diag = stack_diagnostics(stack);
    REQUIRE(diag.top_mass_fraction.size() == 2);
    CHECK(diag.top_mass_fraction[0] == doctest::Approx(0.25)); // one element carries >50%
    CHECK(diag.top_mass_fraction[1] == doctest::Approx(0.5));
    CHECK(diag.pairwise_overlap >= 0.0);
    CHECK(diag.pairwise_overlap <= 1.0);
}

} // TEST_SUITE
