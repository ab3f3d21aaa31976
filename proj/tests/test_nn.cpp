#include "doctest.h"

#include <cmath>

#include "saliency/network.hpp"
#include "saliency/serialize.hpp"
#include "saliency/train.hpp"

#include "test_helpers.hpp"

using namespace saliency;
using testutil::fd_logit_gradients;
using testutil::max_rel_err;
using testutil::random_net_and_input;

namespace {

Network single_dense_net() {
    Network net;
    net.input_shape = {2};
    net.layers.push_back(
        Layer::dense(Tensor({2, 2}, {1, 2, 3, 4}), Tensor({2}, {0, 0}), false));
    net.num_classes = 2;
    net.validate();
    return net;
}

/// Two well-separated 2-D Gaussian blobs, one per class.
LabeledDataset blob_dataset(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    LabeledDataset ds;
    ds.image_shape = {2};
    ds.pixels.resize(2 * n);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        const double cx = label == 0 ? 0.25 : 0.75;
        ds.pixels[2 * i] = std::clamp(cx + 0.08 * rng.normal(), 0.0, 1.0);
        ds.pixels[2 * i + 1] = std::clamp(0.5 + 0.08 * rng.normal(), 0.0, 1.0);
        ds.labels[i] = label;
    }
    return ds;
}

} // namespace

TEST_SUITE("nn") {

TEST_CASE("forward matches hand matrix multiply") {
    const Network net = single_dense_net();
    const Tensor logits = forward(net, Tensor({2}, {1, 1}));
    CHECK(logits[0] == doctest::Approx(3.0));
    CHECK(logits[1] == doctest::Approx(7.0));
}

TEST_CASE("zero input and zero biases give zero logits") {
    const auto [net, x] = random_net_and_input(11, /*zero_bias=*/true);
    const Tensor logits = forward(net, Tensor::zeros(net.input_shape));
    for (double v : logits.data) CHECK(v == 0.0);
}

TEST_CASE("relu clamps a negative pre-activation") {
    Network net;
    net.input_shape = {1};
    net.layers.push_back(Layer::dense(Tensor({1, 1}, {-1}), Tensor({1}, {0}), false));
    net.layers.push_back(Layer::relu());
    net.layers.push_back(Layer::dense(Tensor({1, 1}, {1}), Tensor({1}, {0}), false));
    net.num_classes = 1;
    const Tensor logits = forward(net, Tensor({1}, {5}));
    CHECK(logits[0] == 0.0);
}

TEST_CASE("forward rejects mismatched input naming the layer") {
    const Network net = single_dense_net();
    CHECK_THROWS_WITH_AS(forward(net, Tensor({3}, {1, 2, 3})),
                         doctest::Contains("does not match network input"), Error);

    Network bad = net;
    bad.layers.push_back(Layer::dense(4, 3, false)); // does not compose
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("layer 1"), Error);
}

TEST_CASE("gradient of a linear net is the weight matrix") {
    const Network net = single_dense_net();
    const Tensor g = logit_gradients(net, Tensor({2}, {0.3, -0.7}));
    CHECK(g.data == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("analytic gradients match the finite-difference oracle") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto [net, x] = random_net_and_input(seed, seed % 3 == 0);
        const Tensor analytic = logit_gradients(net, x);
        const Tensor numeric = fd_logit_gradients(net, x);
        CHECK(max_rel_err(analytic, numeric) <= 1e-4);
    }
}

TEST_CASE("gradient dot input reproduces logits on zero-bias relu nets") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const auto [net, x] = random_net_and_input(seed, /*zero_bias=*/true);
        const Tensor logits = forward(net, x);
        const Tensor g = logit_gradients(net, x);
        const std::size_t d = x.size();
        for (std::size_t c = 0; c < net.num_classes; ++c) {
            double sum = 0.0;
            for (std::size_t j = 0; j < d; ++j) sum += g.data[c * d + j] * x[j];
            CHECK(std::abs(sum - logits[c]) <= 1e-6 * std::max(1.0, std::abs(logits[c])));
        }
    }
}

TEST_CASE("zero-bias nets are positively homogeneous") {
    for (std::uint64_t seed = 200; seed < 210; ++seed) {
        const auto [net, x] = random_net_and_input(seed, /*zero_bias=*/true);
        const double lambda = 0.5 + (seed % 5);
        Tensor scaled = x;
        for (double& v : scaled.data) v *= lambda;
        const Tensor a = forward(net, scaled);
        const Tensor b = forward(net, x);
        for (std::size_t c = 0; c < a.size(); ++c) {
            CHECK(a[c] == doctest::Approx(lambda * b[c]).epsilon(1e-10));
        }
    }
}

TEST_CASE("training separates two blobs") {
    const LabeledDataset ds = blob_dataset(200, 7);
    Network net;
    net.input_shape = {2};
    net.layers.push_back(Layer::dense(8, 2));
    net.layers.push_back(Layer::relu());
    net.layers.push_back(Layer::dense(2, 8));
    net.num_classes = 2;
    initialize_parameters(net, 7);

    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.5;
    cfg.seed = 7;
    const TrainReport report = train(net, ds, cfg);
    CHECK(report.epoch_losses.size() == 50);
    CHECK(report.final_train_accuracy >= 0.99);
}

TEST_CASE("zero epochs leave weights untouched and the report empty") {
    const LabeledDataset ds = blob_dataset(16, 3);
    Network net;
    net.input_shape = {2};
    net.layers.push_back(Layer::dense(2, 2));
    net.num_classes = 2;
    initialize_parameters(net, 3);
    const Network before = net;

    TrainConfig cfg;
    cfg.epochs = 0;
    const TrainReport report = train(net, ds, cfg);
    CHECK(report.epoch_losses.empty());
    CHECK(net.layers[0].weights.data == before.layers[0].weights.data);
    CHECK(net.layers[0].bias.data == before.layers[0].bias.data);
}

TEST_CASE("diverging training aborts with a diagnostic") {
    LabeledDataset ds = blob_dataset(64, 5);
    // label noise: no weight setting classifies everything, so an enormous
    // step drives some true-class probability to exactly 0
    for (std::size_t i = 0; i < ds.size(); i += 10) ds.labels[i] ^= 1;
    Network net;
    net.input_shape = {2};
    net.layers.push_back(Layer::dense(16, 2));
    net.layers.push_back(Layer::relu());
    net.layers.push_back(Layer::dense(2, 16));
    net.num_classes = 2;
    initialize_parameters(net, 5);

    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.learning_rate = 1e9;
    cfg.seed = 5;
    CHECK_THROWS_WITH_AS(train(net, ds, cfg), doctest::Contains("learning rate"), Error);
}

TEST_CASE("training is deterministic given the seed") {
    const LabeledDataset ds = blob_dataset(100, 9);
    auto run = [&]() {
        Network net;
        net.input_shape = {2};
        net.layers.push_back(Layer::dense(8, 2));
        net.layers.push_back(Layer::relu());
        net.layers.push_back(Layer::dense(2, 8));
        net.num_classes = 2;
        initialize_parameters(net, 42);
        TrainConfig cfg;
        cfg.epochs = 5;
        cfg.seed = 42;
        train(net, ds, cfg);
        return net;
    };
    const Network a = run();
    const Network b = run();
    CHECK(a.layers[0].weights.data == b.layers[0].weights.data);
    CHECK(a.layers[2].weights.data == b.layers[2].weights.data);
}

TEST_CASE("randomize_layer touches exactly one layer and is seeded") {
    auto [net, x] = random_net_and_input(300, false, /*allow_conv=*/false);
    const std::vector<std::size_t> params = net.parameterized_indices();
    REQUIRE(params.size() >= 2);
    const std::size_t target = params[0];

    const Network once = randomize_layer(net, target, 123);
    const Network twice = randomize_layer(net, target, 123);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.layers[i].parameterized()) continue;
        if (i == target) {
            CHECK(once.layers[i].weights.data != net.layers[i].weights.data);
        } else {
            CHECK(once.layers[i].weights.data == net.layers[i].weights.data);
        }
        CHECK(once.layers[i].weights.data == twice.layers[i].weights.data);
    }

    CHECK_THROWS_AS(randomize_layer(net, net.layers.size(), 1), Error);
    // index 1 is the relu in these MLPs
    CHECK_THROWS_AS(randomize_layer(net, 1, 1), Error);
}

TEST_CASE("randomizing the first layer of a trained net breaks it") {
    const LabeledDataset ds = synthetic_digits(600, 21);
    Network net = [] {
        Network n;
        n.input_shape = {16, 16};
        n.layers.push_back(Layer::flatten());
        n.layers.push_back(Layer::dense(48, 256));
        n.layers.push_back(Layer::relu());
        n.layers.push_back(Layer::dense(10, 48));
        n.num_classes = 10;
        return n;
    }();
    initialize_parameters(net, 21);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.learning_rate = 0.5;
    cfg.seed = 21;
    const TrainReport report = train(net, ds, cfg);
    REQUIRE(report.final_train_accuracy >= 0.9);

    const Network broken = randomize_layer(net, 1, 77);
    const double acc = evaluate_accuracy(broken, ds);
    CHECK(acc <= 0.3); // near chance for 10 classes
}

TEST_CASE("cascading randomization walks from the output") {
    auto [net, x] = random_net_and_input(301, false, /*allow_conv=*/false);
    const std::vector<std::size_t> params = net.parameterized_indices();
    REQUIRE(params.size() >= 2);

    const Network top1 = cascading_randomize(net, 1, 9);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.layers[i].parameterized()) continue;
        if (i == params.back()) {
            CHECK(top1.layers[i].weights.data != net.layers[i].weights.data);
        } else {
            CHECK(top1.layers[i].weights.data == net.layers[i].weights.data);
        }
    }

    // full depth == fresh initialization with the same seed
    Network fresh = net;
    initialize_parameters(fresh, 9);
    const Network all = cascading_randomize(net, params.size(), 9);
    for (std::size_t i : params) {
        CHECK(all.layers[i].weights.data == fresh.layers[i].weights.data);
        CHECK(all.layers[i].bias.data == fresh.layers[i].bias.data);
    }

    CHECK_THROWS_AS(cascading_randomize(net, 0, 9), Error);
    CHECK_THROWS_AS(cascading_randomize(net, params.size() + 1, 9), Error);
}

TEST_CASE("network files round-trip bit-exactly") {
    const std::string dir = testutil::scratch_dir("nn_serialize");
    for (std::uint64_t seed : {400u, 401u, 402u}) {
        const auto [net, x] = random_net_and_input(seed, seed % 2 == 0);
        const std::string path_a = dir + "/a.sfn";
        const std::string path_b = dir + "/b.sfn";
        save_network(net, path_a);
        const Network loaded = load_network(path_a);
        save_network(loaded, path_b);
        CHECK(testutil::read_file_bytes(path_a) == testutil::read_file_bytes(path_b));

        CHECK(loaded.input_shape == net.input_shape);
        CHECK(loaded.num_classes == net.num_classes);
        REQUIRE(loaded.layers.size() == net.layers.size());
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            CHECK(loaded.layers[i].kind == net.layers[i].kind);
            CHECK(loaded.layers[i].weights.data == net.layers[i].weights.data);
            CHECK(loaded.layers[i].bias.data == net.layers[i].bias.data);
            CHECK(loaded.layers[i].bias_enabled == net.layers[i].bias_enabled);
        }
        const Tensor before = forward(net, x);
        const Tensor after = forward(loaded, x);
        CHECK(before.data == after.data);
    }
}

} // TEST_SUITE
