#include "doctest.h"

#include "saliency/render.hpp"
#include "saliency/serialize.hpp"

#include "test_helpers.hpp"

using namespace saliency;

namespace {

SaliencyMap grid_map(std::size_t h, std::size_t w, std::vector<double> scores) {
    return {Tensor({h, w}, std::move(scores)), Method::CGI, 0};
}

std::string ppm_header(std::size_t w, std::size_t h) {
    return "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

std::string pgm_header(std::size_t w, std::size_t h) {
    return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

} // namespace

TEST_SUITE("render") {

TEST_CASE("an all-zero map renders pure white") {
    const std::string dir = testutil::scratch_dir("render_zero");
    render_heatmap(grid_map(2, 2, {0, 0, 0, 0}), HeatmapStyle::Diverging, dir + "/z.ppm");
    std::string expected = ppm_header(2, 2) + std::string(12, '\xff');
    CHECK(testutil::read_file_bytes(dir + "/z.ppm") == expected);

    render_heatmap(grid_map(2, 2, {0, 0, 0, 0}), HeatmapStyle::AbsoluteValue, dir + "/z.pgm");
    expected = pgm_header(2, 2) + std::string(4, '\xff');
    CHECK(testutil::read_file_bytes(dir + "/z.pgm") == expected);
}

TEST_CASE("a single positive element at max is pure red") {
    const std::string dir = testutil::scratch_dir("render_red");
    render_heatmap(grid_map(1, 3, {0.4, 0, 0}), HeatmapStyle::Diverging, dir + "/r.ppm");
    const std::string bytes = testutil::read_file_bytes(dir + "/r.ppm");
    const std::string expected = ppm_header(3, 1) +
                                 std::string("\xff\x00\x00"
                                             "\xff\xff\xff"
                                             "\xff\xff\xff",
                                             9);
    CHECK(bytes == expected);
}

TEST_CASE("negating a map swaps the red and blue channels exactly") {
    const std::string dir = testutil::scratch_dir("render_negate");
    Rng rng(12);
    std::vector<double> scores(24);
    for (double& v : scores) v = rng.normal();
    std::vector<double> negated = scores;
    for (double& v : negated) v = -v;

    render_heatmap(grid_map(4, 6, scores), HeatmapStyle::Diverging, dir + "/a.ppm");
    render_heatmap(grid_map(4, 6, negated), HeatmapStyle::Diverging, dir + "/b.ppm");
    const std::string a = testutil::read_file_bytes(dir + "/a.ppm");
    const std::string b = testutil::read_file_bytes(dir + "/b.ppm");
    REQUIRE(a.size() == b.size());
    const std::size_t header = ppm_header(6, 4).size();
    for (std::size_t i = header; i + 2 < a.size(); i += 3) {
        CHECK(a[i] == b[i + 2]);     // R <-> B
        CHECK(a[i + 1] == b[i + 1]); // G fixed
        CHECK(a[i + 2] == b[i]);
    }
}

TEST_CASE("absolute style maps zero to white and max to black") {
    const std::string dir = testutil::scratch_dir("render_abs");
    render_heatmap(grid_map(1, 3, {0, -2, 1}), HeatmapStyle::AbsoluteValue, dir + "/m.pgm");
    // 255 for score 0, 0 at the max, 255-lround(127.5)=127 for |score|=1
    const std::string expected = pgm_header(3, 1) + std::string("\xff\x00\x7f", 3);
    CHECK(testutil::read_file_bytes(dir + "/m.pgm") == expected);
}

TEST_CASE("channel maps are reduced by summation") {
    const std::string dir = testutil::scratch_dir("render_channels");
    // two channels cancel in one cell, add in the other
    SaliencyMap map{Tensor({2, 1, 2}, {1.0, 0.5, -1.0, 0.5}), Method::GradInput, 0};
    render_heatmap(map, HeatmapStyle::Diverging, dir + "/c.ppm");
    // reduced grid: {0, 1.0}; max 1.0 -> white pixel then pure red
    const std::string expected = ppm_header(2, 1) + std::string("\xff\xff\xff\xff\x00\x00", 6);
    CHECK(testutil::read_file_bytes(dir + "/c.ppm") == expected);
}

TEST_CASE("rendering is reproducible byte for byte") {
    const std::string dir = testutil::scratch_dir("render_repro");
    Rng rng(9);
    std::vector<double> scores(64);
    for (double& v : scores) v = rng.normal();
    render_heatmap(grid_map(8, 8, scores), HeatmapStyle::Diverging, dir + "/1.ppm");
    render_heatmap(grid_map(8, 8, scores), HeatmapStyle::Diverging, dir + "/2.ppm");
    CHECK(testutil::read_file_bytes(dir + "/1.ppm") == testutil::read_file_bytes(dir + "/2.ppm"));
}

TEST_CASE("map and stack files round-trip") {
    const std::string dir = testutil::scratch_dir("map_serialize");
    Rng rng(41);
    MapStack stack;
    stack.chosen = 1;
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> v(12);
        for (double& e : v) e = rng.normal();
        stack.maps.push_back({Tensor({3, 4}, std::move(v)), Method::LRP, c});
    }
    save_stack(stack, dir + "/stack.sfs");
    const MapStack loaded = load_stack(dir + "/stack.sfs");
    CHECK(loaded.chosen == 1);
    REQUIRE(loaded.maps.size() == 3);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(loaded.maps[c].scores.data == stack.maps[c].scores.data);
        CHECK(loaded.maps[c].method == Method::LRP);
    }

    save_map(stack.maps[2], dir + "/one.smap");
    const SaliencyMap one = load_map(dir + "/one.smap");
    CHECK(one.node == 2);
    CHECK(one.scores.shape == Shape{3, 4});
    CHECK(one.scores.data == stack.maps[2].scores.data);

    save_map(one, dir + "/one_b.smap");
    CHECK(testutil::read_file_bytes(dir + "/one.smap") ==
          testutil::read_file_bytes(dir + "/one_b.smap"));
}

TEST_CASE("theory svg plot is written") {
    const std::string dir = testutil::scratch_dir("render_svg");
    TheoryResult r;
    r.c1 = {0.9, 0.05};
    r.c2 = {0.8, 0.05};
    write_theory_svg({{0.1, r}, {0.2, r}}, dir + "/t.svg");
    const std::string text = testutil::read_file_bytes(dir + "/t.svg");
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("polyline") != std::string::npos);
}

} // TEST_SUITE
