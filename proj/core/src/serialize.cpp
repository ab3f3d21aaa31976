#include "saliency/serialize.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>

namespace saliency {

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    const std::array<unsigned char, 4> b = {
        static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b.data()), 4);
}

void put_f64(std::ofstream& out, double d) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b.data()), 8);
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (!in) throw Error("serialize: truncated file " + path);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

double get_f64(std::ifstream& in, const std::string& path) {
    std::array<unsigned char, 8> b{};
    in.read(reinterpret_cast<char*>(b.data()), 8);
    if (!in) throw Error("serialize: truncated file " + path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[static_cast<std::size_t>(i)]) << (8 * i);
    return std::bit_cast<double>(v);
}

void put_magic(std::ofstream& out, const char magic[5]) { out.write(magic, 4); }

void check_magic(std::ifstream& in, const char magic[5], const std::string& path) {
    char buf[4];
    in.read(buf, 4);
    if (!in || std::string(buf, 4) != std::string(magic, 4)) {
        throw Error("serialize: bad magic in " + path + " (expected " + magic + ")");
    }
}

void put_shape(std::ofstream& out, const Shape& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    for (std::size_t d : s) put_u32(out, static_cast<std::uint32_t>(d));
}

Shape get_shape(std::ifstream& in, const std::string& path) {
    const std::uint32_t rank = get_u32(in, path);
    if (rank > 8) throw Error("serialize: unreasonable rank in " + path);
    Shape s(rank);
    for (std::uint32_t i = 0; i < rank; ++i) s[i] = get_u32(in, path);
    return s;
}

void put_tensor_data(std::ofstream& out, const Tensor& t) {
    for (double v : t.data) put_f64(out, v);
}

std::vector<double> get_doubles(std::ifstream& in, std::size_t n, const std::string& path) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = get_f64(in, path);
    return v;
}

void save_map_record(std::ofstream& out, const SaliencyMap& map) {
    put_magic(out, "SFM1");
    put_u32(out, static_cast<std::uint32_t>(map.method));
    put_u32(out, static_cast<std::uint32_t>(map.node));
    put_shape(out, map.scores.shape);
    put_tensor_data(out, map.scores);
}

SaliencyMap load_map_record(std::ifstream& in, const std::string& path) {
    check_magic(in, "SFM1", path);
    const std::uint32_t method = get_u32(in, path);
    if (method > 3) throw Error("serialize: bad method tag in " + path);
    SaliencyMap map;
    map.method = static_cast<Method>(method);
    map.node = get_u32(in, path);
    const Shape shape = get_shape(in, path);
    map.scores = Tensor(shape, get_doubles(in, shape_product(shape), path));
    return map;
}

} // namespace

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("serialize: cannot open " + path + " for writing");
    put_magic(out, "SFN1");
    put_shape(out, net.input_shape);
    put_u32(out, static_cast<std::uint32_t>(net.num_classes));
    put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const Layer& layer : net.layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.kind));
        if (!layer.parameterized()) continue;
        put_u32(out, layer.bias_enabled ? 1u : 0u);
        for (std::size_t d : layer.weights.shape) put_u32(out, static_cast<std::uint32_t>(d));
        put_tensor_data(out, layer.weights);
        put_tensor_data(out, layer.bias);
    }
    if (!out) throw Error("serialize: write failed for " + path);
}

Network load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("serialize: cannot open " + path);
    check_magic(in, "SFN1", path);
    Network net;
    net.input_shape = get_shape(in, path);
    net.num_classes = get_u32(in, path);
    const std::uint32_t count = get_u32(in, path);
    net.layers.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t kind = get_u32(in, path);
        switch (kind) {
            case 0: { // dense
                const bool bias_enabled = get_u32(in, path) != 0;
                const std::size_t out_n = get_u32(in, path);
                const std::size_t in_n = get_u32(in, path);
                Tensor w(Shape{out_n, in_n}, get_doubles(in, out_n * in_n, path));
                Tensor b(Shape{out_n}, get_doubles(in, out_n, path));
                net.layers.push_back(Layer::dense(std::move(w), std::move(b), bias_enabled));
                break;
            }
            case 1: { // conv2d
                const bool bias_enabled = get_u32(in, path) != 0;
                const std::size_t oc = get_u32(in, path);
                const std::size_t ic = get_u32(in, path);
                const std::size_t kh = get_u32(in, path);
                const std::size_t kw = get_u32(in, path);
                Tensor k(Shape{oc, ic, kh, kw}, get_doubles(in, oc * ic * kh * kw, path));
                Tensor b(Shape{oc}, get_doubles(in, oc, path));
                net.layers.push_back(Layer::conv2d(std::move(k), std::move(b), bias_enabled));
                break;
            }
            case 2:
                net.layers.push_back(Layer::relu());
                break;
            case 3:
                net.layers.push_back(Layer::flatten());
                break;
            default:
                throw Error("serialize: bad layer kind tag in " + path);
        }
    }
    net.validate();
    return net;
}

void save_map(const SaliencyMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("serialize: cannot open " + path + " for writing");
    save_map_record(out, map);
    if (!out) throw Error("serialize: write failed for " + path);
}

SaliencyMap load_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("serialize: cannot open " + path);
    return load_map_record(in, path);
}

void save_stack(const MapStack& stack, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("serialize: cannot open " + path + " for writing");
    put_magic(out, "SFS1");
    put_u32(out, static_cast<std::uint32_t>(stack.maps.size()));
    put_u32(out, static_cast<std::uint32_t>(stack.chosen));
    for (const SaliencyMap& map : stack.maps) save_map_record(out, map);
    if (!out) throw Error("serialize: write failed for " + path);
}

MapStack load_stack(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("serialize: cannot open " + path);
    check_magic(in, "SFS1", path);
    const std::uint32_t count = get_u32(in, path);
    MapStack stack;
    stack.chosen = get_u32(in, path);
    stack.maps.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) stack.maps.push_back(load_map_record(in, path));
    stack.validate();
    return stack;
}

} // namespace saliency
