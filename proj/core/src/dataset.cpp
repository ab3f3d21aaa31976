#include "saliency/dataset.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "saliency/rng.hpp"

namespace saliency {

Tensor LabeledDataset::image(std::size_t i) const {
    const std::size_t d = image_elems();
    std::vector<double> v(pixels.begin() + static_cast<std::ptrdiff_t>(i * d),
                          pixels.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    return Tensor(image_shape, std::move(v));
}

void LabeledDataset::validate() const {
    if (pixels.size() != labels.size() * image_elems()) {
        throw Error("dataset: pixel buffer does not match label count");
    }
    for (double p : pixels) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error("dataset: pixel out of [0,1]");
    }
}

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (!in) throw Error("idx: truncated file " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be_u32(std::ofstream& out, std::uint32_t v) {
    const std::array<unsigned char, 4> b = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

std::vector<unsigned char> read_payload(std::ifstream& in, std::size_t count,
                                        const std::string& path) {
    std::vector<unsigned char> bytes(count);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
    if (!in || static_cast<std::size_t>(in.gcount()) != count) {
        throw Error("idx: truncated file " + path);
    }
    return bytes;
}

struct IdxImages {
    std::size_t n = 0, rows = 0, cols = 0;
    std::vector<unsigned char> bytes;
};

IdxImages read_idx_images_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("idx: cannot open " + path);
    const std::uint32_t magic = read_be_u32(in, path);
    if (magic != kImagesMagic) {
        throw Error("idx: bad magic " + hex32(magic) + " in " + path + " (expected " +
                    hex32(kImagesMagic) + " for images)");
    }
    IdxImages r;
    r.n = read_be_u32(in, path);
    r.rows = read_be_u32(in, path);
    r.cols = read_be_u32(in, path);
    r.bytes = read_payload(in, r.n * r.rows * r.cols, path);
    return r;
}

std::vector<unsigned char> read_idx_labels_file(const std::string& path, std::size_t& n_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("idx: cannot open " + path);
    const std::uint32_t magic = read_be_u32(in, path);
    if (magic != kLabelsMagic) {
        throw Error("idx: bad magic " + hex32(magic) + " in " + path + " (expected " +
                    hex32(kLabelsMagic) + " for labels)");
    }
    n_out = read_be_u32(in, path);
    return read_payload(in, n_out, path);
}

} // namespace

LabeledDataset load_idx_images(const std::string& images_path) {
    const IdxImages img = read_idx_images_file(images_path);
    LabeledDataset ds;
    ds.image_shape = {img.rows, img.cols};
    ds.pixels.resize(img.bytes.size());
    for (std::size_t i = 0; i < img.bytes.size(); ++i) {
        ds.pixels[i] = static_cast<double>(img.bytes[i]) / 255.0;
    }
    ds.labels.assign(img.n, 0);
    return ds;
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const IdxImages img = read_idx_images_file(images_path);
    std::size_t n_labels = 0;
    const std::vector<unsigned char> lab = read_idx_labels_file(labels_path, n_labels);
    if (img.n != n_labels) {
        throw Error("idx: count mismatch, " + std::to_string(img.n) + " images vs " +
                    std::to_string(n_labels) + " labels");
    }
    LabeledDataset ds;
    ds.image_shape = {img.rows, img.cols};
    ds.pixels.resize(img.bytes.size());
    for (std::size_t i = 0; i < img.bytes.size(); ++i) {
        ds.pixels[i] = static_cast<double>(img.bytes[i]) / 255.0;
    }
    ds.labels.resize(n_labels);
    for (std::size_t i = 0; i < n_labels; ++i) ds.labels[i] = static_cast<int>(lab[i]);
    return ds;
}

void write_idx(const LabeledDataset& ds, const std::string& images_path,
               const std::string& labels_path) {
    if (ds.image_shape.size() != 2) {
        throw Error("idx: only 2-D images can be written, shape is " + shape_str(ds.image_shape));
    }
    std::ofstream imgs(images_path, std::ios::binary);
    if (!imgs) throw Error("idx: cannot open " + images_path + " for writing");
    write_be_u32(imgs, kImagesMagic);
    write_be_u32(imgs, static_cast<std::uint32_t>(ds.size()));
    write_be_u32(imgs, static_cast<std::uint32_t>(ds.image_shape[0]));
    write_be_u32(imgs, static_cast<std::uint32_t>(ds.image_shape[1]));
    std::vector<unsigned char> bytes(ds.pixels.size());
    for (std::size_t i = 0; i < ds.pixels.size(); ++i) {
        const long v = std::lround(ds.pixels[i] * 255.0);
        bytes[i] = static_cast<unsigned char>(v < 0 ? 0 : (v > 255 ? 255 : v));
    }
    imgs.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
    if (!imgs) throw Error("idx: write failed for " + images_path);

    std::ofstream labs(labels_path, std::ios::binary);
    if (!labs) throw Error("idx: cannot open " + labels_path + " for writing");
    write_be_u32(labs, kLabelsMagic);
    write_be_u32(labs, static_cast<std::uint32_t>(ds.size()));
    for (int l : ds.labels) {
        const unsigned char b = static_cast<unsigned char>(l);
        labs.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!labs) throw Error("idx: write failed for " + labels_path);
}

namespace {

// Ten glyph classes drawn in mostly-disjoint regions of the 16x16 canvas so
// classes share few pixels: bars on each edge, the two diagonals, a cross,
// a box outline, corner dots, and a centre blob. Distinct supports keep the
// per-class evidence localized, like the dark-background digit scans this
// stands in for.
void draw_glyph(int cls, bool on[16][16]) {
    auto fill = [&](int r0, int r1, int c0, int c1) {
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) on[r][c] = true;
        }
    };
    switch (cls) {
        case 0: fill(2, 3, 2, 13); break;    // top bar
        case 1: fill(2, 13, 2, 3); break;    // left bar
        case 2: fill(12, 13, 2, 13); break;  // bottom bar
        case 3: fill(2, 13, 12, 13); break;  // right bar
        case 4:                              // main diagonal
            for (int r = 2; r <= 13; ++r) {
                for (int c = 2; c <= 13; ++c) {
                    if (std::abs(r - c) <= 1) on[r][c] = true;
                }
            }
            break;
        case 5:                              // anti-diagonal
            for (int r = 2; r <= 13; ++r) {
                for (int c = 2; c <= 13; ++c) {
                    if (std::abs(r + c - 15) <= 1) on[r][c] = true;
                }
            }
            break;
        case 6:                              // centre cross
            fill(7, 8, 4, 11);
            fill(4, 11, 7, 8);
            break;
        case 7:                              // box outline
            fill(5, 6, 5, 10);
            fill(9, 10, 5, 10);
            fill(5, 10, 5, 6);
            fill(5, 10, 9, 10);
            break;
        case 8:                              // corner dots
            fill(3, 4, 3, 4);
            fill(3, 4, 11, 12);
            fill(11, 12, 3, 4);
            fill(11, 12, 11, 12);
            break;
        case 9: fill(6, 9, 6, 9); break;     // centre blob
    }
}

} // namespace

LabeledDataset synthetic_digits(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw Error("synthetic_digits: n must be >= 1");
    constexpr std::size_t kSide = 16;
    LabeledDataset ds;
    ds.image_shape = {kSide, kSide};
    ds.pixels.resize(n * kSide * kSide);
    ds.labels.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, i));
        const int digit = static_cast<int>(i % 10);
        const int dx = static_cast<int>(rng.below(5)) - 2;
        const int dy = static_cast<int>(rng.below(5)) - 2;
        const double amp = rng.uniform(0.65, 1.0);

        bool base[16][16] = {};
        draw_glyph(digit, base);
        bool on[kSide][kSide] = {};
        for (int r = 0; r < 16; ++r) {
            for (int c = 0; c < 16; ++c) {
                if (!base[r][c]) continue;
                const int rr = r + dy, cc = c + dx;
                if (rr >= 0 && rr < static_cast<int>(kSide) && cc >= 0 &&
                    cc < static_cast<int>(kSide)) {
                    on[rr][cc] = true;
                }
            }
        }

        // Strokes carry continuous per-pixel noise (keeps samples distinct);
        // the background is exact zero, matching the black background of
        // scanned-digit data.
        double* px = &ds.pixels[i * kSide * kSide];
        for (std::size_t r = 0; r < kSide; ++r) {
            for (std::size_t c = 0; c < kSide; ++c) {
                double v = 0.0;
                if (on[r][c]) v = amp + 0.08 * rng.normal();
                px[r * kSide + c] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            }
        }
        ds.labels[i] = digit;
    }
    return ds;
}

LabeledDataset permute_labels(const LabeledDataset& ds, std::uint64_t seed) {
    LabeledDataset out = ds;
    Rng rng(seed);
    shuffle(out.labels, rng);
    return out;
}

LabeledDataset slice(const LabeledDataset& ds, std::size_t start, std::size_t count) {
    if (start + count > ds.size()) throw Error("dataset: slice out of range");
    LabeledDataset out;
    out.image_shape = ds.image_shape;
    const std::size_t d = ds.image_elems();
    out.pixels.assign(ds.pixels.begin() + static_cast<std::ptrdiff_t>(start * d),
                      ds.pixels.begin() + static_cast<std::ptrdiff_t>((start + count) * d));
    out.labels.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(start),
                      ds.labels.begin() + static_cast<std::ptrdiff_t>(start + count));
    return out;
}

void write_labels_csv(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("csv: cannot open " + path + " for writing");
    out << "index,label\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << i << "," << ds.labels[i] << "\n";
    }
}

} // namespace saliency
