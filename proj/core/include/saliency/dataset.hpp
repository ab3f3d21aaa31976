#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saliency/tensor.hpp"

namespace saliency {

/// N images with pixel values in [0,1] plus integer labels. Images share one
/// shape and are stored contiguously.
struct LabeledDataset {
    Shape image_shape;
    std::vector<double> pixels; // N * prod(image_shape)
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    std::size_t image_elems() const { return shape_product(image_shape); }

    Tensor image(std::size_t i) const;
    int label(std::size_t i) const { return labels[i]; }

    void validate() const;
};

/// Parses an IDX ubyte image/label pair (big-endian header, magic 0x00000803
/// for images and 0x00000801 for labels); pixels are scaled by 1/255.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Images-only IDX read (for attribution inputs without labels).
LabeledDataset load_idx_images(const std::string& images_path);

/// Writes the dataset back to an IDX pair; images must be 2-D. Round-trips
/// files produced by load_idx byte-identically.
void write_idx(const LabeledDataset& ds, const std::string& images_path,
               const std::string& labels_path);

/// Deterministic 16x16 ten-class glyph images with jitter, per-sample stroke
/// intensity, and pixel noise; class of sample i is i mod 10.
LabeledDataset synthetic_digits(std::size_t n, std::uint64_t seed);

/// Labels replaced by a uniform random permutation of themselves; images
/// untouched.
LabeledDataset permute_labels(const LabeledDataset& ds, std::uint64_t seed);

/// Contiguous subset [start, start+count).
LabeledDataset slice(const LabeledDataset& ds, std::size_t start, std::size_t count);

/// CSV audit dump: header then one "index,label" row per sample.
void write_labels_csv(const LabeledDataset& ds, const std::string& path);

} // namespace saliency
