#pragma once

#include <string>

#include "saliency/attribution.hpp"
#include "saliency/network.hpp"

namespace saliency {

// Binary containers, all multi-byte fields little-endian.
//
// Network (.sfn):
//   magic "SFN1"
//   u32 input rank, u32 input dims[rank]
//   u32 num_classes
//   u32 layer count
//   per layer: u32 kind (0 dense, 1 conv2d, 2 relu, 3 flatten)
//     dense:  u32 bias_enabled, u32 out, u32 in, f64 W[out*in] row-major, f64 b[out]
//     conv2d: u32 bias_enabled, u32 out_ch, u32 in_ch, u32 kh, u32 kw,
//             f64 K[out_ch*in_ch*kh*kw] row-major, f64 b[out_ch]
//
// Saliency map (.smap):
//   magic "SFM1", u32 method (0 gradinput, 1 cgi, 2 lrp, 3 clrp), u32 node,
//   u32 rank, u32 dims[rank], f64 scores
//
// Map stack (.sfs):
//   magic "SFS1", u32 count, u32 chosen, then count map records as above.

void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

void save_map(const SaliencyMap& map, const std::string& path);
SaliencyMap load_map(const std::string& path);

void save_stack(const MapStack& stack, const std::string& path);
MapStack load_stack(const std::string& path);

} // namespace saliency
