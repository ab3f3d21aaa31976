#pragma once

#include <string>
#include <vector>

#include "saliency/network.hpp"

namespace saliency {

/// Parses the layer mini-language: comma-separated tokens
///   flatten | relu | dense:<out> | conv:<out_ch>:<kh>x<kw>
/// into a network with zero parameters (call initialize_parameters next).
/// num_classes comes from the final layer's output, which must be a vector.
Network parse_architecture(const std::string& arch, const Shape& input_shape,
                           bool bias_enabled = true);

/// "16x16" -> {16,16}
Shape parse_shape(const std::string& text);

/// Entry point behind the saliencylab binary. args[0] is the program name.
/// Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, const char* const* argv);

} // namespace saliency
