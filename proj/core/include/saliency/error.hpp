#pragma once

#include <stdexcept>
#include <string>

namespace saliency {

/// Error thrown by all public operations on contract violations
/// (shape mismatches, malformed files, bad configuration).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace saliency
