#pragma once

#include <stdexcept>
#include <string>

namespace hyrec {

/// Raised for malformed configuration or command usage. Maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised for filesystem and serialization failures. Maps to exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hyrec
