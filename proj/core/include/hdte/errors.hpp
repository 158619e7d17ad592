#pragma once

#include <stdexcept>
#include <string>

namespace hdte {

// Malformed or unreadable input data (dataset/model/nuisance files).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid experiment configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hdte
