#pragma once

#include <stdexcept>
#include <string>

namespace leaklab {

// Error categories map onto the CLI exit codes: config errors exit 2,
// data errors exit 3, runtime/numeric errors exit 4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct MetricError : std::runtime_error {
  explicit MetricError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace leaklab
