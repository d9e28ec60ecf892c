#pragma once
#include <stdexcept>
#include <string>

namespace textclf {

/// Malformed input files, incompatible artifacts, undefined metrics.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Divergence and other non-finite numeric states; aborts the run.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace textclf
