#pragma once

#include <stdexcept>

namespace testroll {

/// A request that is well-formed but too large for the configured runtime
/// budget (oversized beta-binomial cells, oversized simulation workloads).
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace testroll
