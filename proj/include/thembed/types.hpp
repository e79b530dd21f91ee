#ifndef THEMBED_TYPES_HPP
#define THEMBED_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace thembed {

using NodeIndex = std::int32_t;
using TypeIndex = std::int32_t;
using Timestamp = std::int64_t;

constexpr TypeIndex kNoEdgeType = -1;

// Geometry backend for distances, gradients and update steps.
enum class Backend { Hyperbolic, Euclidean };

inline std::string_view to_string(Backend b) {
  return b == Backend::Hyperbolic ? "hyperbolic" : "euclidean";
}

inline Backend backend_from_string(std::string_view s) {
  if (s == "hyperbolic") return Backend::Hyperbolic;
  if (s == "euclidean") return Backend::Euclidean;
  throw std::invalid_argument("unknown backend name: " + std::string(s));
}

}  // namespace thembed

#endif
