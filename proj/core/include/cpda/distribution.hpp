#pragma once

#include <cstddef>
#include <vector>

namespace cpda {

/// Per-class scores returned by a backend. Entries lie in [0,1]; they are never
/// renormalized, so single-output and multi-label backends are both valid.
struct ClassDistribution {
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](std::size_t i) const { return probs.at(i); }

  /// Index of the largest entry (first one on ties).
  std::size_t argmax() const;

  friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;
};

/// Throws OutOfRange(index, value) for the first entry that is non-finite or outside
/// [0,1], and InvalidArgument for an empty vector.
void validate_distribution(const ClassDistribution& d);

/// Indices of the `m` highest-scoring classes, best first. Ties resolve to the lower index.
std::vector<std::size_t> top_classes(const ClassDistribution& d, std::size_t m);

}  // namespace cpda
