#include "cpda/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cpda/errors.hpp"

namespace cpda {

std::size_t ClassDistribution::argmax() const {
  if (probs.empty()) throw InvalidArgument("argmax of an empty distribution");
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

void validate_distribution(const ClassDistribution& d) {
  if (d.probs.empty()) throw InvalidArgument("class distribution is empty");
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    const double p = d.probs[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) throw OutOfRange(i, p);
  }
}

std::vector<std::size_t> top_classes(const ClassDistribution& d, std::size_t m) {
  std::vector<std::size_t> idx(d.probs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return d.probs[a] > d.probs[b]; });
  idx.resize(std::min(m, idx.size()));
  return idx;
}

}  // namespace cpda
