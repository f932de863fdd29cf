#include "cpda/grid.hpp"

#include <string>

#include "cpda/errors.hpp"

namespace cpda {

PatchGrid build_grid(int n, int k, int s) {
  if (k < 1 || k > n || s < 1) {
    throw InvalidGeometry("invalid patch geometry n=" + std::to_string(n) +
                          " k=" + std::to_string(k) + " s=" + std::to_string(s));
  }
  PatchGrid g;
  g.n_ = n;
  g.k_ = k;
  g.s_ = s;
  for (int c = 0; c <= n - k; c += s) g.corners_.push_back(c);
  return g;
}

PatchRef PatchGrid::at(std::size_t j) const {
  const std::size_t per = corners_.size();
  if (j >= per * per) throw InvalidArgument("patch index " + std::to_string(j) + " out of range");
  return {j, Rect{corners_[j / per], corners_[j % per], k_, k_}};
}

int PatchGrid::coverage(int row, int col) const noexcept {
  auto axis = [this](int x) {
    int c = 0;
    for (int corner : corners_) {
      if (corner <= x && x < corner + k_) ++c;
    }
    return c;
  };
  return axis(row) * axis(col);
}

}  // namespace cpda
