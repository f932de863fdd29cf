#pragma once

#include <cstddef>
#include <vector>

namespace cpda {

struct Rect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool contains(int row, int col) const noexcept {
    return row >= top && row < top + height && col >= left && col < left + width;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct PatchRef {
  std::size_t grid_index = 0;
  Rect rect;
};

/// Sliding-window layout of square k x k patches over an n x n frame with stride s.
/// Corners are {0, s, 2s, ...} up to n-k on each axis; no partial edge patches.
class PatchGrid {
 public:
  int side() const noexcept { return n_; }
  int patch() const noexcept { return k_; }
  int stride() const noexcept { return s_; }

  /// Top-left corners along one axis.
  const std::vector<int>& corners() const noexcept { return corners_; }
  std::size_t per_axis() const noexcept { return corners_.size(); }
  std::size_t size() const noexcept { return corners_.size() * corners_.size(); }

  /// Row-major patch j.
  PatchRef at(std::size_t j) const;

  /// Number of patches containing pixel (row, col).
  int coverage(int row, int col) const noexcept;

 private:
  friend PatchGrid build_grid(int n, int k, int s);

  int n_ = 0;
  int k_ = 0;
  int s_ = 0;
  std::vector<int> corners_;
};

/// Throws InvalidGeometry unless 1 <= k <= n and s >= 1.
PatchGrid build_grid(int n, int k, int s);

}  // namespace cpda
