#include "cpda/patching.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <string>
#include <vector>

#include "cpda/errors.hpp"

namespace cpda {

namespace {

// Source taps for one output coordinate along an axis.
// Source position of one output sample as an exact fraction: lo + w/den, with the hi tap
// weighted by w. Half-pixel centres put every weight on a multiple of 1/(2*out), so the
// interpolation below is carried out in integers and never depends on float rounding.
struct Tap {
  int lo = 0;
  int hi = 0;
  std::int64_t w = 0;
};

std::vector<Tap> axis_taps(int in, int out, std::int64_t den) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const std::int64_t last = static_cast<std::int64_t>(in - 1) * den;
  for (int d = 0; d < out; ++d) {
    // (d + 0.5) * in / out - 0.5, scaled by den = 2 * out.
    std::int64_t pos = static_cast<std::int64_t>(2 * d + 1) * in - out;
    pos = std::clamp<std::int64_t>(pos, 0, last);
    const int lo = static_cast<int>(pos / den);
    taps[static_cast<std::size_t>(d)] = {lo, std::min(lo + 1, in - 1), pos - lo * den};
  }
  return taps;
}

// round(a * num / den) for non-negative integers, halves rounded up.
int scale_round(int a, int num, int den) {
  const long long v = 2LL * a * num + den;
  return static_cast<int>(v / (2LL * den));
}

}  // namespace

ImageTensor bilinear_resize(const ImageTensor& img, int out_h, int out_w) {
  if (img.empty()) throw InvalidArgument("cannot resize an empty image");
  if (out_h < 1 || out_w < 1) {
    throw InvalidArgument("resize target must be positive, got " + std::to_string(out_h) + "x" +
                          std::to_string(out_w));
  }
  if (out_h == img.height() && out_w == img.width()) return img;

  const std::int64_t dy = 2LL * out_h;
  const std::int64_t dx = 2LL * out_w;
  const std::int64_t den = dy * dx;
  const auto ys = axis_taps(img.height(), out_h, dy);
  const auto xs = axis_taps(img.width(), out_w, dx);
  ImageTensor out(out_h, out_w, img.channels());
  for (int i = 0; i < out_h; ++i) {
    const Tap& y = ys[static_cast<std::size_t>(i)];
    for (int j = 0; j < out_w; ++j) {
      const Tap& x = xs[static_cast<std::size_t>(j)];
      for (int c = 0; c < img.channels(); ++c) {
        const std::int64_t top = (dx - x.w) * img.at(y.lo, x.lo, c) + x.w * img.at(y.lo, x.hi, c);
        const std::int64_t bottom =
            (dx - x.w) * img.at(y.hi, x.lo, c) + x.w * img.at(y.hi, x.hi, c);
        const std::int64_t v = (dy - y.w) * top + y.w * bottom;
        // Round half up: floor(v / den + 1/2).
        out.at(i, j, c) = static_cast<std::uint8_t>((2 * v + den) / (2 * den));
      }
    }
  }
  return out;
}

Rect original_frame_rect(const Rect& processed, int n, int height, int width) {
  auto map_axis = [n](int start, int len, int extent, int& out_start, int& out_len) {
    int lo = std::clamp(scale_round(start, extent, n), 0, extent);
    int hi = std::clamp(scale_round(start + len, extent, n), 0, extent);
    if (hi - lo < 1) {
      if (lo >= extent) lo = extent - 1;
      hi = lo + 1;
    }
    out_start = lo;
    out_len = hi - lo;
  };
  Rect r;
  map_axis(processed.top, processed.height, height, r.top, r.height);
  map_axis(processed.left, processed.width, width, r.left, r.width);
  return r;
}

ImageTensor crop_patch_from_original(const ImageTensor& original, int n, const PatchRef& patch) {
  const Rect& p = patch.rect;
  if (original.empty() || n < 1 || p.height < 1 || p.width < 1 || p.top < 0 || p.left < 0 ||
      p.top + p.height > n || p.left + p.width > n) {
    throw InvalidGeometry("patch " + std::to_string(patch.grid_index) +
                          " does not fit the processed frame of side " + std::to_string(n));
  }
  const Rect r = original_frame_rect(p, n, original.height(), original.width());
  return bilinear_resize(original.crop(r.top, r.left, r.height, r.width), n, n);
}

}  // namespace cpda
