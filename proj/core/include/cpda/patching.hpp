#pragma once

#include "cpda/grid.hpp"
#include "cpda/image.hpp"

namespace cpda {

/// Bilinear resampling with half-pixel centres: src = (dst + 0.5) * in/out - 0.5, clamped
/// to the edge. Each channel is interpolated independently and rounded half up.
ImageTensor bilinear_resize(const ImageTensor& img, int out_h, int out_w);

/// Maps a rectangle in the n x n processed frame back onto an original of size
/// height x width. Bounds are scaled per axis, rounded to nearest, clamped, and kept at
/// least one pixel wide.
Rect original_frame_rect(const Rect& processed, int n, int height, int width);

/// Crops the region of `original` that corresponds to `patch` in the processed frame and
/// resizes it to n x n. Cropping from the original avoids upsampling an already
/// downsampled patch.
ImageTensor crop_patch_from_original(const ImageTensor& original, int n, const PatchRef& patch);

}  // namespace cpda
