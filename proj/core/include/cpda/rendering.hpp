#pragma once

#include <filesystem>

#include "cpda/image.hpp"
#include "cpda/saliency_map.hpp"

namespace cpda {

/// Loads an 8-bit grayscale or RGB PNG. Palettes without transparency expand to RGB.
/// Throws IoError for unreadable or truncated files and UnsupportedFormat for 16-bit
/// samples or any alpha channel.
ImageTensor load_png(const std::filesystem::path& path);

void save_png(const ImageTensor& img, const std::filesystem::path& path);

/// Diverging white-centred colour map, normalised by max |v|: positive values blend
/// towards red (255,0,0), negative towards blue (0,0,255). An all-zero map is white.
ImageTensor heatmap(const SaliencyMap& m);

/// Darkens `img` by the positive part of `m`: alpha = v+ / max(v+), out = alpha * img.
/// Throws DimensionMismatch when sizes differ.
ImageTensor overlay_mask(const ImageTensor& img, const SaliencyMap& m);

}  // namespace cpda
