#include "cpda/rendering.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "cpda/errors.hpp"

namespace cpda {

namespace {

// png_image owns libpng state until freed.
struct PngImage {
  png_image image{};
  PngImage() { image.version = PNG_IMAGE_VERSION; }
  ~PngImage() { png_image_free(&image); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

}  // namespace

ImageTensor load_png(const std::filesystem::path& path) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + png.image.message);
  }
  const auto format = png.image.format;
  if (format & PNG_FORMAT_FLAG_LINEAR) {
    throw UnsupportedFormat(path.string() + ": 16-bit PNGs are not supported");
  }
  if (format & PNG_FORMAT_FLAG_ALPHA) {
    throw UnsupportedFormat(path.string() +
                            ((format & PNG_FORMAT_FLAG_COLORMAP)
                                 ? ": palette PNGs with transparency are not supported"
                                 : ": PNGs with an alpha channel are not supported"));
  }
  const bool color = (format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  const int h = static_cast<int>(png.image.height);
  const int w = static_cast<int>(png.image.width);
  ImageTensor img(h, w, color ? 3 : 1);
  if (!png_image_finish_read(&png.image, nullptr, img.data().data(), 0, nullptr)) {
    throw IoError("cannot decode PNG " + path.string() + ": " + png.image.message);
  }
  return img;
}

void save_png(const ImageTensor& img, const std::filesystem::path& path) {
  if (img.empty()) throw InvalidArgument("cannot save an empty image");
  PngImage png;
  png.image.width = static_cast<png_uint_32>(img.width());
  png.image.height = static_cast<png_uint_32>(img.height());
  png.image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png.image, path.c_str(), 0, img.data().data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + png.image.message);
  }
}

ImageTensor heatmap(const SaliencyMap& m) {
  validate_map(m);
  double scale = 0.0;
  for (double v : m.values) scale = std::max(scale, std::abs(v));

  ImageTensor out = ImageTensor::filled(m.height, m.width, 3, 255);
  if (scale == 0.0) return out;
  for (int r = 0; r < m.height; ++r) {
    for (int c = 0; c < m.width; ++c) {
      const double v = m.at(r, c);
      if (v == 0.0) continue;
      const std::uint8_t fade = round_to_u8(255.0 * (1.0 - std::abs(v) / scale));
      if (v > 0.0) {
        out.at(r, c, 1) = fade;
        out.at(r, c, 2) = fade;
      } else {
        out.at(r, c, 0) = fade;
        out.at(r, c, 1) = fade;
      }
    }
  }
  return out;
}

ImageTensor overlay_mask(const ImageTensor& img, const SaliencyMap& m) {
  validate_map(m);
  if (img.height() != m.height || img.width() != m.width) {
    throw DimensionMismatch("overlay: image and map sizes differ");
  }
  double peak = 0.0;
  for (double v : m.values) peak = std::max(peak, v);

  ImageTensor out(img.height(), img.width(), img.channels());
  if (peak <= 0.0) return out;
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const double alpha = std::clamp(std::max(m.at(r, c), 0.0) / peak, 0.0, 1.0);
      for (int ch = 0; ch < img.channels(); ++ch) {
        out.at(r, c, ch) = round_to_u8(alpha * img.at(r, c, ch));
      }
    }
  }
  return out;
}

}  // namespace cpda
