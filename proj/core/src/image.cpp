#include "cpda/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cpda/errors.hpp"

namespace cpda {

namespace {

void check_shape(int height, int width, int channels) {
  if (height < 1 || width < 1) {
    throw InvalidArgument("image dimensions must be positive, got " + std::to_string(height) +
                          "x" + std::to_string(width));
  }
  if (channels != 1 && channels != 3) {
    throw InvalidArgument("image channels must be 1 or 3, got " + std::to_string(channels));
  }
}

}  // namespace

ImageTensor::ImageTensor(int height, int width, int channels)
    : height_(height), width_(width), channels_(channels) {
  check_shape(height, width, channels);
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), 0);
}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<std::uint8_t> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  check_shape(height, width, channels);
  if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
    throw InvalidArgument("image data has " + std::to_string(data_.size()) +
                          " samples, expected " +
                          std::to_string(pixel_count() * static_cast<std::size_t>(channels)));
  }
}

ImageTensor ImageTensor::filled(int height, int width, int channels, std::uint8_t value) {
  ImageTensor img(height, width, channels);
  std::fill(img.data_.begin(), img.data_.end(), value);
  return img;
}

ImageTensor ImageTensor::crop(int top, int left, int h, int w) const {
  if (h < 1 || w < 1 || top < 0 || left < 0 || top + h > height_ || left + w > width_) {
    throw InvalidGeometry("crop (" + std::to_string(top) + "," + std::to_string(left) + "," +
                          std::to_string(h) + "," + std::to_string(w) + ") outside " +
                          std::to_string(height_) + "x" + std::to_string(width_));
  }
  ImageTensor out(h, w, channels_);
  const std::size_t row_bytes = static_cast<std::size_t>(w) * static_cast<std::size_t>(channels_);
  for (int r = 0; r < h; ++r) {
    const auto* src = &data_[offset(top + r, left, 0)];
    std::copy(src, src + row_bytes, &out.data_[out.offset(r, 0, 0)]);
  }
  return out;
}

std::vector<double> ImageTensor::channel_means() const {
  std::vector<std::uint64_t> sums(static_cast<std::size_t>(channels_), 0);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    sums[i % static_cast<std::size_t>(channels_)] += data_[i];
  }
  std::vector<double> means(sums.size());
  for (std::size_t c = 0; c < sums.size(); ++c) {
    means[c] = static_cast<double>(sums[c]) / static_cast<double>(pixel_count());
  }
  return means;
}

std::uint8_t round_to_u8(double v) noexcept {
  const double r = std::floor(v + 0.5);
  if (!(r > 0.0)) return 0;
  if (r >= 255.0) return 255;
  return static_cast<std::uint8_t>(r);
}

}  // namespace cpda
