#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cpda {

/// 8-bit raster, row-major with interleaved channels (1 = gray, 3 = RGB).
class ImageTensor {
 public:
  ImageTensor() = default;

  /// Zero-filled image. Throws InvalidArgument on bad dimensions.
  ImageTensor(int height, int width, int channels);

  /// Takes ownership of `data`; its size must equal height*width*channels.
  ImageTensor(int height, int width, int channels, std::vector<std::uint8_t> data);

  static ImageTensor filled(int height, int width, int channels, std::uint8_t value);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t at(int row, int col, int ch = 0) const noexcept {
    return data_[offset(row, col, ch)];
  }
  std::uint8_t& at(int row, int col, int ch = 0) noexcept { return data_[offset(row, col, ch)]; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  /// Copy of the sub-rectangle [top, top+h) x [left, left+w). Throws InvalidGeometry if it
  /// does not fit.
  ImageTensor crop(int top, int left, int h, int w) const;

  /// Per-channel arithmetic mean of all samples.
  std::vector<double> channel_means() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t offset(int row, int col, int ch) const noexcept {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(col)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(ch);
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Round half up to the nearest 8-bit value, clamping to [0,255].
std::uint8_t round_to_u8(double v) noexcept;

}  // namespace cpda
