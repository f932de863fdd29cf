#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cpda {

/// How two class scores are compared.
enum class DifferenceMeasure {
  kProbability,  // a - b
  kBits,         // log2(a) - log2(b), inputs floored at kBitsFloor
};

inline constexpr double kBitsFloor = 1e-12;

double prediction_difference(double with, double without, DifferenceMeasure measure) noexcept;

struct ExplainConfig {
  int patch_size = 20;
  int stride = 5;
  /// Explicit class index; empty means argmax of the base prediction.
  std::optional<std::size_t> class_index;
  DifferenceMeasure measure = DifferenceMeasure::kProbability;
  /// Upper bound on images handed to the backend in one batch during a sweep.
  std::size_t batch_size = 64;
};

/// Replacement content for occluded regions.
struct Filler {
  enum class Kind { kImageMean, kConstant, kUniformNoise };

  Kind kind = Kind::kImageMean;
  std::uint8_t value = 128;  // kConstant
  std::uint64_t seed = 0;    // kUniformNoise

  static Filler image_mean() { return {Kind::kImageMean, 0, 0}; }
  static Filler constant(std::uint8_t v) { return {Kind::kConstant, v, 0}; }
  static Filler gray128() { return constant(128); }
  static Filler uniform_noise(std::uint64_t seed) { return {Kind::kUniformNoise, 0, seed}; }
};

/// Parses "mean", "gray128", "const:<0-255>", "noise:<seed>".
std::optional<Filler> parse_filler(std::string_view text);
std::string to_string(const Filler& f);

}  // namespace cpda
