#include "cpda/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace cpda {

double prediction_difference(double with, double without, DifferenceMeasure measure) noexcept {
  if (measure == DifferenceMeasure::kBits) {
    return std::log2(std::max(with, kBitsFloor)) - std::log2(std::max(without, kBitsFloor));
  }
  return with - without;
}

namespace {

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

std::optional<Filler> parse_filler(std::string_view text) {
  if (text == "mean" || text == "image-mean") return Filler::image_mean();
  if (text == "gray128") return Filler::gray128();
  if (text.starts_with("const:")) {
    auto v = parse_number<unsigned>(text.substr(6));
    if (!v || *v > 255) return std::nullopt;
    return Filler::constant(static_cast<std::uint8_t>(*v));
  }
  if (text.starts_with("noise:")) {
    auto seed = parse_number<std::uint64_t>(text.substr(6));
    if (!seed) return std::nullopt;
    return Filler::uniform_noise(*seed);
  }
  return std::nullopt;
}

std::string to_string(const Filler& f) {
  switch (f.kind) {
    case Filler::Kind::kImageMean:
      return "mean";
    case Filler::Kind::kConstant:
      return f.value == 128 ? "gray128" : "const:" + std::to_string(f.value);
    case Filler::Kind::kUniformNoise:
      return "noise:" + std::to_string(f.seed);
  }
  return "mean";
}

}  // namespace cpda
