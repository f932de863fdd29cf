#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cpda {

enum class Method { kCpda, kPdaOcclusion, kPdaMarginal };

std::string_view to_string(Method m) noexcept;
/// Accepts "cpda", "pda-occlusion", "pda-marginal".
std::optional<Method> parse_method(std::string_view text) noexcept;

struct MapMeta {
  int patch_size = 0;
  int stride = 0;
  double base_score = 0.0;

  friend bool operator==(const MapMeta&, const MapMeta&) = default;
};

/// Signed per-pixel relevance for one (image, class, method) triple, at the processed
/// resolution. Values are held at double precision in memory.
struct SaliencyMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
  std::size_t class_index = 0;
  Method method = Method::kCpda;
  MapMeta meta;

  static SaliencyMap zeros(int height, int width, std::size_t class_index, Method method,
                           MapMeta meta = {});

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(col)];
  }

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;
};

/// Throws InvalidArgument when dimensions and value count disagree or a value is non-finite.
void validate_map(const SaliencyMap& m);

// .sal format: one line of JSON metadata (height, width, class_index, method, k, s,
// base_score), a '\n', then height*width float32 little-endian values, row-major.
// Values are narrowed to float32 on write; a map whose values are already
// float32-representable round-trips bit-exactly.
std::string encode_map(const SaliencyMap& m);
SaliencyMap decode_map(std::string_view bytes);

void write_map(const SaliencyMap& m, const std::filesystem::path& path);
SaliencyMap read_map(const std::filesystem::path& path);

}  // namespace cpda
