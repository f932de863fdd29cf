#include "cpda/saliency_map.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

#include "cpda/errors.hpp"

namespace cpda {

using nlohmann::json;

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::kCpda:
      return "cpda";
    case Method::kPdaOcclusion:
      return "pda-occlusion";
    case Method::kPdaMarginal:
      return "pda-marginal";
  }
  return "cpda";
}

std::optional<Method> parse_method(std::string_view text) noexcept {
  if (text == "cpda") return Method::kCpda;
  if (text == "pda-occlusion") return Method::kPdaOcclusion;
  if (text == "pda-marginal") return Method::kPdaMarginal;
  return std::nullopt;
}

SaliencyMap SaliencyMap::zeros(int height, int width, std::size_t class_index, Method method,
                               MapMeta meta) {
  SaliencyMap m;
  m.height = height;
  m.width = width;
  m.values.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), 0.0);
  m.class_index = class_index;
  m.method = method;
  m.meta = meta;
  return m;
}

void validate_map(const SaliencyMap& m) {
  if (m.height < 1 || m.width < 1) throw InvalidArgument("saliency map has empty dimensions");
  if (m.values.size() != static_cast<std::size_t>(m.height) * static_cast<std::size_t>(m.width)) {
    throw InvalidArgument("saliency map value count does not match its dimensions");
  }
  for (double v : m.values) {
    if (!std::isfinite(v)) throw InvalidArgument("saliency map holds a non-finite value");
  }
}

std::string encode_map(const SaliencyMap& m) {
  validate_map(m);
  const json header = {
      {"height", m.height},
      {"width", m.width},
      {"class_index", m.class_index},
      {"method", std::string(to_string(m.method))},
      {"k", m.meta.patch_size},
      {"s", m.meta.stride},
      {"base_score", m.meta.base_score},
  };
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + m.values.size() * 4);
  for (double v : m.values) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
  }
  return out;
}

SaliencyMap decode_map(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw Malformed(".sal: missing header line");

  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw Malformed(std::string(".sal: bad header: ") + e.what());
  }

  SaliencyMap m;
  try {
    m.height = header.at("height").get<int>();
    m.width = header.at("width").get<int>();
    m.class_index = header.at("class_index").get<std::size_t>();
    const auto method = parse_method(header.at("method").get<std::string>());
    if (!method) throw Malformed(".sal: unknown method");
    m.method = *method;
    m.meta.patch_size = header.at("k").get<int>();
    m.meta.stride = header.at("s").get<int>();
    m.meta.base_score = header.at("base_score").get<double>();
  } catch (const json::exception& e) {
    throw Malformed(std::string(".sal: bad header field: ") + e.what());
  }
  if (m.height < 1 || m.width < 1) throw Malformed(".sal: non-positive dimensions");

  const auto payload = bytes.substr(nl + 1);
  const std::size_t count = static_cast<std::size_t>(m.height) * static_cast<std::size_t>(m.width);
  if (payload.size() != count * 4) {
    throw Malformed(".sal: payload has " + std::to_string(payload.size()) + " bytes, header needs " +
                    std::to_string(count * 4));
  }
  m.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[i * 4 + b])) << (8 * b);
    }
    const float f = std::bit_cast<float>(bits);
    if (!std::isfinite(f)) throw Malformed(".sal: non-finite value");
    m.values[i] = f;
  }
  return m;
}

void write_map(const SaliencyMap& m, const std::filesystem::path& path) {
  const std::string bytes = encode_map(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

SaliencyMap read_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return decode_map(buf.str());
}

}  // namespace cpda
