#include "cpda/backend_spec.hpp"

#include <charconv>
#include <fstream>

#include "cpda/errors.hpp"
#include "cpda/external.hpp"
#include "json.hpp"

namespace cpda {

namespace {

using nlohmann::json;

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double to_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw InvalidArgument("backend spec: bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

int to_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw InvalidArgument("backend spec: bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::vector<std::vector<std::size_t>> load_groups(const std::filesystem::path& path, int& side) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open group file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("group file " + path.string() + ": " + e.what());
  }
  try {
    if (doc.contains("side")) side = doc.at("side").get<int>();
    if (side < 1) throw InvalidArgument("group file: side must be positive");
    std::vector<std::vector<std::size_t>> groups;
    for (const auto& g : doc.at("groups")) {
      if (g.contains("rect")) {
        const auto r = g.at("rect").get<std::vector<int>>();
        if (r.size() != 4) throw InvalidArgument("group file: rect needs 4 integers");
        const Rect rect{r[0], r[1], r[2], r[3]};
        groups.push_back(GroupDef::from_rects(side, {rect}).groups().front());
      } else {
        groups.push_back(g.at("pixels").get<std::vector<std::size_t>>());
      }
    }
    return groups;
  } catch (const json::exception& e) {
    throw InvalidArgument("group file " + path.string() + ": " + e.what());
  }
}

ClassifierSpec parse_backend_spec(std::string_view text, int input_side) {
  ClassifierSpec spec;
  spec.input_side = input_side;
  if (input_side < 1) throw InvalidArgument("input side must be positive");

  if (text.starts_with("exec:")) {
    spec.kind = ClassifierSpec::Kind::kExec;
    spec.command = std::string(text.substr(5));
    if (spec.command.empty()) throw InvalidArgument("backend spec: exec needs a command line");
    return spec;
  }
  if (text.starts_with("tcp:")) {
    spec.kind = ClassifierSpec::Kind::kTcp;
    const auto rest = text.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw InvalidArgument("backend spec: tcp needs <host>:<port>");
    }
    spec.host = std::string(rest.substr(0, colon));
    const int port = to_int(rest.substr(colon + 1), "port");
    if (port < 1 || port > 65535) throw InvalidArgument("backend spec: port out of range");
    spec.port = static_cast<std::uint16_t>(port);
    return spec;
  }
  if (!text.starts_with("analytic:")) {
    throw InvalidArgument("backend spec must start with analytic:, exec: or tcp:");
  }

  const auto rest = text.substr(9);
  const auto colon = rest.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidArgument("backend spec: analytic:<kind>:<params>");
  }
  const auto kind = rest.substr(0, colon);
  const auto params = rest.substr(colon + 1);

  if (kind == "max-group" || kind == "saturated-or") {
    spec.kind = kind == "max-group" ? ClassifierSpec::Kind::kMaxGroup
                                    : ClassifierSpec::Kind::kSaturatedOr;
    spec.groups = load_groups(std::filesystem::path(std::string(params)), spec.input_side);
  } else if (kind == "linear") {
    spec.kind = ClassifierSpec::Kind::kLinearRegion;
    const auto f = split(params, ',');
    if (f.size() != 6) {
      throw InvalidArgument("backend spec: linear needs top,left,height,width,weight,bias");
    }
    spec.region = {to_int(f[0], "top"), to_int(f[1], "left"), to_int(f[2], "height"),
                   to_int(f[3], "width")};
    spec.weight = to_double(f[4], "weight");
    spec.bias = to_double(f[5], "bias");
  } else if (kind == "constant") {
    spec.kind = ClassifierSpec::Kind::kConstant;
    for (auto p : split(params, ',')) spec.constant_probs.push_back(to_double(p, "probability"));
    try {
      validate_distribution(ClassDistribution{spec.constant_probs});
    } catch (const OutOfRange& e) {
      throw InvalidArgument(std::string("backend spec: ") + e.what());
    }
  } else {
    throw InvalidArgument("backend spec: unknown analytic kind '" + std::string(kind) + "'");
  }
  return spec;
}

std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec) {
  switch (spec.kind) {
    case ClassifierSpec::Kind::kMaxGroup:
      return std::make_unique<MaxGroupClassifier>(GroupDef(spec.input_side, spec.groups));
    case ClassifierSpec::Kind::kSaturatedOr:
      return std::make_unique<SaturatedOrClassifier>(GroupDef(spec.input_side, spec.groups));
    case ClassifierSpec::Kind::kLinearRegion:
      return std::make_unique<LinearRegionClassifier>(spec.input_side, spec.region, spec.weight,
                                                      spec.bias);
    case ClassifierSpec::Kind::kConstant:
      return std::make_unique<ConstantClassifier>(spec.input_side, spec.constant_probs);
    case ClassifierSpec::Kind::kExec:
      return std::make_unique<ExternalClassifier>(spec.input_side, spawn_process(spec.command),
                                                  ExternalOptions{spec.timeout});
    case ClassifierSpec::Kind::kTcp:
      return std::make_unique<ExternalClassifier>(spec.input_side,
                                                  connect_tcp(spec.host, spec.port),
                                                  ExternalOptions{spec.timeout});
  }
  throw InvalidArgument("unknown classifier kind");
}

}  // namespace cpda
