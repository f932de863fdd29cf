#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cpda/analytic.hpp"
#include "cpda/classifier.hpp"

namespace cpda {

/// Declarative description of a backend.
struct ClassifierSpec {
  enum class Kind { kMaxGroup, kSaturatedOr, kLinearRegion, kConstant, kExec, kTcp };

  Kind kind = Kind::kConstant;
  int input_side = 224;

  std::vector<std::vector<std::size_t>> groups;  // max-group, saturated-or
  Rect region;                                   // linear-region
  double weight = 0.0;
  double bias = 0.0;
  std::vector<double> constant_probs;  // constant
  std::string command;                 // exec
  std::string host;                    // tcp
  std::uint16_t port = 0;
  std::chrono::milliseconds timeout{30'000};
};

/// Parses the flat backend grammar:
///   analytic:max-group:<groups.json>
///   analytic:saturated-or:<groups.json>
///   analytic:linear:<top>,<left>,<height>,<width>,<weight>,<bias>
///   analytic:constant:<p>[,<p>...]
///   exec:<command line>
///   tcp:<host>:<port>
/// Group files are JSON: {"groups": [{"rect": [top, left, h, w]} | {"pixels": [i, ...]}]},
/// with an optional "side" that overrides `input_side`. Throws InvalidArgument or IoError.
ClassifierSpec parse_backend_spec(std::string_view text, int input_side);

/// Reads a group file into pixel-index sets for a frame of side `side`.
std::vector<std::vector<std::size_t>> load_groups(const std::filesystem::path& path, int& side);

/// Instantiates the backend. External kinds connect immediately.
std::unique_ptr<Classifier> make_classifier(const ClassifierSpec& spec);

}  // namespace cpda
