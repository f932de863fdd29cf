#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpda/classifier.hpp"
#include "cpda/config.hpp"
#include "cpda/explainers.hpp"
#include "cpda/grid.hpp"
#include "cpda/image.hpp"
#include "cpda/saliency_map.hpp"

namespace cpda {

inline constexpr double kLogOddsClamp = 1e-9;

/// ln( (p/(1-p)) / (q/(1-q)) ) with p and q clamped to [1e-9, 1-1e-9].
double log_odds_ratio(double p, double q) noexcept;

/// Replaces the side x side window centred on argmax(m), shifted to stay inside the image,
/// with the per-channel image mean (rounded half up). `side` shrinks to fit small images.
ImageTensor perturb_at_argmax(const ImageTensor& img, const SaliencyMap& m, int side = 9);

/// Window chosen by perturb_at_argmax.
Rect perturbation_window(const SaliencyMap& m, int side = 9);

/// Method plus the knobs that the baselines need on top of ExplainConfig.
struct MethodSettings {
  Method method = Method::kCpda;
  ExplainConfig config;
  Filler filler = Filler::image_mean();  // pda-occlusion
  MarginalOptions marginal;              // pda-marginal
};

/// Runs the chosen method for one class and returns its map.
SaliencyMap explain_with(const ImageTensor& img, Classifier& clf, const MethodSettings& m,
                         std::size_t class_index);

struct CorpusImage {
  std::string path;
  ImageTensor image;
};

struct LogOddsEntry {
  std::string path;
  std::size_t class_index = 0;
  double p = 0.0;
  double q = 0.0;
  double ratio = 0.0;
};

struct LogOddsFailure {
  std::string path;
  std::string error;
};

struct LogOddsReport {
  Method method = Method::kCpda;
  MethodSettings settings;
  std::vector<LogOddsEntry> per_image;
  std::vector<LogOddsFailure> failures;
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::uint64_t calls = 0;

  /// {method, config, per_image: [{path, p, q, ratio}], mean, std, calls, failures}
  std::string to_json() const;
};

/// For every image: classify, explain the argmax class, perturb at the map's argmax,
/// reclassify, and record the log odds ratio. Per-image backend failures are recorded and
/// skipped; throws BackendError when every image fails and InvalidArgument on an empty corpus.
/// Images are processed by up to `workers` threads (0 = hardware concurrency); the report
/// is assembled in corpus order either way.
LogOddsReport evaluate_logodds(const std::vector<CorpusImage>& corpus, Classifier& clf,
                               const MethodSettings& settings, std::size_t workers = 1);

struct SaturationProbeResult {
  double base = 0.0;
  std::vector<Rect> regions;
  std::vector<double> scores;
  std::vector<double> deltas;  // score - base
};

/// Classifies the processed image, then each copy with one region filled.
SaturationProbeResult saturation_probe(const ImageTensor& img, const std::vector<Rect>& regions,
                                       Classifier& clf, std::size_t class_index,
                                       const Filler& filler);

/// Inference count of one explanation, base call included:
///   cpda, pda-occlusion:  |grid(n,k,s)| + 1
///   pda-marginal:         S * |grid(n,k,1)| + 1   (stride 1, as in the usual PDA accounting)
std::uint64_t predict_calls(Method method, int n, int k, int s, int samples);

struct CostModel {
  Method method = Method::kCpda;
  int n = 0;
  int k = 0;
  int s = 0;
  int samples = 0;
  std::uint64_t predicted_calls = 0;
  std::uint64_t measured_calls = 0;
  double seconds = 0.0;  // informational only
};

}  // namespace cpda
