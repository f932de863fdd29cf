#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "cpda/classifier.hpp"
#include "cpda/config.hpp"
#include "cpda/grid.hpp"
#include "cpda/image.hpp"
#include "cpda/saliency_map.hpp"

namespace cpda {

/// Raw classifier outputs gathered by one pass over the patch grid. A sweep holds scores
/// for every class, so maps for several classes can be derived without new inferences.
struct PatchSweep {
  Method method = Method::kCpda;
  PatchGrid grid;
  ClassDistribution base;
  /// One score vector per grid patch, in grid order. For CPDA this is f(x_j); for the
  /// occlusion and marginal baselines it is the prediction with patch j removed.
  std::vector<std::vector<double>> patch_scores;

  std::size_t num_classes() const noexcept { return base.size(); }
};

/// base score, standalone patch scores F_j and contextual relevance R_j = B - F_j.
struct PatchScoreTable {
  double base = 0.0;
  std::vector<double> standalone;
  std::vector<double> contextual;
};

struct CpdaResult {
  SaliencyMap map;
  PatchScoreTable scores;
};

/// Pool of k x k replacement patches for marginal sampling.
struct PatchBank {
  std::vector<ImageTensor> patches;
};

struct MarginalOptions {
  int samples = 10;
  std::uint64_t seed = 0;
  /// Empty: draw from the other grid locations of the processed image itself.
  std::optional<PatchBank> bank;
};

// ---- sweeps -------------------------------------------------------------------------

/// Base call on the image resized to n x n, then one call per grid patch on the patch
/// cropped from the original and resized to n x n. |grid| + 1 inferences.
PatchSweep sweep_cpda(const ImageTensor& img, Classifier& clf, const ExplainConfig& cfg);

/// Base call, then one call per patch on the processed image with that patch filled.
PatchSweep sweep_occlusion(const ImageTensor& img, Classifier& clf, const ExplainConfig& cfg,
                           const Filler& filler);

/// Base call, then `samples` calls per patch with the patch replaced by bank draws; the
/// patch score is the mean over draws. samples * |grid| + 1 inferences.
PatchSweep sweep_marginal(const ImageTensor& img, Classifier& clf, const ExplainConfig& cfg,
                          const MarginalOptions& options);

/// Derives the map of one class from a sweep.
SaliencyMap explain_class(const PatchSweep& sweep, std::size_t class_index,
                          DifferenceMeasure measure = DifferenceMeasure::kProbability);

/// Class chosen by cfg: the explicit index, else argmax of the base prediction.
std::size_t resolve_class(const ExplainConfig& cfg, const ClassDistribution& base);

// ---- accumulation -------------------------------------------------------------------

/// r_p = (sum over patches j not containing p of contextual[j]) / (n^2 - k^2), summed in
/// grid order. Throws InvalidGeometry when k == n (empty context).
std::vector<double> distribute_to_context(const PatchGrid& grid,
                                          std::span<const double> contextual);

/// r_p = (sum over patches j containing p of diff[j]) / c_p; zero where c_p == 0.
std::vector<double> average_over_coverage(const PatchGrid& grid, std::span<const double> diff);

// ---- one-shot entry points ----------------------------------------------------------

CpdaResult cpda_image(const ImageTensor& img, Classifier& clf, const ExplainConfig& cfg);

SaliencyMap pda_image_occlusion(const ImageTensor& img, Classifier& clf,
                                const ExplainConfig& cfg, const Filler& filler);

SaliencyMap pda_image_marginal(const ImageTensor& img, Classifier& clf,
                               const ExplainConfig& cfg, const MarginalOptions& options);

/// Positive and negative parts; positive + negative reproduces the input exactly.
std::pair<SaliencyMap, SaliencyMap> split_signed(const SaliencyMap& m);

/// Fills `rect` of `img` in place. `mean` must hold per-channel means when the filler is
/// kImageMean; noise samples are the low byte of successive `rng` draws.
void fill_region(ImageTensor& img, const Rect& rect, const Filler& filler,
                 std::span<const std::uint8_t> mean, std::mt19937_64& rng);

}  // namespace cpda
