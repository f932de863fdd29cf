#include "cpda/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <string>
#include <thread>

#include "cpda/errors.hpp"
#include "cpda/patching.hpp"
#include "json.hpp"

namespace cpda {

double log_odds_ratio(double p, double q) noexcept {
  p = std::clamp(p, kLogOddsClamp, 1.0 - kLogOddsClamp);
  q = std::clamp(q, kLogOddsClamp, 1.0 - kLogOddsClamp);
  const auto logit = [](double x) { return std::log(x) - std::log1p(-x); };
  return logit(p) - logit(q);
}

Rect perturbation_window(const SaliencyMap& m, int side) {
  validate_map(m);
  const auto it = std::max_element(m.values.begin(), m.values.end());
  const auto idx = static_cast<std::size_t>(it - m.values.begin());
  const int row = static_cast<int>(idx / static_cast<std::size_t>(m.width));
  const int col = static_cast<int>(idx % static_cast<std::size_t>(m.width));
  const int h = std::min(side, m.height);
  const int w = std::min(side, m.width);
  return {std::clamp(row - h / 2, 0, m.height - h), std::clamp(col - w / 2, 0, m.width - w), h,
          w};
}

ImageTensor perturb_at_argmax(const ImageTensor& img, const SaliencyMap& m, int side) {
  if (img.height() != m.height || img.width() != m.width) {
    throw DimensionMismatch("saliency map and image sizes differ");
  }
  if (side < 1) throw InvalidArgument("perturbation window must be at least 1 pixel");
  const Rect window = perturbation_window(m, side);
  std::vector<std::uint8_t> mean;
  for (double v : img.channel_means()) mean.push_back(round_to_u8(v));

  ImageTensor out = img;
  std::mt19937_64 unused;
  fill_region(out, window, Filler::image_mean(), mean, unused);
  return out;
}

SaliencyMap explain_with(const ImageTensor& img, Classifier& clf, const MethodSettings& m,
                         std::size_t class_index) {
  ExplainConfig cfg = m.config;
  cfg.class_index = class_index;
  switch (m.method) {
    case Method::kCpda:
      return cpda_image(img, clf, cfg).map;
    case Method::kPdaOcclusion:
      return pda_image_occlusion(img, clf, cfg, m.filler);
    case Method::kPdaMarginal:
      return pda_image_marginal(img, clf, cfg, m.marginal);
  }
  throw InvalidArgument("unknown method");
}

namespace {

nlohmann::ordered_json settings_json(const MethodSettings& s) {
  nlohmann::ordered_json cfg;
  cfg["k"] = s.config.patch_size;
  cfg["s"] = s.config.stride;
  cfg["measure"] = s.config.measure == DifferenceMeasure::kBits ? "bits" : "probability";
  if (s.method == Method::kPdaOcclusion) cfg["filler"] = to_string(s.filler);
  if (s.method == Method::kPdaMarginal) {
    cfg["samples"] = s.marginal.samples;
    cfg["seed"] = s.marginal.seed;
  }
  return cfg;
}

}  // namespace

std::string LogOddsReport::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = std::string(cpda::to_string(method));
  j["config"] = settings_json(settings);
  auto& rows = j["per_image"] = nlohmann::ordered_json::array();
  for (const auto& e : per_image) {
    rows.push_back({{"path", e.path}, {"class", e.class_index}, {"p", e.p}, {"q", e.q},
                    {"ratio", e.ratio}});
  }
  j["mean"] = mean;
  j["std"] = stddev;
  j["calls"] = calls;
  auto& fails = j["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : failures) fails.push_back({{"path", f.path}, {"error", f.error}});
  return j.dump(2);
}

LogOddsReport evaluate_logodds(const std::vector<CorpusImage>& corpus, Classifier& clf,
                               const MethodSettings& settings, std::size_t workers) {
  if (corpus.empty()) throw InvalidArgument("log odds evaluation needs a non-empty corpus");
  const InferenceCounter before = clf.counter();
  const int n = clf.input_side();

  struct Outcome {
    std::optional<LogOddsEntry> entry;
    std::string error;
  };
  std::vector<Outcome> outcomes(corpus.size());

  auto run_one = [&](std::size_t i) {
    const auto& item = corpus[i];
    try {
      const ImageTensor processed = bilinear_resize(item.image, n, n);
      const ClassDistribution base = clf.classify(processed);
      const std::size_t cls = base.argmax();
      const SaliencyMap map = explain_with(item.image, clf, settings, cls);
      const ImageTensor perturbed = perturb_at_argmax(processed, map);
      const double p = base.probs[cls];
      const double q = clf.classify(perturbed)[cls];
      outcomes[i].entry = LogOddsEntry{item.path, cls, p, q, log_odds_ratio(p, q)};
    } catch (const BackendError& e) {
      outcomes[i].error = e.what();
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, corpus.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < corpus.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < corpus.size();) run_one(i);
      });
    }
  }

  LogOddsReport report;
  report.method = settings.method;
  report.settings = settings;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (outcomes[i].entry) {
      report.per_image.push_back(*outcomes[i].entry);
    } else {
      report.failures.push_back({corpus[i].path, outcomes[i].error});
    }
  }
  report.calls = clf.counter().inferences - before.inferences;
  if (report.per_image.empty()) {
    throw BackendError("every image failed; first error: " + report.failures.front().error);
  }

  double sum = 0.0;
  for (const auto& e : report.per_image) sum += e.ratio;
  report.mean = sum / static_cast<double>(report.per_image.size());
  double sq = 0.0;
  for (const auto& e : report.per_image) sq += (e.ratio - report.mean) * (e.ratio - report.mean);
  report.stddev = std::sqrt(sq / static_cast<double>(report.per_image.size()));
  return report;
}

SaturationProbeResult saturation_probe(const ImageTensor& img, const std::vector<Rect>& regions,
                                       Classifier& clf, std::size_t class_index,
                                       const Filler& filler) {
  const int n = clf.input_side();
  const ImageTensor processed = bilinear_resize(img, n, n);
  for (const Rect& r : regions) {
    if (r.height < 1 || r.width < 1 || r.top < 0 || r.left < 0 || r.top + r.height > n ||
        r.left + r.width > n) {
      throw RegionOutOfBounds("probe region outside the processed frame");
    }
  }

  SaturationProbeResult result;
  const ClassDistribution base = clf.classify(processed);
  if (class_index >= base.size()) throw InvalidArgument("probe class out of range");
  result.base = base.probs[class_index];
  result.regions = regions;
  if (regions.empty()) return result;

  std::vector<std::uint8_t> mean;
  for (double v : processed.channel_means()) mean.push_back(round_to_u8(v));
  std::mt19937_64 rng(filler.seed);
  std::vector<ImageTensor> variants;
  for (const Rect& r : regions) {
    ImageTensor v = processed;
    fill_region(v, r, filler, mean, rng);
    variants.push_back(std::move(v));
  }
  for (const auto& d : clf.classify_batch(variants)) {
    if (class_index >= d.size()) throw ProtocolError("backend changed its class count");
    result.scores.push_back(d.probs[class_index]);
    result.deltas.push_back(d.probs[class_index] - result.base);
  }
  return result;
}

std::uint64_t predict_calls(Method method, int n, int k, int s, int samples) {
  switch (method) {
    case Method::kCpda:
      if (k == n) throw InvalidGeometry("contextual analysis needs patch size < input side");
      return build_grid(n, k, s).size() + 1;
    case Method::kPdaOcclusion:
      return build_grid(n, k, s).size() + 1;
    case Method::kPdaMarginal:
      if (samples < 1) throw InvalidArgument("marginal sampling needs at least one sample");
      return static_cast<std::uint64_t>(samples) * build_grid(n, k, 1).size() + 1;
  }
  throw InvalidArgument("unknown method");
}

}  // namespace cpda
