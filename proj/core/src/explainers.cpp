#include "cpda/explainers.hpp"

#include <algorithm>
#include <string>

#include "cpda/errors.hpp"
#include "cpda/patching.hpp"

namespace cpda {

namespace {

void check_outputs_match(const ClassDistribution& base, const std::vector<ClassDistribution>& out,
                         std::size_t first_patch) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() != base.size()) {
      throw BatchElementError(first_patch + i,
                              "backend returned " + std::to_string(out[i].size()) +
                                  " classes, base prediction had " + std::to_string(base.size()));
    }
  }
}

// Classifies a batch that starts at patch `first_patch`, re-labelling element failures
// with the patch index.
std::vector<ClassDistribution> classify_patches(Classifier& clf, std::span<const ImageTensor> imgs,
                                                std::size_t first_patch, int per_patch = 1) {
  try {
    return clf.classify_batch(imgs);
  } catch (const BatchElementError& e) {
    const std::size_t patch = first_patch + e.index() / static_cast<std::size_t>(per_patch);
    throw BatchElementError(patch, std::string("patch ") + std::to_string(patch) + ": " + e.what());
  }
}

std::size_t batch_limit(const ExplainConfig& cfg) { return std::max<std::size_t>(cfg.batch_size, 1); }

std::vector<std::uint8_t> rounded_means(const ImageTensor& img) {
  std::vector<std::uint8_t> out;
  for (double m : img.channel_means()) out.push_back(round_to_u8(m));
  return out;
}

// Copies the k x k block at `from` in `src` onto `to` in `dst`.
void paste_block(ImageTensor& dst, const Rect& to, const ImageTensor& src, int from_top,
                 int from_left) {
  for (int r = 0; r < to.height; ++r) {
    for (int c = 0; c < to.width; ++c) {
      for (int ch = 0; ch < dst.channels(); ++ch) {
        dst.at(to.top + r, to.left + c, ch) = src.at(from_top + r, from_left + c, ch);
      }
    }
  }
}

}  // namespace

void fill_region(ImageTensor& img, const Rect& rect, const Filler& filler,
                 std::span<const std::uint8_t> mean, std::mt19937_64& rng) {
  for (int r = rect.top; r < rect.top + rect.height; ++r) {
    for (int c = rect.left; c < rect.left + rect.width; ++c) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        switch (filler.kind) {
          case Filler::Kind::kImageMean:
            img.at(r, c, ch) = mean[static_cast<std::size_t>(ch)];
            break;
          case Filler::Kind::kConstant:
            img.at(r, c, ch) = filler.value;
            break;
          case Filler::Kind::kUniformNoise:
            img.at(r, c, ch) = static_cast<std::uint8_t>(rng() & 0xFFu);
            break;
        }
      }
    }
  }
}

PatchSweep sweep_cpda(const ImageTensor& img, Classifier& clf, const ExplainConfig& cfg) {
  const int n = clf.input_side();
  PatchSweep sweep;
  sweep.method = Method::kCpda;
  sweep.grid = build_grid(n, cfg.patch_size, cfg.stride);
  if (cfg.patch_size == n) {
    throw InvalidGeometry("contextual analysis needs patch size < input side (context is empty)");
  }

  sweep.base = clf.classify(bilinear_resize(img, n, n));
  sweep.patch_scores.reserve(sweep.grid.size());

  const std::size_t limit = batch_limit(cfg);
  std::vector<ImageTensor> batch;
  for (std::size_t first = 0; first < sweep.grid.size(); first += batch.size()) {
    batch.clear();
    for (std::size_t j = first; j < sweep.grid.size() && batch.size() < limit; ++j) {
      batch.push_back(crop_patch_from_original(img, n, sweep.grid.at(j)));
    }
    auto out = classify_patches(clf, batch, first);
    check_outputs_match(sweep.base, out, first);
    for (auto& d : out) sweep.patch_scores.push_back(std::move(d.probs));
  }
  return sweep;
}

PatchSweep sweep_occlusion(const ImageTensor& img, Classifier& clf, const ExplainConfig& cfg,
                           const Filler& filler) {
  const int n = clf.input_side();
  PatchSweep sweep;
  sweep.method = Method::kPdaOcclusion;
  sweep.grid = build_grid(n, cfg.patch_size, cfg.stride);

  const ImageTensor processed = bilinear_resize(img, n, n);
  sweep.base = clf.classify(processed);
  sweep.patch_scores.reserve(sweep.grid.size());

  const auto mean = rounded_means(processed);
  std::mt19937_64 rng(filler.seed);
  const std::size_t limit = batch_limit(cfg);
  std::vector<ImageTensor> batch;
  for (std::size_t first = 0; first < sweep.grid.size(); first += batch.size()) {
    batch.clear();
    for (std::size_t j = first; j < sweep.grid.size() && batch.size() < limit; ++j) {
      ImageTensor filled = processed;
      fill_region(filled, sweep.grid.at(j).rect, filler, mean, rng);
      batch.push_back(std::move(filled));
    }
    auto out = classify_patches(clf, batch, first);
    check_outputs_match(sweep.base, out, first);
    for (auto& d : out) sweep.patch_scores.push_back(std::move(d.probs));
  }
  return sweep;
}

PatchSweep sweep_marginal(const ImageTensor& img, Classifier& clf, const ExplainConfig& cfg,
                          const MarginalOptions& options) {
  const int n = clf.input_side();
  const int k = cfg.patch_size;
  PatchSweep sweep;
  sweep.method = Method::kPdaMarginal;
  sweep.grid = build_grid(n, k, cfg.stride);
  if (options.samples < 1) throw InvalidArgument("marginal sampling needs at least one sample");

  const std::size_t samples = static_cast<std::size_t>(options.samples);
  const std::size_t grid_size = sweep.grid.size();
  const bool own_bank = !options.bank.has_value();
  const ImageTensor processed = bilinear_resize(img, n, n);

  if (!own_bank) {
    for (const auto& p : options.bank->patches) {
      if (p.height() != k || p.width() != k || p.channels() != processed.channels()) {
        throw InvalidArgument("bank patches must be " + std::to_string(k) + "x" +
                              std::to_string(k) + " with the image's channel count");
      }
    }
  }
  // The default bank holds every other grid location of the processed image.
  const std::size_t candidates = own_bank ? grid_size - 1 : options.bank->patches.size();
  if (candidates < samples) {
    throw InsufficientBank("patch bank offers " + std::to_string(candidates) +
                           " patches, need " + std::to_string(samples));
  }

  sweep.base = clf.classify(processed);
  const std::size_t classes = sweep.base.size();
  std::vector<std::vector<double>> sums(grid_size, std::vector<double>(classes, 0.0));

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> drawn;
  auto draw = [&](std::size_t j) {
    drawn.clear();
    while (drawn.size() < samples) {
      std::size_t u = static_cast<std::size_t>(rng() % candidates);
      if (own_bank && u >= j) ++u;
      if (std::find(drawn.begin(), drawn.end(), u) == drawn.end()) drawn.push_back(u);
    }
  };

  // Samples are generated in grid order and streamed through the backend in chunks.
  const std::size_t limit = batch_limit(cfg);
  std::vector<ImageTensor> batch;
  std::vector<std::size_t> owner;
  auto flush = [&] {
    if (batch.empty()) return;
    std::vector<ClassDistribution> out;
    try {
      out = clf.classify_batch(batch);
    } catch (const BatchElementError& e) {
      const std::size_t patch = owner[e.index()];
      throw BatchElementError(patch, "patch " + std::to_string(patch) + ": " + e.what());
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i].size() != classes) {
        throw BatchElementError(owner[i], "backend changed its class count");
      }
      auto& acc = sums[owner[i]];
      for (std::size_t c = 0; c < classes; ++c) acc[c] += out[i].probs[c];
    }
    batch.clear();
    owner.clear();
  };

  for (std::size_t j = 0; j < grid_size; ++j) {
    const Rect target = sweep.grid.at(j).rect;
    draw(j);
    for (std::size_t u : drawn) {
      ImageTensor sample = processed;
      if (own_bank) {
        const Rect src = sweep.grid.at(u).rect;
        paste_block(sample, target, processed, src.top, src.left);
      } else {
        paste_block(sample, target, options.bank->patches[u], 0, 0);
      }
      batch.push_back(std::move(sample));
      owner.push_back(j);
      if (batch.size() >= limit) flush();
    }
  }
  flush();

  sweep.patch_scores.resize(grid_size);
  for (std::size_t j = 0; j < grid_size; ++j) {
    auto& scores = sweep.patch_scores[j];
    scores.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      scores[c] = sums[j][c] / static_cast<double>(samples);
    }
  }
  return sweep;
}

std::vector<double> distribute_to_context(const PatchGrid& grid,
                                          std::span<const double> contextual) {
  const int n = grid.side();
  const int k = grid.patch();
  if (contextual.size() != grid.size()) {
    throw InvalidArgument("one contextual relevance per patch is required");
  }
  const long long context = static_cast<long long>(n) * n - static_cast<long long>(k) * k;
  if (context == 0) throw InvalidGeometry("patch covers the whole frame; context is empty");
  const double denom = static_cast<double>(context);

  const auto& corners = grid.corners();
  const std::size_t per = corners.size();
  std::vector<char> row_in(per);
  std::vector<char> col_in(per);
  std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    for (std::size_t a = 0; a < per; ++a) row_in[a] = corners[a] <= r && r < corners[a] + k;
    for (int c = 0; c < n; ++c) {
      for (std::size_t b = 0; b < per; ++b) col_in[b] = corners[b] <= c && c < corners[b] + k;
      double acc = 0.0;
      for (std::size_t a = 0; a < per; ++a) {
        const double* row = contextual.data() + a * per;
        if (!row_in[a]) {
          for (std::size_t b = 0; b < per; ++b) acc += row[b];
        } else {
          for (std::size_t b = 0; b < per; ++b) {
            if (!col_in[b]) acc += row[b];
          }
        }
      }
      out[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)] =
          acc / denom;
    }
  }
  return out;
}

std::vector<double> average_over_coverage(const PatchGrid& grid, std::span<const double> diff) {
  const int n = grid.side();
  const int k = grid.patch();
  if (diff.size() != grid.size()) throw InvalidArgument("one difference per patch is required");

  const auto& corners = grid.corners();
  const std::size_t per = corners.size();
  std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  for (int r = 0; r < n; ++r) {
    rows.clear();
    for (std::size_t a = 0; a < per; ++a) {
      if (corners[a] <= r && r < corners[a] + k) rows.push_back(a);
    }
    for (int c = 0; c < n; ++c) {
      cols.clear();
      for (std::size_t b = 0; b < per; ++b) {
        if (corners[b] <= c && c < corners[b] + k) cols.push_back(b);
      }
      if (rows.empty() || cols.empty()) continue;
      double acc = 0.0;
      for (std::size_t a : rows) {
        for (std::size_t b : cols) acc += diff[a * per + b];
      }
      out[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)] =
          acc / static_cast<double>(rows.size() * cols.size());
    }
  }
  return out;
}

std::size_t resolve_class(const ExplainConfig& cfg, const ClassDistribution& base) {
  const std::size_t c = cfg.class_index.value_or(base.argmax());
  if (c >= base.size()) {
    throw InvalidArgument("class " + std::to_string(c) + " out of range; backend reports " +
                          std::to_string(base.size()) + " classes");
  }
  return c;
}

SaliencyMap explain_class(const PatchSweep& sweep, std::size_t class_index,
                          DifferenceMeasure measure) {
  if (class_index >= sweep.num_classes()) {
    throw InvalidArgument("class " + std::to_string(class_index) + " out of range");
  }
  const double base = sweep.base.probs[class_index];
  std::vector<double> diff(sweep.patch_scores.size());
  for (std::size_t j = 0; j < diff.size(); ++j) {
    diff[j] = prediction_difference(base, sweep.patch_scores[j][class_index], measure);
  }

  const int n = sweep.grid.side();
  SaliencyMap m = SaliencyMap::zeros(n, n, class_index, sweep.method,
                                     {sweep.grid.patch(), sweep.grid.stride(), base});
  m.values = sweep.method == Method::kCpda ? distribute_to_context(sweep.grid, diff)
                                           : average_over_coverage(sweep.grid, diff);
  return m;
}

CpdaResult cpda_image(const ImageTensor& img, Classifier& clf, const ExplainConfig& cfg) {
  const PatchSweep sweep = sweep_cpda(img, clf, cfg);
  const std::size_t c = resolve_class(cfg, sweep.base);

  CpdaResult result;
  result.map = explain_class(sweep, c, cfg.measure);
  result.scores.base = sweep.base.probs[c];
  result.scores.standalone.reserve(sweep.patch_scores.size());
  result.scores.contextual.reserve(sweep.patch_scores.size());
  for (const auto& s : sweep.patch_scores) {
    result.scores.standalone.push_back(s[c]);
    result.scores.contextual.push_back(
        prediction_difference(result.scores.base, s[c], cfg.measure));
  }
  return result;
}

SaliencyMap pda_image_occlusion(const ImageTensor& img, Classifier& clf,
                                const ExplainConfig& cfg, const Filler& filler) {
  const PatchSweep sweep = sweep_occlusion(img, clf, cfg, filler);
  return explain_class(sweep, resolve_class(cfg, sweep.base), cfg.measure);
}

SaliencyMap pda_image_marginal(const ImageTensor& img, Classifier& clf,
                               const ExplainConfig& cfg, const MarginalOptions& options) {
  const PatchSweep sweep = sweep_marginal(img, clf, cfg, options);
  return explain_class(sweep, resolve_class(cfg, sweep.base), cfg.measure);
}

std::pair<SaliencyMap, SaliencyMap> split_signed(const SaliencyMap& m) {
  SaliencyMap pos = m;
  SaliencyMap neg = m;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    pos.values[i] = std::max(m.values[i], 0.0);
    neg.values[i] = std::min(m.values[i], 0.0);
  }
  return {std::move(pos), std::move(neg)};
}

}  // namespace cpda
