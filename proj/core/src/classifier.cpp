#include "cpda/classifier.hpp"

#include <string>

#include "cpda/errors.hpp"

namespace cpda {

Classifier::Classifier(int input_side) : input_side_(input_side) {
  if (input_side < 1) throw InvalidArgument("classifier input side must be positive");
}

void Classifier::check_dims(const ImageTensor& img) const {
  if (img.height() != input_side_ || img.width() != input_side_) {
    throw DimensionMismatch("classifier expects " + std::to_string(input_side_) + "x" +
                            std::to_string(input_side_) + ", got " +
                            std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
}

void Classifier::check_outputs(std::span<const ImageTensor> imgs,
                               const std::vector<ClassDistribution>& out) const {
  if (out.size() != imgs.size()) {
    throw ProtocolError("backend returned " + std::to_string(out.size()) + " results for " +
                        std::to_string(imgs.size()) + " images");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    try {
      validate_distribution(out[i]);
    } catch (const Error& e) {
      throw BatchElementError(i, e.what());
    }
  }
}

ClassDistribution Classifier::classify(const ImageTensor& img) {
  check_dims(img);
  batches_.fetch_add(1, std::memory_order_relaxed);
  inferences_.fetch_add(1, std::memory_order_relaxed);
  auto out = run_batch(std::span<const ImageTensor>(&img, 1));
  check_outputs(std::span<const ImageTensor>(&img, 1), out);
  return std::move(out.front());
}

std::vector<ClassDistribution> Classifier::classify_batch(std::span<const ImageTensor> imgs) {
  if (imgs.empty()) return {};
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    try {
      check_dims(imgs[i]);
    } catch (const DimensionMismatch& e) {
      throw BatchElementError(i, e.what());
    }
  }
  batches_.fetch_add(1, std::memory_order_relaxed);
  inferences_.fetch_add(imgs.size(), std::memory_order_relaxed);
  auto out = run_batch(imgs);
  check_outputs(imgs, out);
  return out;
}

InferenceCounter Classifier::counter() const noexcept {
  return {batches_.load(std::memory_order_relaxed), inferences_.load(std::memory_order_relaxed)};
}

void Classifier::reset_counter() noexcept {
  batches_.store(0, std::memory_order_relaxed);
  inferences_.store(0, std::memory_order_relaxed);
}

}  // namespace cpda
