#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "cpda/distribution.hpp"
#include "cpda/image.hpp"

namespace cpda {

/// Snapshot of a classifier's usage. `inferences` counts images classified (one forward
/// pass each); `batches` counts backend round trips.
struct InferenceCounter {
  std::uint64_t batches = 0;
  std::uint64_t inferences = 0;
};

/// A black box mapping square 8-bit images of a fixed side to class scores. Subclasses
/// implement run_batch; this base enforces input dimensions, validates outputs, and keeps
/// the counter. Counter updates are atomic, so a classifier may be shared between threads
/// as long as run_batch is itself thread-safe.
class Classifier {
 public:
  explicit Classifier(int input_side);
  virtual ~Classifier() = default;

  Classifier(const Classifier&) = delete;
  Classifier& operator=(const Classifier&) = delete;

  int input_side() const noexcept { return input_side_; }

  /// Throws DimensionMismatch when img is not input_side x input_side.
  ClassDistribution classify(const ImageTensor& img);

  /// Element-wise equal to calling classify() in order. A failure on element i is
  /// reported as BatchElementError(i, ...). An empty batch returns an empty result and
  /// leaves the counter untouched.
  std::vector<ClassDistribution> classify_batch(std::span<const ImageTensor> imgs);

  InferenceCounter counter() const noexcept;
  void reset_counter() noexcept;

 protected:
  virtual std::vector<ClassDistribution> run_batch(std::span<const ImageTensor> imgs) = 0;

 private:
  void check_dims(const ImageTensor& img) const;
  void check_outputs(std::span<const ImageTensor> imgs,
                     const std::vector<ClassDistribution>& out) const;

  int input_side_;
  std::atomic<std::uint64_t> batches_{0};
  std::atomic<std::uint64_t> inferences_{0};
};

}  // namespace cpda
