#pragma once

#include <cstddef>
#include <vector>

#include "cpda/classifier.hpp"
#include "cpda/grid.hpp"

namespace cpda {

/// Disjoint pixel groups over a side x side frame. Pixel index = row * side + col. A
/// group's activation is the mean of all its samples (every channel) divided by 255.
class GroupDef {
 public:
  /// Throws InvalidArgument on overlapping groups, empty groups or out-of-range indices.
  GroupDef(int side, std::vector<std::vector<std::size_t>> groups);

  static GroupDef from_rects(int side, const std::vector<Rect>& rects);

  int side() const noexcept { return side_; }
  std::size_t size() const noexcept { return groups_.size(); }
  bool empty() const noexcept { return groups_.empty(); }
  const std::vector<std::vector<std::size_t>>& groups() const noexcept { return groups_; }

  std::vector<double> activations(const ImageTensor& img) const;

 private:
  int side_;
  std::vector<std::vector<std::size_t>> groups_;
};

double group_activation(const std::vector<std::size_t>& pixels, const ImageTensor& img);

/// max over group activations. Throws EmptyGroups when there are none.
double max_group_eval(const GroupDef& groups, const ImageTensor& img);

/// 1 - prod(1 - a_g): a soft OR that saturates at 1 as soon as one group is fully active.
double saturated_or_eval(const GroupDef& groups, const ImageTensor& img);

/// logistic(weight * mean_region + bias), mean_region scaled to [0,1].
/// Throws RegionOutOfBounds when the region does not fit inside img.
double linear_region_eval(const Rect& region, double weight, double bias, const ImageTensor& img);

double logistic(double z) noexcept;

// Built-in deterministic backends. All are pure, so concurrent calls are safe.

class ConstantClassifier final : public Classifier {
 public:
  ConstantClassifier(int input_side, std::vector<double> probs);

 protected:
  std::vector<ClassDistribution> run_batch(std::span<const ImageTensor> imgs) override;

 private:
  ClassDistribution out_;
};

class MaxGroupClassifier final : public Classifier {
 public:
  explicit MaxGroupClassifier(GroupDef groups);

 protected:
  std::vector<ClassDistribution> run_batch(std::span<const ImageTensor> imgs) override;

 private:
  GroupDef groups_;
};

class SaturatedOrClassifier final : public Classifier {
 public:
  explicit SaturatedOrClassifier(GroupDef groups);

 protected:
  std::vector<ClassDistribution> run_batch(std::span<const ImageTensor> imgs) override;

 private:
  GroupDef groups_;
};

class LinearRegionClassifier final : public Classifier {
 public:
  LinearRegionClassifier(int input_side, Rect region, double weight, double bias);

  const Rect& region() const noexcept { return region_; }

 protected:
  std::vector<ClassDistribution> run_batch(std::span<const ImageTensor> imgs) override;

 private:
  Rect region_;
  double weight_;
  double bias_;
};

}  // namespace cpda
