#include "cpda/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "cpda/errors.hpp"

namespace cpda {

GroupDef::GroupDef(int side, std::vector<std::vector<std::size_t>> groups)
    : side_(side), groups_(std::move(groups)) {
  if (side < 1) throw InvalidArgument("group frame side must be positive");
  const std::size_t pixels = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
  std::vector<bool> used(pixels, false);
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].empty()) throw InvalidArgument("group " + std::to_string(g) + " is empty");
    for (std::size_t idx : groups_[g]) {
      if (idx >= pixels) {
        throw InvalidArgument("group " + std::to_string(g) + " pixel " + std::to_string(idx) +
                              " outside a " + std::to_string(side) + "x" +
                              std::to_string(side) + " frame");
      }
      if (used[idx]) {
        throw InvalidArgument("groups overlap at pixel " + std::to_string(idx));
      }
      used[idx] = true;
    }
  }
}

GroupDef GroupDef::from_rects(int side, const std::vector<Rect>& rects) {
  std::vector<std::vector<std::size_t>> groups;
  for (const Rect& r : rects) {
    if (r.height < 1 || r.width < 1 || r.top < 0 || r.left < 0 || r.top + r.height > side ||
        r.left + r.width > side) {
      throw InvalidArgument("group rectangle outside the frame");
    }
    std::vector<std::size_t> g;
    for (int row = r.top; row < r.top + r.height; ++row) {
      for (int col = r.left; col < r.left + r.width; ++col) {
        g.push_back(static_cast<std::size_t>(row) * static_cast<std::size_t>(side) +
                    static_cast<std::size_t>(col));
      }
    }
    groups.push_back(std::move(g));
  }
  return GroupDef(side, std::move(groups));
}

double group_activation(const std::vector<std::size_t>& pixels, const ImageTensor& img) {
  const auto data = img.data();
  const auto ch = static_cast<std::size_t>(img.channels());
  std::uint64_t sum = 0;
  for (std::size_t p : pixels) {
    for (std::size_t c = 0; c < ch; ++c) sum += data[p * ch + c];
  }
  return static_cast<double>(sum) / (static_cast<double>(pixels.size() * ch) * 255.0);
}

std::vector<double> GroupDef::activations(const ImageTensor& img) const {
  if (img.height() != side_ || img.width() != side_) {
    throw DimensionMismatch("group definition is for a " + std::to_string(side_) + "x" +
                            std::to_string(side_) + " frame");
  }
  std::vector<double> a;
  a.reserve(groups_.size());
  for (const auto& g : groups_) a.push_back(group_activation(g, img));
  return a;
}

double max_group_eval(const GroupDef& groups, const ImageTensor& img) {
  if (groups.empty()) throw EmptyGroups("max-group classifier has no groups");
  const auto a = groups.activations(img);
  return *std::max_element(a.begin(), a.end());
}

double saturated_or_eval(const GroupDef& groups, const ImageTensor& img) {
  if (groups.empty()) throw EmptyGroups("saturated-or classifier has no groups");
  double keep = 1.0;
  for (double a : groups.activations(img)) keep *= 1.0 - a;
  return 1.0 - keep;
}

double logistic(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

double linear_region_eval(const Rect& region, double weight, double bias, const ImageTensor& img) {
  if (region.height < 1 || region.width < 1 || region.top < 0 || region.left < 0 ||
      region.top + region.height > img.height() || region.left + region.width > img.width()) {
    throw RegionOutOfBounds("linear region does not fit a " + std::to_string(img.height()) + "x" +
                            std::to_string(img.width()) + " image");
  }
  std::uint64_t sum = 0;
  for (int r = region.top; r < region.top + region.height; ++r) {
    for (int c = region.left; c < region.left + region.width; ++c) {
      for (int ch = 0; ch < img.channels(); ++ch) sum += img.at(r, c, ch);
    }
  }
  const double count = static_cast<double>(region.height) * region.width * img.channels();
  const double mean = static_cast<double>(sum) / (count * 255.0);
  return logistic(weight * mean + bias);
}

ConstantClassifier::ConstantClassifier(int input_side, std::vector<double> probs)
    : Classifier(input_side), out_{std::move(probs)} {
  validate_distribution(out_);
}

std::vector<ClassDistribution> ConstantClassifier::run_batch(std::span<const ImageTensor> imgs) {
  return std::vector<ClassDistribution>(imgs.size(), out_);
}

MaxGroupClassifier::MaxGroupClassifier(GroupDef groups)
    : Classifier(groups.side()), groups_(std::move(groups)) {
  if (groups_.empty()) throw EmptyGroups("max-group classifier has no groups");
}

std::vector<ClassDistribution> MaxGroupClassifier::run_batch(std::span<const ImageTensor> imgs) {
  std::vector<ClassDistribution> out;
  out.reserve(imgs.size());
  for (const auto& img : imgs) out.push_back({{max_group_eval(groups_, img)}});
  return out;
}

SaturatedOrClassifier::SaturatedOrClassifier(GroupDef groups)
    : Classifier(groups.side()), groups_(std::move(groups)) {
  if (groups_.empty()) throw EmptyGroups("saturated-or classifier has no groups");
}

std::vector<ClassDistribution> SaturatedOrClassifier::run_batch(
    std::span<const ImageTensor> imgs) {
  std::vector<ClassDistribution> out;
  out.reserve(imgs.size());
  for (const auto& img : imgs) out.push_back({{saturated_or_eval(groups_, img)}});
  return out;
}

LinearRegionClassifier::LinearRegionClassifier(int input_side, Rect region, double weight,
                                               double bias)
    : Classifier(input_side), region_(region), weight_(weight), bias_(bias) {
  if (region.height < 1 || region.width < 1 || region.top < 0 || region.left < 0 ||
      region.top + region.height > input_side || region.left + region.width > input_side) {
    throw RegionOutOfBounds("linear region does not fit the input frame");
  }
}

std::vector<ClassDistribution> LinearRegionClassifier::run_batch(
    std::span<const ImageTensor> imgs) {
  std::vector<ClassDistribution> out;
  out.reserve(imgs.size());
  for (const auto& img : imgs) out.push_back({{linear_region_eval(region_, weight_, bias_, img)}});
  return out;
}

}  // namespace cpda
