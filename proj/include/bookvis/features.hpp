#pragma once

#include <array>
#include <vector>

#include <nlohmann/json.hpp>

#include "bookvis/image.hpp"

namespace bookvis {

/// Difference-of-Gaussians keypoints with gradient-histogram descriptors.
/// Defaults are the conventional constants; every threshold is tunable here.
struct FeatureParams {
  int octaves = 3;
  int scales_per_octave = 3;
  double base_sigma = 1.6;
  double assumed_blur = 0.5;          // blur already present in the input
  double contrast_threshold = 0.03;   // |DoG| at the refined extremum, intensities in [0,1]
  double edge_ratio = 10.0;
  int orientation_bins = 36;
  double orientation_peak_ratio = 0.8;
  double descriptor_clip = 0.2;
  int max_dimension = 1024;           // long side; larger inputs are downscaled first

  bool operator==(const FeatureParams&) const = default;
};

void to_json(nlohmann::json& j, const FeatureParams& p);
void from_json(const nlohmann::json& j, FeatureParams& p);

struct Keypoint {
  double x = 0;            // input-image pixels
  double y = 0;
  double scale = 0;        // detection sigma, input-image pixels
  double orientation = 0;  // radians in [0, 2pi), image axes (y down)
  bool operator==(const Keypoint&) const = default;
};

inline constexpr std::size_t kDescriptorSize = 128;  // 4x4 cells x 8 orientation bins
using DescriptorVector = std::array<float, kDescriptorSize>;

struct Descriptor {
  DescriptorVector vector{};
  Keypoint keypoint;
  bool operator==(const Descriptor&) const = default;
};

struct DescriptorSet {
  std::vector<Descriptor> descriptors;
  int source_width = 0;
  int source_height = 0;

  std::size_t size() const noexcept { return descriptors.size(); }
  bool empty() const noexcept { return descriptors.empty(); }
  bool operator==(const DescriptorSet&) const = default;
};

/// Deterministic: identical pixels and params give bit-identical output in the
/// same order. A featureless image yields an empty set.
DescriptorSet extract_descriptors(const RasterImage& image, const FeatureParams& params = {});

}  // namespace bookvis
