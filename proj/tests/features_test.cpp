#include <gtest/gtest.h>

#include <cmath>

#include "bookvis/error.hpp"
#include "bookvis/features.hpp"
#include "bookvis/image.hpp"
#include "support.hpp"
#include "synth_covers.hpp"

using namespace bookvis;

namespace {

ErrorCode decode_error(std::vector<std::uint8_t> bytes) {
  try {
    decode_image(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::contract;
}

double cosine_distance(const DescriptorVector& a, const DescriptorVector& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < kDescriptorSize; ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 1.0;
  return 1.0 - dot / std::sqrt(na * nb);
}

// Fraction of `original` descriptors with some descriptor of `other` within the cosine-distance bound.
double matched_fraction(const DescriptorSet& original, const DescriptorSet& other, double bound) {
  if (original.empty()) return 0;
  std::size_t hit = 0;
  for (const auto& d : original.descriptors) {
    for (const auto& e : other.descriptors) {
      if (cosine_distance(d.vector, e.vector) <= bound) {
        ++hit;
        break;
      }
    }
  }
  return static_cast<double>(hit) / static_cast<double>(original.size());
}

RasterImage sample_cover() { return synth::make_cover(11, "The Hollow Atlas", "Maya Chen"); }

}  // namespace

TEST(Image, DecodesOnePixelWhitePng) {
  const RasterImage white(1, 1, {255, 255, 255});
  const auto back = decode_image(encode_png(white));
  EXPECT_EQ(back.width(), 1);
  EXPECT_EQ(back.height(), 1);
  EXPECT_EQ(back.at(0, 0), (Rgb{255, 255, 255}));
}

TEST(Image, PngRoundTripIsLossless) {
  const auto img = testing_support::textured_image(37, 23, 5);
  EXPECT_EQ(decode_image(encode_png(img)), img);
}

TEST(Image, JpegKeepsDimensions) {
  const auto img = testing_support::textured_image(300, 450, 1);
  const auto back = decode_image(encode_jpeg(img));
  EXPECT_EQ(back.width(), 300);
  EXPECT_EQ(back.height(), 450);
}

TEST(Image, TruncatedJpegIsDecodeError) {
  auto bytes = encode_jpeg(testing_support::textured_image(64, 64, 2));
  bytes.resize(bytes.size() / 3);
  EXPECT_EQ(decode_error(bytes), ErrorCode::decode);
}

TEST(Image, GarbageIsDecodeError) {
  EXPECT_EQ(decode_error(std::vector<std::uint8_t>(20, 0x42)), ErrorCode::decode);
  EXPECT_EQ(decode_error({}), ErrorCode::decode);
}

TEST(Image, OversizedIsTooLarge) {
  const RasterImage wide(kMaxDecodeDimension + 1, 1, {1, 2, 3});
  EXPECT_EQ(decode_error(encode_png(wide)), ErrorCode::too_large);
}

TEST(Image, ResizeAreaAveragesBlocks) {
  RasterImage img(2, 2);
  img.set(0, 0, {0, 0, 0});
  img.set(1, 0, {100, 0, 0});
  img.set(0, 1, {200, 0, 0});
  img.set(1, 1, {100, 40, 8});
  const auto one = resize_area(img, 1, 1);
  EXPECT_EQ(one.at(0, 0), (Rgb{100, 10, 2}));
}

TEST(Image, GrayUsesRec601Weights) {
  RasterImage img(3, 1);
  img.set(0, 0, {255, 0, 0});
  img.set(1, 0, {0, 255, 0});
  img.set(2, 0, {0, 0, 255});
  const auto g = to_gray(img);
  EXPECT_NEAR(g[0], 0.299, 1e-6);
  EXPECT_NEAR(g[1], 0.587, 1e-6);
  EXPECT_NEAR(g[2], 0.114, 1e-6);
}

TEST(Features, UniformGrayHasNoDescriptors) {
  EXPECT_TRUE(extract_descriptors(RasterImage(200, 300, {128, 128, 128})).empty());
}

TEST(Features, DefaultsMatchConventionalConstants) {
  const FeatureParams p;
  EXPECT_EQ(p.octaves, 3);
  EXPECT_EQ(p.scales_per_octave, 3);
  EXPECT_DOUBLE_EQ(p.base_sigma, 1.6);
  EXPECT_DOUBLE_EQ(p.contrast_threshold, 0.03);
  EXPECT_DOUBLE_EQ(p.edge_ratio, 10.0);
  EXPECT_EQ(p.orientation_bins, 36);
  EXPECT_DOUBLE_EQ(p.orientation_peak_ratio, 0.8);
  EXPECT_DOUBLE_EQ(p.descriptor_clip, 0.2);
  EXPECT_EQ(p.max_dimension, 1024);
}

TEST(Features, ParamsJsonRoundTrip) {
  FeatureParams p;
  p.octaves = 4;
  p.contrast_threshold = 0.04;
  const nlohmann::json j = p;
  EXPECT_EQ(j.get<FeatureParams>(), p);
}

TEST(Features, DeterministicAcrossCalls) {
  const auto img = sample_cover();
  const auto a = extract_descriptors(img);
  const auto b = extract_descriptors(img);
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Features, DescriptorsAreUnitLengthAndClipped) {
  const FeatureParams p;
  const auto set = extract_descriptors(sample_cover(), p);
  ASSERT_GT(set.size(), 20u);
  EXPECT_EQ(set.source_width, synth::kCoverWidth);
  EXPECT_EQ(set.source_height, synth::kCoverHeight);
  for (const auto& d : set.descriptors) {
    double n = 0;
    for (float v : d.vector) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
      n += static_cast<double>(v) * v;
    }
    EXPECT_NEAR(n, 1.0, 1e-4);
    EXPECT_GE(d.keypoint.x, 0);
    EXPECT_LT(d.keypoint.x, synth::kCoverWidth);
    EXPECT_GE(d.keypoint.y, 0);
    EXPECT_LT(d.keypoint.y, synth::kCoverHeight);
    EXPECT_GE(d.keypoint.orientation, 0);
    EXPECT_LT(d.keypoint.orientation, 2 * std::numbers::pi);
  }
}

TEST(Features, HigherContrastThresholdKeepsFewerKeypoints) {
  const auto img = sample_cover();
  FeatureParams strict;
  strict.contrast_threshold = 0.08;
  EXPECT_LT(extract_descriptors(img, strict).size(), extract_descriptors(img).size());
}

TEST(Features, KeypointCoordinatesFollowDownscaledInputs) {
  FeatureParams p;
  p.max_dimension = 240;
  const auto set = extract_descriptors(sample_cover(), p);
  ASSERT_FALSE(set.empty());
  for (const auto& d : set.descriptors) {
    EXPECT_LT(d.keypoint.x, synth::kCoverWidth);
    EXPECT_LT(d.keypoint.y, synth::kCoverHeight);
  }
}

TEST(Features, RotationByFifteenDegreesKeepsMostDescriptors) {
  const auto img = sample_cover();
  const auto original = extract_descriptors(img);
  const auto rotated = extract_descriptors(synth::rotate(img, 15));
  const double f = matched_fraction(original, rotated, 0.3);
  EXPECT_GE(f, 0.60) << "matched " << f;
}

TEST(Features, HalfScaleKeepsManyDescriptors) {
  const auto img = sample_cover();
  const auto original = extract_descriptors(img);
  const auto small = extract_descriptors(resize_area(img, img.width() / 2, img.height() / 2));
  ASSERT_FALSE(small.empty());
  // the coarse octaves survive, so match from the small side
  const double f = matched_fraction(small, original, 0.3);
  EXPECT_GE(f, 0.40) << "matched " << f;
}
