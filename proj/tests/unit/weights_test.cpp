#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "d3d/errors.hpp"
#include "d3d/blocks.hpp"
#include "d3d/weights.hpp"

using namespace d3d;

TEST(Weights, SeededInitIsDeterministic) {
  const ModelSpec m = build_dissected(18, SkipKind::Concatenation, 0.125);
  EXPECT_EQ(init_weights(m, 5), init_weights(m, 5));
  EXPECT_FALSE(init_weights(m, 5) == init_weights(m, 6));
}

TEST(Weights, KeysAreNamespaced) {
  const ModelSpec m = build_dissected(50, SkipKind::Concatenation, 0.125, ShortcutMode::Projection);
  const WeightStore w = init_weights(m, 1);
  EXPECT_TRUE(w.contains("backbone.conv1.0.conv.weight"));
  EXPECT_TRUE(w.contains("backbone.conv1.0.bn.gamma"));
  EXPECT_TRUE(w.contains("backbone.conv2.0.conv2.weight"));
  EXPECT_TRUE(w.contains("backbone.conv2.0.bn3.var"));
  EXPECT_TRUE(w.contains("backbone.conv3.0.downsample.weight"));
  EXPECT_TRUE(w.contains("backbone.conv_last.0.conv.weight"));
  for (const auto& [name, array] : w.entries()) EXPECT_EQ(name.rfind("backbone.", 0), 0u) << name;
  const auto& stem = w.at("backbone.conv1.0.conv.weight");
  EXPECT_EQ(stem.dims, (std::vector<std::uint32_t>{8, 3, 3, 7, 7}));
}

TEST(Weights, InitBoundsFollowFanIn) {
  const ModelSpec m = build_dissected(18, SkipKind::Concatenation, 0.125);
  const WeightStore w = init_weights(m, 2);
  const auto& stem = w.at("backbone.conv1.0.conv.weight").values;
  const float bound = std::sqrt(6.0f / (3 * 3 * 7 * 7));
  float lo = 0.0f, hi = 0.0f;
  for (float v : stem) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LE(hi, bound);
  EXPECT_GE(lo, -bound);
  EXPECT_GT(hi, 0.8f * bound);
}

TEST(Weights, MissingKeyIsNamed) {
  WeightStore w;
  try {
    load_conv(w, "backbone.conv2.0.conv1", {1, 1, {1, 1, 1}, {1, 1, 1}, {0, 0, 0}});
    FAIL() << "expected WeightsError";
  } catch (const WeightsError& e) {
    EXPECT_NE(std::string(e.what()).find("backbone.conv2.0.conv1.weight"), std::string::npos);
  }
}

TEST(Weights, SizeMismatchRejected) {
  WeightStore w;
  EXPECT_THROW(w.insert("x", {{2, 2}, {1.0f}}), WeightsError);
  w.insert("x.weight", {{2}, {1.0f, 2.0f}});
  EXPECT_THROW(load_conv(w, "x", {1, 1, {1, 1, 1}, {1, 1, 1}, {0, 0, 0}}), WeightsError);
  w.insert("scalar", {{}, {3.0f}});
  EXPECT_EQ(w.at("scalar").values.size(), 1u);
}

TEST(Weights, BindNamesMissingLayer) {
  const ModelSpec m = build_dissected(18, SkipKind::Concatenation, 0.125);
  WeightStore full = init_weights(m, 1);
  WeightStore partial;
  for (const auto& [name, array] : full.entries()) {
    if (name != "backbone.conv4.1.conv2.weight") partial.insert(name, array);
  }
  try {
    Network::bind(m, partial);
    FAIL() << "expected WeightsError";
  } catch (const WeightsError& e) {
    EXPECT_NE(std::string(e.what()).find("backbone.conv4.1.conv2.weight"), std::string::npos);
  }
}
