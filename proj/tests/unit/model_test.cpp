#include <gtest/gtest.h>

#include "d3d/complexity.hpp"
#include "d3d/errors.hpp"
#include "d3d/model.hpp"

using namespace d3d;

TEST(Model, ParseVariant) {
  EXPECT_EQ(parse_variant("D-ResNet-18"), (Variant{Family::Dissected, 18}));
  EXPECT_EQ(parse_variant("d-resnet-101"), (Variant{Family::Dissected, 101}));
  EXPECT_EQ(parse_variant("3D-ResNet-50"), (Variant{Family::Conventional, 50}));
  EXPECT_EQ(parse_variant("Conventional-3D-ResNet-18"), (Variant{Family::Conventional, 18}));
  EXPECT_THROW(parse_variant("D-ResNet-34"), ConfigError);
  EXPECT_THROW(parse_variant("VGG"), ConfigError);
  EXPECT_THROW(build_dissected(34, SkipKind::None), ConfigError);
  EXPECT_THROW(build_conventional(7), ConfigError);
}

TEST(Model, BlockAndCacheSiteCounts) {
  const std::pair<int, std::size_t> expected[] = {{18, 8}, {50, 16}, {101, 33}};
  for (auto [depth, blocks] : expected) {
    for (SkipKind skip : {SkipKind::Concatenation, SkipKind::Summation}) {
      const ModelSpec m = build_dissected(depth, skip);
      EXPECT_EQ(m.blocks.size(), blocks);
      EXPECT_EQ(m.cache_site_count(), blocks);
      EXPECT_EQ(receptive_field_frames(m), 3 + blocks);
    }
    EXPECT_EQ(build_dissected(depth, SkipKind::None).cache_site_count(), 0u);
    EXPECT_EQ(build_conventional(depth).blocks.size(), blocks);
  }
}

TEST(Model, DissectedResNet18Layout) {
  const ModelSpec m = build_dissected(18, SkipKind::Concatenation);
  EXPECT_EQ(m.stem.kernel, (Extent3{3, 7, 7}));
  EXPECT_EQ(m.stem.stride, (Extent3{1, 2, 2}));
  EXPECT_EQ(m.stem.out_channels, 64u);
  EXPECT_FALSE(m.conv_last.has_value());
  EXPECT_EQ(m.feature_dim, 512u);
  for (const auto& b : m.blocks) {
    EXPECT_EQ(b.kind, BlockKind::Basic);
    EXPECT_EQ(b.convs[b.temporal_conv].geometry.kernel, (Extent3{2, 3, 3}));
    EXPECT_EQ(b.convs[1].geometry.kernel, (Extent3{1, 3, 3}));
    EXPECT_EQ(b.temporal_stride, 1u);
  }
  EXPECT_EQ(m.blocks[2].id, "conv3.0");
  EXPECT_EQ(m.blocks[2].spatial_stride, 2u);
  EXPECT_EQ(m.blocks[2].stage(), "conv3");
  EXPECT_EQ(m.blocks[2].index_in_stage(), 0u);
  EXPECT_EQ(m.blocks.back().out_channels, 512u);
}

TEST(Model, BottleneckExpansionAndConvLast) {
  for (int depth : {50, 101}) {
    const ModelSpec m = build_dissected(depth, SkipKind::Concatenation);
    for (const auto& b : m.blocks) {
      EXPECT_EQ(b.kind, BlockKind::Bottleneck);
      EXPECT_EQ(b.out_channels, 4 * b.mid_channels);
      EXPECT_EQ(b.temporal_conv, 1u);
      EXPECT_EQ(b.convs[0].geometry.kernel, (Extent3{1, 1, 1}));
      EXPECT_EQ(b.convs[1].geometry.kernel, (Extent3{2, 3, 3}));
      EXPECT_EQ(b.convs[2].geometry.kernel, (Extent3{1, 1, 1}));
    }
    ASSERT_TRUE(m.conv_last.has_value());
    EXPECT_EQ(m.conv_last->in_channels, 2048u);
    EXPECT_EQ(m.conv_last->out_channels, 512u);
    EXPECT_EQ(m.feature_dim, 512u);
  }
}

TEST(Model, SkipKindOnlyChangesTemporalKernel) {
  for (int depth : {18, 50}) {
    const ModelSpec none = build_dissected(depth, SkipKind::None);
    const ModelSpec cat = build_dissected(depth, SkipKind::Concatenation);
    const ModelSpec sum = build_dissected(depth, SkipKind::Summation);
    ASSERT_EQ(none.blocks.size(), cat.blocks.size());
    EXPECT_EQ(none.stem, cat.stem);
    for (std::size_t i = 0; i < none.blocks.size(); ++i) {
      const auto& a = none.blocks[i];
      const auto& b = cat.blocks[i];
      ASSERT_EQ(a.convs.size(), b.convs.size());
      for (std::size_t k = 0; k < a.convs.size(); ++k) {
        ConvGeometry ga = a.convs[k].geometry;
        const ConvGeometry gb = b.convs[k].geometry;
        if (k == a.temporal_conv) {
          EXPECT_EQ(ga.kernel.t, 1u);
          EXPECT_EQ(gb.kernel.t, 2u);
          ga.kernel.t = 2;
        }
        EXPECT_EQ(ga, gb);
        EXPECT_EQ(a.convs[k].geometry, sum.blocks[i].convs[k].geometry);
      }
    }
    EXPECT_EQ(count_params(none).total_params, count_params(sum).total_params);
  }
}

TEST(Model, WidthMultiplierScalesChannelsOnly) {
  const ModelSpec full = build_dissected(18, SkipKind::Concatenation);
  const ModelSpec small = build_dissected(18, SkipKind::Concatenation, 0.125);
  ASSERT_EQ(full.blocks.size(), small.blocks.size());
  EXPECT_EQ(small.stem.in_channels, 3u);
  EXPECT_EQ(small.stem.out_channels, 8u);
  EXPECT_EQ(small.feature_dim, 64u);
  for (std::size_t i = 0; i < full.blocks.size(); ++i) {
    const auto& a = full.blocks[i];
    const auto& b = small.blocks[i];
    EXPECT_EQ(a.in_channels, 8 * b.in_channels);
    EXPECT_EQ(a.out_channels, 8 * b.out_channels);
    EXPECT_EQ(a.spatial_stride, b.spatial_stride);
    EXPECT_EQ(a.shortcut, b.shortcut);
    for (std::size_t k = 0; k < a.convs.size(); ++k) {
      EXPECT_EQ(a.convs[k].geometry.kernel, b.convs[k].geometry.kernel);
      EXPECT_EQ(a.convs[k].geometry.stride, b.convs[k].geometry.stride);
    }
  }
  EXPECT_THROW(build_dissected(18, SkipKind::None, 0.3), ConfigError);
}

TEST(Model, ShortcutModes) {
  const ModelSpec zero = build_dissected(50, SkipKind::Concatenation);
  const ModelSpec proj = build_dissected(50, SkipKind::Concatenation, 1.0, ShortcutMode::Projection);
  EXPECT_EQ(zero.blocks[0].shortcut, ShortcutKind::ZeroPad);
  EXPECT_FALSE(zero.blocks[0].downsample.has_value());
  EXPECT_EQ(proj.blocks[0].shortcut, ShortcutKind::Projection);
  ASSERT_TRUE(proj.blocks[0].downsample.has_value());
  EXPECT_EQ(proj.blocks[0].downsample->kernel, (Extent3{1, 1, 1}));
  EXPECT_EQ(zero.blocks[1].shortcut, ShortcutKind::Identity);
  EXPECT_EQ(parse_shortcut_mode("projection"), ShortcutMode::Projection);
  EXPECT_EQ(parse_shortcut_mode("B"), ShortcutMode::Projection);
  EXPECT_EQ(parse_shortcut_mode("zero_pad"), ShortcutMode::ZeroPad);
  EXPECT_THROW(parse_shortcut_mode("C"), ConfigError);
}

TEST(Model, ConventionalUsesTemporalStrides) {
  const ModelSpec m = build_conventional(18);
  EXPECT_FALSE(m.causal());
  EXPECT_EQ(m.stem.kernel, (Extent3{3, 7, 7}));
  EXPECT_EQ(m.stem.padding.t, 1u);
  EXPECT_EQ(m.blocks[2].temporal_stride, 2u);
  EXPECT_EQ(m.blocks[0].temporal_stride, 1u);
  EXPECT_EQ(m.blocks[0].convs[0].geometry.kernel, (Extent3{3, 3, 3}));
}
