#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "d3d/nn_ops.hpp"

namespace d3d {

enum class Family { Dissected, Conventional };

// Network family plus ResNet depth (18, 50 or 101).
struct Variant {
  Family family = Family::Dissected;
  int depth = 18;

  friend bool operator==(const Variant&, const Variant&) = default;
};

// Accepts "D-ResNet-18", "d-resnet-50", "3D-ResNet-101", ... (case-insensitive).
Variant parse_variant(std::string_view name);
std::string to_string(const Variant& v);

// How a block combines its cached previous-step volume with the current one.
enum class SkipKind { None, Summation, Concatenation };
SkipKind parse_skip_kind(std::string_view name);
std::string to_string(SkipKind k);

enum class BlockKind { Basic, Bottleneck };

// Residual path when a block changes shape. ZeroPad subsamples by the block
// stride and appends zero channels (parameter-free); Projection is a strided
// 1x1x1 convolution followed by batch normalization.
enum class ShortcutMode { ZeroPad, Projection };
ShortcutMode parse_shortcut_mode(std::string_view name);
std::string to_string(ShortcutMode m);

enum class ShortcutKind { Identity, ZeroPad, Projection };

struct ConvLayerSpec {
  std::string name;  // "conv1", "conv2", "conv3"
  ConvGeometry geometry;
};

struct BlockSpec {
  std::string id;  // "<stage>.<index>", e.g. "conv3.0"
  BlockKind kind = BlockKind::Basic;
  std::size_t in_channels = 0;
  std::size_t mid_channels = 0;
  std::size_t out_channels = 0;
  std::size_t spatial_stride = 1;
  std::size_t temporal_stride = 1;
  SkipKind skip = SkipKind::None;
  ShortcutKind shortcut = ShortcutKind::Identity;
  std::vector<ConvLayerSpec> convs;
  // Index into convs of the convolution fed by the temporal skip.
  std::size_t temporal_conv = 0;
  // Present when the shortcut is a projection.
  std::optional<ConvGeometry> downsample;
  // Set for dissected blocks whose skip consumes a cache (Summation/Concatenation).
  std::optional<std::size_t> cache_site;

  bool has_downsample_path() const noexcept { return shortcut != ShortcutKind::Identity; }
  std::string stage() const;
  std::size_t index_in_stage() const;
};

/// Immutable description of a network graph. Dissected graphs are causal: every
/// convolution with temporal extent k > 1 consumes k - 1 slices of explicit
/// history, so the temporal resolution is preserved end to end.
struct ModelSpec {
  Variant variant;
  SkipKind skip = SkipKind::Concatenation;
  ShortcutMode shortcut_mode = ShortcutMode::ZeroPad;
  double width_multiplier = 1.0;
  ConvGeometry stem;
  PoolGeometry pool;
  std::vector<BlockSpec> blocks;
  std::optional<ConvGeometry> conv_last;
  std::size_t feature_dim = 512;

  bool causal() const noexcept { return variant.family == Family::Dissected; }
  std::size_t cache_site_count() const noexcept;
  std::size_t stem_frames() const noexcept { return stem.kernel.t; }
  std::string name() const;
};

ModelSpec build_dissected(int depth, SkipKind skip, double width_multiplier = 1.0,
                          ShortcutMode shortcut = ShortcutMode::ZeroPad);
ModelSpec build_conventional(int depth, double width_multiplier = 1.0,
                             ShortcutMode shortcut = ShortcutMode::ZeroPad);
// Dispatches on the variant family; skip is ignored for conventional graphs.
ModelSpec build_model(const Variant& v, SkipKind skip, double width_multiplier = 1.0,
                      ShortcutMode shortcut = ShortcutMode::ZeroPad);

// Number of earliest frames that can influence the newest feature of a causal
// graph: the stem window plus one step per block whose skip reads the cache.
std::size_t receptive_field_frames(const ModelSpec& spec);

}  // namespace d3d
