#include "d3d/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "d3d/errors.hpp"

namespace d3d {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::array<std::size_t, 4> blocks_per_stage(int depth) {
  switch (depth) {
    case 18: return {2, 2, 2, 2};
    case 50: return {3, 4, 6, 3};
    case 101: return {3, 4, 23, 3};
    default: throw ConfigError("unknown ResNet depth " + std::to_string(depth) + " (expected 18, 50 or 101)");
  }
}

class ChannelScaler {
 public:
  explicit ChannelScaler(double m) : m_(m) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("width_multiplier must be positive");
  }

  std::size_t operator()(std::size_t channels) const {
    const double scaled = static_cast<double>(channels) * m_;
    const double rounded = std::round(scaled);
    if (rounded < 1.0 || std::abs(scaled - rounded) > 1e-6) {
      throw ConfigError("width_multiplier " + std::to_string(m_) + " does not map " + std::to_string(channels) +
                        " channels to a positive integer");
    }
    return static_cast<std::size_t>(rounded);
  }

 private:
  double m_;
};

constexpr std::array<std::size_t, 4> kStageFilters{64, 128, 256, 512};

ConvGeometry conv(std::size_t in, std::size_t out, Extent3 kernel, Extent3 stride, Extent3 padding) {
  return {in, out, kernel, stride, padding};
}

struct StageBuilder {
  bool dissected;
  SkipKind skip;
  ShortcutMode shortcut_mode;

  BlockSpec make(const std::string& id, BlockKind kind, std::size_t in, std::size_t mid, std::size_t stride,
                 std::size_t& next_site) const {
    BlockSpec b;
    b.id = id;
    b.kind = kind;
    b.in_channels = in;
    b.mid_channels = mid;
    b.out_channels = kind == BlockKind::Basic ? mid : 4 * mid;
    b.spatial_stride = stride;
    b.temporal_stride = dissected ? 1 : stride;
    b.skip = dissected ? skip : SkipKind::None;

    // Dissected: temporal extent 2 only where the cached volume is concatenated.
    // Conventional: full 3x3x3 kernels with temporal padding.
    const Extent3 st{b.temporal_stride, stride, stride};
    const Extent3 temporal_kernel = dissected ? Extent3{skip == SkipKind::Concatenation ? 2u : 1u, 3, 3}
                                              : Extent3{3, 3, 3};
    const Extent3 temporal_pad = dissected ? Extent3{0, 1, 1} : Extent3{1, 1, 1};
    const Extent3 flat_kernel = dissected ? Extent3{1, 3, 3} : Extent3{3, 3, 3};
    const Extent3 one{1, 1, 1};
    const Extent3 no_pad{0, 0, 0};

    if (kind == BlockKind::Basic) {
      b.convs.push_back({"conv1", conv(in, mid, temporal_kernel, st, temporal_pad)});
      b.convs.push_back({"conv2", conv(mid, mid, flat_kernel, one, temporal_pad)});
      b.temporal_conv = 0;
    } else {
      b.convs.push_back({"conv1", conv(in, mid, one, one, no_pad)});
      b.convs.push_back({"conv2", conv(mid, mid, temporal_kernel, st, temporal_pad)});
      b.convs.push_back({"conv3", conv(mid, b.out_channels, one, one, no_pad)});
      b.temporal_conv = 1;
    }

    if (stride != 1 || in != b.out_channels) {
      if (shortcut_mode == ShortcutMode::Projection) {
        b.shortcut = ShortcutKind::Projection;
        b.downsample = conv(in, b.out_channels, one, st, no_pad);
      } else {
        b.shortcut = ShortcutKind::ZeroPad;
      }
    }
    if (dissected && skip != SkipKind::None) b.cache_site = next_site++;
    return b;
  }
};

ModelSpec build(Family family, int depth, SkipKind skip, double width, ShortcutMode shortcut) {
  const auto counts = blocks_per_stage(depth);
  const ChannelScaler scale(width);
  const bool dissected = family == Family::Dissected;
  const BlockKind kind = depth == 18 ? BlockKind::Basic : BlockKind::Bottleneck;

  ModelSpec m;
  m.variant = {family, depth};
  m.skip = dissected ? skip : SkipKind::None;
  m.shortcut_mode = shortcut;
  m.width_multiplier = width;

  const std::size_t stem_out = scale(64);
  if (dissected) {
    m.stem = conv(3, stem_out, {3, 7, 7}, {1, 2, 2}, {0, 3, 3});
    m.pool = PoolGeometry{{1, 3, 3}, {1, 2, 2}, {0, 1, 1}};
  } else {
    m.stem = conv(3, stem_out, {3, 7, 7}, {1, 2, 2}, {1, 3, 3});
    m.pool = PoolGeometry{{3, 3, 3}, {2, 2, 2}, {1, 1, 1}};
  }

  const StageBuilder builder{dissected, skip, shortcut};
  std::size_t in = stem_out;
  std::size_t next_site = 0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    const std::size_t mid = scale(kStageFilters[s]);
    for (std::size_t i = 0; i < counts[s]; ++i) {
      const std::size_t stride = (i == 0 && s > 0) ? 2 : 1;
      const std::string id = "conv" + std::to_string(s + 2) + "." + std::to_string(i);
      m.blocks.push_back(builder.make(id, kind, in, mid, stride, next_site));
      in = m.blocks.back().out_channels;
    }
  }

  if (dissected && kind == BlockKind::Bottleneck) {
    m.conv_last = conv(in, scale(512), {1, 1, 1}, {1, 1, 1}, {0, 0, 0});
    m.feature_dim = scale(512);
  } else {
    m.feature_dim = in;
  }
  return m;
}

}  // namespace

Variant parse_variant(std::string_view name) {
  const std::string s = lower(name);
  Family family;
  std::string_view rest;
  if (s.starts_with("d-resnet-")) {
    family = Family::Dissected;
    rest = std::string_view(s).substr(9);
  } else if (s.starts_with("3d-resnet-")) {
    family = Family::Conventional;
    rest = std::string_view(s).substr(10);
  } else if (s.starts_with("conventional-3d-resnet-")) {
    family = Family::Conventional;
    rest = std::string_view(s).substr(23);
  } else {
    throw ConfigError("unknown variant '" + std::string(name) + "'");
  }
  if (rest == "18") return {family, 18};
  if (rest == "50") return {family, 50};
  if (rest == "101") return {family, 101};
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

std::string to_string(const Variant& v) {
  return (v.family == Family::Dissected ? "D-ResNet-" : "3D-ResNet-") + std::to_string(v.depth);
}

SkipKind parse_skip_kind(std::string_view name) {
  const std::string s = lower(name);
  if (s == "none") return SkipKind::None;
  if (s == "summation" || s == "sum") return SkipKind::Summation;
  if (s == "concatenation" || s == "concat") return SkipKind::Concatenation;
  throw ConfigError("unknown skip kind '" + std::string(name) + "'");
}

std::string to_string(SkipKind k) {
  switch (k) {
    case SkipKind::None: return "none";
    case SkipKind::Summation: return "summation";
    case SkipKind::Concatenation: return "concatenation";
  }
  return "?";
}

ShortcutMode parse_shortcut_mode(std::string_view name) {
  const std::string s = lower(name);
  if (s == "zero_pad" || s == "zeropad" || s == "a") return ShortcutMode::ZeroPad;
  if (s == "projection" || s == "b") return ShortcutMode::Projection;
  throw ConfigError("unknown shortcut mode '" + std::string(name) + "'");
}

std::string to_string(ShortcutMode m) { return m == ShortcutMode::ZeroPad ? "zero_pad" : "projection"; }

std::string BlockSpec::stage() const { return id.substr(0, id.find('.')); }

std::size_t BlockSpec::index_in_stage() const { return std::stoul(id.substr(id.find('.') + 1)); }

std::size_t ModelSpec::cache_site_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(blocks.begin(), blocks.end(), [](const BlockSpec& b) { return b.cache_site.has_value(); }));
}

std::string ModelSpec::name() const {
  std::string n = to_string(variant);
  if (variant.family == Family::Dissected) n += " (" + to_string(skip) + ")";
  return n;
}

ModelSpec build_dissected(int depth, SkipKind skip, double width_multiplier, ShortcutMode shortcut) {
  return build(Family::Dissected, depth, skip, width_multiplier, shortcut);
}

ModelSpec build_conventional(int depth, double width_multiplier, ShortcutMode shortcut) {
  return build(Family::Conventional, depth, SkipKind::None, width_multiplier, shortcut);
}

ModelSpec build_model(const Variant& v, SkipKind skip, double width_multiplier, ShortcutMode shortcut) {
  return build(v.family, v.depth, skip, width_multiplier, shortcut);
}

std::size_t receptive_field_frames(const ModelSpec& spec) {
  std::size_t frames = spec.stem.kernel.t;
  for (const auto& b : spec.blocks) {
    for (const auto& c : b.convs) frames += c.geometry.kernel.t - 1;
    if (b.skip == SkipKind::Summation) frames += 1;
  }
  return frames;
}

}  // namespace d3d
