#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "d3d/model.hpp"
#include "d3d/tensor.hpp"

namespace d3d {

// Counting convention: one multiply-accumulate is one FLOP, counted as conv3d
// executes it, so kernel taps on zero padding are not counted. Batch norm,
// ReLU, pooling and element-wise additions are not counted. Heads are excluded.
inline constexpr const char* kFlopConvention =
    "1 MAC = 1 FLOP; executed conv and linear multiply-accumulates only, padded taps skipped; "
    "BN/ReLU/pool/add excluded; heads excluded";

enum class CountMode { Parameters, StreamingPerFrame, OfflineClip };
std::string to_string(CountMode m);

struct LayerCost {
  std::string layer_id;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  Shape4 output;
};

struct Comparison {
  std::string baseline_name;
  std::size_t baseline_frames = 0;
  std::uint64_t baseline_total_macs = 0;
  // 1 - streaming_macs / baseline_macs
  double reduction_fraction = 0.0;
};

struct ComplexityReport {
  std::string model_name;
  CountMode mode = CountMode::Parameters;
  std::size_t frames = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<LayerCost> per_layer;
  std::uint64_t total_params = 0;
  std::uint64_t total_macs = 0;
  std::optional<Comparison> comparison;
};

ComplexityReport count_params(const ModelSpec& model);

// MACs of one push_frame at H x W input (causal graphs only).
ComplexityReport count_flops_streaming(const ModelSpec& model, std::size_t height, std::size_t width);

// MACs of one inference over a T-frame clip: the conventional graph with its
// temporal strides, or a causal graph unrolled over T frames.
ComplexityReport count_flops_offline(const ModelSpec& model, std::size_t frames, std::size_t height,
                                     std::size_t width);

// Streaming cost of `dissected` against a sliding window of `baseline` that
// pays its full T-frame clip cost for every new frame.
ComplexityReport compare_online(const ModelSpec& dissected, const ModelSpec& baseline, std::size_t frames,
                                std::size_t height, std::size_t width);

// Shape of each cache-site volume during streaming, ordered by site id.
std::vector<Shape4> cache_site_shapes(const ModelSpec& model, std::size_t height, std::size_t width);

std::string format_table(const ComplexityReport& r);
// "# " header lines, then one `layer_id params macs h w t` line per layer and a
// closing `total params macs` line.
std::string format_kv(const ComplexityReport& r);

}  // namespace d3d
