#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "d3d/model.hpp"
#include "d3d/nn_ops.hpp"
#include "d3d/tensor.hpp"
#include "d3d/weights.hpp"

namespace d3d {

// What stands in for a missing previous-step volume: a copy of the earliest
// available one, or zeros.
enum class CachePadding { Replicate, Zero };
CachePadding parse_cache_padding(std::string_view name);
std::string to_string(CachePadding p);

struct BlockWeights {
  std::vector<ConvParams> convs;
  std::vector<BatchNormParams> norms;  // one per conv
  std::optional<ConvParams> downsample;
  std::optional<BatchNormParams> downsample_norm;
};

/// A causal (dissected) ModelSpec with its parameters resolved. Immutable and
/// shared read-only by any number of sessions and offline runs.
class Network {
 public:
  // Throws WeightsError naming the first missing or mis-sized key, ConfigError
  // for non-causal specs.
  static std::shared_ptr<const Network> bind(const ModelSpec& spec, const WeightStore& weights);

  const ModelSpec& spec() const noexcept { return spec_; }
  const ConvParams& stem_conv() const noexcept { return stem_conv_; }
  const BatchNormParams& stem_norm() const noexcept { return stem_norm_; }
  const BlockWeights& block(std::size_t i) const { return blocks_.at(i); }
  const std::optional<ConvParams>& conv_last() const noexcept { return conv_last_; }
  const std::optional<BatchNormParams>& conv_last_norm() const noexcept { return conv_last_norm_; }

 private:
  Network() = default;

  ModelSpec spec_;
  ConvParams stem_conv_;
  BatchNormParams stem_norm_;
  std::vector<BlockWeights> blocks_;
  std::optional<ConvParams> conv_last_;
  std::optional<BatchNormParams> conv_last_norm_;
};

// Streaming result of one block: the output volume and the pre-temporal-conv
// volume that replaces the cache entry.
struct BlockStep {
  Tensor output;
  Tensor cache_out;
};

// One streaming step of a block on a depth-1 input. cache_in is the site's
// volume from the previous step; when absent it is synthesized per `padding`.
BlockStep basic_block_step(const BlockSpec& spec, const BlockWeights& w, const Tensor& x,
                           const std::optional<Tensor>& cache_in, CachePadding padding,
                           OpCounter* counter = nullptr);
BlockStep bottleneck_block_step(const BlockSpec& spec, const BlockWeights& w, const Tensor& x,
                                const std::optional<Tensor>& cache_in, CachePadding padding,
                                OpCounter* counter = nullptr);
BlockStep block_step(const BlockSpec& spec, const BlockWeights& w, const Tensor& x,
                     const std::optional<Tensor>& cache_in, CachePadding padding, OpCounter* counter = nullptr);

// The same block over a whole sequence (x.time = T), its temporal skip applied
// causally with the earliest slice padded per `padding`. Output time == T.
Tensor block_unrolled(const BlockSpec& spec, const BlockWeights& w, const Tensor& x, CachePadding padding,
                      OpCounter* counter = nullptr);

// conv1 + BN + ReLU + max pool over a frame window; output time is
// window.time - (stem temporal kernel - 1).
Tensor stem_forward(const Network& net, const Tensor& window, OpCounter* counter = nullptr);

// conv_last + BN + ReLU where the graph has one; identity otherwise.
Tensor conv_last_forward(const Network& net, const Tensor& x, OpCounter* counter = nullptr);

// Shortcut branch of a block (identity, zero-pad subsampling or projection).
Tensor shortcut_forward(const BlockSpec& spec, const BlockWeights& w, const Tensor& x, OpCounter* counter);

}  // namespace d3d
