#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "d3d/blocks.hpp"
#include "d3d/tensor.hpp"

namespace d3d {

struct OfflineOptions {
  CachePadding cache_padding = CachePadding::Replicate;
  bool keep_activations = false;
};

struct UnrolledRun {
  Matrix features;  // [T, feature_dim]
  // (layer id, full-length volume), in execution order, when requested.
  std::vector<std::pair<std::string, Tensor>> activations;
  std::optional<std::uint64_t> mac_count;
};

/// Runs the network over a whole [3, T, H, W] clip with causal temporal
/// convolutions: the input is front-padded with two replicated first frames
/// and each temporal skip with one slice of padding. No cache is involved;
/// row t is the ground truth for streaming step t.
UnrolledRun run_offline(const Network& net, const Tensor& frames, const OfflineOptions& options = {});

// As run_offline, additionally counting every executed multiply-accumulate.
UnrolledRun run_offline_instrumented(const Network& net, const Tensor& frames, const OfflineOptions& options = {});

}  // namespace d3d
