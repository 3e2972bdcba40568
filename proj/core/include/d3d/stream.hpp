#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "d3d/blocks.hpp"
#include "d3d/tensor.hpp"

namespace d3d {

struct SessionOptions {
  CachePadding cache_padding = CachePadding::Replicate;
  // Record each block's depth-1 output per step (see last_trace()).
  bool trace = false;
};

struct FrameFeature {
  std::vector<float> values;
  std::size_t step_index = 0;
};

struct CacheEntry {
  std::size_t site = 0;
  std::string block_id;
  Tensor volume;
};

/// Frame-by-frame executor. Each push computes only the newest frame's
/// activations: the stem sees the last three raw frames, every block
/// concatenates (or adds) its cached previous-step volume, and the caches are
/// then overwritten with the current volumes. Single owner; not thread-safe.
class StreamSession {
 public:
  explicit StreamSession(std::shared_ptr<const Network> net, SessionOptions options = {});

  // frame: [3, 1, H, W]. H and W are fixed by the first frame after a reset.
  FrameFeature push_frame(const Tensor& frame);
  void reset();

  std::vector<CacheEntry> cache_snapshot() const;
  std::size_t step_index() const noexcept { return step_; }
  // Floats held as streaming state: every cache volume plus the frame history.
  std::size_t state_size() const noexcept;
  // Multiply-accumulates executed by the most recent push_frame.
  std::uint64_t last_step_macs() const noexcept { return last_macs_; }
  // (layer id, volume) pairs from the most recent push when tracing.
  const std::vector<std::pair<std::string, Tensor>>& last_trace() const noexcept { return trace_; }

  const Network& network() const noexcept { return *net_; }

  // Negative-control hook for verification tooling: adds `delta` to every
  // populated cache entry.
  void corrupt_cache_for_testing(float delta);

 private:
  std::shared_ptr<const Network> net_;
  SessionOptions options_;
  std::vector<std::optional<Tensor>> cache_;  // indexed by cache site
  std::deque<Tensor> history_;                // at most stem_frames - 1 raw frames
  std::optional<Shape4> frame_shape_;
  std::size_t step_ = 0;
  std::uint64_t last_macs_ = 0;
  std::vector<std::pair<std::string, Tensor>> trace_;
};

StreamSession open_session(std::shared_ptr<const Network> net, SessionOptions options = {});

}  // namespace d3d
