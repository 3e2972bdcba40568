#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "d3d/blocks.hpp"
#include "d3d/stream.hpp"
#include "d3d/tensor.hpp"

namespace d3d {

struct Tolerance {
  double rel = 1e-4;
  double abs = 1e-5;
};

// Seeded uniform [-1, 1] clip of shape [3, T, H, W].
Tensor random_frames(std::size_t frames, std::size_t height, std::size_t width, std::uint64_t seed);

// Streams every frame of a [3, T, H, W] clip through a fresh session.
Matrix stream_features(std::shared_ptr<const Network> net, const Tensor& frames, const SessionOptions& options = {});

struct FrameDeviation {
  std::size_t t = 0;
  double max_abs = 0.0;
  double max_rel = 0.0;
  bool pass = true;
};

struct Location {
  std::size_t t = 0;
  std::string layer;
  double max_abs = 0.0;
};

struct EquivalenceOptions {
  CachePadding cache_padding = CachePadding::Replicate;
  Tolerance tolerance;
  // Negative control: add this to every cache entry after step corrupt_at.
  std::optional<float> corrupt_delta;
  std::size_t corrupt_at = 0;
};

struct EquivalenceReport {
  std::vector<FrameDeviation> frames;
  double max_abs = 0.0;
  double max_rel = 0.0;
  bool pass = true;
  // Earliest (t, layer) whose activation leaves tolerance; set on failure.
  std::optional<Location> worst;
};

// Streaming features vs. the unrolled oracle, frame by frame.
EquivalenceReport check_equivalence(std::shared_ptr<const Network> net, const Tensor& frames,
                                    const EquivalenceOptions& options = {});

struct CausalityReport {
  std::size_t trials = 0;
  // Rows before the perturbed frame changed (must stay 0).
  std::size_t future_leaks = 0;
  // Perturbed frame did not change its own row.
  std::size_t unresponsive = 0;
  bool pass() const noexcept { return trials > 0 && future_leaks == 0 && unresponsive == 0; }
};

CausalityReport check_causality(std::shared_ptr<const Network> net, const Tensor& frames, std::size_t trials,
                                 std::uint64_t seed, CachePadding padding = CachePadding::Replicate);

// Adds seeded noise to frame t of a clip.
Tensor perturb_frame(const Tensor& frames, std::size_t t, std::uint64_t seed, float scale = 1.0f);

struct ReceptiveFieldReport {
  std::size_t expected = 0;  // receptive_field_frames(spec)
  std::size_t horizon = 0;   // measured: newest frame index - oldest influencing index + 1
  std::size_t frames = 0;
  std::size_t evaluations = 0;
  bool pass() const noexcept { return horizon == expected; }
};

// Binary-searches the oldest frame whose perturbation changes the final
// feature of a clip. frames = 0 picks expected + 4.
ReceptiveFieldReport probe_receptive_field(std::shared_ptr<const Network> net, std::size_t frames, std::size_t size,
                                           std::uint64_t seed, CachePadding padding = CachePadding::Replicate);

}  // namespace d3d
