#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "d3d/tensor.hpp"

namespace d3d {

// (time, height, width) triple used for kernels, strides and paddings.
struct Extent3 {
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t volume() const noexcept { return t * h * w; }
  friend bool operator==(const Extent3&, const Extent3&) = default;
};

// Weight-free description of a 3-D convolution. Padding is zero padding.
struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  Extent3 kernel;
  Extent3 stride;
  Extent3 padding{0, 0, 0};

  std::size_t weight_count() const noexcept { return out_channels * in_channels * kernel.volume(); }
  // Throws ShapeError when the input cannot hold one kernel window.
  Shape4 output_shape(const Shape4& in) const;
  // Multiply-accumulates executed for input `in`. Taps that land on zero
  // padding are skipped by conv3d and not counted.
  std::uint64_t macs(const Shape4& in) const;

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

// Outputs [begin, end) of one kernel tap whose input lies inside [0, n_in).
struct TapRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};
TapRange tap_range(std::size_t n_in, std::size_t n_out, std::size_t tap, std::size_t stride, std::size_t pad);

struct ConvParams {
  ConvGeometry geometry;
  std::vector<float> weights;  // [out, in, kt, kh, kw]
  std::vector<float> bias;     // [out] or empty

  void validate() const;
};

// Max pooling; padded cells never win.
struct PoolGeometry {
  Extent3 kernel{1, 3, 3};
  Extent3 stride{1, 2, 2};
  Extent3 padding{0, 1, 1};

  Shape4 output_shape(const Shape4& in) const;
  friend bool operator==(const PoolGeometry&, const PoolGeometry&) = default;
};

inline constexpr float kBatchNormEpsilon = 1e-5f;

struct BatchNormParams {
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;
  float epsilon = kBatchNormEpsilon;

  std::size_t channels() const noexcept { return gamma.size(); }
  void validate() const;
  static BatchNormParams identity(std::size_t channels);
};

struct LinearParams {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<float> weights;  // [out_dim, in_dim]
  std::vector<float> bias;     // [out_dim]

  void validate() const;
};

// Accumulates executed multiply-accumulate operations.
struct OpCounter {
  std::uint64_t macs = 0;
};

// Direct convolution. Each output element starts at zero and accumulates in
// (in_channel, kt, kh, kw) order with kw fastest, skipping taps on padding;
// bias is added last. The
// order is fixed regardless of worker count, so results are bit-reproducible.
Tensor conv3d(const Tensor& x, const ConvParams& p, OpCounter* counter = nullptr);

Tensor maxpool3d(const Tensor& x, const PoolGeometry& g = PoolGeometry{});

Tensor batchnorm_inference(const Tensor& x, const BatchNormParams& p);

// [time, channels] table of spatial means.
Matrix global_avg_pool_spatial(const Tensor& x);

std::vector<float> linear(std::span<const float> v, const LinearParams& p, OpCounter* counter = nullptr);

}  // namespace d3d
