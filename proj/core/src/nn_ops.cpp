#include "d3d/nn_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "d3d/errors.hpp"
#include "d3d/parallel.hpp"

namespace d3d {

namespace {

std::size_t window_count(std::size_t in, std::size_t pad, std::size_t k, std::size_t stride,
                         const char* what, const Shape4& shape) {
  const std::size_t padded = in + 2 * pad;
  if (k == 0 || stride == 0) throw ShapeError(std::string(what) + ": kernel and stride must be >= 1");
  if (padded < k) {
    throw ShapeError(std::string(what) + ": window " + std::to_string(k) + " larger than padded extent " +
                     std::to_string(padded) + " of input " + to_string(shape));
  }
  return (padded - k) / stride + 1;
}

std::string extent_str(const Extent3& e) {
  return std::to_string(e.t) + "x" + std::to_string(e.h) + "x" + std::to_string(e.w);
}

}  // namespace

Shape4 ConvGeometry::output_shape(const Shape4& in) const {
  if (in.channels != in_channels) {
    throw ShapeError("conv3d: input has " + std::to_string(in.channels) + " channels, kernel expects " +
                     std::to_string(in_channels));
  }
  return {out_channels, window_count(in.time, padding.t, kernel.t, stride.t, "conv3d", in),
          window_count(in.height, padding.h, kernel.h, stride.h, "conv3d", in),
          window_count(in.width, padding.w, kernel.w, stride.w, "conv3d", in)};
}

TapRange tap_range(std::size_t n_in, std::size_t n_out, std::size_t tap, std::size_t stride, std::size_t pad) {
  // Output o reads input o * stride + tap - pad.
  const auto first = static_cast<std::ptrdiff_t>(pad) - static_cast<std::ptrdiff_t>(tap);
  const auto last = static_cast<std::ptrdiff_t>(n_in) - 1 + first;
  const auto s = static_cast<std::ptrdiff_t>(stride);
  if (last < 0) return {0, 0};
  const std::size_t begin = first <= 0 ? 0 : static_cast<std::size_t>((first + s - 1) / s);
  const std::size_t end = std::min(n_out, static_cast<std::size_t>(last / s) + 1);
  return {std::min(begin, end), end};
}

std::uint64_t ConvGeometry::macs(const Shape4& in) const {
  const Shape4 out = output_shape(in);
  const auto taps = [](std::size_t n_in, std::size_t n_out, std::size_t k, std::size_t s, std::size_t pad) {
    std::uint64_t total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const TapRange r = tap_range(n_in, n_out, j, s, pad);
      total += r.end - r.begin;
    }
    return total;
  };
  return static_cast<std::uint64_t>(out_channels) * in_channels * taps(in.time, out.time, kernel.t, stride.t, padding.t) *
         taps(in.height, out.height, kernel.h, stride.h, padding.h) * taps(in.width, out.width, kernel.w, stride.w, padding.w);
}

void ConvParams::validate() const {
  if (weights.size() != geometry.weight_count()) {
    throw ShapeError("conv weights: expected " + std::to_string(geometry.weight_count()) + " values for " +
                     std::to_string(geometry.out_channels) + "x" + std::to_string(geometry.in_channels) + "x" +
                     extent_str(geometry.kernel) + ", got " + std::to_string(weights.size()));
  }
  if (!bias.empty() && bias.size() != geometry.out_channels) {
    throw ShapeError("conv bias: expected " + std::to_string(geometry.out_channels) + " values, got " +
                     std::to_string(bias.size()));
  }
}

Shape4 PoolGeometry::output_shape(const Shape4& in) const {
  return {in.channels, window_count(in.time, padding.t, kernel.t, stride.t, "maxpool3d", in),
          window_count(in.height, padding.h, kernel.h, stride.h, "maxpool3d", in),
          window_count(in.width, padding.w, kernel.w, stride.w, "maxpool3d", in)};
}

void BatchNormParams::validate() const {
  const std::size_t n = gamma.size();
  if (beta.size() != n || running_mean.size() != n || running_var.size() != n) {
    throw ShapeError("batchnorm: parameter arrays have differing lengths");
  }
  if (!(epsilon > 0.0f)) throw ShapeError("batchnorm: epsilon must be positive");
  for (float v : running_var) {
    if (v < 0.0f) throw ShapeError("batchnorm: negative running variance");
  }
}

BatchNormParams BatchNormParams::identity(std::size_t channels) {
  return {std::vector<float>(channels, 1.0f), std::vector<float>(channels, 0.0f),
          std::vector<float>(channels, 0.0f), std::vector<float>(channels, 1.0f), kBatchNormEpsilon};
}

void LinearParams::validate() const {
  if (weights.size() != in_dim * out_dim || bias.size() != out_dim) {
    throw ShapeError("linear: parameter arrays do not match " + std::to_string(out_dim) + "x" +
                     std::to_string(in_dim));
  }
}

Tensor conv3d(const Tensor& x, const ConvParams& p, OpCounter* counter) {
  p.validate();
  const ConvGeometry& g = p.geometry;
  const Shape4& in = x.shape();
  const Shape4 out_shape = g.output_shape(in);

  // Per-tap output ranges whose input position is inside the volume.
  const auto ranges = [](std::size_t n_in, std::size_t n_out, std::size_t k, std::size_t s, std::size_t pad) {
    std::vector<TapRange> r(k);
    for (std::size_t j = 0; j < k; ++j) r[j] = tap_range(n_in, n_out, j, s, pad);
    return r;
  };
  const auto rt = ranges(in.time, out_shape.time, g.kernel.t, g.stride.t, g.padding.t);
  const auto rh = ranges(in.height, out_shape.height, g.kernel.h, g.stride.h, g.padding.h);
  const auto rw = ranges(in.width, out_shape.width, g.kernel.w, g.stride.w, g.padding.w);

  Tensor out(out_shape);
  const std::size_t kvol = g.kernel.volume();
  const std::size_t out_per_channel = out_shape.time * out_shape.plane();
  const float* in_data = x.values().data();
  float* out_data = out.values().data();

  parallel_for(g.out_channels, [&](std::size_t oc) {
    float* o = out_data + oc * out_per_channel;
    const float* wbase = p.weights.data() + oc * g.in_channels * kvol;
    for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
      for (std::size_t kt = 0; kt < g.kernel.t; ++kt) {
        for (std::size_t kh = 0; kh < g.kernel.h; ++kh) {
          for (std::size_t kw = 0; kw < g.kernel.w; ++kw) {
            const float w = wbase[((ic * g.kernel.t + kt) * g.kernel.h + kh) * g.kernel.w + kw];
            const TapRange& wr = rw[kw];
            if (wr.end <= wr.begin) continue;
            const std::size_t iw0 = wr.begin * g.stride.w + kw - g.padding.w;
            for (std::size_t ot = rt[kt].begin; ot < rt[kt].end; ++ot) {
              const std::size_t it = ot * g.stride.t + kt - g.padding.t;
              for (std::size_t oh = rh[kh].begin; oh < rh[kh].end; ++oh) {
                const std::size_t ih = oh * g.stride.h + kh - g.padding.h;
                const float* irow = in_data + x.offset(ic, it, ih, iw0);
                float* orow = o + (ot * out_shape.height + oh) * out_shape.width + wr.begin;
                const std::size_t n = wr.end - wr.begin;
                if (g.stride.w == 1) {
                  for (std::size_t i = 0; i < n; ++i) orow[i] += w * irow[i];
                } else {
                  for (std::size_t i = 0; i < n; ++i) orow[i] += w * irow[i * g.stride.w];
                }
              }
            }
          }
        }
      }
    }
    if (!p.bias.empty()) {
      const float b = p.bias[oc];
      for (std::size_t i = 0; i < out_per_channel; ++i) o[i] += b;
    }
  });

  if (counter) counter->macs += g.macs(in);
  return out;
}

Tensor maxpool3d(const Tensor& x, const PoolGeometry& g) {
  const Shape4 os = g.output_shape(x.shape());
  const Shape4& is = x.shape();
  Tensor out(os);
  for (std::size_t c = 0; c < os.channels; ++c)
    for (std::size_t ot = 0; ot < os.time; ++ot)
      for (std::size_t oh = 0; oh < os.height; ++oh)
        for (std::size_t ow = 0; ow < os.width; ++ow) {
          float best = -std::numeric_limits<float>::infinity();
          for (std::size_t kt = 0; kt < g.kernel.t; ++kt) {
            const std::ptrdiff_t it = static_cast<std::ptrdiff_t>(ot * g.stride.t + kt) -
                                      static_cast<std::ptrdiff_t>(g.padding.t);
            if (it < 0 || it >= static_cast<std::ptrdiff_t>(is.time)) continue;
            for (std::size_t kh = 0; kh < g.kernel.h; ++kh) {
              const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride.h + kh) -
                                        static_cast<std::ptrdiff_t>(g.padding.h);
              if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(is.height)) continue;
              for (std::size_t kw = 0; kw < g.kernel.w; ++kw) {
                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride.w + kw) -
                                          static_cast<std::ptrdiff_t>(g.padding.w);
                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(is.width)) continue;
                best = std::max(best, x.at(c, static_cast<std::size_t>(it), static_cast<std::size_t>(ih),
                                           static_cast<std::size_t>(iw)));
              }
            }
          }
          if (best == -std::numeric_limits<float>::infinity()) {
            throw ShapeError("maxpool3d: window covers padding only");
          }
          out.at(c, ot, oh, ow) = best;
        }
  return out;
}

Tensor batchnorm_inference(const Tensor& x, const BatchNormParams& p) {
  p.validate();
  if (x.channels() != p.channels()) {
    throw ShapeError("batchnorm: input has " + std::to_string(x.channels()) + " channels, parameters have " +
                     std::to_string(p.channels()));
  }
  Tensor out(x.shape());
  const std::size_t per_channel = x.time() * x.shape().plane();
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const float scale = p.gamma[c] / std::sqrt(p.running_var[c] + p.epsilon);
    const float mean = p.running_mean[c];
    const float shift = p.beta[c];
    const float* src = x.values().data() + c * per_channel;
    float* dst = out.values().data() + c * per_channel;
    for (std::size_t i = 0; i < per_channel; ++i) dst[i] = scale * (src[i] - mean) + shift;
  }
  return out;
}

Matrix global_avg_pool_spatial(const Tensor& x) {
  Matrix out(x.time(), x.channels());
  const std::size_t plane = x.shape().plane();
  for (std::size_t t = 0; t < x.time(); ++t)
    for (std::size_t c = 0; c < x.channels(); ++c) {
      const float* p = x.values().data() + x.offset(c, t, 0, 0);
      double sum = 0.0;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      out.at(t, c) = static_cast<float>(sum / static_cast<double>(plane));
    }
  return out;
}

std::vector<float> linear(std::span<const float> v, const LinearParams& p, OpCounter* counter) {
  p.validate();
  if (v.size() != p.in_dim) {
    throw ShapeError("linear: input length " + std::to_string(v.size()) + " != in_dim " +
                     std::to_string(p.in_dim));
  }
  std::vector<float> out(p.out_dim);
  for (std::size_t j = 0; j < p.out_dim; ++j) {
    const float* w = p.weights.data() + j * p.in_dim;
    float acc = 0.0f;
    for (std::size_t i = 0; i < p.in_dim; ++i) acc += w[i] * v[i];
    out[j] = p.bias[j] + acc;
  }
  if (counter) counter->macs += static_cast<std::uint64_t>(p.in_dim) * p.out_dim;
  return out;
}

}  // namespace d3d
