#include "d3d/blocks.hpp"

#include <algorithm>

#include "d3d/errors.hpp"

namespace d3d {

namespace {

Tensor conv_bn(const Tensor& x, const ConvParams& conv, const BatchNormParams& bn, OpCounter* counter) {
  return batchnorm_inference(conv3d(x, conv, counter), bn);
}

Tensor synthesize_history(const Tensor& volume, CachePadding padding) {
  Tensor earliest = volume.slice_time(0, 1);
  if (padding == CachePadding::Zero) return Tensor(earliest.shape(), 0.0f);
  return earliest;
}

Tensor subsample_zero_pad(const Tensor& x, std::size_t st, std::size_t ss, std::size_t out_channels) {
  const Shape4& in = x.shape();
  if (out_channels < in.channels) throw ShapeError("zero-pad shortcut cannot reduce channels");
  const Shape4 os{out_channels, (in.time + st - 1) / st, (in.height + ss - 1) / ss, (in.width + ss - 1) / ss};
  Tensor out(os, 0.0f);
  for (std::size_t c = 0; c < in.channels; ++c)
    for (std::size_t t = 0; t < os.time; ++t)
      for (std::size_t h = 0; h < os.height; ++h)
        for (std::size_t w = 0; w < os.width; ++w) out.at(c, t, h, w) = x.at(c, t * st, h * ss, w * ss);
  return out;
}

struct BlockPass {
  Tensor output;
  Tensor temporal_input;
};

// The block dataflow, shared by the streaming and unrolled schedules. `history`
// is the depth-1 volume preceding temporal_input at the cache site.
BlockPass run_block(const BlockSpec& spec, const BlockWeights& w, const Tensor& x,
                    const std::optional<Tensor>& history_in, CachePadding padding, OpCounter* counter) {
  const std::size_t last = spec.convs.size() - 1;
  Tensor main = x;
  for (std::size_t i = 0; i < spec.temporal_conv; ++i) main = relu(conv_bn(main, w.convs[i], w.norms[i], counter));

  BlockPass pass{Tensor(), main};
  const Tensor& current = pass.temporal_input;
  const std::size_t steps = current.time();

  Tensor fed;
  if (spec.skip == SkipKind::None) {
    fed = current;
  } else {
    Tensor history = history_in ? *history_in : synthesize_history(current, padding);
    const Shape4 expect{current.channels(), 1, current.height(), current.width()};
    if (history.shape() != expect) {
      throw ShapeError("block " + spec.id + ": cache volume " + to_string(history.shape()) + " does not match " +
                       to_string(expect));
    }
    Tensor extended = concat_time(history, current);
    if (spec.skip == SkipKind::Concatenation) {
      fed = std::move(extended);
    } else {
      fed = add_elementwise(current, extended.slice_time(0, steps));
    }
  }

  for (std::size_t i = spec.temporal_conv; i <= last; ++i) {
    main = conv_bn(i == spec.temporal_conv ? fed : main, w.convs[i], w.norms[i], counter);
    if (i != last) main = relu(main);
  }
  if (main.time() != steps) {
    throw ShapeError("block " + spec.id + ": temporal extent drifted from " + std::to_string(steps) + " to " +
                     std::to_string(main.time()));
  }
  pass.output = relu(add_elementwise(main, shortcut_forward(spec, w, x, counter)));
  return pass;
}

BlockStep step(const BlockSpec& spec, const BlockWeights& w, const Tensor& x, const std::optional<Tensor>& cache_in,
               CachePadding padding, OpCounter* counter) {
  if (x.time() != 1) throw ShapeError("block " + spec.id + ": streaming input must have depth 1");
  BlockPass pass = run_block(spec, w, x, cache_in, padding, counter);
  return {std::move(pass.output), std::move(pass.temporal_input)};
}

}  // namespace

CachePadding parse_cache_padding(std::string_view name) {
  if (name == "replicate") return CachePadding::Replicate;
  if (name == "zero") return CachePadding::Zero;
  throw ConfigError("unknown cache padding '" + std::string(name) + "' (expected replicate|zero)");
}

std::string to_string(CachePadding p) { return p == CachePadding::Replicate ? "replicate" : "zero"; }

std::shared_ptr<const Network> Network::bind(const ModelSpec& spec, const WeightStore& weights) {
  if (!spec.causal()) throw ConfigError(spec.name() + " is a cost-comparison graph and cannot be executed");
  std::shared_ptr<Network> net(new Network());
  net->spec_ = spec;
  net->stem_conv_ = load_conv(weights, backbone_key("conv1.0", "conv"), spec.stem);
  net->stem_norm_ = load_batchnorm(weights, backbone_key("conv1.0", "bn"), spec.stem.out_channels);
  for (const auto& b : spec.blocks) {
    BlockWeights bw;
    for (std::size_t i = 0; i < b.convs.size(); ++i) {
      const auto& g = b.convs[i].geometry;
      bw.convs.push_back(load_conv(weights, backbone_key(b.id, b.convs[i].name), g));
      bw.norms.push_back(load_batchnorm(weights, backbone_key(b.id, "bn" + std::to_string(i + 1)), g.out_channels));
    }
    if (b.downsample) {
      bw.downsample = load_conv(weights, backbone_key(b.id, "downsample"), *b.downsample);
      bw.downsample_norm = load_batchnorm(weights, backbone_key(b.id, "downsample_bn"), b.downsample->out_channels);
    }
    net->blocks_.push_back(std::move(bw));
  }
  if (spec.conv_last) {
    net->conv_last_ = load_conv(weights, backbone_key("conv_last.0", "conv"), *spec.conv_last);
    net->conv_last_norm_ = load_batchnorm(weights, backbone_key("conv_last.0", "bn"), spec.conv_last->out_channels);
  }
  return net;
}

Tensor shortcut_forward(const BlockSpec& spec, const BlockWeights& w, const Tensor& x, OpCounter* counter) {
  switch (spec.shortcut) {
    case ShortcutKind::Identity:
      return x;
    case ShortcutKind::ZeroPad:
      return subsample_zero_pad(x, spec.temporal_stride, spec.spatial_stride, spec.out_channels);
    case ShortcutKind::Projection:
      if (!w.downsample || !w.downsample_norm) throw WeightsError("block " + spec.id + ": missing projection weights");
      return conv_bn(x, *w.downsample, *w.downsample_norm, counter);
  }
  return x;
}

BlockStep basic_block_step(const BlockSpec& spec, const BlockWeights& w, const Tensor& x,
                           const std::optional<Tensor>& cache_in, CachePadding padding, OpCounter* counter) {
  if (spec.kind != BlockKind::Basic) throw ShapeError("block " + spec.id + " is not a basic block");
  return step(spec, w, x, cache_in, padding, counter);
}

BlockStep bottleneck_block_step(const BlockSpec& spec, const BlockWeights& w, const Tensor& x,
                                const std::optional<Tensor>& cache_in, CachePadding padding, OpCounter* counter) {
  if (spec.kind != BlockKind::Bottleneck) throw ShapeError("block " + spec.id + " is not a bottleneck block");
  return step(spec, w, x, cache_in, padding, counter);
}

BlockStep block_step(const BlockSpec& spec, const BlockWeights& w, const Tensor& x,
                     const std::optional<Tensor>& cache_in, CachePadding padding, OpCounter* counter) {
  return spec.kind == BlockKind::Basic ? basic_block_step(spec, w, x, cache_in, padding, counter)
                                       : bottleneck_block_step(spec, w, x, cache_in, padding, counter);
}

Tensor block_unrolled(const BlockSpec& spec, const BlockWeights& w, const Tensor& x, CachePadding padding,
                      OpCounter* counter) {
  return run_block(spec, w, x, std::nullopt, padding, counter).output;
}

Tensor stem_forward(const Network& net, const Tensor& window, OpCounter* counter) {
  if (window.channels() != 3) throw ShapeError("stem expects 3-channel frames, got " + to_string(window.shape()));
  Tensor y = relu(conv_bn(window, net.stem_conv(), net.stem_norm(), counter));
  return maxpool3d(y, net.spec().pool);
}

Tensor conv_last_forward(const Network& net, const Tensor& x, OpCounter* counter) {
  if (!net.conv_last()) return x;
  return relu(conv_bn(x, *net.conv_last(), *net.conv_last_norm(), counter));
}

}  // namespace d3d
