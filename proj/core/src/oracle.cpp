#include "d3d/oracle.hpp"

#include "d3d/errors.hpp"

namespace d3d {

namespace {

UnrolledRun run(const Network& net, const Tensor& frames, const OfflineOptions& options, OpCounter* counter) {
  if (frames.channels() != 3) throw ShapeError("run_offline expects [3,T,H,W] frames, got " + to_string(frames.shape()));
  if (!frames.all_finite()) throw InputError("offline clip contains non-finite values");
  const ModelSpec& spec = net.spec();
  UnrolledRun result;

  Tensor x = stem_forward(net, pad_time_replicate_front(frames, spec.stem_frames() - 1), counter);
  if (options.keep_activations) result.activations.emplace_back("conv1", x);
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    x = block_unrolled(spec.blocks[i], net.block(i), x, options.cache_padding, counter);
    if (options.keep_activations) result.activations.emplace_back(spec.blocks[i].id, x);
  }
  if (spec.conv_last) {
    x = conv_last_forward(net, x, counter);
    if (options.keep_activations) result.activations.emplace_back("conv_last", x);
  }
  result.features = global_avg_pool_spatial(x);
  if (counter) result.mac_count = counter->macs;
  return result;
}

}  // namespace

UnrolledRun run_offline(const Network& net, const Tensor& frames, const OfflineOptions& options) {
  return run(net, frames, options, nullptr);
}

UnrolledRun run_offline_instrumented(const Network& net, const Tensor& frames, const OfflineOptions& options) {
  OpCounter counter;
  return run(net, frames, options, &counter);
}

}  // namespace d3d
