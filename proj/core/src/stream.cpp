#include "d3d/stream.hpp"

#include "d3d/errors.hpp"

namespace d3d {

StreamSession::StreamSession(std::shared_ptr<const Network> net, SessionOptions options)
    : net_(std::move(net)), options_(options) {
  if (!net_) throw ConfigError("stream session needs a network");
  cache_.resize(net_->spec().cache_site_count());
}

StreamSession open_session(std::shared_ptr<const Network> net, SessionOptions options) {
  return StreamSession(std::move(net), options);
}

void StreamSession::reset() {
  for (auto& c : cache_) c.reset();
  history_.clear();
  frame_shape_.reset();
  step_ = 0;
  last_macs_ = 0;
  trace_.clear();
}

FrameFeature StreamSession::push_frame(const Tensor& frame) {
  const Shape4& s = frame.shape();
  if (s.channels != 3 || s.time != 1) {
    throw ShapeError("push_frame expects a [3,1,H,W] frame, got " + to_string(s));
  }
  if (frame_shape_ && *frame_shape_ != s) {
    throw StreamError("frame size changed mid-stream from " + to_string(*frame_shape_) + " to " + to_string(s) +
                      "; reset the session first");
  }
  if (!frame.all_finite()) throw InputError("frame " + std::to_string(step_) + " contains non-finite values");
  frame_shape_ = s;

  const ModelSpec& spec = net_->spec();
  const std::size_t window = spec.stem_frames();
  OpCounter counter;
  trace_.clear();

  // [f(t-2), f(t-1), f(t)], the earliest frame replicated where history is short.
  Tensor stacked = history_.empty() ? frame : history_.front();
  for (std::size_t i = 1; i < history_.size(); ++i) stacked = concat_time(stacked, history_[i]);
  if (!history_.empty()) stacked = concat_time(stacked, frame);
  stacked = pad_time_replicate_front(stacked, window - stacked.time());

  Tensor x = stem_forward(*net_, stacked, &counter);
  if (options_.trace) trace_.emplace_back("conv1", x);

  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const BlockSpec& b = spec.blocks[i];
    std::optional<Tensor> cached;
    if (b.cache_site) cached = cache_[*b.cache_site];
    BlockStep out = block_step(b, net_->block(i), x, cached, options_.cache_padding, &counter);
    if (b.cache_site) cache_[*b.cache_site] = std::move(out.cache_out);
    x = std::move(out.output);
    if (options_.trace) trace_.emplace_back(b.id, x);
  }
  if (spec.conv_last) {
    x = conv_last_forward(*net_, x, &counter);
    if (options_.trace) trace_.emplace_back("conv_last", x);
  }

  const Matrix pooled = global_avg_pool_spatial(x);
  FrameFeature feature{std::vector<float>(pooled.row(0).begin(), pooled.row(0).end()), step_};

  history_.push_back(frame);
  while (history_.size() > window - 1) history_.pop_front();
  ++step_;
  last_macs_ = counter.macs;
  return feature;
}

std::vector<CacheEntry> StreamSession::cache_snapshot() const {
  std::vector<CacheEntry> out;
  for (const auto& b : net_->spec().blocks) {
    if (!b.cache_site) continue;
    const auto& entry = cache_[*b.cache_site];
    if (entry) out.push_back({*b.cache_site, b.id, *entry});
  }
  return out;
}

std::size_t StreamSession::state_size() const noexcept {
  std::size_t n = 0;
  for (const auto& c : cache_)
    if (c) n += c->numel();
  for (const auto& f : history_) n += f.numel();
  return n;
}

void StreamSession::corrupt_cache_for_testing(float delta) {
  for (auto& c : cache_) {
    if (!c) continue;
    for (float& v : c->values()) v += delta;
  }
}

}  // namespace d3d
