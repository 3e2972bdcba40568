#include "d3d/verify.hpp"

#include <random>

#include "d3d/errors.hpp"
#include "d3d/oracle.hpp"
#include "d3d/weights.hpp"

namespace d3d {

Tensor random_frames(std::size_t frames, std::size_t height, std::size_t width, std::uint64_t seed) {
  const Shape4 shape{3, frames, height, width};
  return Tensor(shape, uniform_values(shape.numel(), 1.0f, seed));
}

Matrix stream_features(std::shared_ptr<const Network> net, const Tensor& frames, const SessionOptions& options) {
  StreamSession session(std::move(net), options);
  Matrix out;
  for (std::size_t t = 0; t < frames.time(); ++t) out.append_row(session.push_frame(frames.slice_time(t, 1)).values);
  return out;
}

namespace {

bool rows_identical(const Matrix& a, const Matrix& b, std::size_t r) { return bit_identical(a.row(r), b.row(r)); }

std::optional<Location> locate(std::shared_ptr<const Network> net, const Tensor& frames,
                               const EquivalenceOptions& options) {
  const UnrolledRun ref = run_offline(*net, frames, {options.cache_padding, true});
  StreamSession session(net, {options.cache_padding, true});
  std::optional<Location> worst;
  for (std::size_t t = 0; t < frames.time(); ++t) {
    session.push_frame(frames.slice_time(t, 1));
    if (options.corrupt_delta && t == options.corrupt_at) session.corrupt_cache_for_testing(*options.corrupt_delta);
    const auto& trace = session.last_trace();
    for (std::size_t i = 0; i < trace.size() && i < ref.activations.size(); ++i) {
      const Tensor expect = ref.activations[i].second.slice_time(t, 1);
      const Tensor& got = trace[i].second;
      if (got.shape() != expect.shape() ||
          !near_equal(got, expect, options.tolerance.rel, options.tolerance.abs)) {
        const double dev = got.shape() == expect.shape() ? max_deviation(got.values(), expect.values()).max_abs : 0.0;
        return Location{t, trace[i].first, dev};
      }
    }
  }
  return worst;
}

}  // namespace

EquivalenceReport check_equivalence(std::shared_ptr<const Network> net, const Tensor& frames,
                                    const EquivalenceOptions& options) {
  const UnrolledRun ref = run_offline(*net, frames, {options.cache_padding, false});
  StreamSession session(net, {options.cache_padding, false});
  EquivalenceReport report;
  for (std::size_t t = 0; t < frames.time(); ++t) {
    const FrameFeature f = session.push_frame(frames.slice_time(t, 1));
    if (options.corrupt_delta && t == options.corrupt_at) session.corrupt_cache_for_testing(*options.corrupt_delta);
    const Deviation d = max_deviation(f.values, ref.features.row(t));
    const bool ok = near_equal(f.values, ref.features.row(t), options.tolerance.rel, options.tolerance.abs);
    report.frames.push_back({t, d.max_abs, d.max_rel, ok});
    report.max_abs = std::max(report.max_abs, d.max_abs);
    report.max_rel = std::max(report.max_rel, d.max_rel);
    report.pass = report.pass && ok;
  }
  if (!report.pass) report.worst = locate(net, frames, options);
  return report;
}

Tensor perturb_frame(const Tensor& frames, std::size_t t, std::uint64_t seed, float scale) {
  if (t >= frames.time()) throw InputError("perturbed frame " + std::to_string(t) + " out of range");
  Tensor out = frames;
  const std::size_t plane = frames.shape().plane();
  const auto noise = uniform_values(frames.channels() * plane, scale, seed);
  for (std::size_t c = 0; c < frames.channels(); ++c) {
    float* dst = out.values().data() + out.offset(c, t, 0, 0);
    for (std::size_t i = 0; i < plane; ++i) dst[i] += noise[c * plane + i];
  }
  return out;
}

CausalityReport check_causality(std::shared_ptr<const Network> net, const Tensor& frames, std::size_t trials,
                                 std::uint64_t seed, CachePadding padding) {
  const SessionOptions options{padding, false};
  const Matrix base = stream_features(net, frames, options);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, frames.time() - 1);
  CausalityReport report;
  for (std::size_t i = 0; i < trials; ++i) {
    const std::size_t j = pick(rng);
    const Matrix got = stream_features(net, perturb_frame(frames, j, rng()), options);
    for (std::size_t t = 0; t < j; ++t) {
      if (!rows_identical(base, got, t)) ++report.future_leaks;
    }
    if (rows_identical(base, got, j)) ++report.unresponsive;
    ++report.trials;
  }
  return report;
}

ReceptiveFieldReport probe_receptive_field(std::shared_ptr<const Network> net, std::size_t frames, std::size_t size,
                                           std::uint64_t seed, CachePadding padding) {
  ReceptiveFieldReport report;
  report.expected = receptive_field_frames(net->spec());
  report.frames = frames == 0 ? report.expected + 4 : frames;
  const Tensor clip = random_frames(report.frames, size, size, seed);
  const SessionOptions options{padding, false};
  const std::size_t last = report.frames - 1;

  auto final_feature = [&](const Tensor& x) {
    StreamSession session(net, options);
    FrameFeature f;
    for (std::size_t t = 0; t < x.time(); ++t) f = session.push_frame(x.slice_time(t, 1));
    ++report.evaluations;
    return f.values;
  };
  const std::vector<float> base = final_feature(clip);
  auto influences = [&](std::size_t j) {
    const auto v = final_feature(perturb_frame(clip, j, seed ^ (0x9E3779B97F4A7C15ull * (j + 1))));
    return !bit_identical(std::span<const float>(v), std::span<const float>(base));
  };

  // Smallest j in [0, last] that still influences the final feature.
  std::size_t lo = 0;
  std::size_t hi = last;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (influences(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  report.horizon = last - lo + 1;
  return report;
}

}  // namespace d3d
