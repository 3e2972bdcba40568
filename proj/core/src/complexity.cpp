#include "d3d/complexity.hpp"

#include <iomanip>
#include <sstream>

#include "d3d/errors.hpp"

namespace d3d {

namespace {

std::uint64_t bn_params(std::size_t channels) { return 2ull * channels; }

// Walks the graph propagating shapes. Causal graphs give every conv with
// temporal extent k exactly k - 1 slices of explicit history (the stem's
// replicated frames, the cached volume), so each layer's output time equals
// the number of frames being produced.
class Walker {
 public:
  Walker(const ModelSpec& m, ComplexityReport& r) : m_(m), r_(r) {}

  void run(std::size_t frames, std::size_t height, std::size_t width) {
    Shape4 x{3, frames, height, width};
    x = conv("conv1", m_.stem, x);
    norm("conv1.bn", x);
    const Shape4 pooled = m_.pool.output_shape(x);
    r_.per_layer.push_back({"pool", 0, 0, pooled});
    x = pooled;

    for (const auto& b : m_.blocks) {
      const Shape4 in = x;
      for (std::size_t i = 0; i < b.convs.size(); ++i) {
        const std::string id = b.id + "." + b.convs[i].name;
        if (i == b.temporal_conv && b.cache_site) site_shapes.push_back({x.channels, 1, x.height, x.width});
        x = conv(id, b.convs[i].geometry, x);
        norm(b.id + ".bn" + std::to_string(i + 1), x);
      }
      if (b.downsample) {
        const Shape4 d = conv(b.id + ".downsample", *b.downsample, in);
        norm(b.id + ".downsample_bn", d);
        if (d != x) throw ShapeError("block " + b.id + ": projection shape mismatch");
      }
    }
    if (m_.conv_last) {
      x = conv("conv_last", *m_.conv_last, x);
      norm("conv_last.bn", x);
    }
  }

  std::vector<Shape4> site_shapes;

 private:
  Shape4 conv(const std::string& id, const ConvGeometry& g, Shape4 in) {
    if (m_.causal()) in.time += g.kernel.t - 1;
    const Shape4 out = g.output_shape(in);
    r_.per_layer.push_back({id, g.weight_count(), g.macs(in), out});
    return out;
  }

  void norm(const std::string& id, const Shape4& s) { r_.per_layer.push_back({id, bn_params(s.channels), 0, s}); }

  const ModelSpec& m_;
  ComplexityReport& r_;
};

void finish(ComplexityReport& r) {
  r.total_params = 0;
  r.total_macs = 0;
  for (const auto& l : r.per_layer) {
    r.total_params += l.params;
    r.total_macs += l.macs;
  }
}

ComplexityReport walk(const ModelSpec& m, CountMode mode, std::size_t frames, std::size_t h, std::size_t w,
                      std::vector<Shape4>* sites = nullptr) {
  ComplexityReport r;
  r.model_name = m.name();
  r.mode = mode;
  r.frames = frames;
  r.height = h;
  r.width = w;
  Walker walker(m, r);
  walker.run(frames, h, w);
  if (sites) *sites = walker.site_shapes;
  finish(r);
  return r;
}

}  // namespace

std::string to_string(CountMode m) {
  switch (m) {
    case CountMode::Parameters: return "parameters";
    case CountMode::StreamingPerFrame: return "streaming-per-frame";
    case CountMode::OfflineClip: return "offline-clip";
  }
  return "?";
}

ComplexityReport count_params(const ModelSpec& model) {
  // Shapes need some input; parameters do not depend on it.
  ComplexityReport r = walk(model, CountMode::Parameters, model.causal() ? 1 : 16, 112, 112);
  for (auto& l : r.per_layer) l.macs = 0;
  finish(r);
  return r;
}

ComplexityReport count_flops_streaming(const ModelSpec& model, std::size_t height, std::size_t width) {
  if (!model.causal()) throw ConfigError(model.name() + " has no streaming schedule");
  return walk(model, CountMode::StreamingPerFrame, 1, height, width);
}

ComplexityReport count_flops_offline(const ModelSpec& model, std::size_t frames, std::size_t height,
                                     std::size_t width) {
  if (frames == 0) throw ConfigError("offline clip needs at least one frame");
  return walk(model, CountMode::OfflineClip, frames, height, width);
}

ComplexityReport compare_online(const ModelSpec& dissected, const ModelSpec& baseline, std::size_t frames,
                                std::size_t height, std::size_t width) {
  if (dissected.variant.depth != baseline.variant.depth) {
    throw ConfigError("cannot compare " + dissected.name() + " with " + baseline.name() + ": depths differ");
  }
  ComplexityReport r = count_flops_streaming(dissected, height, width);
  const ComplexityReport b = count_flops_offline(baseline, frames, height, width);
  r.comparison = Comparison{b.model_name, frames, b.total_macs,
                            1.0 - static_cast<double>(r.total_macs) / static_cast<double>(b.total_macs)};
  return r;
}

std::vector<Shape4> cache_site_shapes(const ModelSpec& model, std::size_t height, std::size_t width) {
  std::vector<Shape4> sites;
  walk(model, CountMode::StreamingPerFrame, 1, height, width, &sites);
  return sites;
}

std::string format_table(const ComplexityReport& r) {
  std::ostringstream os;
  os << "# model: " << r.model_name << "\n# mode: " << to_string(r.mode);
  if (r.mode != CountMode::Parameters) os << " (frames " << r.frames << ", " << r.height << "x" << r.width << ")";
  os << "\n# convention: " << kFlopConvention << "\n";
  os << std::left << std::setw(28) << "layer" << std::right << std::setw(14) << "params" << std::setw(16) << "MACs"
     << "  output [C,T,H,W]\n";
  for (const auto& l : r.per_layer) {
    os << std::left << std::setw(28) << l.layer_id << std::right << std::setw(14) << l.params << std::setw(16)
       << l.macs << "  " << to_string(l.output) << "\n";
  }
  os << std::setprecision(6);
  os << "total params: " << r.total_params << " (" << static_cast<double>(r.total_params) / 1e6 << "M)\n";
  os << "total MACs:   " << r.total_macs << " (" << static_cast<double>(r.total_macs) / 1e6 << " MMACs)\n";
  if (r.comparison) {
    os << "baseline:     " << r.comparison->baseline_name << ", " << r.comparison->baseline_frames
       << "-frame clip, " << static_cast<double>(r.comparison->baseline_total_macs) / 1e6 << " MMACs\n";
    os << "reduction:    " << r.comparison->reduction_fraction << "\n";
  }
  return os.str();
}

std::string format_kv(const ComplexityReport& r) {
  std::ostringstream os;
  os << "# model " << r.model_name << "\n# mode " << to_string(r.mode) << " frames " << r.frames << " size "
     << r.height << "x" << r.width << "\n# convention " << kFlopConvention << "\n";
  for (const auto& l : r.per_layer) {
    os << l.layer_id << ' ' << l.params << ' ' << l.macs << ' ' << l.output.height << ' ' << l.output.width << ' '
       << l.output.time << "\n";
  }
  os << "total " << r.total_params << ' ' << r.total_macs << "\n";
  if (r.comparison) {
    os << std::setprecision(6) << "baseline_macs " << r.comparison->baseline_total_macs << "\nreduction "
       << r.comparison->reduction_fraction << "\n";
  }
  return os.str();
}

}  // namespace d3d
