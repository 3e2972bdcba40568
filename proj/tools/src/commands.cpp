#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "d3d/complexity.hpp"
#include "d3d/config.hpp"
#include "d3d/errors.hpp"
#include "d3d/heads.hpp"
#include "d3d/io.hpp"
#include "d3d/oracle.hpp"
#include "d3d/parallel.hpp"
#include "d3d/stream.hpp"
#include "d3d/verify.hpp"
#include "d3d/weights.hpp"
#include "text_io.hpp"

namespace d3d::cli {

namespace {

std::string extent(const Extent3& e) {
  return std::to_string(e.t) + "x" + std::to_string(e.h) + "x" + std::to_string(e.w);
}

HeadConfig head_for(const ModelConfig& cfg, const std::string& override_kind) {
  HeadConfig h = cfg.head;
  if (!override_kind.empty()) h.kind = parse_head_kind(override_kind);
  return h;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

Matrix backbone_features(const ModelConfig& cfg, const WeightStore& weights, const std::string& input) {
  auto net = Network::bind(cfg.build(), weights);
  const Tensor frames = load_frames(input, cfg.norm);
  return stream_features(net, frames, {cfg.cache_padding, false});
}

// Applies the head and writes `t v0 v1 ...` lines (plus `avg` for fc).
void write_head_output(std::ostream& os, const Matrix& features, const HeadConfig& head, const WeightStore& weights,
                       std::size_t feature_dim) {
  switch (head.kind) {
    case HeadKind::None:
      write_rows(os, features);
      return;
    case HeadKind::Fc: {
      const FcScores scores = fc_head_score(features, load_fc_head(weights, head, feature_dim));
      for (std::size_t r = 0; r < scores.windows.rows(); ++r) {
        write_row(os, std::to_string(scores.window_end[r]), scores.windows.row(r));
      }
      write_row(os, "avg", scores.average);
      return;
    }
    case HeadKind::Lstm:
    case HeadKind::Gru: {
      RecurrentHead rnn = load_recurrent_head(weights, head, feature_dim);
      write_rows(os, recurrent_classify(rnn, features));
      return;
    }
  }
}

}  // namespace

int describe(const DescribeArgs& a) {
  const ModelConfig cfg = ModelConfig::load(a.config);
  const ModelSpec spec = cfg.build();
  std::cout << "# model " << spec.name() << " width " << cfg.width_text << "\n";
  std::cout << std::left << std::setw(22) << "layer" << std::setw(9) << "kernel" << std::setw(9) << "stride"
            << std::right << std::setw(6) << "in" << std::setw(6) << "out" << "  cache\n";
  auto row = [](const std::string& id, const Extent3& k, const Extent3& s, std::size_t in, std::size_t out,
                const std::string& mark) {
    std::cout << std::left << std::setw(22) << id << std::setw(9) << extent(k) << std::setw(9) << extent(s)
              << std::right << std::setw(6) << in << std::setw(6) << out << "  " << mark << "\n";
  };
  row("conv1", spec.stem.kernel, spec.stem.stride, spec.stem.in_channels, spec.stem.out_channels, "-");
  row("pool", spec.pool.kernel, spec.pool.stride, spec.stem.out_channels, spec.stem.out_channels, "-");
  for (const auto& b : spec.blocks) {
    for (std::size_t i = 0; i < b.convs.size(); ++i) {
      const auto& g = b.convs[i].geometry;
      std::string mark = "-";
      if (b.cache_site && i == b.temporal_conv) mark = "cache[" + std::to_string(*b.cache_site) + "] " + to_string(b.skip);
      row(b.id + "." + b.convs[i].name, g.kernel, g.stride, g.in_channels, g.out_channels, mark);
    }
    if (b.downsample) {
      const auto& g = *b.downsample;
      row(b.id + ".downsample", g.kernel, g.stride, g.in_channels, g.out_channels, "-");
    } else if (b.shortcut == ShortcutKind::ZeroPad) {
      std::cout << std::left << std::setw(22) << (b.id + ".shortcut") << "zero-pad " << b.in_channels << "->"
                << b.out_channels << " stride " << b.spatial_stride << "\n";
    }
  }
  if (spec.conv_last) {
    row("conv_last", spec.conv_last->kernel, spec.conv_last->stride, spec.conv_last->in_channels,
        spec.conv_last->out_channels, "-");
  }
  const ComplexityReport params = count_params(spec);
  std::cout << "blocks " << spec.blocks.size() << "\ncache_sites " << spec.cache_site_count() << "\nfeature_dim "
            << spec.feature_dim << "\nparams " << params.total_params << "\n";
  return kOk;
}

int count(const CountArgs& a) {
  const ModelConfig cfg = ModelConfig::load(a.config);
  const ModelSpec spec = cfg.build();
  const std::size_t size = a.size.value_or(cfg.input_size);
  if (a.frames == 0) throw ConfigError("--frames must be positive");
  ComplexityReport report;
  if (a.mode == "params") {
    report = count_params(spec);
  } else if (a.mode == "streaming") {
    if (!spec.causal()) throw ConfigError("streaming counts need a dissected variant, got " + spec.name());
    report = count_flops_streaming(spec, size, size);
  } else if (a.mode == "offline") {
    report = count_flops_offline(spec, a.frames, size, size);
  } else {
    throw ConfigError("unknown count mode '" + a.mode + "' (expected params|streaming|offline)");
  }
  if (a.baseline) {
    if (!spec.causal()) throw ConfigError("--baseline compares a dissected variant with its conventional pair");
    report.comparison = compare_online(spec, cfg.build_baseline(), a.frames, size, size).comparison;
  }
  std::cout << (a.table ? format_table(report) : format_kv(report));
  return kOk;
}

int run(const RunArgs& a) {
  const ModelConfig cfg = ModelConfig::load(a.config);
  const HeadConfig head = head_for(cfg, a.head);
  const WeightStore weights = load_weights(a.weights);
  const Matrix features = backbone_features(cfg, weights, a.input);
  std::ofstream out = open_output(a.output);
  write_head_output(out, features, head, weights, cfg.build().feature_dim);
  std::cout << "frames " << features.rows() << "\nhead " << to_string(head.kind) << "\n";
  return kOk;
}

int verify(const VerifyArgs& a) {
  const ModelConfig cfg = ModelConfig::load(a.config);
  const ModelSpec spec = cfg.build();
  if (a.frames == 0 || a.size == 0) throw ConfigError("--frames and --size must be positive");
  auto net = Network::bind(spec, init_weights(spec, a.seed));
  const Tensor frames = random_frames(a.frames, a.size, a.size, a.seed);

  EquivalenceOptions opts;
  opts.cache_padding = cfg.cache_padding;
  if (a.corrupt_cache) {
    opts.corrupt_delta = 0.5f;
    opts.corrupt_at = a.frames / 2;
  }
  const EquivalenceReport eq = check_equivalence(net, frames, opts);
  std::cout << "# model " << spec.name() << " width " << cfg.width_text << " seed " << a.seed << " frames "
            << a.frames << " size " << a.size << "\n# tolerance rel " << fmt(opts.tolerance.rel) << " abs "
            << fmt(opts.tolerance.abs) << "\n";
  for (const auto& f : eq.frames) {
    std::cout << "frame " << f.t << ' ' << fmt(f.max_abs) << ' ' << fmt(f.max_rel) << ' '
              << (f.pass ? "ok" : "FAIL") << "\n";
  }
  std::cout << "max_abs " << fmt(eq.max_abs) << "\nmax_rel " << fmt(eq.max_rel) << "\nequivalence "
            << (eq.pass ? "pass" : "fail") << "\n";
  bool ok = eq.pass;

  if (!a.skip_probes) {
    const CausalityReport c = check_causality(net, frames, a.causality_trials, a.seed, cfg.cache_padding);
    std::cout << "causality " << (c.pass() ? "pass" : "fail") << " trials " << c.trials << " leaks " << c.future_leaks
              << " unresponsive " << c.unresponsive << "\n";
    const ReceptiveFieldReport rf = probe_receptive_field(net, 0, std::min<std::size_t>(a.size, 32), a.seed,
                                                          cfg.cache_padding);
    std::cout << "receptive_field " << (rf.pass() ? "pass" : "fail") << " horizon " << rf.horizon << " expected "
              << rf.expected << "\n";
    ok = ok && c.pass() && rf.pass();
  }
  std::cout << "result " << (ok ? "pass" : "fail") << "\n";
  if (!ok) {
    std::cerr << "error:verify";
    if (eq.worst) std::cerr << " t=" << eq.worst->t << " layer=" << eq.worst->layer << " max_abs=" << fmt(eq.worst->max_abs);
    else if (!eq.pass) std::cerr << " features diverge";
    else std::cerr << " causality or receptive-field check failed";
    std::cerr << "\n";
    return kVerifyFailed;
  }
  return kOk;
}

int probe(const ProbeArgs& a) {
  if (a.kind == "segments") {
    if (a.features.empty()) throw ConfigError("probe segments needs --features");
    if (a.segments == 0) throw ConfigError("--segments must be positive");
    const Matrix rows = read_rows(a.features);
    const Matrix means = segment_means(rows, a.segments);
    write_rows(std::cout, means);
    std::vector<float> global(rows.cols(), 0.0f);
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < rows.rows(); ++r) s += rows.at(r, c);
      global[c] = static_cast<float>(s / static_cast<double>(rows.rows()));
    }
    write_row(std::cout, "global", global);
    return kOk;
  }
  if (a.kind == "erasure") {
    if (!(a.percent >= 0.0 && a.percent <= 100.0)) throw ConfigError("--percent must be within [0, 100]");
    if (a.config.empty() || a.weights.empty() || a.input.empty() || a.output.empty()) {
      throw ConfigError("probe erasure needs --config, --weights, --input and --output");
    }
    const ModelConfig cfg = ModelConfig::load(a.config);
    const HeadConfig head = head_for(cfg, a.head);
    const WeightStore weights = load_weights(a.weights);
    const Matrix features = backbone_features(cfg, weights, a.input);
    const Matrix erased = erase_middle(features, a.percent, a.variance, a.seed);
    const std::size_t dim = cfg.build().feature_dim;

    std::ostringstream base;
    std::ostringstream probed;
    write_head_output(base, features, head, weights, dim);
    write_head_output(probed, erased, head, weights, dim);
    std::ofstream out = open_output(a.output);
    out << probed.str();

    // Largest absolute score change between baseline and probed outputs.
    double max_delta = 0.0;
    std::istringstream bs(base.str());
    std::istringstream ps(probed.str());
    std::string bl;
    std::string pl;
    while (std::getline(bs, bl) && std::getline(ps, pl)) {
      std::istringstream bt(bl);
      std::istringstream pt(pl);
      std::string label;
      bt >> label;
      pt >> label;
      double x = 0.0;
      double y = 0.0;
      while (bt >> x && pt >> y) max_delta = std::max(max_delta, std::abs(x - y));
    }
    const auto [begin, end] = erased_range(features.rows(), a.percent);
    std::cout << "erased " << begin << ' ' << end << "\nvariance " << fmt(a.variance) << "\nmax_delta "
              << fmt(max_delta) << "\nidentical " << (base.str() == probed.str() ? "yes" : "no") << "\n";
    return kOk;
  }
  if (a.kind == "receptive-field") {
    if (a.config.empty()) throw ConfigError("probe receptive-field needs --config");
    const ModelConfig cfg = ModelConfig::load(a.config);
    const ModelSpec spec = cfg.build();
    auto net = Network::bind(spec, init_weights(spec, a.seed));
    const ReceptiveFieldReport rf = probe_receptive_field(net, a.frames, a.size, a.seed, cfg.cache_padding);
    std::cout << "horizon " << rf.horizon << "\nexpected " << rf.expected << "\nframes " << rf.frames
              << "\nevaluations " << rf.evaluations << "\n";
    return kOk;
  }
  throw ConfigError("unknown probe kind '" + a.kind + "' (expected segments|erasure|receptive-field)");
}

int bench(const BenchArgs& a) {
  if (a.frames == 0 || a.size == 0 || a.repeat == 0) throw ConfigError("--frames, --size and --repeat must be positive");
  const ModelConfig cfg = ModelConfig::load(a.config);
  const ModelSpec spec = cfg.build();
  auto net = Network::bind(spec, init_weights(spec, a.seed));
  const Tensor frames = random_frames(a.frames, a.size, a.size, a.seed);
  using clock = std::chrono::steady_clock;

  std::vector<double> per_frame;  // seconds, first frame of each repeat excluded as warmup
  double best_frame = std::numeric_limits<double>::infinity();
  double best_clip = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < a.repeat; ++r) {
    StreamSession session(net, {cfg.cache_padding, false});
    for (std::size_t t = 0; t < a.frames; ++t) {
      const Tensor f = frames.slice_time(t, 1);
      const auto t0 = clock::now();
      session.push_frame(f);
      const double dt = std::chrono::duration<double>(clock::now() - t0).count();
      if (t > 0 || a.frames == 1) {
        per_frame.push_back(dt);
        best_frame = std::min(best_frame, dt);
      }
    }
    const auto t0 = clock::now();
    run_offline(*net, frames, {cfg.cache_padding, false});
    best_clip = std::min(best_clip, std::chrono::duration<double>(clock::now() - t0).count());
  }
  const double mean = std::accumulate(per_frame.begin(), per_frame.end(), 0.0) / static_cast<double>(per_frame.size());
  double var = 0.0;
  for (double v : per_frame) var += (v - mean) * (v - mean);
  const double cv = per_frame.size() > 1 ? std::sqrt(var / static_cast<double>(per_frame.size() - 1)) / mean : 0.0;

  std::cout << "# model " << spec.name() << " width " << cfg.width_text << " frames " << a.frames << " size " << a.size
            << " repeat " << a.repeat << " threads " << num_threads() << "\n"
            << "stream_frame_mean_ms " << fmt(mean * 1e3) << "\nstream_frame_min_ms " << fmt(best_frame * 1e3)
            << "\nstream_frame_cv " << fmt(cv) << "\noracle_clip_ms " << fmt(best_clip * 1e3)
            << "\nclip_over_stream " << fmt(best_clip / (static_cast<double>(a.frames) * mean)) << "\n";
  return kOk;
}

int make_weights(const MakeWeightsArgs& a) {
  const ModelConfig cfg = ModelConfig::load(a.config);
  const ModelSpec spec = cfg.build();
  WeightStore store = init_weights(spec, a.seed);
  const HeadConfig head = head_for(cfg, a.head);
  if (head.kind != HeadKind::None) init_head_weights(store, head, spec.feature_dim, a.seed);
  save_weights(a.output, store);
  std::cout << "entries " << store.size() << "\n";
  return kOk;
}

int make_frames(const MakeFramesArgs& a) {
  if (a.frames == 0 || a.size == 0) throw ConfigError("--frames and --size must be positive");
  save_frames(a.output, random_frames(a.frames, a.size, a.size, a.seed), a.unbounded);
  std::cout << "frames " << a.frames << "\n";
  return kOk;
}

}  // namespace d3d::cli
