// Acceptance suite: one PASS/FAIL line per criterion, details indented below.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "d3d/complexity.hpp"
#include "d3d/heads.hpp"
#include "d3d/io.hpp"
#include "d3d/oracle.hpp"
#include "d3d/verify.hpp"
#include "d3d/weights.hpp"

using namespace d3d;
namespace fs = std::filesystem;

namespace {

class Criterion {
 public:
  explicit Criterion(std::string title) : title_(std::move(title)) {}

  void check(bool ok, const std::string& detail) {
    pass_ = pass_ && ok;
    details_.push_back(std::string(ok ? "  ok   " : "  FAIL ") + detail);
  }
  void note(const std::string& detail) { details_.push_back("       " + detail); }
  bool pass() const { return pass_; }

  void print(int index, double seconds) const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1fs", seconds);
    std::cout << (pass_ ? "PASS" : "FAIL") << ' ' << index << ' ' << title_ << " (" << buf << ")\n";
    for (const auto& d : details_) std::cout << d << "\n";
    std::cout.flush();
  }

 private:
  std::string title_;
  bool pass_ = true;
  std::vector<std::string> details_;
};

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const int kDepths[] = {18, 50, 101};
const SkipKind kSkips[] = {SkipKind::None, SkipKind::Summation, SkipKind::Concatenation};

std::shared_ptr<const Network> small_net(int depth, SkipKind skip, std::uint64_t seed) {
  const ModelSpec spec = build_dissected(depth, skip, 0.125);
  return Network::bind(spec, init_weights(spec, seed));
}

std::string label(int depth, SkipKind skip) { return "D-ResNet-" + std::to_string(depth) + "/" + to_string(skip); }

bool within(double value, double target, double tol) { return std::abs(value / target - 1.0) <= tol; }

std::string pct(double value, double target) {
  return (value >= target ? "+" : "") + g6(100.0 * (value / target - 1.0)) + "%";
}

void equivalence(Criterion& c) {
  for (int depth : kDepths) {
    for (SkipKind skip : kSkips) {
      for (std::uint64_t seed : {1, 2, 3}) {
        const auto r = check_equivalence(small_net(depth, skip, seed), random_frames(32, 32, 32, seed));
        c.check(r.pass && r.frames.size() == 32, label(depth, skip) + " seed " + std::to_string(seed) +
                                                     " max_rel " + g6(r.max_rel) + " max_abs " + g6(r.max_abs));
      }
    }
  }
}

void causality(Criterion& c) {
  std::uint64_t seed = 11;
  for (int depth : kDepths) {
    for (SkipKind skip : kSkips) {
      const auto r = check_causality(small_net(depth, skip, seed), random_frames(12, 32, 32, seed), 20, seed);
      c.check(r.pass() && r.trials == 20, label(depth, skip) + " trials " + std::to_string(r.trials) + " leaks " +
                                              std::to_string(r.future_leaks) + " unresponsive " +
                                              std::to_string(r.unresponsive));
      ++seed;
    }
  }
}

void receptive_field(Criterion& c) {
  const std::size_t blocks[] = {8, 16, 33};
  for (std::size_t i = 0; i < 3; ++i) {
    for (SkipKind skip : {SkipKind::Summation, SkipKind::Concatenation}) {
      const std::uint64_t seed = 20 + i;
      const auto net = small_net(kDepths[i], skip, seed);
      const std::size_t b = blocks[i];
      c.check(net->spec().blocks.size() == b, label(kDepths[i], skip) + " has " + std::to_string(b) + " blocks");
      const std::size_t frames = b + 5;
      const std::size_t t = frames - 1;
      const Tensor clip = random_frames(frames, 32, 32, seed);
      const Matrix base = stream_features(net, clip);
      const Matrix outside = stream_features(net, perturb_frame(clip, t - (3 + b), seed));
      const Matrix inside = stream_features(net, perturb_frame(clip, t - (2 + b), seed));
      const bool zero = bit_identical(base.row(t), outside.row(t));
      const bool nonzero = !bit_identical(base.row(t), inside.row(t));
      c.check(zero && nonzero, label(kDepths[i], skip) + " t=" + std::to_string(t) + ": t-(3+B) " +
                                   (zero ? "no effect" : "LEAKS") + ", t-(2+B) " + (nonzero ? "changes" : "NO EFFECT"));
    }
  }
}

void table2(Criterion& c) {
  const auto concat = build_dissected(18, SkipKind::Concatenation);
  const auto none = build_dissected(18, SkipKind::None);
  const auto sum = build_dissected(18, SkipKind::Summation);
  const double p_concat = static_cast<double>(count_params(concat).total_params);
  const double p_none = static_cast<double>(count_params(none).total_params);
  const double p_sum = static_cast<double>(count_params(sum).total_params);
  c.check(within(p_concat, 15.74e6, 0.08), "params concatenation " + g6(p_concat) + " vs 15.74M " + pct(p_concat, 15.74e6));
  c.check(within(p_none, 11.02e6, 0.08), "params none " + g6(p_none) + " vs 11.02M " + pct(p_none, 11.02e6));
  c.check(within(p_sum, 11.02e6, 0.08), "params summation " + g6(p_sum) + " vs 11.02M " + pct(p_sum, 11.02e6));
  const double m_concat = static_cast<double>(count_flops_streaming(concat, 112, 112).total_macs);
  const double m_none = static_cast<double>(count_flops_streaming(none, 112, 112).total_macs);
  c.check(within(m_concat, 602e6, 0.15), "streaming MACs concatenation " + g6(m_concat) + " vs 602M " + pct(m_concat, 602e6));
  c.check(within(m_none, 438e6, 0.15), "streaming MACs none " + g6(m_none) + " vs 438M " + pct(m_none, 438e6));
  const double ratio = m_concat / m_none;
  c.check(ratio >= 1.32 && ratio <= 1.43, "concat/none MAC ratio " + g6(ratio) + " in [1.32, 1.43]");
}

void table3(Criterion& c) {
  const double params[] = {15.74e6, 33.12e6, 62.12e6};
  const double macs[] = {602e6, 1337e6, 2760e6};
  const double baseline[] = {5556e6, 6780e6, 10610e6};
  double reductions[3] = {};
  for (std::size_t i = 0; i < 3; ++i) {
    const int depth = kDepths[i];
    const auto spec = build_dissected(depth, SkipKind::Concatenation);
    const auto base = build_conventional(depth);
    const std::string name = "D-ResNet-" + std::to_string(depth);
    const double p = static_cast<double>(count_params(spec).total_params);
    const double m = static_cast<double>(count_flops_streaming(spec, 112, 112).total_macs);
    const double b = static_cast<double>(count_flops_offline(base, 16, 112, 112).total_macs);
    c.check(within(p, params[i], 0.08), name + " params " + g6(p) + " vs " + g6(params[i]) + " " + pct(p, params[i]));
    c.check(within(m, macs[i], 0.15), name + " streaming MACs " + g6(m) + " vs " + g6(macs[i]) + " " + pct(m, macs[i]));
    c.check(within(b, baseline[i], 0.20), "3D-ResNet-" + std::to_string(depth) + " T=16 MACs " + g6(b) + " vs " +
                                              g6(baseline[i]) + " " + pct(b, baseline[i]));
    const auto cmp = compare_online(spec, base, 16, 112, 112).comparison;
    reductions[i] = cmp ? cmp->reduction_fraction : -1.0;
    c.check(reductions[i] >= 0.70 && reductions[i] <= 0.92, name + " reduction " + g6(reductions[i]) + " in [0.70, 0.92]");
  }
  c.check(reductions[0] > reductions[1] && reductions[1] > reductions[2], "reductions ordered 18 > 50 > 101");
}

void mac_equality(Criterion& c) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 6; ++i) {
    const int depth = kDepths[rng() % 3];
    const SkipKind skip = kSkips[rng() % 3];
    const double width = (rng() % 2) ? 0.0625 : 0.125;
    const std::size_t frames = 1 + rng() % 5;
    const std::size_t h = 16 + rng() % 25;
    const std::size_t w = 16 + rng() % 25;
    const ModelSpec spec = build_dissected(depth, skip, width);
    const auto net = Network::bind(spec, init_weights(spec, rng()));
    const auto run = run_offline_instrumented(*net, random_frames(frames, h, w, rng()));
    const std::uint64_t analytic = count_flops_offline(spec, frames, h, w).total_macs;
    const std::uint64_t executed = run.mac_count.value_or(0);
    c.check(analytic == executed, label(depth, skip) + " width " + g6(width) + " T=" + std::to_string(frames) + " " +
                                      std::to_string(h) + "x" + std::to_string(w) + ": analytic " +
                                      std::to_string(analytic) + " executed " + std::to_string(executed));
  }
}

void constant_stream(Criterion& c) {
  for (int depth : {18, 50}) {
    for (SkipKind skip : kSkips) {
      const auto net = small_net(depth, skip, 30);
      const Tensor frame = random_frames(1, 32, 32, 31);
      std::vector<Tensor> frames(12, frame);
      const Matrix f = stream_features(net, stack_frames(frames));
      bool same = true;
      for (std::size_t t = 1; t < f.rows(); ++t) same = same && bit_identical(f.row(0), f.row(t));
      c.check(same, label(depth, skip) + " 12 constant frames bit-identical");
    }
  }
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  return Matrix(rows, cols, uniform_values(rows * cols, 1.0f, seed));
}

void heads(Criterion& c) {
  const std::size_t dim = 24;
  for (HeadKind kind : {HeadKind::Lstm, HeadKind::Gru}) {
    HeadConfig cfg;
    cfg.kind = kind;
    cfg.num_classes = 7;
    cfg.hidden_dim = 16;
    WeightStore store;
    init_head_weights(store, cfg, dim, 40);
    RecurrentHead head = load_recurrent_head(store, cfg, dim);
    const Matrix feats = random_matrix(10, dim, 41);
    const Matrix scores = recurrent_classify(head, feats);
    bool invariant = true;
    for (std::size_t t = 0; t + 1 < feats.rows(); ++t) {
      Matrix altered = feats;
      const Matrix noise = random_matrix(feats.rows(), dim, 100 + t);
      for (std::size_t r = t + 1; r < feats.rows(); ++r) {
        for (std::size_t k = 0; k < dim; ++k) altered.at(r, k) = noise.at(r, k);
      }
      const Matrix s = recurrent_classify(head, altered);
      for (std::size_t r = 0; r <= t; ++r) invariant = invariant && bit_identical(scores.row(r), s.row(r));
    }
    c.check(invariant, to_string(kind) + " scores at t unchanged by features after t");

    WeightStore zeroed;
    for (const auto& [name, array] : store.entries()) {
      zeroed.insert(name, {array.dims, std::vector<float>(array.values.size(), 0.0f)});
    }
    RecurrentHead z = load_recurrent_head(zeroed, cfg, dim);
    bool all_zero = true;
    for (std::size_t t = 0; t < feats.rows(); ++t) {
      z.step(feats.row(t));
      for (std::size_t l = 0; l < z.num_layers(); ++l) {
        for (float v : z.hidden(l)) all_zero = all_zero && v == 0.0f;
        if (kind == HeadKind::Lstm) {
          for (float v : z.cell(l)) all_zero = all_zero && v == 0.0f;
        }
      }
    }
    c.check(all_zero, "zero-parameter " + to_string(kind) + " keeps all states exactly zero");
  }

  HeadConfig fc;
  fc.kind = HeadKind::Fc;
  fc.num_classes = 7;
  WeightStore store;
  init_head_weights(store, fc, dim, 42);
  const FcScores s = fc_head_score(random_matrix(17, dim, 43), load_fc_head(store, fc, dim));
  double worst = 0.0;
  for (std::size_t k = 0; k < s.average.size(); ++k) {
    const double mean = (static_cast<double>(s.windows.at(0, k)) + s.windows.at(1, k)) / 2.0;
    worst = std::max(worst, std::abs(mean - s.average[k]));
  }
  c.check(s.windows.rows() == 2 && worst <= 1e-6,
          "fc T=17: " + std::to_string(s.windows.rows()) + " windows, |avg - mean| " + g6(worst));
}

void probes(Criterion& c) {
  const Matrix feats = random_matrix(40, 16, 50);
  const Matrix same = erase_middle(feats, 0.0, 0.005, 51);
  c.check(bit_identical(same.values(), feats.values()), "erasure p=0 leaves features bit-identical");
  HeadConfig cfg;
  cfg.kind = HeadKind::Gru;
  cfg.num_classes = 5;
  cfg.hidden_dim = 8;
  WeightStore store;
  init_head_weights(store, cfg, 16, 52);
  RecurrentHead head = load_recurrent_head(store, cfg, 16);
  const Matrix a = recurrent_classify(head, feats);
  const Matrix b = recurrent_classify(head, same);
  c.check(bit_identical(a.values(), b.values()), "erasure p=0 scores bit-identical to baseline");
  const Matrix half = erase_middle(feats, 50.0, 0.005, 51);
  const auto [begin, end] = erased_range(40, 50.0);
  c.check(begin == 10 && end == 30 && !bit_identical(half.row(15), feats.row(15)) &&
              bit_identical(half.row(0), feats.row(0)),
          "erasure p=50 replaces rows [10, 30) only");

  const Matrix scores = random_matrix(100, 9, 53);
  const Matrix seg = segment_means(scores, 10);
  double worst = 0.0;
  for (std::size_t k = 0; k < scores.cols(); ++k) {
    double global = 0.0;
    for (std::size_t r = 0; r < scores.rows(); ++r) global += scores.at(r, k);
    global /= 100.0;
    double nested = 0.0;
    for (std::size_t s = 0; s < 10; ++s) nested += seg.at(s, k);
    worst = std::max(worst, std::abs(nested / 10.0 - global));
  }
  c.check(seg.rows() == 10 && worst <= 1e-6, "segment means of T=100: |mean - global| " + g6(worst));

  const auto rf = probe_receptive_field(small_net(18, SkipKind::Concatenation, 54), 0, 32, 54);
  c.check(rf.horizon == 11 && rf.pass(), "receptive-field probe D-ResNet-18 horizon " + std::to_string(rf.horizon) +
                                             " (" + std::to_string(rf.evaluations) + " evaluations)");
}

void formats(Criterion& c) {
  const ModelSpec spec = build_dissected(50, SkipKind::Concatenation, 0.125);
  WeightStore store = init_weights(spec, 60);
  HeadConfig head;
  head.kind = HeadKind::Lstm;
  head.hidden_dim = 32;
  init_head_weights(store, head, spec.feature_dim, 60);
  const auto bytes = write_weights(store);
  const WeightStore back = read_weights(bytes);
  bool exact = back.size() == store.size();
  for (const auto& [name, array] : store.entries()) {
    exact = exact && back.contains(name) && back.at(name).dims == array.dims &&
            bit_identical(back.at(name).values, array.values);
  }
  c.check(exact && write_weights(back) == bytes,
          "weight container " + std::to_string(store.size()) + " entries, " + std::to_string(bytes.size()) + " bytes");
  const auto empty = write_weights(WeightStore{});
  c.check(empty.size() == 12 && read_weights(empty).size() == 0, "0-entry container (12 bytes)");

  const fs::path path = fs::temp_directory_path() / "d3d_acceptance_frames.bin";
  const Tensor clip = random_frames(7, 20, 24, 61);
  save_frames(path, clip, false);
  const bool counted = bit_identical(load_frames(path), clip);
  save_frames(path, clip, true);
  std::ifstream in(path, std::ios::binary);
  FrameReader reader(in);
  std::vector<Tensor> frames;
  while (auto f = reader.next()) frames.push_back(*f);
  const bool unbounded = reader.header().count == 0 && frames.size() == 7 && bit_identical(stack_frames(frames), clip);
  in.close();
  fs::remove(path);
  c.check(counted, "frame stream with count 7");
  c.check(unbounded, "frame stream with count 0 (read to end)");
}

struct Capture {
  int code = -1;
  std::string out;
};

Capture capture(const std::string& cmd) {
  Capture r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void determinism(Criterion& c) {
  const fs::path cfg = fs::temp_directory_path() / "d3d_acceptance_model.cfg";
  for (const char* skip : {"concatenation", "summation"}) {
    std::ofstream(cfg) << "variant = D-ResNet-50\nwidth_multiplier = 1/8\nskip_kind = " << skip << "\n";
    const std::string args = std::string(" ") + D3D_CLI_PATH + " verify --config " + cfg.string() +
                             " --seed 2 --frames 16 --size 32 2>/dev/null";
    const Capture one = capture("D3D_THREADS=1" + args);
    const Capture four = capture("D3D_THREADS=4" + args);
    c.check(one.code == 0 && four.code == 0 && one.out == four.out && !one.out.empty(),
            std::string("verify D-ResNet-50/") + skip + ": exit " + std::to_string(one.code) + "/" +
                std::to_string(four.code) + ", reports " + (one.out == four.out ? "identical" : "DIFFER"));
  }
  std::ofstream(cfg) << "variant = D-ResNet-18\nwidth_multiplier = 1/8\n";
  const std::string args = std::string(" ") + D3D_CLI_PATH + " verify --config " + cfg.string() +
                           " --frames 8 --corrupt-cache --skip-probes 2>/dev/null";
  const Capture one = capture("D3D_THREADS=1" + args);
  const Capture four = capture("D3D_THREADS=4" + args);
  c.check(one.code == 1 && four.code == 1 && one.out == four.out,
          "corrupted-cache verify fails identically: exit " + std::to_string(one.code) + "/" + std::to_string(four.code));
  fs::remove(cfg);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria = {
      {"streaming/offline equivalence", equivalence},
      {"causality", causality},
      {"receptive-field bound", receptive_field},
      {"complexity: D-ResNet-18 skip variants", table2},
      {"complexity: depth comparison and online reduction", table3},
      {"analytic vs executed MACs", mac_equality},
      {"constant-stream time invariance", constant_stream},
      {"head causality and mechanics", heads},
      {"probe mechanics", probes},
      {"format round-trips", formats},
      {"determinism under parallelism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Criterion c(criteria[i].first);
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.check(false, std::string("exception: ") + e.what());
    }
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    c.print(static_cast<int>(i + 1), took.count());
    failed += c.pass() ? 0 : 1;
  }
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " of 11 criteria FAIL") << "\n";
  return failed == 0 ? 0 : 1;
}
