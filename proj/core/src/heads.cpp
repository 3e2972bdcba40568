#include "d3d/heads.hpp"

#include <cmath>
#include <random>

#include "d3d/errors.hpp"

namespace d3d {

namespace {

float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

// y = W x + b, W row-major [rows, cols].
void affine(std::span<const float> w, std::span<const float> b, std::span<const float> x, std::span<float> y) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < y.size(); ++r) {
    float acc = 0.0f;
    const float* row = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc + b[r];
  }
}

std::string head_prefix(HeadKind k) { return "head." + to_string(k); }

std::size_t fc_in_dim(const HeadConfig& cfg, std::size_t feature_dim) {
  return cfg.pooling == FcPooling::Flatten ? cfg.window * feature_dim : feature_dim;
}

void insert_linear(WeightStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                   std::uint64_t seed) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(in));
  store.insert(prefix + ".weight", {{static_cast<std::uint32_t>(out), static_cast<std::uint32_t>(in)},
                                    uniform_values(in * out, bound, key_seed(seed, prefix + ".weight"))});
  store.insert(prefix + ".bias",
               {{static_cast<std::uint32_t>(out)}, uniform_values(out, bound, key_seed(seed, prefix + ".bias"))});
}

const std::vector<float>& sized(const WeightStore& store, const std::string& key, std::size_t n) {
  const auto& a = store.at(key);
  if (a.values.size() != n) {
    throw WeightsError("weight '" + key + "' has " + std::to_string(a.values.size()) + " values, expected " +
                       std::to_string(n));
  }
  return a.values;
}

}  // namespace

HeadKind parse_head_kind(std::string_view name) {
  if (name == "none") return HeadKind::None;
  if (name == "fc") return HeadKind::Fc;
  if (name == "lstm") return HeadKind::Lstm;
  if (name == "gru") return HeadKind::Gru;
  throw ConfigError("unknown head kind '" + std::string(name) + "' (expected fc|lstm|gru|none)");
}

std::string to_string(HeadKind k) {
  switch (k) {
    case HeadKind::None: return "none";
    case HeadKind::Fc: return "fc";
    case HeadKind::Lstm: return "lstm";
    case HeadKind::Gru: return "gru";
  }
  return "?";
}

FcPooling parse_fc_pooling(std::string_view name) {
  if (name == "flatten") return FcPooling::Flatten;
  if (name == "mean") return FcPooling::Mean;
  throw ConfigError("unknown fc pooling '" + std::string(name) + "' (expected flatten|mean)");
}

std::string to_string(FcPooling p) { return p == FcPooling::Flatten ? "flatten" : "mean"; }

FcScores fc_head_score(const Matrix& features, const FcHead& head) {
  const std::size_t rows = features.rows();
  if (head.window == 0) throw ConfigError("fc head window must be positive");
  if (rows < head.window) {
    throw InsufficientInputError("fc head needs at least " + std::to_string(head.window) + " features, got " +
                                 std::to_string(rows));
  }
  const std::size_t dim = features.cols();
  FcScores out;
  out.windows = Matrix(0, head.linear.out_dim);
  std::vector<double> sum(head.linear.out_dim, 0.0);
  std::vector<float> input;
  for (std::size_t end = head.window - 1; end < rows; ++end) {
    const std::size_t begin = end + 1 - head.window;
    if (head.pooling == FcPooling::Flatten) {
      input.assign(features.values().begin() + static_cast<std::ptrdiff_t>(begin * dim),
                   features.values().begin() + static_cast<std::ptrdiff_t>((end + 1) * dim));
    } else {
      input.assign(dim, 0.0f);
      for (std::size_t r = begin; r <= end; ++r)
        for (std::size_t c = 0; c < dim; ++c) input[c] += features.at(r, c);
      for (float& v : input) v /= static_cast<float>(head.window);
    }
    const std::vector<float> scores = linear(input, head.linear);
    out.windows.append_row(scores);
    out.window_end.push_back(end);
    for (std::size_t j = 0; j < scores.size(); ++j) sum[j] += scores[j];
  }
  const double n = static_cast<double>(out.window_end.size());
  out.average.resize(sum.size());
  for (std::size_t j = 0; j < sum.size(); ++j) out.average[j] = static_cast<float>(sum[j] / n);
  return out;
}

std::size_t gate_count(RecurrentKind k) noexcept { return k == RecurrentKind::Lstm ? 4 : 3; }

RecurrentHead::RecurrentHead(RecurrentKind kind, std::vector<RecurrentLayer> layers, LinearParams output)
    : kind_(kind), layers_(std::move(layers)), output_(std::move(output)) {
  if (layers_.empty()) throw ConfigError("recurrent head needs at least one layer");
  const std::size_t g = gate_count(kind_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const std::size_t rows = g * L.hidden_dim;
    if (L.w_ih.size() != rows * L.input_dim || L.w_hh.size() != rows * L.hidden_dim || L.b_ih.size() != rows ||
        L.b_hh.size() != rows) {
      throw ShapeError("recurrent layer " + std::to_string(l) + ": parameter sizes do not match");
    }
    if (l > 0 && L.input_dim != layers_[l - 1].hidden_dim) {
      throw ShapeError("recurrent layer " + std::to_string(l) + ": input dim != previous hidden dim");
    }
  }
  output_.validate();
  if (output_.in_dim != layers_.back().hidden_dim) throw ShapeError("recurrent output layer: in_dim != hidden dim");
  reset();
}

void RecurrentHead::reset() {
  hidden_.clear();
  cell_.clear();
  for (const auto& L : layers_) {
    hidden_.emplace_back(L.hidden_dim, 0.0f);
    cell_.emplace_back(kind_ == RecurrentKind::Lstm ? L.hidden_dim : 0, 0.0f);
  }
}

std::span<const float> RecurrentHead::step(std::span<const float> feature) {
  if (feature.size() != input_dim()) {
    throw ShapeError("recurrent head: feature length " + std::to_string(feature.size()) + " != " +
                     std::to_string(input_dim()));
  }
  std::vector<float> x(feature.begin(), feature.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const RecurrentLayer& L = layers_[l];
    const std::size_t H = L.hidden_dim;
    const std::size_t rows = gate_count(kind_) * H;
    std::vector<float> gi(rows), gh(rows);
    affine(L.w_ih, L.b_ih, x, gi);
    affine(L.w_hh, L.b_hh, hidden_[l], gh);
    std::vector<float>& h = hidden_[l];
    if (kind_ == RecurrentKind::Lstm) {
      std::vector<float>& c = cell_[l];
      for (std::size_t j = 0; j < H; ++j) {
        const float i = sigmoid(gi[j] + gh[j]);
        const float f = sigmoid(gi[H + j] + gh[H + j]);
        const float g = std::tanh(gi[2 * H + j] + gh[2 * H + j]);
        const float o = sigmoid(gi[3 * H + j] + gh[3 * H + j]);
        c[j] = f * c[j] + i * g;
        h[j] = o * std::tanh(c[j]);
      }
    } else {
      for (std::size_t j = 0; j < H; ++j) {
        const float r = sigmoid(gi[j] + gh[j]);
        const float z = sigmoid(gi[H + j] + gh[H + j]);
        const float n = std::tanh(gi[2 * H + j] + r * gh[2 * H + j]);
        h[j] = (1.0f - z) * n + z * h[j];
      }
    }
    x = h;
  }
  return hidden_.back();
}

std::vector<float> RecurrentHead::classify_step(std::span<const float> feature) {
  return linear(step(feature), output_);
}

Matrix recurrent_classify(RecurrentHead& head, const Matrix& features) {
  head.reset();
  Matrix out;
  for (std::size_t t = 0; t < features.rows(); ++t) out.append_row(head.classify_step(features.row(t)));
  return out;
}

ConvergenceCheck constant_stream_convergence(RecurrentHead& head, std::span<const float> feature,
                                             std::size_t max_steps, double tol) {
  ConvergenceCheck check;
  std::vector<float> prev = head.classify_step(feature);
  for (std::size_t s = 1; s < max_steps; ++s) {
    std::vector<float> cur = head.classify_step(feature);
    double d2 = 0.0;
    for (std::size_t j = 0; j < cur.size(); ++j) d2 += (cur[j] - prev[j]) * static_cast<double>(cur[j] - prev[j]);
    check.final_delta = std::sqrt(d2);
    check.steps = s + 1;
    if (check.final_delta < tol) {
      check.converged = true;
      break;
    }
    prev = std::move(cur);
  }
  return check;
}

void init_head_weights(WeightStore& store, const HeadConfig& cfg, std::size_t feature_dim, std::uint64_t seed) {
  const std::string prefix = head_prefix(cfg.kind);
  switch (cfg.kind) {
    case HeadKind::None:
      return;
    case HeadKind::Fc:
      insert_linear(store, prefix + ".linear", fc_in_dim(cfg, feature_dim), cfg.num_classes, seed);
      return;
    case HeadKind::Lstm:
    case HeadKind::Gru: {
      const std::size_t g = gate_count(cfg.kind == HeadKind::Lstm ? RecurrentKind::Lstm : RecurrentKind::Gru);
      const std::size_t H = cfg.hidden_dim;
      const float bound = 1.0f / std::sqrt(static_cast<float>(H));
      const auto rows = static_cast<std::uint32_t>(g * H);
      for (std::size_t l = 0; l < cfg.layers; ++l) {
        const std::size_t in = l == 0 ? feature_dim : H;
        const std::string p = prefix + ".l" + std::to_string(l);
        store.insert(p + ".w_ih", {{rows, static_cast<std::uint32_t>(in)},
                                   uniform_values(rows * in, bound, key_seed(seed, p + ".w_ih"))});
        store.insert(p + ".w_hh", {{rows, static_cast<std::uint32_t>(H)},
                                   uniform_values(rows * H, bound, key_seed(seed, p + ".w_hh"))});
        store.insert(p + ".b_ih", {{rows}, uniform_values(rows, bound, key_seed(seed, p + ".b_ih"))});
        store.insert(p + ".b_hh", {{rows}, uniform_values(rows, bound, key_seed(seed, p + ".b_hh"))});
      }
      insert_linear(store, prefix + ".out", H, cfg.num_classes, seed);
      return;
    }
  }
}

FcHead load_fc_head(const WeightStore& store, const HeadConfig& cfg, std::size_t feature_dim) {
  FcHead head;
  head.window = cfg.window;
  head.pooling = cfg.pooling;
  head.linear = load_linear(store, head_prefix(HeadKind::Fc) + ".linear", fc_in_dim(cfg, feature_dim), cfg.num_classes);
  return head;
}

RecurrentHead load_recurrent_head(const WeightStore& store, const HeadConfig& cfg, std::size_t feature_dim) {
  if (cfg.kind != HeadKind::Lstm && cfg.kind != HeadKind::Gru) throw ConfigError("not a recurrent head kind");
  const RecurrentKind kind = cfg.kind == HeadKind::Lstm ? RecurrentKind::Lstm : RecurrentKind::Gru;
  const std::string prefix = head_prefix(cfg.kind);
  const std::size_t H = cfg.hidden_dim;
  const std::size_t rows = gate_count(kind) * H;
  std::vector<RecurrentLayer> layers;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::size_t in = l == 0 ? feature_dim : H;
    const std::string p = prefix + ".l" + std::to_string(l);
    layers.push_back({in, H, sized(store, p + ".w_ih", rows * in), sized(store, p + ".w_hh", rows * H),
                      sized(store, p + ".b_ih", rows), sized(store, p + ".b_hh", rows)});
  }
  return RecurrentHead(kind, std::move(layers), load_linear(store, prefix + ".out", H, cfg.num_classes));
}

Matrix segment_means(const Matrix& scores, std::size_t segments) {
  const std::size_t rows = scores.rows();
  if (segments == 0 || rows < segments) {
    throw InsufficientInputError("cannot split " + std::to_string(rows) + " rows into " + std::to_string(segments) +
                                 " segments");
  }
  Matrix out(segments, scores.cols());
  for (std::size_t s = 0; s < segments; ++s) {
    const std::size_t begin = s * rows / segments;
    const std::size_t end = (s + 1) * rows / segments;
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      double sum = 0.0;
      for (std::size_t r = begin; r < end; ++r) sum += scores.at(r, c);
      out.at(s, c) = static_cast<float>(sum / static_cast<double>(end - begin));
    }
  }
  return out;
}

std::pair<std::size_t, std::size_t> erased_range(std::size_t rows, double percent) {
  if (!(percent >= 0.0 && percent <= 100.0)) throw ConfigError("erasure percentage must be within [0, 100]");
  const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(rows) * percent / 100.0));
  const std::size_t begin = (rows - n) / 2;
  return {begin, begin + n};
}

Matrix erase_middle(const Matrix& features, double percent, double variance, std::uint64_t seed) {
  if (variance < 0.0) throw ConfigError("noise variance must be non-negative");
  const auto [begin, end] = erased_range(features.rows(), percent);
  Matrix out = features;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, variance > 0.0 ? std::sqrt(variance) : 1.0);
  for (std::size_t r = begin; r < end; ++r)
    for (float& v : out.row(r)) v = variance > 0.0 ? static_cast<float>(noise(rng)) : 0.0f;
  return out;
}

}  // namespace d3d
