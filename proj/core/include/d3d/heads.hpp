#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "d3d/nn_ops.hpp"
#include "d3d/tensor.hpp"
#include "d3d/weights.hpp"

namespace d3d {

enum class HeadKind { None, Fc, Lstm, Gru };
HeadKind parse_head_kind(std::string_view name);
std::string to_string(HeadKind k);

// How the fc head turns a window of features into one input vector.
enum class FcPooling { Flatten, Mean };
FcPooling parse_fc_pooling(std::string_view name);
std::string to_string(FcPooling p);

struct HeadConfig {
  HeadKind kind = HeadKind::None;
  std::size_t num_classes = 600;
  std::size_t hidden_dim = 1024;
  std::size_t layers = 2;
  std::size_t window = 16;
  FcPooling pooling = FcPooling::Flatten;
};

struct FcHead {
  std::size_t window = 16;
  FcPooling pooling = FcPooling::Flatten;
  LinearParams linear;  // in_dim = window * feature_dim when flattening
};

struct FcScores {
  Matrix windows;                       // one row per stride-1 window position
  std::vector<std::size_t> window_end;  // index of each window's newest frame
  std::vector<float> average;
};

// Scores every stride-1 window of `window` consecutive features (time-major
// flattening) and averages them. Throws InsufficientInputError when
// features.rows() < window.
FcScores fc_head_score(const Matrix& features, const FcHead& head);

enum class RecurrentKind { Lstm, Gru };

// Gate blocks are stacked row-wise: (i, f, g, o) for LSTM, (r, z, n) for GRU.
struct RecurrentLayer {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::vector<float> w_ih;  // [gates * hidden, input]
  std::vector<float> w_hh;  // [gates * hidden, hidden]
  std::vector<float> b_ih;  // [gates * hidden]
  std::vector<float> b_hh;  // [gates * hidden]
};

std::size_t gate_count(RecurrentKind k) noexcept;

/// Stacked LSTM/GRU followed by a linear classifier on the top hidden state.
/// Carries per-layer state across steps until reset(); single owner.
class RecurrentHead {
 public:
  RecurrentHead(RecurrentKind kind, std::vector<RecurrentLayer> layers, LinearParams output);

  // Advances every layer by one step; returns the top hidden state.
  std::span<const float> step(std::span<const float> feature);
  // step() followed by the output layer.
  std::vector<float> classify_step(std::span<const float> feature);
  void reset();

  RecurrentKind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return layers_.front().input_dim; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::span<const float> hidden(std::size_t layer) const { return hidden_.at(layer); }
  std::span<const float> cell(std::size_t layer) const { return cell_.at(layer); }

 private:
  RecurrentKind kind_;
  std::vector<RecurrentLayer> layers_;
  LinearParams output_;
  std::vector<std::vector<float>> hidden_;
  std::vector<std::vector<float>> cell_;
};

// Resets the head, then scores each step; row t depends only on features 0..t.
Matrix recurrent_classify(RecurrentHead& head, const Matrix& features);

struct ConvergenceCheck {
  bool converged = false;
  std::size_t steps = 0;
  double final_delta = 0.0;  // L2 distance between the last two score vectors
};
// Feeds the same feature repeatedly until consecutive scores move less than tol.
ConvergenceCheck constant_stream_convergence(RecurrentHead& head, std::span<const float> feature,
                                             std::size_t max_steps = 200, double tol = 1e-4);

void init_head_weights(WeightStore& store, const HeadConfig& cfg, std::size_t feature_dim, std::uint64_t seed);
FcHead load_fc_head(const WeightStore& store, const HeadConfig& cfg, std::size_t feature_dim);
RecurrentHead load_recurrent_head(const WeightStore& store, const HeadConfig& cfg, std::size_t feature_dim);

// Splits rows into `segments` contiguous parts (boundaries floor(i*T/segments))
// and averages each.
Matrix segment_means(const Matrix& scores, std::size_t segments = 10);

// Row range [begin, end) covering the middle `percent` of T rows.
std::pair<std::size_t, std::size_t> erased_range(std::size_t rows, double percent);

// Replaces the middle `percent` of rows with N(0, variance) noise.
Matrix erase_middle(const Matrix& features, double percent, double variance, std::uint64_t seed);

}  // namespace d3d
