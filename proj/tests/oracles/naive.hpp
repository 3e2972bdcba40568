#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "d3d/blocks.hpp"
#include "d3d/heads.hpp"
#include "d3d/model.hpp"
#include "d3d/nn_ops.hpp"
#include "d3d/tensor.hpp"
#include "d3d/weights.hpp"

// Slow, obviously-correct reference implementations used only by tests.
// Everything accumulates in double and indexes padding explicitly.
namespace oracle {

using d3d::Matrix;
using d3d::Tensor;

Tensor conv3d(const Tensor& x, const d3d::ConvParams& p);
Tensor maxpool3d(const Tensor& x, const d3d::PoolGeometry& g);
Tensor batchnorm(const Tensor& x, const d3d::BatchNormParams& p);
Tensor relu(const Tensor& x);
Matrix spatial_mean(const Tensor& x);
std::vector<float> linear(std::span<const float> v, const d3d::LinearParams& p);

// Per-layer recurrent state in double precision.
struct RecurrentState {
  std::vector<std::vector<double>> h;
  std::vector<std::vector<double>> c;
};
RecurrentState zero_state(const std::vector<d3d::RecurrentLayer>& layers);
void lstm_step(const d3d::RecurrentLayer& l, std::span<const double> x, std::vector<double>& h, std::vector<double>& c);
void gru_step(const d3d::RecurrentLayer& l, std::span<const double> x, std::vector<double>& h);

// Causal temporal convolution: output slice t reads input slices
// t-(kt-1) .. t; slices before 0 are slice 0 (replicate) or zeros.
Tensor causal_conv3d(const Tensor& x, const d3d::ConvParams& p, d3d::CachePadding before_start);

// Whole dissected block over T slices, straight from the weight store.
Tensor block_forward(const d3d::BlockSpec& b, const d3d::WeightStore& w, const Tensor& x, d3d::CachePadding padding);

// Per-frame features of a dissected network, straight from the weight store.
Matrix network_features(const d3d::ModelSpec& spec, const d3d::WeightStore& w, const Tensor& frames,
                        d3d::CachePadding padding);

// Random (non-identity) batch norm statistics for every BN layer in a store.
void randomize_batchnorm(d3d::WeightStore& w, std::uint64_t seed);

}  // namespace oracle
