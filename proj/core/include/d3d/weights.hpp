#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "d3d/model.hpp"
#include "d3d/nn_ops.hpp"

namespace d3d {

// One named parameter array with its logical dimensions.
struct NamedArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

/// Name -> parameter array map. Keys are namespaced
/// `backbone.<stage>.<block>.<layer>.<param>` and `head.<kind>.<layer>.<param>`.
class WeightStore {
 public:
  using Map = std::map<std::string, NamedArray>;

  void insert(const std::string& name, NamedArray array);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  // Throws WeightsError naming the key when absent.
  const NamedArray& at(const std::string& name) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const Map& entries() const noexcept { return entries_; }

  friend bool operator==(const WeightStore&, const WeightStore&) = default;

 private:
  Map entries_;
};

// Key prefix of a backbone layer, e.g. "backbone.conv2.0.conv1".
std::string backbone_key(const std::string& stage_block, const std::string& layer);

// Fan-in scaled uniform weights in [-sqrt(6/fan_in), sqrt(6/fan_in)], seeded per
// key so one layer's values do not depend on the others. Batch norm layers get
// gamma=1, beta=0, mean=0, var=1.
WeightStore init_weights(const ModelSpec& spec, std::uint64_t seed);

// Deterministic helpers shared with the heads module.
std::uint64_t key_seed(std::uint64_t seed, const std::string& key);
std::vector<float> uniform_values(std::size_t n, float bound, std::uint64_t seed);
void insert_batchnorm(WeightStore& store, const std::string& prefix, std::size_t channels);

ConvParams load_conv(const WeightStore& store, const std::string& prefix, const ConvGeometry& g);
BatchNormParams load_batchnorm(const WeightStore& store, const std::string& prefix, std::size_t channels);
LinearParams load_linear(const WeightStore& store, const std::string& prefix, std::size_t in_dim,
                         std::size_t out_dim);

}  // namespace d3d
