#include "d3d/weights.hpp"

#include <cmath>
#include <random>

#include "d3d/errors.hpp"

namespace d3d {

namespace {

std::string dims_str(const std::vector<std::uint32_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

const NamedArray& expect(const WeightStore& store, const std::string& key, std::size_t count) {
  const NamedArray& a = store.at(key);
  if (a.values.size() != count) {
    throw WeightsError("weight '" + key + "' has " + std::to_string(a.values.size()) + " values " +
                       dims_str(a.dims) + ", expected " + std::to_string(count));
  }
  return a;
}

void insert_conv(WeightStore& store, const std::string& prefix, const ConvGeometry& g, std::uint64_t seed) {
  const std::size_t fan_in = g.in_channels * g.kernel.volume();
  const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
  const std::string key = prefix + ".weight";
  store.insert(key, {{static_cast<std::uint32_t>(g.out_channels), static_cast<std::uint32_t>(g.in_channels),
                      static_cast<std::uint32_t>(g.kernel.t), static_cast<std::uint32_t>(g.kernel.h),
                      static_cast<std::uint32_t>(g.kernel.w)},
                     uniform_values(g.weight_count(), bound, key_seed(seed, key))});
}

}  // namespace

void WeightStore::insert(const std::string& name, NamedArray array) {
  std::size_t product = 1;
  for (auto d : array.dims) product *= d;
  if (product != array.values.size()) {
    throw WeightsError("weight '" + name + "': dims " + dims_str(array.dims) + " do not match " +
                       std::to_string(array.values.size()) + " values");
  }
  entries_[name] = std::move(array);
}

const NamedArray& WeightStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw WeightsError("missing weight key '" + name + "'");
  return it->second;
}

std::string backbone_key(const std::string& stage_block, const std::string& layer) {
  return "backbone." + stage_block + "." + layer;
}

std::uint64_t key_seed(std::uint64_t seed, const std::string& key) {
  // FNV-1a over the key, mixed with the user seed.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h ^ (seed * 0x9E3779B97F4A7C15ull);
}

std::vector<float> uniform_values(std::size_t n, float bound, std::uint64_t seed) {
  // Raw engine output is specified by the standard; distributions are not.
  std::mt19937_64 rng(seed);
  std::vector<float> out(n);
  for (auto& v : out) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    v = static_cast<float>((2.0 * u - 1.0) * bound);
  }
  return out;
}

void insert_batchnorm(WeightStore& store, const std::string& prefix, std::size_t channels) {
  const auto n = static_cast<std::uint32_t>(channels);
  store.insert(prefix + ".gamma", {{n}, std::vector<float>(channels, 1.0f)});
  store.insert(prefix + ".beta", {{n}, std::vector<float>(channels, 0.0f)});
  store.insert(prefix + ".mean", {{n}, std::vector<float>(channels, 0.0f)});
  store.insert(prefix + ".var", {{n}, std::vector<float>(channels, 1.0f)});
}

WeightStore init_weights(const ModelSpec& spec, std::uint64_t seed) {
  WeightStore store;
  insert_conv(store, backbone_key("conv1.0", "conv"), spec.stem, seed);
  insert_batchnorm(store, backbone_key("conv1.0", "bn"), spec.stem.out_channels);
  for (const auto& b : spec.blocks) {
    for (std::size_t i = 0; i < b.convs.size(); ++i) {
      const auto& c = b.convs[i];
      insert_conv(store, backbone_key(b.id, c.name), c.geometry, seed);
      insert_batchnorm(store, backbone_key(b.id, "bn" + std::to_string(i + 1)), c.geometry.out_channels);
    }
    if (b.downsample) {
      insert_conv(store, backbone_key(b.id, "downsample"), *b.downsample, seed);
      insert_batchnorm(store, backbone_key(b.id, "downsample_bn"), b.downsample->out_channels);
    }
  }
  if (spec.conv_last) {
    insert_conv(store, backbone_key("conv_last.0", "conv"), *spec.conv_last, seed);
    insert_batchnorm(store, backbone_key("conv_last.0", "bn"), spec.conv_last->out_channels);
  }
  return store;
}

ConvParams load_conv(const WeightStore& store, const std::string& prefix, const ConvGeometry& g) {
  ConvParams p;
  p.geometry = g;
  p.weights = expect(store, prefix + ".weight", g.weight_count()).values;
  if (store.contains(prefix + ".bias")) p.bias = expect(store, prefix + ".bias", g.out_channels).values;
  return p;
}

BatchNormParams load_batchnorm(const WeightStore& store, const std::string& prefix, std::size_t channels) {
  BatchNormParams p;
  p.gamma = expect(store, prefix + ".gamma", channels).values;
  p.beta = expect(store, prefix + ".beta", channels).values;
  p.running_mean = expect(store, prefix + ".mean", channels).values;
  p.running_var = expect(store, prefix + ".var", channels).values;
  p.validate();
  return p;
}

LinearParams load_linear(const WeightStore& store, const std::string& prefix, std::size_t in_dim,
                         std::size_t out_dim) {
  LinearParams p;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  p.weights = expect(store, prefix + ".weight", in_dim * out_dim).values;
  p.bias = expect(store, prefix + ".bias", out_dim).values;
  return p;
}

}  // namespace d3d
