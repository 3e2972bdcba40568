#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace d3d::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kVerifyFailed = 1;
inline constexpr int kUsage = 2;
inline constexpr int kData = 3;

struct DescribeArgs {
  std::string config;
};

struct CountArgs {
  std::string config;
  std::string mode = "streaming";  // params | streaming | offline
  std::size_t frames = 16;
  std::optional<std::size_t> size;
  bool baseline = false;
  bool table = false;
};

struct RunArgs {
  std::string config;
  std::string weights;
  std::string input;
  std::string head;  // empty: from config
  std::string output;
};

struct VerifyArgs {
  std::string config;
  std::uint64_t seed = 1;
  std::size_t frames = 32;
  std::size_t size = 32;
  std::size_t causality_trials = 4;
  bool corrupt_cache = false;
  bool skip_probes = false;
};

struct ProbeArgs {
  std::string kind;
  std::string config;
  std::string weights;
  std::string input;
  std::string features;
  std::string head;
  std::string output;
  double percent = 50.0;
  double variance = 0.005;
  std::size_t segments = 10;
  std::uint64_t seed = 1;
  std::size_t frames = 0;
  std::size_t size = 32;
};

struct BenchArgs {
  std::string config;
  std::size_t frames = 16;
  std::size_t size = 32;
  std::size_t repeat = 3;
  std::uint64_t seed = 1;
};

struct MakeWeightsArgs {
  std::string config;
  std::string head;
  std::uint64_t seed = 1;
  std::string output;
};

struct MakeFramesArgs {
  std::size_t frames = 16;
  std::size_t size = 32;
  std::uint64_t seed = 1;
  bool unbounded = false;
  std::string output;
};

// Each returns an exit code; library errors propagate as exceptions.
int describe(const DescribeArgs& a);
int count(const CountArgs& a);
int run(const RunArgs& a);
int verify(const VerifyArgs& a);
int probe(const ProbeArgs& a);
int bench(const BenchArgs& a);
int make_weights(const MakeWeightsArgs& a);
int make_frames(const MakeFramesArgs& a);

}  // namespace d3d::cli
