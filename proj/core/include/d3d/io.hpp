#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "d3d/tensor.hpp"
#include "d3d/weights.hpp"

namespace d3d {

// Weight container ("D3DW"), all integers little-endian:
//   magic[4] version:u32 count:u32
//   count x { name_len:u32 name[name_len] dtype:u8 ndim:u8 dims:u32[ndim] payload:f32[prod(dims)] }
// dtype 0 is float32, the only one defined. Entries are written in name order.
inline constexpr std::uint32_t kWeightsVersion = 1;
inline constexpr std::uint32_t kFramesVersion = 1;

std::vector<std::uint8_t> write_weights(const WeightStore& store);
// Throws FormatError (with byte offset and, past the header, the entry name).
WeightStore read_weights(std::span<const std::uint8_t> bytes);

void save_weights(const std::filesystem::path& path, const WeightStore& store);
WeightStore load_weights(const std::filesystem::path& path);

// Frame stream ("D3DF"):
//   magic[4] version:u32 channels:u32(=3) height:u32 width:u32 count:u32
//   then frames as f32 planes [C,H,W]; count 0 means "until end of stream".
struct FrameStreamHeader {
  std::uint32_t channels = 3;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t count = 0;
};

// Per-channel (x - mean) / std applied while reading.
struct Normalization {
  std::array<float, 3> mean{0.0f, 0.0f, 0.0f};
  std::array<float, 3> stdev{1.0f, 1.0f, 1.0f};
};

class FrameWriter {
 public:
  FrameWriter(std::ostream& out, const FrameStreamHeader& header);
  // frame: [3, 1, H, W] matching the header.
  void write(const Tensor& frame);
  std::uint32_t written() const noexcept { return written_; }

 private:
  std::ostream& out_;
  FrameStreamHeader header_;
  std::uint32_t written_ = 0;
};

class FrameReader {
 public:
  explicit FrameReader(std::istream& in, Normalization norm = {});

  const FrameStreamHeader& header() const noexcept { return header_; }
  // Next normalized [3, 1, H, W] frame, or nullopt at the end of the stream.
  std::optional<Tensor> next();

 private:
  std::istream& in_;
  Normalization norm_;
  FrameStreamHeader header_;
  std::uint32_t read_ = 0;
  std::size_t offset_ = 0;
};

// Whole-file helpers: frames as one [3, T, H, W] volume.
void save_frames(const std::filesystem::path& path, const Tensor& frames, bool unbounded = false);
Tensor load_frames(const std::filesystem::path& path, const Normalization& norm = {});

// [3, 1, H, W] slice t of a [3, T, H, W] clip and the inverse.
Tensor frame_at(const Tensor& clip, std::size_t t);
Tensor stack_frames(std::span<const Tensor> frames);

}  // namespace d3d
