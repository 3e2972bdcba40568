#include "d3d/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <set>
#include <string>

#include "d3d/errors.hpp"

namespace d3d {

namespace {

constexpr char kWeightsMagic[4] = {'D', '3', 'D', 'W'};
constexpr char kFramesMagic[4] = {'D', '3', 'D', 'F'};
constexpr std::uint8_t kDtypeF32 = 0;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  v = to_le(v);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + 4);
}

void put_f32s(std::vector<std::uint8_t>& out, std::span<const float> values) {
  for (float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void need(std::size_t n, const std::string& what) const {
    if (remaining() < n) {
      throw FormatError("truncated " + what + ": need " + std::to_string(n) + " bytes, " +
                            std::to_string(remaining()) + " left",
                        pos_);
    }
  }
  std::uint8_t u8(const std::string& what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const std::string& what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return to_le(v);
  }
  std::string str(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void f32s(std::span<float> out, const std::string& what) {
    need(out.size() * 4, what);
    for (float& f : out) f = std::bit_cast<float>(u32(what));
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), 4);
}

// Reads exactly n bytes; returns the number actually read.
std::size_t read_some(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

}  // namespace

std::vector<std::uint8_t> write_weights(const WeightStore& store) {
  std::vector<std::uint8_t> out(kWeightsMagic, kWeightsMagic + 4);
  put_u32(out, kWeightsVersion);
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, array] : store.entries()) {
    if (array.dims.size() > 255) throw FormatError("entry '" + name + "' has more than 255 dims", out.size());
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(kDtypeF32);
    out.push_back(static_cast<std::uint8_t>(array.dims.size()));
    for (auto d : array.dims) put_u32(out, d);
    put_f32s(out, array.values);
  }
  return out;
}

WeightStore read_weights(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::string magic = r.str(4, "header magic");
  if (std::memcmp(magic.data(), kWeightsMagic, 4) != 0) throw FormatError("bad magic, expected D3DW", 0);
  const std::uint32_t version = r.u32("header version");
  if (version != kWeightsVersion) throw FormatError("unsupported weights version " + std::to_string(version), 4);
  const std::uint32_t count = r.u32("header entry count");

  WeightStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t entry_start = r.offset();
    const std::string label = "entry " + std::to_string(i);
    const std::uint32_t name_len = r.u32(label + " name length");
    const std::string name = r.str(name_len, label + " name");
    const std::string where = "entry '" + name + "'";
    const std::uint8_t dtype = r.u8(where + " dtype");
    if (dtype != kDtypeF32) {
      throw FormatError(where + ": unknown dtype code " + std::to_string(dtype), r.offset() - 1);
    }
    const std::uint8_t ndim = r.u8(where + " ndim");
    NamedArray array;
    std::uint64_t product = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      array.dims.push_back(r.u32(where + " dims"));
      product *= array.dims.back();
    }
    if (product * 4 > r.remaining()) {
      throw FormatError("truncated " + where + " payload: need " + std::to_string(product * 4) + " bytes, " +
                            std::to_string(r.remaining()) + " left",
                        r.offset());
    }
    array.values.resize(static_cast<std::size_t>(product));
    r.f32s(array.values, where + " payload");
    if (store.contains(name)) throw FormatError("duplicate " + where, entry_start);
    store.insert(name, std::move(array));
  }
  if (r.remaining() != 0) throw FormatError(std::to_string(r.remaining()) + " trailing bytes", r.offset());
  return store;
}

void save_weights(const std::filesystem::path& path, const WeightStore& store) {
  const auto bytes = write_weights(store);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

WeightStore load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open weights '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_weights(bytes);
}

FrameWriter::FrameWriter(std::ostream& out, const FrameStreamHeader& header) : out_(out), header_(header) {
  if (header_.channels != 3) throw FormatError("frame streams carry 3 channels", 8);
  if (header_.height == 0 || header_.width == 0) throw FormatError("frame size must be positive", 12);
  out_.write(kFramesMagic, 4);
  write_u32(out_, kFramesVersion);
  write_u32(out_, header_.channels);
  write_u32(out_, header_.height);
  write_u32(out_, header_.width);
  write_u32(out_, header_.count);
}

void FrameWriter::write(const Tensor& frame) {
  const Shape4 expect{header_.channels, 1, header_.height, header_.width};
  if (frame.shape() != expect) {
    throw ShapeError("frame " + to_string(frame.shape()) + " does not match stream " + to_string(expect));
  }
  if (header_.count != 0 && written_ >= header_.count) {
    throw FormatError("stream declares " + std::to_string(header_.count) + " frames", 0);
  }
  for (float f : frame.values()) write_u32(out_, std::bit_cast<std::uint32_t>(f));
  if (!out_) throw InputError("failed writing frame " + std::to_string(written_));
  ++written_;
}

FrameReader::FrameReader(std::istream& in, Normalization norm) : in_(in), norm_(norm) {
  char head[24];
  const std::size_t got = read_some(in_, head, sizeof head);
  if (got != sizeof head) throw FormatError("truncated frame stream header", got);
  if (std::memcmp(head, kFramesMagic, 4) != 0) throw FormatError("bad magic, expected D3DF", 0);
  auto field = [&](std::size_t off) {
    std::uint32_t v;
    std::memcpy(&v, head + off, 4);
    return to_le(v);
  };
  const std::uint32_t version = field(4);
  if (version != kFramesVersion) throw FormatError("unsupported frame stream version " + std::to_string(version), 4);
  header_ = {field(8), field(12), field(16), field(20)};
  if (header_.channels != 3) {
    throw FormatError("frame stream has " + std::to_string(header_.channels) + " channels, expected 3", 8);
  }
  if (header_.height == 0 || header_.width == 0) throw FormatError("frame size must be positive", 12);
  for (float s : norm_.stdev) {
    if (!(s > 0.0f)) throw ConfigError("normalization std must be positive");
  }
  offset_ = sizeof head;
}

std::optional<Tensor> FrameReader::next() {
  if (header_.count != 0 && read_ >= header_.count) return std::nullopt;
  const std::size_t plane = std::size_t{header_.height} * header_.width;
  const std::size_t n = header_.channels * plane;
  std::vector<std::uint32_t> raw(n);
  const std::size_t got = read_some(in_, reinterpret_cast<char*>(raw.data()), n * 4);
  if (got == 0 && header_.count == 0) return std::nullopt;
  if (got != n * 4) {
    throw TruncationError("frame " + std::to_string(read_) + " truncated: " + std::to_string(got) + " of " +
                              std::to_string(n * 4) + " bytes",
                          offset_ + got);
  }
  std::vector<float> values(n);
  for (std::size_t c = 0; c < header_.channels; ++c)
    for (std::size_t i = 0; i < plane; ++i) {
      const float v = std::bit_cast<float>(to_le(raw[c * plane + i]));
      values[c * plane + i] = (v - norm_.mean[c]) / norm_.stdev[c];
    }
  offset_ += got;
  ++read_;
  return Tensor({header_.channels, 1, header_.height, header_.width}, std::move(values));
}

Tensor frame_at(const Tensor& clip, std::size_t t) { return clip.slice_time(t, 1); }

Tensor stack_frames(std::span<const Tensor> frames) {
  if (frames.empty()) throw InsufficientInputError("no frames");
  const Shape4 s = frames.front().shape();
  Tensor out({s.channels, frames.size(), s.height, s.width});
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].shape() != s) throw ShapeError("frame " + std::to_string(t) + " changes shape");
    for (std::size_t c = 0; c < s.channels; ++c) {
      const float* src = frames[t].values().data() + frames[t].offset(c, 0, 0, 0);
      std::copy(src, src + s.plane(), out.values().data() + out.offset(c, t, 0, 0));
    }
  }
  return out;
}

void save_frames(const std::filesystem::path& path, const Tensor& frames, bool unbounded) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  const Shape4& s = frames.shape();
  FrameWriter writer(out, {static_cast<std::uint32_t>(s.channels), static_cast<std::uint32_t>(s.height),
                           static_cast<std::uint32_t>(s.width), unbounded ? 0u : static_cast<std::uint32_t>(s.time)});
  for (std::size_t t = 0; t < s.time; ++t) writer.write(frame_at(frames, t));
}

Tensor load_frames(const std::filesystem::path& path, const Normalization& norm) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open frames '" + path.string() + "'");
  FrameReader reader(in, norm);
  std::vector<Tensor> frames;
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  if (frames.empty()) throw InsufficientInputError("frame stream '" + path.string() + "' holds no frames");
  return stack_frames(frames);
}

}  // namespace d3d
