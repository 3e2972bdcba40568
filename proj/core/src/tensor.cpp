#include "d3d/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "d3d/errors.hpp"

namespace d3d {

namespace {

void require_nonzero(const Shape4& s) {
  if (s.channels == 0 || s.time == 0 || s.height == 0 || s.width == 0) {
    throw ShapeError("tensor dimensions must be >= 1, got " + to_string(s));
  }
}

void require_same(const Shape4& a, const Shape4& b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
  }
}

}  // namespace

std::string to_string(const Shape4& s) {
  return "[" + std::to_string(s.channels) + "," + std::to_string(s.time) + "," +
         std::to_string(s.height) + "," + std::to_string(s.width) + "]";
}

Tensor::Tensor() : data_(1, 0.0f) {}

Tensor::Tensor(const Shape4& shape, float fill) : shape_(shape) {
  require_nonzero(shape_);
  data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(const Shape4& shape, std::vector<float> values) : shape_(shape), data_(std::move(values)) {
  require_nonzero(shape_);
  if (data_.size() != shape_.numel()) {
    throw ShapeError("tensor " + to_string(shape_) + " needs " + std::to_string(shape_.numel()) +
                     " values, got " + std::to_string(data_.size()));
  }
}

Tensor Tensor::slice_time(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin + count > shape_.time) {
    throw ShapeError("slice_time [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + to_string(shape_));
  }
  Tensor out({shape_.channels, count, shape_.height, shape_.width});
  const std::size_t span = count * shape_.plane();
  for (std::size_t c = 0; c < shape_.channels; ++c) {
    const float* src = data_.data() + offset(c, begin, 0, 0);
    std::copy(src, src + span, out.data_.data() + c * span);
  }
  return out;
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

Matrix::Matrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) + " needs " +
                     std::to_string(rows * cols) + " values, got " + std::to_string(data_.size()));
  }
}

void Matrix::append_row(std::span<const float> r) {
  if (rows_ == 0 && cols_ == 0) cols_ = r.size();
  if (r.size() != cols_) {
    throw ShapeError("matrix row length " + std::to_string(r.size()) + " != " + std::to_string(cols_));
  }
  data_.insert(data_.end(), r.begin(), r.end());
  ++rows_;
}

Tensor concat_time(const Tensor& past, const Tensor& present) {
  const Shape4& a = past.shape();
  const Shape4& b = present.shape();
  if (a.channels != b.channels || a.height != b.height || a.width != b.width) {
    throw ShapeError("concat_time: non-time dimensions differ " + to_string(a) + " vs " + to_string(b));
  }
  Tensor out({a.channels, a.time + b.time, a.height, a.width});
  const std::size_t na = a.time * a.plane();
  const std::size_t nb = b.time * b.plane();
  auto dst = out.values().begin();
  for (std::size_t c = 0; c < a.channels; ++c) {
    auto pa = past.values().subspan(c * na, na);
    auto pb = present.values().subspan(c * nb, nb);
    dst = std::copy(pa.begin(), pa.end(), dst);
    dst = std::copy(pb.begin(), pb.end(), dst);
  }
  return out;
}

Tensor add_elementwise(const Tensor& a, const Tensor& b) {
  require_same(a.shape(), b.shape(), "add_elementwise");
  Tensor out(a.shape());
  auto x = a.values();
  auto y = b.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = a;
  for (float& v : out.values()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor pad_time_replicate_front(const Tensor& a, std::size_t n) {
  if (n == 0) return a;
  const Shape4& s = a.shape();
  Tensor out({s.channels, s.time + n, s.height, s.width});
  const std::size_t plane = s.plane();
  for (std::size_t c = 0; c < s.channels; ++c) {
    const float* first = a.values().data() + a.offset(c, 0, 0, 0);
    float* dst = out.values().data() + out.offset(c, 0, 0, 0);
    for (std::size_t k = 0; k < n; ++k) dst = std::copy(first, first + plane, dst);
    std::copy(first, first + s.time * plane, dst);
  }
  return out;
}

bool near_equal(std::span<const float> a, std::span<const float> b, double rel_tol, double abs_tol) {
  if (a.size() != b.size()) {
    throw ShapeError("near_equal: length mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    if (!(std::abs(x - y) <= abs_tol + rel_tol * std::max(std::abs(x), std::abs(y)))) return false;
  }
  return true;
}

bool near_equal(const Tensor& a, const Tensor& b, double rel_tol, double abs_tol) {
  require_same(a.shape(), b.shape(), "near_equal");
  return near_equal(a.values(), b.values(), rel_tol, abs_tol);
}

bool bit_identical(std::span<const float> a, std::span<const float> b) noexcept {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

bool bit_identical(const Tensor& a, const Tensor& b) noexcept {
  return a.shape() == b.shape() && bit_identical(a.values(), b.values());
}

Deviation max_deviation(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("max_deviation: length mismatch");
  Deviation d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    const double diff = std::abs(x - y);
    const double scale = std::max(std::abs(x), std::abs(y));
    d.max_abs = std::max(d.max_abs, diff);
    if (scale > 0.0) d.max_rel = std::max(d.max_rel, diff / scale);
  }
  return d;
}

}  // namespace d3d
