#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace d3d {

// Dimensions of a feature volume: [channels, time, height, width].
struct Shape4 {
  std::size_t channels = 1;
  std::size_t time = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t numel() const noexcept { return channels * time * height * width; }
  std::size_t plane() const noexcept { return height * width; }

  friend bool operator==(const Shape4&, const Shape4&) = default;
};

std::string to_string(const Shape4& s);

/// Dense 4-D float volume, row-major with width fastest, then height, time,
/// channels. All dimensions are at least 1.
class Tensor {
 public:
  Tensor();
  explicit Tensor(const Shape4& shape, float fill = 0.0f);
  Tensor(const Shape4& shape, std::vector<float> values);

  const Shape4& shape() const noexcept { return shape_; }
  std::size_t channels() const noexcept { return shape_.channels; }
  std::size_t time() const noexcept { return shape_.time; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t numel() const noexcept { return data_.size(); }

  std::span<const float> values() const noexcept { return data_; }
  std::span<float> values() noexcept { return data_; }

  std::size_t offset(std::size_t c, std::size_t t, std::size_t h, std::size_t w) const noexcept {
    return ((c * shape_.time + t) * shape_.height + h) * shape_.width + w;
  }
  float at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) const noexcept {
    return data_[offset(c, t, h, w)];
  }
  float& at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) noexcept {
    return data_[offset(c, t, h, w)];
  }

  // Copy of time slices [begin, begin + count).
  Tensor slice_time(std::size_t begin, std::size_t count) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape4 shape_;
  std::vector<float> data_;
};

// Row-major [rows, cols] float matrix; rows are time steps in feature tables.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  float at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  float& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  std::span<const float> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> values() const noexcept { return data_; }

  void append_row(std::span<const float> r);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

Tensor concat_time(const Tensor& past, const Tensor& present);
Tensor add_elementwise(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor pad_time_replicate_front(const Tensor& a, std::size_t n);

// |x - y| <= abs_tol + rel_tol * max(|x|, |y|) for every element.
bool near_equal(const Tensor& a, const Tensor& b, double rel_tol, double abs_tol);
bool near_equal(std::span<const float> a, std::span<const float> b, double rel_tol, double abs_tol);

// Bitwise equality of the float payloads (distinguishes -0 from +0).
bool bit_identical(std::span<const float> a, std::span<const float> b) noexcept;
bool bit_identical(const Tensor& a, const Tensor& b) noexcept;

struct Deviation {
  double max_abs = 0.0;
  // |x - y| / max(|x|, |y|), zero where both are zero.
  double max_rel = 0.0;
};
Deviation max_deviation(std::span<const float> a, std::span<const float> b);

}  // namespace d3d
