// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spikeforge {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

// Dense row-major array of doubles. Every public operation in this header
// rejects non-finite results with NumericError.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;
  double& at(std::size_t c, std::size_t h, std::size_t w);
  double at(std::size_t c, std::size_t h, std::size_t w) const;

  Tensor reshaped(Shape shape) const;
  double max() const;
  double min() const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Throws NumericError naming `what` if any entry is NaN or infinite.
void require_finite(const Tensor& t, std::string_view what);
bool all_finite(std::span<const double> values);

Tensor matmul(const Tensor& a, const Tensor& b);

/// y = W x (+ bias). W is [out x in]; zero entries of x are skipped, which
/// makes binary spike inputs cheap.
Tensor matvec(const Tensor& w, std::span<const double> x, const Tensor* bias = nullptr);

/// Direct cross-correlation of x [C_in x H x W] with w [C_out x C_in x kh x kw],
/// zero padding on all sides.
Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t pad);

/// Mean over k x k windows of x [C x H x W].
Tensor avgpool2d(const Tensor& x, std::size_t k, std::size_t stride);

Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double s);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);  // max-with-0
Tensor clamp(const Tensor& a, double lo, double hi);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace spikeforge
