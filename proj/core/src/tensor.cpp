// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spikeforge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <utility>

#include "spikeforge/error.hpp"

namespace spikeforge {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {
  for (auto d : shape_)
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape_));
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_)
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape_));
  if (element_count(shape_) != data_.size())
    throw DimensionError("shape " + to_string(shape_) + " does not match " + std::to_string(data_.size()) +
                         " values");
}

Tensor Tensor::vector(std::vector<double> values) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
  return t;
}

double& Tensor::at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
double Tensor::at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
double& Tensor::at(std::size_t c, std::size_t h, std::size_t w) {
  return data_[(c * shape_[1] + h) * shape_[2] + w];
}
double Tensor::at(std::size_t c, std::size_t h, std::size_t w) const {
  return data_[(c * shape_[1] + h) * shape_[2] + w];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size())
    throw DimensionError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  return Tensor(std::move(shape), data_);
}

double Tensor::max() const {
  if (data_.empty()) throw DimensionError("max of empty tensor");
  return *std::max_element(data_.begin(), data_.end());
}

double Tensor::min() const {
  if (data_.empty()) throw DimensionError("min of empty tensor");
  return *std::min_element(data_.begin(), data_.end());
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(const Tensor& t, std::string_view what) {
  if (!all_finite(t.data())) throw NumericError("non-finite value in " + std::string(what));
}

namespace {

Tensor checked(Tensor t, std::string_view op) {
  require_finite(t, op);
  return t;
}

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
}

template <typename F>
Tensor map(const Tensor& a, std::string_view op, F f) {
  Tensor out = a;
  for (auto& v : out.data()) v = f(v);
  return checked(std::move(out), op);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul expects rank-2 operands");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw DimensionError("matmul: inner dimensions differ " + to_string(a.shape()) + " x " + to_string(b.shape()));
  Tensor c({m, n});
  auto cd = c.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ad[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) cd[i * n + j] += aip * bd[p * n + j];
    }
  }
  return checked(std::move(c), "matmul");
}

Tensor matvec(const Tensor& w, std::span<const double> x, const Tensor* bias) {
  if (w.rank() != 2) throw DimensionError("matvec expects a rank-2 weight");
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  if (x.size() != cols)
    throw DimensionError("matvec: weight " + to_string(w.shape()) + " applied to " + std::to_string(x.size()) +
                         " inputs");
  if (bias && bias->size() != rows) throw DimensionError("matvec: bias length mismatch");

  std::vector<std::size_t> nz;
  nz.reserve(cols);
  for (std::size_t j = 0; j < cols; ++j)
    if (x[j] != 0.0) nz.push_back(j);

  Tensor y({rows});
  auto wd = w.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = wd.data() + i * cols;
    double acc = 0.0;
    for (auto j : nz) acc += row[j] * x[j];
    y[i] = bias ? acc + (*bias)[i] : acc;
  }
  return checked(std::move(y), "matvec");
}

Tensor conv2d(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t pad) {
  if (x.rank() != 3 || w.rank() != 4) throw DimensionError("conv2d expects x [C,H,W] and w [Co,Ci,kh,kw]");
  if (stride == 0) throw DimensionError("conv2d: stride must be positive");
  const std::size_t ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const std::size_t co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != ci)
    throw DimensionError("conv2d: kernel expects " + std::to_string(w.dim(1)) + " channels, input has " +
                         std::to_string(ci));
  const std::size_t ph = h + 2 * pad, pw = wd + 2 * pad;
  if (ph < kh || pw < kw || (ph - kh) % stride != 0 || (pw - kw) % stride != 0)
    throw DimensionError("conv2d: output size is not a positive integer for input " + to_string(x.shape()) +
                         ", kernel " + to_string(w.shape()) + ", stride " + std::to_string(stride) + ", pad " +
                         std::to_string(pad));
  const std::size_t oh = (ph - kh) / stride + 1, ow = (pw - kw) / stride + 1;

  Tensor out({co, oh, ow});
  for (std::size_t o = 0; o < co; ++o) {
    for (std::size_t c = 0; c < ci; ++c) {
      for (std::size_t i = 0; i < kh; ++i) {
        for (std::size_t j = 0; j < kw; ++j) {
          const double k = w.data()[((o * ci + c) * kh + i) * kw + j];
          if (k == 0.0) continue;
          for (std::size_t y = 0; y < oh; ++y) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * stride + i) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t xo = 0; xo < ow; ++xo) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(xo * stride + j) - static_cast<std::ptrdiff_t>(pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
              out.at(o, y, xo) += k * x.at(c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
      }
    }
  }
  return checked(std::move(out), "conv2d");
}

Tensor avgpool2d(const Tensor& x, std::size_t k, std::size_t stride) {
  if (x.rank() != 3) throw DimensionError("avgpool2d expects [C,H,W]");
  if (k == 0 || stride == 0) throw DimensionError("avgpool2d: kernel and stride must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (k > h || k > w)
    throw DimensionError("avgpool2d: window " + std::to_string(k) + " exceeds input " + to_string(x.shape()));
  const std::size_t oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
  const double inv = 1.0 / static_cast<double>(k * k);
  Tensor out({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xo = 0; xo < ow; ++xo) {
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) acc += x.at(ch, y * stride + i, xo * stride + j);
        out.at(ch, y, xo) = acc * inv;
      }
  return checked(std::move(out), "avgpool2d");
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return checked(std::move(out), "add");
}

Tensor add(const Tensor& a, double s) {
  return map(a, "add", [s](double v) { return v + s; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return checked(std::move(out), "sub");
}

Tensor scale(const Tensor& a, double s) {
  return map(a, "scale", [s](double v) { return v * s; });
}

Tensor relu(const Tensor& a) {
  return map(a, "relu", [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  return map(a, "clamp", [lo, hi](double v) { return std::clamp(v, lo, hi); });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace spikeforge
