// Copyright 2026 The spikeforge Authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "spikeforge/error.hpp"
#include "spikeforge/tensor.hpp"
#include "test_support.hpp"

using namespace spikeforge;
using spikeforge::testing::random_tensor;

namespace {

// Scalar-loop reference implementations.
Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.dim(1); ++k) s += a.at(i, k) * b.at(k, j);
      c.at(i, j) = s;
    }
  return c;
}

Tensor naive_conv(const Tensor& x, const Tensor& w, std::size_t stride, std::size_t pad) {
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t O = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t Ho = (H + 2 * pad - kh) / stride + 1, Wo = (W + 2 * pad - kw) / stride + 1;
  Tensor y({O, Ho, Wo});
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t a = 0; a < kh; ++a)
            for (std::size_t b = 0; b < kw; ++b) {
              const long r = static_cast<long>(i * stride + a) - static_cast<long>(pad);
              const long q = static_cast<long>(j * stride + b) - static_cast<long>(pad);
              if (r < 0 || q < 0 || r >= static_cast<long>(H) || q >= static_cast<long>(W)) continue;
              s += x.at(c, r, q) * w[((o * C + c) * kh + a) * kw + b];
            }
        y.at(o, i, j) = s;
      }
  return y;
}

void check_close_rel(const Tensor& got, const Tensor& want, double rel) {
  REQUIRE(got.shape() == want.shape());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(std::abs(got[i] - want[i]) <= rel * std::max(1.0, std::abs(want[i])));
}

}  // namespace

TEST_CASE("matmul hand cases") {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(matmul(a, Tensor::identity(2)) == a);
  CHECK(matmul(Tensor::identity(2), Tensor::matrix({{5}, {7}})) == Tensor::matrix({{5}, {7}}));
  CHECK(matmul(a, Tensor::matrix({{1}, {1}})) == Tensor::matrix({{3}, {7}}));
}

TEST_CASE("matmul rejects mismatched inner dims") {
  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 2})), DimensionError);
}

TEST_CASE("matmul with identity is exact on random input") {
  const Tensor a = random_tensor({5, 5}, 11, -1e3, 1e3);
  CHECK(matmul(a, Tensor::identity(5)) == a);
}

TEST_CASE("matvec agrees with matmul and skips zeros") {
  const Tensor w = random_tensor({4, 5}, 3);
  const Tensor b = random_tensor({4}, 4);
  Tensor x = random_tensor({5}, 5);
  x[1] = 0.0;
  const Tensor y = matvec(w, x.data(), &b);
  const Tensor ref = naive_matmul(w, x.reshaped({5, 1}));
  for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(ref[i] + b[i]).epsilon(1e-12));
}

TEST_CASE("conv2d hand cases") {
  SUBCASE("1x1 kernel scales") {
    const Tensor y = conv2d(Tensor({1, 3, 3}, 1.0), Tensor({1, 1, 1, 1}, 2.0), 1, 0);
    CHECK(y == Tensor({1, 3, 3}, 2.0));
  }
  SUBCASE("zero kernel") {
    const Tensor y = conv2d(random_tensor({2, 4, 4}, 9), Tensor({3, 2, 3, 3}, 0.0), 1, 1);
    CHECK(y == Tensor({3, 4, 4}, 0.0));
  }
  SUBCASE("2x2 sum") {
    const Tensor y = conv2d(Tensor({1, 2, 2}, {1, 2, 3, 4}), Tensor({1, 1, 2, 2}, 1.0), 1, 0);
    CHECK(y == Tensor({1, 1, 1}, {10.0}));
  }
  SUBCASE("1x1 ones kernel is the identity for one channel") {
    const Tensor x = random_tensor({1, 5, 5}, 21);
    CHECK(conv2d(x, Tensor({1, 1, 1, 1}, 1.0), 1, 0) == x);
  }
}

TEST_CASE("conv2d rejects kernels larger than the padded input") {
  CHECK_THROWS_AS(conv2d(Tensor({1, 2, 2}), Tensor({1, 1, 3, 3}), 1, 0), DimensionError);
  CHECK_THROWS_AS(conv2d(Tensor({2, 4, 4}), Tensor({1, 3, 3, 3}), 1, 0), DimensionError);
}

TEST_CASE("avgpool2d hand cases") {
  CHECK(avgpool2d(Tensor({1, 2, 2}, {1, 3, 5, 7}), 2, 2) == Tensor({1, 1, 1}, {4.0}));
  CHECK(avgpool2d(Tensor({2, 4, 4}, 0.0), 2, 2) == Tensor({2, 2, 2}, 0.0));
  CHECK(avgpool2d(Tensor({3, 4, 4}, 1.25), 2, 2) == Tensor({3, 2, 2}, 1.25));
}

TEST_CASE("elementwise hand cases") {
  CHECK(relu(Tensor::vector({-1, 2})) == Tensor::vector({0, 2}));
  CHECK(clamp(Tensor::vector({-0.5, 0.5, 1.5}), 0, 1) == Tensor::vector({0, 0.5, 1}));
  const Tensor a = random_tensor({5, 5}, 1);
  CHECK(add(a, Tensor({5, 5}, 0.0)) == a);
  CHECK(sub(a, a) == Tensor({5, 5}, 0.0));
  CHECK(scale(Tensor::vector({1, -2}), 3) == Tensor::vector({3, -6}));
  CHECK(add(Tensor::vector({1, 2}), 0.5) == Tensor::vector({1.5, 2.5}));
}

TEST_CASE("operations match scalar-loop oracles on random 5x5 instances") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor a = random_tensor({5, 5}, 100 + seed);
    const Tensor b = random_tensor({5, 5}, 200 + seed);
    check_close_rel(matmul(a, b), naive_matmul(a, b), 1e-12);

    const Tensor x = random_tensor({2, 5, 5}, 300 + seed);
    const Tensor w = random_tensor({3, 2, 3, 3}, 400 + seed);
    check_close_rel(conv2d(x, w, 1, 1), naive_conv(x, w, 1, 1), 1e-12);
    check_close_rel(conv2d(x, w, 2, 0), naive_conv(x, w, 2, 0), 1e-12);

    const Tensor p = avgpool2d(x.reshaped({2, 5, 5}), 2, 2);
    REQUIRE(p.shape() == Shape{2, 2, 2});
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
          const double m = (x.at(c, 2 * i, 2 * j) + x.at(c, 2 * i + 1, 2 * j) + x.at(c, 2 * i, 2 * j + 1) +
                            x.at(c, 2 * i + 1, 2 * j + 1)) / 4.0;
          CHECK(std::abs(p.at(c, i, j) - m) <= 1e-12);
        }

    const Tensor s = add(a, b);
    for (std::size_t i = 0; i < 25; ++i) {
      CHECK(s[i] == a[i] + b[i]);
      CHECK(relu(a)[i] == std::max(a[i], 0.0));
    }
  }
}

TEST_CASE("non-finite values raise NumericError") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(add(Tensor::vector({1.0}), Tensor::vector({inf})), NumericError);
  CHECK_THROWS_AS(scale(Tensor::vector({1e308}), 1e10), NumericError);
  CHECK_THROWS_AS(require_finite(Tensor::vector({std::nan("")}), "x"), NumericError);
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(add(Tensor({2}), Tensor({3})), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK(element_count({2, 3, 4}) == 24);
}
