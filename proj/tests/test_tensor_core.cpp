// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "support/gradcheck.hpp"
#include "vmatt/conv.hpp"
#include "vmatt/norm.hpp"
#include "vmatt/ops.hpp"
#include "vmatt/rng.hpp"
#include "vmatt/tensor.hpp"

using namespace vmatt;
using Catch::Approx;

namespace {

Ten<double> rand_ten(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return Ten<double>::rand_uniform(std::move(shape), rng, lo, hi);
}

// Reduce an op output to a scalar through a fixed random projection so every
// output coordinate influences the loss.
Ten<double> project(const Ten<double>& y, uint64_t seed) {
  Rng rng(seed);
  Ten<double> r = Ten<double>::rand_uniform(y.shape(), rng, -1.0, 1.0);
  return sum(mul(y, r));
}

}  // namespace

TEST_CASE("matmul computes the textbook product", "[tensor]") {
  auto a = Ten<float>::from({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = Ten<float>::from({3, 2}, {7, 8, 9, 10, 11, 12});
  auto c = matmul(a, b);
  REQUIRE(c.shape() == Shape{2, 2});
  CHECK(c.at({0, 0}) == 58.0f);
  CHECK(c.at({0, 1}) == 64.0f);
  CHECK(c.at({1, 0}) == 139.0f);
  CHECK(c.at({1, 1}) == 154.0f);
}

TEST_CASE("matmul rejects inner-dimension mismatch", "[tensor]") {
  auto a = Ten<float>::zeros({2, 3});
  auto b = Ten<float>::zeros({2, 2});
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
}

TEST_CASE("matmul gradients match finite differences", "[tensor][grad]") {
  Rng rng(101);
  auto a = rand_ten({3, 4}, rng);
  auto b = rand_ten({4, 2}, rng);
  auto res = gradcheck::run({&a, &b}, [&] { return project(matmul(a, b), 7); });
  INFO(res.worst_where);
  CHECK(res.max_err < 1e-4);
}

TEST_CASE("conv2d with an all-ones kernel sums each window", "[tensor]") {
  auto x = Ten<float>::full({1, 3, 3}, 1.0f);
  auto w = Ten<float>::full({1, 1, 2, 2}, 1.0f);
  auto y = conv2d(x, w);
  REQUIRE(y.shape() == Shape{1, 2, 2});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(y.at({0, i, j}) == 4.0f);
}

TEST_CASE("conv2d output geometry follows stride, padding and dilation", "[tensor]") {
  Rng rng(55);
  auto x = Ten<float>::rand_uniform({3, 8, 8}, rng, -1, 1);
  auto w = Ten<float>::rand_uniform({5, 3, 3, 3}, rng, -1, 1);
  CHECK(conv2d(x, w, 2, 1).shape() == Shape{5, 4, 4});
  CHECK(conv2d(x, w, 1, 1).shape() == Shape{5, 8, 8});
  CHECK(conv2d(x, w, 1, 2, 2).shape() == Shape{5, 8, 8});
  CHECK(conv2d(x, w, 1, 0).shape() == Shape{5, 6, 6});
}

TEST_CASE("conv2d gradients match finite differences", "[tensor][grad]") {
  Rng rng(303);
  auto x = rand_ten({2, 5, 5}, rng);
  auto w = rand_ten({3, 2, 3, 3}, rng);
  auto b = rand_ten({3}, rng);

  SECTION("stride 1, pad 1") {
    auto res = gradcheck::run({&x, &w, &b}, [&] { return project(conv2d(x, w, b, 1, 1), 11); });
    INFO(res.worst_where);
    CHECK(res.max_err < 1e-4);
  }
  SECTION("stride 2, no pad") {
    auto res = gradcheck::run({&x, &w, &b}, [&] { return project(conv2d(x, w, b, 2, 0), 12); });
    INFO(res.worst_where);
    CHECK(res.max_err < 1e-4);
  }
  SECTION("dilation 2, pad 2") {
    auto res = gradcheck::run({&x, &w, &b}, [&] { return project(conv2d(x, w, b, 1, 2, 2), 13); });
    INFO(res.worst_where);
    CHECK(res.max_err < 1e-4);
  }
}

TEST_CASE("softmax of a constant row is uniform and rows sum to one", "[tensor]") {
  auto x = Ten<float>::zeros({1, 3});
  auto y = softmax(x, 1);
  CHECK(y.at({0, 0}) == Approx(1.0f / 3).margin(1e-7));

  Rng rng(77);
  auto z = Ten<float>::rand_uniform({4, 6}, rng, -5, 5);
  auto s = softmax(z, 1);
  for (int i = 0; i < 4; ++i) {
    float row = 0;
    for (int j = 0; j < 6; ++j) {
      const float v = s.at({i, j});
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
      row += v;
    }
    CHECK(row == Approx(1.0f).margin(1e-5));
  }
}

TEST_CASE("softmax gradients match finite differences on both axes", "[tensor][grad]") {
  Rng rng(404);
  auto x = rand_ten({3, 4}, rng, -2, 2);
  for (int axis : {0, 1}) {
    auto res = gradcheck::run({&x}, [&] { return project(softmax(x, axis), 21 + axis); });
    INFO("axis " << axis << " worst at " << res.worst_where);
    CHECK(res.max_err < 1e-4);
  }
}

TEST_CASE("bilinear upsampling doubles a 2x2 checkerboard as hand-derived", "[tensor]") {
  auto x = Ten<float>::from({1, 2, 2}, {0, 1, 1, 0});
  auto y = bilinear_resize(x, 4, 4);
  // Half-pixel centres: 1-D weights per output row are {1.0, 0.75, 0.25, 0}
  // on the first input sample; the 2-D result is the separable product.
  const float expect[4][4] = {{0.0f, 0.25f, 0.75f, 1.0f},
                              {0.25f, 0.375f, 0.625f, 0.75f},
                              {0.75f, 0.625f, 0.375f, 0.25f},
                              {1.0f, 0.75f, 0.25f, 0.0f}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(y.at({0, i, j}) == Approx(expect[i][j]).margin(1e-6));
}

TEST_CASE("bilinear resize to the same size is the identity", "[tensor]") {
  Rng rng(31);
  auto x = Ten<float>::rand_uniform({3, 5, 7}, rng, -1, 1);
  auto y = bilinear_resize(x, 5, 7);
  CHECK(y.data() == x.data());
}

TEST_CASE("bilinear resize broadcast from one pixel and gradients", "[tensor][grad]") {
  auto one = Ten<float>::from({1, 1, 1}, {3.5f});
  auto up = bilinear_resize(one, 4, 4);
  for (int i = 0; i < 16; ++i) CHECK(up.data()[static_cast<size_t>(i)] == 3.5f);

  Rng rng(505);
  auto x = rand_ten({2, 3, 4}, rng);
  for (auto [oh, ow] : {std::pair{6, 8}, std::pair{2, 2}}) {
    auto res = gradcheck::run({&x}, [&, oh = oh, ow = ow] { return project(bilinear_resize(x, oh, ow), 31); });
    INFO(res.worst_where);
    CHECK(res.max_err < 1e-4);
  }
}

TEST_CASE("layer_norm standardises each slice before the affine map", "[tensor]") {
  Rng rng(87);
  auto x = Ten<float>::rand_uniform({5, 8}, rng, -3, 3);
  auto gamma = Ten<float>::full({8}, 1.0f);
  auto beta = Ten<float>::zeros({8});
  auto y = layer_norm(x, 1, gamma, beta);
  for (int i = 0; i < 5; ++i) {
    double mu = 0, var = 0;
    for (int j = 0; j < 8; ++j) mu += y.at({i, j});
    mu /= 8;
    for (int j = 0; j < 8; ++j) var += (y.at({i, j}) - mu) * (y.at({i, j}) - mu);
    var /= 8;
    CHECK(mu == Approx(0.0).margin(1e-5));
    CHECK(var == Approx(1.0).margin(1e-3));
  }
}

TEST_CASE("layer_norm gradients match finite differences", "[tensor][grad]") {
  Rng rng(606);
  auto x = rand_ten({3, 6}, rng);
  auto gamma = rand_ten({6}, rng, 0.5, 1.5);
  auto beta = rand_ten({6}, rng);
  auto res = gradcheck::run({&x, &gamma, &beta}, [&] { return project(layer_norm(x, 1, gamma, beta), 41); });
  INFO(res.worst_where);
  CHECK(res.max_err < 1e-3);
}

TEST_CASE("batch_norm training output has zero mean and unit variance per channel", "[tensor]") {
  Rng rng(92);
  auto x = Ten<float>::rand_uniform({3, 6, 6}, rng, -2, 5);
  auto gamma = Ten<float>::full({3}, 1.0f);
  auto beta = Ten<float>::zeros({3});
  auto y = batch_norm_train(x, gamma, beta, 1e-5f);
  for (int c = 0; c < 3; ++c) {
    double mu = 0, var = 0;
    for (int i = 0; i < 36; ++i) mu += y.data()[static_cast<size_t>(c * 36 + i)];
    mu /= 36;
    for (int i = 0; i < 36; ++i) {
      double d = y.data()[static_cast<size_t>(c * 36 + i)] - mu;
      var += d * d;
    }
    var /= 36;
    CHECK(mu == Approx(0.0).margin(1e-5));
    CHECK(var == Approx(1.0).margin(1e-2));
  }
}

TEST_CASE("batch_norm gradients match finite differences", "[tensor][grad]") {
  Rng rng(707);
  auto x = rand_ten({2, 4, 4}, rng);
  auto gamma = rand_ten({2}, rng, 0.5, 1.5);
  auto beta = rand_ten({2}, rng);
  SECTION("batch statistics") {
    auto res = gradcheck::run({&x, &gamma, &beta},
                              [&] { return project(batch_norm_train(x, gamma, beta, 1e-5), 51); });
    INFO(res.worst_where);
    CHECK(res.max_err < 1e-3);
  }
  SECTION("frozen statistics") {
    std::vector<double> mean{0.1, -0.2}, var{1.5, 0.7};
    auto res = gradcheck::run({&x, &gamma, &beta}, [&] {
      return project(batch_norm_eval(x, gamma, beta, mean, var, 1e-5), 52);
    });
    INFO(res.worst_where);
    CHECK(res.max_err < 1e-4);
  }
}

TEST_CASE("elementwise and activation gradients match finite differences", "[tensor][grad]") {
  Rng rng(808);
  auto a = rand_ten({3, 5}, rng);
  auto b = rand_ten({3, 5}, rng);

  auto check = [&](const char* name, std::function<Ten<double>()> f,
                   std::vector<Ten<double>*> ins, double tol = 1e-4) {
    auto res = gradcheck::run(std::move(ins), std::move(f));
    INFO(name << " worst at " << res.worst_where << " err " << res.max_err);
    CHECK(res.max_err < tol);
  };

  check("add", [&] { return project(add(a, b), 61); }, {&a, &b});
  check("sub", [&] { return project(sub(a, b), 62); }, {&a, &b});
  check("mul", [&] { return project(mul(a, b), 63); }, {&a, &b});
  check("mul_scalar", [&] { return project(mul_scalar(a, 2.5), 64); }, {&a});
  check("add_scalar", [&] { return project(add_scalar(a, -1.25), 65); }, {&a});
  check("rsub_scalar", [&] { return project(rsub_scalar(1.0, a), 66); }, {&a});
  check("sigmoid", [&] { return project(sigmoid(a), 67); }, {&a});
  check("gelu", [&] { return project(gelu(a), 68); }, {&a});

  // Keep inputs away from the relu/abs kinks and log/clamp boundaries.
  auto pos = rand_ten({3, 5}, rng, 0.5, 2.0);
  auto off = rand_ten({3, 5}, rng, 0.1, 0.9);
  check("relu(+)", [&] { return project(relu(pos), 69); }, {&pos});
  check("abs(+)", [&] { return project(vmatt::abs(pos), 70); }, {&pos});
  check("log", [&] { return project(vmatt::log(pos), 71); }, {&pos});
  check("clamp", [&] { return project(clamp(off, 0.0, 1.0), 72); }, {&off});
  check("mean", [&] { return mean(a); }, {&a});
  check("sum", [&] { return sum(a); }, {&a});
}

TEST_CASE("linear layer gradients match finite differences", "[tensor][grad]") {
  Rng rng(909);
  auto x = rand_ten({4, 3}, rng);
  auto w = rand_ten({3, 5}, rng);
  auto b = rand_ten({5}, rng);
  auto res = gradcheck::run({&x, &w, &b}, [&] { return project(linear(x, w, b), 81); });
  INFO(res.worst_where);
  CHECK(res.max_err < 1e-4);
}

TEST_CASE("narrow slices of a concat reproduce the original parts", "[tensor]") {
  Rng rng(13);
  for (int axis : {0, 1, 2}) {
    auto a = Ten<float>::rand_uniform({2, 3, 4}, rng, -1, 1);
    auto b = Ten<float>::rand_uniform({2, 3, 4}, rng, -1, 1);
    auto cat = concat<float>({a, b}, axis);
    const int n = a.dim(axis);
    CHECK(narrow(cat, axis, 0, n).data() == a.data());
    CHECK(narrow(cat, axis, n, n).data() == b.data());
  }
}

TEST_CASE("concat, narrow, transpose and reshape gradients match finite differences",
          "[tensor][grad]") {
  Rng rng(111);
  auto a = rand_ten({2, 3}, rng);
  auto b = rand_ten({2, 3}, rng);
  auto res = gradcheck::run({&a, &b}, [&] { return project(concat<double>({a, b}, 1), 91); });
  CHECK(res.max_err < 1e-4);

  auto c = rand_ten({3, 4}, rng);
  res = gradcheck::run({&c}, [&] { return project(narrow(c, 1, 1, 2), 92); });
  CHECK(res.max_err < 1e-4);
  res = gradcheck::run({&c}, [&] { return project(transpose2d(c), 93); });
  CHECK(res.max_err < 1e-4);
  res = gradcheck::run({&c}, [&] { return project(reshape(c, {2, 6}), 94); });
  CHECK(res.max_err < 1e-4);
}

TEST_CASE("pooling and subsampling behave as documented", "[tensor]") {
  auto x = Ten<float>::from({1, 2, 4}, {1, 2, 3, 4, 5, 6, 7, 8});
  auto p = avg_pool(x, 2);
  REQUIRE(p.shape() == Shape{1, 1, 2});
  CHECK(p.at({0, 0, 0}) == Approx(3.5f));
  CHECK(p.at({0, 0, 1}) == Approx(5.5f));
  CHECK_THROWS_AS(avg_pool(x, 3), DimensionError);

  auto s = subsample2(x);
  REQUIRE(s.shape() == Shape{1, 1, 2});
  CHECK(s.at({0, 0, 0}) == 1.0f);
  CHECK(s.at({0, 0, 1}) == 3.0f);
}

TEST_CASE("pooling gradients match finite differences", "[tensor][grad]") {
  Rng rng(222);
  auto x = rand_ten({2, 4, 4}, rng);
  auto res = gradcheck::run({&x}, [&] { return project(avg_pool(x, 2), 95); });
  CHECK(res.max_err < 1e-4);
  res = gradcheck::run({&x}, [&] { return project(subsample2(x), 96); });
  CHECK(res.max_err < 1e-4);
}

TEST_CASE("embed_fgbg gradients match finite differences", "[tensor][grad]") {
  Rng rng(333);
  auto v = rand_ten({6, 4}, rng);
  auto m = rand_ten({6}, rng, 0.0, 1.0);
  auto ef = rand_ten({4}, rng);
  auto eb = rand_ten({4}, rng);
  auto res = gradcheck::run({&v, &m, &ef, &eb},
                            [&] { return project(embed_fgbg(v, m, ef, eb), 97); });
  INFO(res.worst_where);
  CHECK(res.max_err < 1e-4);
}

TEST_CASE("gradients accumulate across backward calls until cleared", "[tensor]") {
  auto x = Ten<float>::from({2}, {1.0f, 2.0f});
  x.set_requires_grad(true);
  auto run = [&] { backward(sum(mul(x, x))); };
  run();
  CHECK(x.grad()[0] == Approx(2.0f));
  run();  // second sweep adds on top of the first
  CHECK(x.grad()[0] == Approx(4.0f));
  x.zero_grad();
  run();
  CHECK(x.grad()[0] == Approx(2.0f));
}

TEST_CASE("detach cuts the tape", "[tensor]") {
  auto x = Ten<float>::from({2}, {3.0f, 4.0f});
  x.set_requires_grad(true);
  auto y = mul_scalar(x, 2.0f);
  auto z = sum(mul(y.detach(), y.detach()));
  CHECK_FALSE(z.tracked());
  CHECK_THROWS_AS(backward(z), StateError);
}

TEST_CASE("no-grad mode builds no tape", "[tensor]") {
  auto x = Ten<float>::from({2}, {1.0f, 2.0f});
  x.set_requires_grad(true);
  NoGradGuard ng;
  auto y = mul(x, x);
  CHECK_FALSE(y.tracked());
}

TEST_CASE("non-finite results surface as numerics errors", "[tensor]") {
  auto neg = Ten<float>::from({1}, {-1.0f});
  CHECK_THROWS_AS(vmatt::log(neg), NumericsError);
  auto huge = Ten<float>::from({1}, {1e30f});
  CHECK_THROWS_AS(mul(huge, huge), NumericsError);
}

TEST_CASE("scalar utilities and accessors enforce their contracts", "[tensor]") {
  auto x = Ten<float>::from({2, 2}, {1, 2, 3, 4});
  CHECK_THROWS_AS(x.item(), ContractError);
  CHECK_THROWS_AS(x.at({2, 0}), DimensionError);
  CHECK_THROWS_AS(Ten<float>::from({3}, {1, 2}), DimensionError);
  CHECK(Ten<float>::scalar(5.0f).item() == 5.0f);
}
