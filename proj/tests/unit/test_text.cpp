// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "msmt/text.hpp"
#include "support.hpp"

using namespace msmt;
using msmt::testing::max_gradient_error;
using msmt::testing::random_tensor;
using msmt::testing::values;

TEST_CASE("vocabulary") {
  Vocabulary v({"a", "red", "circle"});
  CHECK(v.size() == 3);
  CHECK(v.id("red") == 1);
  CHECK(v.add("red") == 1);
  CHECK(v.add("blue") == 3);
  CHECK(v.encode("a  red circle") == std::vector<std::size_t>{0, 1, 2});
  CHECK_THROWS_AS(v.encode("a green circle"), std::out_of_range);
  const std::vector<std::size_t> ids{2, 0};
  CHECK(v.decode(ids) == "circle a");

  std::stringstream ss;
  v.write(ss);
  CHECK(ss.str() == "a\t0\nred\t1\ncircle\t2\nblue\t3\n");
  Vocabulary back = Vocabulary::read(ss);
  CHECK(back.tokens() == v.tokens());

  std::stringstream bad("a\t0\nred\t5\n");
  CHECK_THROWS(Vocabulary::read(bad));
}

TEST_CASE("encoder pooling") {
  ParamInit init(3);
  TextEncoder enc = TextEncoder::create(init, 6, 4);
  const std::vector<std::size_t> one{2};
  EncodedText e1 = enc.encode(one);
  CHECK(e1.words.shape() == Shape{1, 4});
  CHECK(values(e1.sentence) == values(enc.projection(select(e1.words, 0))));

  const std::vector<std::size_t> ids{0, 3, 5, 1}, perm{5, 1, 0, 3};
  auto s1 = values(enc.encode(ids).sentence), s2 = values(enc.encode(perm).sentence);
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(std::abs(s1[i] - s2[i]) < 1e-12);

  const std::vector<std::size_t> two{1, 4};
  EncodedText w = enc.encode(two);
  CHECK(values(select(w.words, 0)) != values(select(w.words, 1)));

  const std::vector<std::size_t> empty{}, long_ids(9, 0), oov{6};
  CHECK_THROWS(enc.encode(empty));
  CHECK_THROWS(enc.encode(long_ids));
  CHECK_THROWS(enc.encode(oov));
}

TEST_CASE("conditioning augmentation") {
  ParamInit init(4);
  auto ca = ConditioningAugmentation::create(init, 4, 3);
  std::mt19937_64 rng(1);
  Tensor s = random_tensor({4}, rng, -1, 1, false);

  const std::vector<double> zero(3, 0.0), one(3, 1.0);
  auto z = ca.apply(s, zero);
  CHECK(values(z.resampled) == values(z.mu));

  auto flat = ca;
  flat.logvar.weight = Tensor::zeros({4, 3});
  flat.logvar.bias = Tensor::zeros({3});
  auto u = flat.apply(s, one);
  for (std::size_t i = 0; i < 3; ++i) CHECK(u.resampled.data()[i] == doctest::Approx(u.mu.data()[i] + 1.0).epsilon(1e-15));

  std::mt19937_64 r1(9), r2(9);
  CHECK(values(ca.apply(s, r1).resampled) == values(ca.apply(s, r2).resampled));
  CHECK_THROWS_AS(ca.apply(s, std::vector<double>(2, 0.0)), ShapeError);
}

TEST_CASE("kl divergence") {
  CHECK(kl_loss(Tensor::zeros({4}), Tensor::zeros({4})).item() == 0.0);
  CHECK(kl_loss(Tensor::from({3}, {1, 0, 0}), Tensor::zeros({3})).item() == doctest::Approx(0.5).epsilon(1e-15));

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor mu = random_tensor({5}, rng, -3, 3), lv = random_tensor({5}, rng, -3, 3);
    const double kl = kl_loss(mu, lv).item();
    CHECK(kl > 0.0);
    // closed form per dimension: (mu^2 + e^lv - 1 - lv) / 2
    double oracle = 0.0;
    for (std::size_t i = 0; i < 5; ++i) oracle += 0.5 * (mu[i] * mu[i] + std::exp(lv[i]) - 1.0 - lv[i]);
    CHECK(kl == doctest::Approx(oracle).epsilon(1e-12));
  }
  Tensor mu = random_tensor({4}, rng), lv = random_tensor({4}, rng);
  CHECK(max_gradient_error([&] { return kl_loss(mu, lv); }, {mu, lv}) < 1e-6);
}

TEST_CASE("encoder and augmentation gradients") {
  ParamInit init(5);
  TextEncoder enc = TextEncoder::create(init, 5, 3);
  auto ca = ConditioningAugmentation::create(init, 3, 2);
  const std::vector<std::size_t> ids{0, 4, 4};
  const std::vector<double> eps{0.3, -1.1};
  auto loss = [&] {
    auto e = enc.encode(ids);
    auto a = ca.apply(e.sentence, eps);
    return add(sum(mul(a.resampled, Tensor::from({2}, {0.7, -0.4}))), kl_loss(a.mu, a.logvar));
  };
  CHECK(max_gradient_error(loss, {enc.embedding, enc.projection.weight, enc.projection.bias, ca.mu.weight,
                                  ca.logvar.weight, ca.logvar.bias}) < 1e-6);
}
