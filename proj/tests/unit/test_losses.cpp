// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "msmt/losses.hpp"
#include "msmt/text.hpp"
#include "support.hpp"

using namespace msmt;
using msmt::testing::max_gradient_error;
using msmt::testing::random_tensor;

namespace {

// a [2, 2, C] head output whose spatial mean is `mean`
Tensor with_summary(const std::vector<double>& mean, double wobble = 0.0) {
  const std::size_t c = mean.size();
  std::vector<double> v(4 * c);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t j = 0; j < c; ++j) v[k * c + j] = mean[j] + (k % 2 ? wobble : -wobble);
  return Tensor::from({2, 2, c}, v);
}

StageScores scores(std::vector<double> u, std::vector<double> c) {
  const std::size_t n = u.size();
  return {Tensor::from({n}, std::move(u)), Tensor::from({n}, std::move(c))};
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("redundancy values") {
  CHECK(redundancy_loss({with_summary({1, 2, 3})}).item() == 0.0);
  std::vector<Tensor> same(6, with_summary({0.3, -0.2, 0.9}, 0.1));
  CHECK(redundancy_loss(same).item() == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(std::abs(redundancy_loss({with_summary({1, 0, 0}, 0.5), with_summary({0, 2, 0}, 0.2)}).item()) < 1e-15);
  CHECK(redundancy_loss({with_summary({1, 0}), with_summary({1, 1})}).item() ==
        doctest::Approx(1.0 / std::numbers::sqrt2).epsilon(1e-12));
  CHECK(redundancy_loss({with_summary({1, 0}), with_summary({-1, 0})}).item() == doctest::Approx(-1.0));
  CHECK_THROWS_AS(redundancy_loss({}), ShapeError);
  CHECK_THROWS_AS(redundancy_loss({with_summary({1, 0}), with_summary({1, 0, 0})}), ShapeError);
}

TEST_CASE("redundancy matches pairwise cosine oracle and its invariances") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t heads = 2 + trial % 5;
    std::vector<std::vector<double>> means(heads, std::vector<double>(4));
    std::vector<Tensor> outs;
    for (auto& m : means) {
      for (auto& v : m) v = u(rng);
      outs.push_back(with_summary(m, u(rng)));
    }
    double oracle = 0.0;
    for (std::size_t i = 0; i < heads; ++i)
      for (std::size_t j = i + 1; j < heads; ++j) oracle += cosine(means[i], means[j]);
    const double got = redundancy_loss(outs).item();
    CHECK(got == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(std::abs(got) <= heads * (heads - 1) / 2.0 + 1e-12);

    std::vector<Tensor> shuffled = outs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(redundancy_loss(shuffled).item() == doctest::Approx(got).epsilon(1e-12));
    std::vector<Tensor> scaled;
    for (std::size_t i = 0; i < heads; ++i) scaled.push_back(mul(outs[i], 0.1 + 3.0 * static_cast<double>(i)));
    CHECK(redundancy_loss(scaled).item() == doctest::Approx(got).epsilon(1e-10));
  }
}

TEST_CASE("adversarial fixed points") {
  auto half = scores({0.5, 0.5, 0.5}, {0.5, 0.5, 0.5});
  CHECK(generator_adversarial_loss(half).item() == doctest::Approx(std::numbers::ln2).epsilon(1e-14));
  CHECK(discriminator_loss(half, half).item() == doctest::Approx(2 * std::numbers::ln2).epsilon(1e-14));
  CHECK(std::abs(generator_adversarial_loss(scores({1, 1}, {1, 1})).item()) < 1e-15);
  CHECK(std::abs(discriminator_loss(scores({1, 1}, {1, 1}), scores({0, 0}, {0, 0})).item()) < 1e-15);
  // saturated wrong answers stay finite through the clamp
  const double worst = discriminator_loss(scores({0}, {0}), scores({1}, {1})).item();
  CHECK(worst == doctest::Approx(-2 * std::log(kLogEpsilon)).epsilon(1e-12));

  // BCE oracle
  auto real = scores({0.9, 0.6}, {0.7, 0.2}), fake = scores({0.3, 0.1}, {0.4, 0.8});
  const double expect = -0.5 * ((std::log(0.9) + std::log(0.6)) / 2 + (std::log(0.7) + std::log(0.1 * 9)) / 2) -
                        0.5 * ((std::log(0.7) + std::log(0.2)) / 2 + (std::log(0.6) + std::log(0.2)) / 2);
  CHECK(discriminator_loss(real, fake).item() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(generator_adversarial_loss(fake).item() ==
        doctest::Approx(-0.5 * ((std::log(0.3) + std::log(0.1)) / 2 + (std::log(0.4) + std::log(0.8)) / 2)).epsilon(1e-12));
  CHECK_THROWS_AS(discriminator_loss(scores({0.5}, {0.5}), half), ShapeError);
}

TEST_CASE("generator objective") {
  std::mt19937_64 rng(2);
  auto stage = [](double p) { return scores({p, p}, {p, p}); };
  std::vector<SampleTerms> batch(2);
  for (auto& s : batch) {
    s.mu = Tensor::zeros({4});
    s.logvar = Tensor::zeros({4});
    s.head_outputs = {{with_summary({1, 0}), with_summary({1, 1})}, {with_summary({1, 0}), with_summary({0, 1})}};
  }
  LossWeights w;
  auto three = generator_loss({stage(0.5), stage(0.5), stage(0.5)}, batch, w);
  CHECK(three.adversarial.size() == 3);
  double adv = 0.0;
  for (auto& a : three.adversarial) adv += a.item();
  CHECK(adv == doctest::Approx(3 * std::numbers::ln2).epsilon(1e-14));
  CHECK(adv == doctest::Approx(2.0794).epsilon(1e-4));
  CHECK(three.ca.item() == 0.0);
  REQUIRE(three.redundancy.size() == 2);
  CHECK(three.redundancy[0].item() == doctest::Approx(1.0 / std::numbers::sqrt2).epsilon(1e-12));
  CHECK(std::abs(three.redundancy[1].item()) < 1e-15);
  CHECK(three.total.item() == doctest::Approx(adv + 0.5 / std::numbers::sqrt2).epsilon(1e-12));

  // lambda_2 = 0 drops the redundancy term
  w.redundancy = 0.0;
  auto plain = generator_loss({stage(0.5), stage(0.5), stage(0.5)}, batch, w);
  CHECK(plain.total.item() == doctest::Approx(adv).epsilon(1e-14));

  // KL oracle: 0.5 * sum(mu^2 + e^lv - 1 - lv), batch mean
  w = {};
  batch[0].mu = Tensor::from({4}, {0.1, -0.2, 0.3, 0.0});
  batch[0].logvar = Tensor::from({4}, {0.0, 0.5, -0.5, 0.2});
  double kl = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double m = batch[0].mu[i], lv = batch[0].logvar[i];
    kl += 0.5 * (m * m + std::exp(lv) - 1 - lv);
  }
  CHECK(generator_loss({stage(0.5)}, batch, w).ca.item() == doctest::Approx(kl / 2).epsilon(1e-12));

  // more convincing fakes lower the adversarial term
  double last = 1e9;
  for (double p : {0.05, 0.2, 0.5, 0.8, 0.99}) {
    const double v = generator_loss({stage(p)}, batch, w).adversarial[0].item();
    CHECK(v < last);
    last = v;
  }
  CHECK_THROWS_AS(generator_loss({}, batch, w), ShapeError);
  CHECK_THROWS_AS(generator_loss({stage(0.5)}, {}, w), ShapeError);
  (void)rng;
}

TEST_CASE("loss gradients") {
  std::mt19937_64 rng(3);
  std::vector<Tensor> heads;
  for (int i = 0; i < 3; ++i) heads.push_back(random_tensor({3, 3, 4}, rng));
  CHECK(max_gradient_error([&] { return redundancy_loss(heads); }, heads) < 1e-5);

  Tensor ru = random_tensor({3}, rng, 0.1, 0.9), rc = random_tensor({3}, rng, 0.1, 0.9);
  Tensor fu = random_tensor({3}, rng, 0.1, 0.9), fc = random_tensor({3}, rng, 0.1, 0.9);
  CHECK(max_gradient_error([&] { return discriminator_loss({ru, rc}, {fu, fc}); }, {ru, rc, fu, fc}) < 1e-6);
  CHECK(max_gradient_error([&] { return generator_adversarial_loss({fu, fc}); }, {fu, fc}) < 1e-6);
}
