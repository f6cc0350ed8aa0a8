// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "msmt/mtwig.hpp"
#include "support.hpp"

using namespace msmt;
using msmt::testing::max_gradient_error;
using msmt::testing::projection_weights;
using msmt::testing::random_tensor;
using msmt::testing::values;

namespace {

TextBatch make_batch(std::size_t len, const MtwigShape& shape, std::mt19937_64& rng) {
  TextBatch b;
  b.words = random_tensor({len, shape.word_dim}, rng, -1, 1, false);
  b.sentence = random_tensor({shape.word_dim}, rng, -1, 1, false);
  b.resampled = random_tensor({shape.augmented_dim}, rng, -1, 1, false);
  b.noise = random_tensor({shape.noise_dim}, rng, -1, 1, false);
  return b;
}

MtwigShape small_shape(std::size_t ks = 3) {
  MtwigShape s;
  s.augmented_dim = 4;
  s.noise_dim = 3;
  s.word_dim = 5;
  s.feature_channels = 4;
  s.kernel_size = ks;
  s.resolution = 16;
  return s;
}

}  // namespace

TEST_CASE("tail inputs") {
  std::mt19937_64 rng(1);
  const auto shape = small_shape(1);
  TextBatch one = make_batch(1, shape, rng);
  CHECK(make_tail_inputs(one, 1).shape() == Shape{1, 12});

  TextBatch b = make_batch(4, shape, rng);
  b.resampled = Tensor::zeros({4});
  b.noise = Tensor::zeros({3});
  Tensor in = make_tail_inputs(b, 1);
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t c = 0; c < 12; ++c) CHECK(in.at({l, c}) == (c < 7 ? 0.0 : b.words.at({l, c - 7})));

  TextBatch c = make_batch(3, shape, rng);
  Tensor rows = make_tail_inputs(c, 1);
  for (std::size_t k = 0; k < 7; ++k) CHECK(rows.at({0, k}) == rows.at({2, k}));
  bool word_part_differs = false;
  for (std::size_t k = 7; k < 12; ++k) word_part_differs |= rows.at({0, k}) != rows.at({2, k});
  CHECK(word_part_differs);
}

TEST_CASE("tail count") {
  for (std::size_t ks = 1; ks <= 3; ++ks)
    for (std::size_t len = ks; len <= 8; ++len) CHECK(tail_count(len, ks) == len - ks + 1);
  CHECK(tail_count(4, 1) == 4);
  CHECK(tail_count(5, 3) == 3);
  CHECK_THROWS_AS(tail_count(2, 3), ShapeError);

  std::mt19937_64 rng(2);
  ParamInit init(2);
  auto stage = MtwigStage::create(init, small_shape(3));
  auto out = stage.forward(make_batch(5, small_shape(3), rng));
  CHECK(out.tails.count() == 3);
  CHECK(out.tails.conv_out.shape() == Shape{3, 12});
  for (const auto& t : out.tails.tails) CHECK(t.shape() == Shape{16, 16, 4});
  CHECK(out.features.shape() == Shape{16, 16, 4});
  CHECK(out.image.shape() == Shape{16, 16, 3});
  CHECK_THROWS(stage.forward(make_batch(2, small_shape(3), rng)));
}

TEST_CASE("tower schedule") {
  MtwigShape s = small_shape();
  CHECK(s.tower_depth() == 2);
  CHECK(s.seed_channels() == 32);
  CHECK(s.tower_channels() == std::vector<std::size_t>{16, 4});
  s.resolution = 64;
  CHECK(s.tower_depth() == 4);
  CHECK(s.tower_channels().back() == 4);
  s.resolution = 4;
  CHECK(s.tower_depth() == 0);
  s.resolution = 12;
  CHECK_THROWS(s.tower_depth());
}

TEST_CASE("shared weights give identical tails for identical windows") {
  std::mt19937_64 rng(3);
  ParamInit init(3);
  const auto shape = small_shape(3);
  auto stage = MtwigStage::create(init, shape);
  TextBatch b = make_batch(6, shape, rng);
  // words a b c a b c: windows 0 and 3 coincide
  std::vector<double> w(b.words.data().begin(), b.words.data().end());
  std::copy(w.begin(), w.begin() + 15, w.begin() + 15);
  b.words = Tensor::from({6, 5}, w);
  auto tails = stage.generate_tails(make_tail_inputs(b, 3));
  CHECK(values(tails.tails[0]) == values(tails.tails[3]));
  CHECK(values(tails.tails[0]) != values(tails.tails[1]));
}

TEST_CASE("tail folding") {
  std::mt19937_64 rng(4);
  ParamInit init(4);
  auto stage = MtwigStage::create(init, small_shape());
  TailSequence one;
  one.tails = {random_tensor({16, 16, 4}, rng)};
  CHECK(values(stage.fuse_tails(one)) == values(one.tails[0]));

  TailSequence same;
  same.tails = {one.tails[0], one.tails[0], one.tails[0]};
  CHECK(values(stage.fuse_tails(same)) == values(one.tails[0]));

  TailSequence three;
  three.tails = {random_tensor({16, 16, 4}, rng), random_tensor({16, 16, 4}, rng), random_tensor({16, 16, 4}, rng)};
  Tensor manual = fuse(fuse(three.tails[0], three.tails[1], stage.fusion), three.tails[2], stage.fusion);
  CHECK(values(stage.fuse_tails(three)) == values(manual));

  // every fold step stays within its operands
  Tensor running = three.tails[0];
  for (std::size_t t = 1; t < 3; ++t) {
    Tensor next = fuse(running, three.tails[t], stage.fusion);
    for (std::size_t i = 0; i < next.numel(); ++i) {
      CHECK(next[i] >= std::min(running[i], three.tails[t][i]));
      CHECK(next[i] <= std::max(running[i], three.tails[t][i]));
    }
    running = next;
  }
}

TEST_CASE("image head") {
  std::mt19937_64 rng(5);
  ParamInit init(5);
  auto stage = MtwigStage::create(init, small_shape());
  Conv2d zero = stage.to_image;
  zero.bias = Tensor::zeros({3});
  const Tensor flat = predict_image(zero, Tensor::zeros({16, 16, 4}));
  for (double v : flat.data()) CHECK(v == 0.0);
  Tensor big = random_tensor({16, 16, 4}, rng, -50, 50);
  const Tensor squashed = stage.predict_image(big);
  for (double v : squashed.data()) CHECK(std::abs(v) <= 1.0);

  Tensor r = random_tensor({8, 8, 4}, rng);
  Tensor w = projection_weights({8, 8, 3}, 2);
  CHECK(max_gradient_error([&] { return sum(mul(stage.predict_image(r), w)); }, {r}) < 1e-6);
}

TEST_CASE("stage gradient") {
  std::mt19937_64 rng(6);
  ParamInit init(6);
  MtwigShape shape = small_shape(2);
  shape.resolution = 8;
  auto stage = MtwigStage::create(init, shape);
  TextBatch b = make_batch(3, shape, rng);
  b.words = random_tensor({3, 5}, rng);
  b.resampled = random_tensor({4}, rng);
  Tensor w = projection_weights({8, 8, 3}, 3);
  auto loss = [&] { return sum(mul(stage.forward(b).image, w)); };
  CHECK(max_gradient_error(loss, {b.words, b.resampled, stage.sequence_kernel, stage.fusion.gate, stage.tower[0].kernel}) < 1e-4);
}
