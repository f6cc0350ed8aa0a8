// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "msmt/discriminator.hpp"
#include "support.hpp"

using namespace msmt;
using msmt::testing::max_gradient_error;
using msmt::testing::random_tensor;

namespace {

DiscriminatorStage make_stage(std::size_t res, std::uint64_t seed) {
  ParamInit init(seed);
  return DiscriminatorStage::create(init, {res, 6, 4});
}

}  // namespace

TEST_CASE("zero weights score one half") {
  auto d = make_stage(16, 1);
  ParamList params;
  d.collect(params, "D");
  for (auto& p : params) std::fill(p.tensor.mutable_data().begin(), p.tensor.mutable_data().end(), 0.0);
  std::mt19937_64 rng(1);
  auto s = d.score(random_tensor({16, 16, 3}, rng, -1, 1, false), random_tensor({6}, rng, -1, 1, false));
  CHECK(s.unconditional.item() == 0.5);
  CHECK(s.conditional.item() == 0.5);
}

TEST_CASE("scores are probabilities at every stage resolution") {
  for (std::size_t res : {16u, 32u, 64u}) {
    auto d = make_stage(res, res);
    // channels double at every halving after the first
    CHECK(d.encode(Tensor::zeros({res, res, 3})).shape() == Shape{4, 4, 4 * (res / 8)});
    CHECK(d.down.size() == static_cast<std::size_t>(std::log2(res / 4)));
    std::mt19937_64 rng(res);
    for (int trial = 0; trial < 5; ++trial) {
      auto s = d.score(random_tensor({res, res, 3}, rng, -1, 1, false), random_tensor({6}, rng, -1, 1, false));
      CHECK(s.unconditional.numel() == 1);
      CHECK((s.unconditional.item() > 0.0 && s.unconditional.item() < 1.0));
      CHECK((s.conditional.item() > 0.0 && s.conditional.item() < 1.0));
      auto l = d.logits(random_tensor({res, res, 3}, rng, -1, 1, false), random_tensor({6}, rng, -1, 1, false));
      CHECK(std::isfinite(l.conditional.item()));
    }
  }
  auto d = make_stage(16, 2);
  CHECK_THROWS_AS(d.score(Tensor::zeros({32, 32, 3}), Tensor::zeros({6})), ShapeError);
  CHECK_THROWS_AS(d.score(Tensor::zeros({16, 16, 3}), Tensor::zeros({5})), ShapeError);
  CHECK_THROWS(DiscriminatorStage::create(*std::make_unique<ParamInit>(1), {24, 6, 4}));
}

TEST_CASE("only the conditional head sees the sentence") {
  auto d = make_stage(16, 3);
  std::mt19937_64 rng(3);
  Tensor x = random_tensor({16, 16, 3}, rng, -1, 1, false);
  auto a = d.logits(x, random_tensor({6}, rng, -1, 1, false));
  auto b = d.logits(x, random_tensor({6}, rng, -1, 1, false));
  CHECK(a.unconditional.item() == b.unconditional.item());
  CHECK(a.conditional.item() != b.conditional.item());
}

TEST_CASE("discriminator gradient") {
  auto d = make_stage(16, 4);
  std::mt19937_64 rng(4);
  Tensor x = random_tensor({16, 16, 3}, rng), s = random_tensor({6}, rng);
  auto loss = [&] {
    auto l = d.logits(x, s);
    return add(mul(l.unconditional, 0.7), mul(l.conditional, -0.4));
  };
  std::vector<Tensor> inputs{s, d.joint.kernel, d.unconditional_head.bias, d.conditional_head.kernel, d.down.back().bias};
  CHECK(max_gradient_error(loss, inputs) < 1e-4);
}
