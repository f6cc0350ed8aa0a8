// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "msmt/imhm.hpp"
#include "support.hpp"

using namespace msmt;
using msmt::testing::max_gradient_error;
using msmt::testing::projection_weights;
using msmt::testing::random_tensor;
using msmt::testing::values;

namespace {

RefinementShape shape_with(std::size_t heads, std::size_t s = 8) {
  RefinementShape r;
  r.input_resolution = s;
  r.grid_cells = 2;
  r.head_count = heads;
  r.word_dim = 5;
  r.feature_dim = 3;
  r.memory_dim = 4;
  return r;
}

}  // namespace

TEST_CASE("refinement shapes and counts") {
  std::mt19937_64 rng(1);
  for (std::size_t heads = 1; heads <= 4; ++heads) {
    ParamInit init(heads);
    auto stage = RefinementStage::create(init, shape_with(heads));
    Tensor prev = random_tensor({8, 8, 3}, rng, -1, 1, false), words = random_tensor({3, 5}, rng, -1, 1, false);
    auto out = stage.refine(prev, words);
    CHECK(out.features.shape() == Shape{16, 16, 3});
    CHECK(out.image.shape() == Shape{16, 16, 3});
    for (double v : out.image.data()) CHECK(std::abs(v) <= 1.0);
    CHECK(out.sdm_passes == heads);
    CHECK(out.fuse_calls == heads + 1);
    CHECK(out.head_outputs.size() == heads);
    CHECK(memory_written_from_input(stage, out, prev, words));
    // each fuse step stays within its operands
    Tensor before = prev;
    for (std::size_t t = 0; t < heads; ++t) {
      for (std::size_t i = 0; i < before.numel(); ++i) {
        CHECK(out.updates[t][i] >= std::min(before[i], out.head_outputs[t][i]));
        CHECK(out.updates[t][i] <= std::max(before[i], out.head_outputs[t][i]));
      }
      before = out.updates[t];
    }
  }
  ParamInit init(9);
  auto stage = RefinementStage::create(init, shape_with(1));
  CHECK_THROWS_AS(stage.refine(Tensor::zeros({4, 4, 3}), Tensor::zeros({3, 5})), ShapeError);
  RefinementShape bad = shape_with(1);
  bad.grid_cells = 3;
  CHECK_THROWS(RefinementStage::create(init, bad));
}

TEST_CASE("single head equals the single SDM path") {
  std::mt19937_64 rng(2);
  ParamInit init(2);
  auto stage = RefinementStage::create(init, shape_with(1));
  Tensor prev = random_tensor({8, 8, 3}, rng, -1, 1, false), words = random_tensor({4, 5}, rng, -1, 1, false);
  auto out = stage.refine(prev, words);
  auto pass = run_sdm(prev, words, prev, stage.grid(), stage.heads[0]);
  Tensor u1 = fuse(prev, pass.output.features, stage.head_fusion[0]);
  CHECK(values(out.response) == values(fuse(u1, prev, stage.skip_fusion)));
}

TEST_CASE("a silenced second head leaves the first update in place") {
  std::mt19937_64 rng(3);
  ParamInit init(3);
  auto stage = RefinementStage::create(init, shape_with(2));
  stage.heads[1].value.kernel = Tensor::zeros(stage.heads[1].value.kernel.shape());
  stage.heads[1].value.bias = Tensor::zeros(stage.heads[1].value.bias.shape());
  stage.head_fusion[1].gate = Tensor::zeros(stage.head_fusion[1].gate.shape());
  stage.head_fusion[1].bias = Tensor::full({1}, 20.0);
  auto out = stage.refine(random_tensor({8, 8, 3}, rng, -1, 1, false), random_tensor({3, 5}, rng, -1, 1, false));
  for (double v : out.head_outputs[1].data()) CHECK(v == 0.0);
  for (std::size_t i = 0; i < out.updates[0].numel(); ++i) CHECK(std::abs(out.updates[1][i] - out.updates[0][i]) < 1e-8);
}

TEST_CASE("memory source") {
  std::mt19937_64 rng(4);
  ParamInit init(4);
  auto stage = RefinementStage::create(init, shape_with(2));
  Tensor prev = random_tensor({8, 8, 3}, rng, -1, 1, false), words = random_tensor({3, 5}, rng, -1, 1, false);
  auto out = stage.refine(prev, words);

  // perturbing U_1 changes head 2's queries, not its memory
  Tensor grid_features = grid_average(prev, stage.grid());
  MemoryBank frozen = write_memory(words, grid_features, stage.heads[1]);
  CHECK(values(frozen.slots) == values(out.banks[1].slots));

  Tensor moved = add(prev, random_tensor({8, 8, 3}, rng, -0.1, 0.1, false));
  auto out2 = stage.refine(moved, words);
  for (std::size_t t = 0; t < 2; ++t) CHECK(values(out2.banks[t].slots) != values(out.banks[t].slots));
  CHECK_FALSE(memory_written_from_input(stage, out, moved, words));
  CHECK(values(out.banks[0].slots) != values(out.banks[1].slots));
}

TEST_CASE("full stage gradient at desk scale") {
  std::mt19937_64 rng(5);
  ParamInit init(5);
  RefinementShape desk;
  desk.input_resolution = 16;
  desk.grid_cells = 4;
  desk.head_count = 2;
  desk.word_dim = 16;
  desk.feature_dim = 8;
  desk.memory_dim = 16;
  auto stage = RefinementStage::create(init, desk);
  Tensor prev = random_tensor({16, 16, 8}, rng), words = random_tensor({3, 16}, rng);
  Tensor pw = projection_weights({32, 32, 3}, 2);
  auto loss = [&] { return sum(mul(stage.refine(prev, words).image, pw)); };
  // a few tensors from every part of the stage, all entries each
  std::vector<Tensor> inputs{words, stage.heads[0].word_gate, stage.heads[1].region_gate, stage.heads[0].query_pixel.bias,
                             stage.head_fusion[1].gate, stage.skip_fusion.bias, stage.residual[0].second.bias,
                             stage.to_image.bias};
  CHECK(max_gradient_error(loss, inputs) < 1e-4);
  // the upsample bias sits right before a leaky kink; a narrower step keeps both sides on one branch
  CHECK(max_gradient_error(loss, {stage.upsample.bias}, 1e-7) < 1e-4);
}
