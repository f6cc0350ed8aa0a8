// SPDX-License-Identifier: Apache-2.0
#include "msmt/imhm.hpp"

#include <algorithm>

#include "msmt/mtwig.hpp"

namespace msmt {

Tensor ResidualBlock::operator()(const Tensor& x) const { return add(x, second(leaky_relu(first(x)))); }

void ResidualBlock::collect(ParamList& out, const std::string& prefix) const {
  first.collect(out, prefix + ".first");
  second.collect(out, prefix + ".second");
}

RefinementStage RefinementStage::create(ParamInit& init, const RefinementShape& shape) {
  if (shape.head_count == 0) throw ShapeError("a refinement stage needs at least one head");
  GridSpec::make(shape.input_resolution, shape.grid_cells);
  RefinementStage stage;
  stage.shape_ = shape;
  for (std::size_t t = 0; t < shape.head_count; ++t) {
    stage.heads.push_back(SdmParams::create(init, shape.word_dim, shape.feature_dim, shape.memory_dim, shape.grid_cells));
    stage.head_fusion.push_back(FusionParams::create(init, shape.feature_dim));
  }
  stage.skip_fusion = FusionParams::create(init, shape.feature_dim);
  for (std::size_t b = 0; b < shape.residual_blocks; ++b) {
    stage.residual.push_back({Conv2d::create(init, 3, shape.feature_dim, shape.feature_dim),
                              Conv2d::create(init, 3, shape.feature_dim, shape.feature_dim)});
  }
  stage.upsample = Conv2d::create(init, 3, shape.feature_dim, shape.feature_dim);
  stage.to_image = Conv2d::create(init, 3, shape.feature_dim, 3);
  return stage;
}

RefinementStage::Output RefinementStage::refine(const Tensor& previous, const Tensor& words) const {
  const std::size_t s = shape_.input_resolution;
  if (previous.shape() != Shape{s, s, shape_.feature_dim}) {
    throw ShapeError("refine: stage expects [" + std::to_string(s) + ", " + std::to_string(s) + ", " +
                     std::to_string(shape_.feature_dim) + "] features, got " + to_string(previous.shape()));
  }
  const GridSpec g = grid();
  Output out;
  // Memory always comes from R_{k-1}; only the query source iterates.
  const Tensor grid_features = grid_average(previous, g);
  Tensor current = previous;  // U_0
  for (std::size_t t = 0; t < heads.size(); ++t) {
    MemoryBank bank = write_memory(words, grid_features, heads[t]);
    QueryField queries = build_queries(current, g, heads[t]);
    AttentionField attention = address_keys(bank, queries, heads[t]);
    RefinementOutput read = read_values(bank, attention, g, heads[t]);
    ++out.sdm_passes;
    current = fuse(current, read.features, head_fusion[t]);
    ++out.fuse_calls;
    out.head_outputs.push_back(read.features);
    out.updates.push_back(current);
    out.banks.push_back(std::move(bank));
  }
  out.response = fuse(current, previous, skip_fusion);
  ++out.fuse_calls;

  Tensor x = out.response;
  for (const auto& block : residual) x = block(x);
  out.features = leaky_relu(upsample(upsample_nearest(x, 2)));
  out.image = predict_image(to_image, out.features);
  return out;
}

void RefinementStage::collect(ParamList& out, const std::string& prefix) const {
  for (std::size_t t = 0; t < heads.size(); ++t) {
    heads[t].collect(out, prefix + ".head" + std::to_string(t));
    head_fusion[t].collect(out, prefix + ".head" + std::to_string(t) + ".fusion");
  }
  skip_fusion.collect(out, prefix + ".skip_fusion");
  for (std::size_t b = 0; b < residual.size(); ++b) residual[b].collect(out, prefix + ".residual" + std::to_string(b));
  upsample.collect(out, prefix + ".upsample");
  to_image.collect(out, prefix + ".to_image");
}

bool memory_written_from_input(const RefinementStage& stage, const RefinementStage::Output& output,
                               const Tensor& previous, const Tensor& words) {
  if (output.banks.size() != stage.heads.size()) return false;
  NoGradGuard no_grad;
  const Tensor grid_features = grid_average(previous, stage.grid());
  for (std::size_t t = 0; t < stage.heads.size(); ++t) {
    MemoryBank expected = write_memory(words, grid_features, stage.heads[t]);
    const auto a = expected.slots.data();
    const auto b = output.banks[t].slots.data();
    if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin())) return false;
  }
  return true;
}

}  // namespace msmt
