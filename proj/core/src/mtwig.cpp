// SPDX-License-Identifier: Apache-2.0
#include "msmt/mtwig.hpp"

#include <algorithm>

namespace msmt {

namespace {
constexpr std::size_t kSeedSide = 4;
}

std::size_t MtwigShape::tower_depth() const {
  if (resolution < kSeedSide || (resolution & (resolution - 1)) != 0) {
    throw ShapeError("initial resolution must be a power of two >= 4, got " + std::to_string(resolution));
  }
  std::size_t depth = 0;
  for (std::size_t s = kSeedSide; s < resolution; s *= 2) ++depth;
  return depth;
}

std::size_t MtwigShape::seed_channels() const {
  return tower_depth() == 0 ? feature_channels : 8 * feature_channels;
}

std::vector<std::size_t> MtwigShape::tower_channels() const {
  const std::size_t depth = tower_depth();
  std::vector<std::size_t> channels;
  std::size_t c = seed_channels();
  for (std::size_t b = 0; b < depth; ++b) {
    c = (b + 1 == depth) ? feature_channels : std::max(feature_channels, c / 2);
    channels.push_back(c);
  }
  return channels;
}

std::size_t tail_count(std::size_t length, std::size_t kernel_size) {
  if (kernel_size == 0) throw ShapeError("kernel size must be positive");
  if (length < kernel_size) {
    throw ShapeError("caption of " + std::to_string(length) + " words is shorter than kernel size " +
                     std::to_string(kernel_size));
  }
  return length - kernel_size + 1;
}

Tensor make_tail_inputs(const TextBatch& batch, std::size_t kernel_size) {
  const std::size_t len = batch.length();
  tail_count(len, kernel_size);
  Tensor s = broadcast_to(batch.resampled, {len, batch.resampled.numel()});
  Tensor z = broadcast_to(batch.noise, {len, batch.noise.numel()});
  return concat({s, z, batch.words}, 1);
}

MtwigStage MtwigStage::create(ParamInit& init, const MtwigShape& shape) {
  MtwigStage stage;
  stage.shape_ = shape;
  const std::size_t n_in = shape.input_dim();
  const std::size_t n_f = shape.f_channels();
  stage.sequence_kernel = init.scaled({shape.kernel_size, n_in, n_f}, shape.kernel_size * n_in);
  stage.sequence_bias = init.zeros({n_f});
  const std::size_t c0 = shape.seed_channels();
  stage.seed = Linear::create(init, n_f, kSeedSide * kSeedSide * c0);
  std::size_t c = c0;
  for (std::size_t out : shape.tower_channels()) {
    stage.tower.push_back(Conv2d::create(init, 3, c, out));
    c = out;
  }
  stage.fusion = FusionParams::create(init, shape.feature_channels);
  stage.to_image = Conv2d::create(init, 3, shape.feature_channels, 3);
  return stage;
}

TailSequence MtwigStage::generate_tails(const Tensor& inputs) const {
  if (inputs.rank() != 2 || inputs.dim(1) != shape_.input_dim()) {
    throw ShapeError("tail inputs must be [L, " + std::to_string(shape_.input_dim()) + "], got " +
                     to_string(inputs.shape()));
  }
  const std::size_t count = tail_count(inputs.dim(0), shape_.kernel_size);
  TailSequence out;
  out.kernel_size = shape_.kernel_size;
  out.conv_out = add(conv1d(inputs, sequence_kernel), sequence_bias);

  // All tails share the tower, so run them as one batch.
  const std::size_t c0 = shape_.seed_channels();
  Tensor maps = reshape(leaky_relu(seed(out.conv_out)), {count, kSeedSide, kSeedSide, c0});
  for (const auto& block : tower) maps = leaky_relu(block(upsample_nearest(maps, 2)));
  for (std::size_t t = 0; t < count; ++t) out.tails.push_back(select(maps, t));
  return out;
}

Tensor MtwigStage::fuse_tails(const TailSequence& tails) const {
  if (tails.tails.empty()) throw ShapeError("fuse_tails: no tails");
  Tensor running = tails.tails.front();
  for (std::size_t t = 1; t < tails.tails.size(); ++t) running = fuse(running, tails.tails[t], fusion);
  return running;
}

Tensor predict_image(const Conv2d& head, const Tensor& features) { return tanh(head(features)); }

Tensor MtwigStage::predict_image(const Tensor& features) const { return msmt::predict_image(to_image, features); }

MtwigStage::Output MtwigStage::forward(const TextBatch& batch) const {
  Output out;
  out.tails = generate_tails(make_tail_inputs(batch, shape_.kernel_size));
  out.features = fuse_tails(out.tails);
  out.image = predict_image(out.features);
  return out;
}

void MtwigStage::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".sequence.kernel", sequence_kernel});
  out.push_back({prefix + ".sequence.bias", sequence_bias});
  seed.collect(out, prefix + ".seed");
  for (std::size_t b = 0; b < tower.size(); ++b) tower[b].collect(out, prefix + ".tower" + std::to_string(b));
  fusion.collect(out, prefix + ".fusion");
  to_image.collect(out, prefix + ".to_image");
}

}  // namespace msmt
