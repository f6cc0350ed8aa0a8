// SPDX-License-Identifier: Apache-2.0
#include "msmt/discriminator.hpp"

namespace msmt {

namespace {
constexpr std::size_t kCodeSide = 4;
}

DiscriminatorStage DiscriminatorStage::create(ParamInit& init, const DiscriminatorShape& shape) {
  if (shape.resolution < 2 * kCodeSide || (shape.resolution & (shape.resolution - 1)) != 0) {
    throw ShapeError("discriminator resolution must be a power of two >= 8, got " +
                     std::to_string(shape.resolution));
  }
  DiscriminatorStage d;
  d.shape_ = shape;
  const Conv2dOptions halve{2, Padding::Explicit, 1};
  std::size_t c_in = 3;
  std::size_t c_out = shape.base_channels;
  for (std::size_t side = shape.resolution; side > kCodeSide; side /= 2) {
    d.down.push_back(Conv2d::create(init, 4, c_in, c_out, halve));
    c_in = c_out;
    c_out *= 2;
  }
  const Conv2dOptions valid{1, Padding::Valid, 0};
  d.unconditional_head = Conv2d::create(init, kCodeSide, c_in, 1, valid);
  d.joint = Conv2d::create(init, 3, c_in + shape.sentence_dim, c_in);
  d.conditional_head = Conv2d::create(init, kCodeSide, c_in, 1, valid);
  return d;
}

Tensor DiscriminatorStage::encode(const Tensor& image) const {
  const std::size_t r = shape_.resolution;
  if (image.shape() != Shape{r, r, 3}) {
    throw ShapeError("discriminator expects a [" + std::to_string(r) + ", " + std::to_string(r) +
                     ", 3] image, got " + to_string(image.shape()));
  }
  Tensor x = image;
  for (const auto& conv : down) x = leaky_relu(conv(x));
  return x;
}

DiscriminatorScores DiscriminatorStage::logits(const Tensor& image, const Tensor& sentence) const {
  if (sentence.rank() != 1 || sentence.dim(0) != shape_.sentence_dim) {
    throw ShapeError("discriminator expects a sentence vector of length " + std::to_string(shape_.sentence_dim));
  }
  Tensor code = encode(image);
  Tensor tiled = broadcast_to(sentence, {kCodeSide, kCodeSide, shape_.sentence_dim});
  Tensor joint_code = leaky_relu(joint(concat({code, tiled}, 2)));
  return {reshape(unconditional_head(code), {}), reshape(conditional_head(joint_code), {})};
}

DiscriminatorScores DiscriminatorStage::score(const Tensor& image, const Tensor& sentence) const {
  auto raw = logits(image, sentence);
  return {sigmoid(raw.unconditional), sigmoid(raw.conditional)};
}

void DiscriminatorStage::collect(ParamList& out, const std::string& prefix) const {
  for (std::size_t b = 0; b < down.size(); ++b) down[b].collect(out, prefix + ".down" + std::to_string(b));
  unconditional_head.collect(out, prefix + ".unconditional");
  joint.collect(out, prefix + ".joint");
  conditional_head.collect(out, prefix + ".conditional");
}

}  // namespace msmt
