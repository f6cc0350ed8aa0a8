// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_DISCRIMINATOR_HPP
#define MSMT_DISCRIMINATOR_HPP

#include <string>
#include <vector>

#include "msmt/nn.hpp"

namespace msmt {

struct DiscriminatorShape {
  std::size_t resolution = 16;
  std::size_t sentence_dim = 16;  // N_w
  std::size_t base_channels = 16;
};

struct DiscriminatorScores {
  Tensor unconditional;  // D(x), scalar in (0, 1)
  Tensor conditional;    // D(x, s), scalar in (0, 1)
};

/// Stride-2 4x4 convolutions down to a 4x4 map, then two heads: an
/// unconditional one, and a conditional one that sees the sentence vector
/// tiled over the 4x4 map.
class DiscriminatorStage {
 public:
  static DiscriminatorStage create(ParamInit& init, const DiscriminatorShape& shape);

  const DiscriminatorShape& shape() const { return shape_; }

  /// [4, 4, C] code of an image.
  Tensor encode(const Tensor& image) const;
  DiscriminatorScores score(const Tensor& image, const Tensor& sentence) const;
  /// Pre-sigmoid logits, same layout as score().
  DiscriminatorScores logits(const Tensor& image, const Tensor& sentence) const;

  void collect(ParamList& out, const std::string& prefix) const;

  std::vector<Conv2d> down;
  Conv2d unconditional_head;  // 4x4 valid, C -> 1
  Conv2d joint;               // 3x3 same, C + N_w -> C
  Conv2d conditional_head;    // 4x4 valid, C -> 1

 private:
  DiscriminatorShape shape_;
};

}  // namespace msmt

#endif  // MSMT_DISCRIMINATOR_HPP
