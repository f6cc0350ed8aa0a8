// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_FUSION_HPP
#define MSMT_FUSION_HPP

#include <string>

#include "msmt/nn.hpp"

namespace msmt {

/// Adaptive gate for merging two feature maps. One scalar gate per pixel:
/// g = sigmoid(P . concat(a, b) + rho), broadcast over channels.
struct FusionParams {
  Tensor gate;  // P, [1, 2C]
  Tensor bias;  // rho, [1]

  static FusionParams create(ParamInit& init, std::size_t channels);
  std::size_t channels() const { return gate.dim(1) / 2; }
  void collect(ParamList& out, const std::string& prefix) const;
};

/// Per-pixel gate values, shape of `a` without its channel axis.
Tensor fusion_gate(const Tensor& a, const Tensor& b, const FusionParams& params);

/// a * g + b * (1 - g) for feature maps of shape [..., C].
Tensor fuse(const Tensor& a, const Tensor& b, const FusionParams& params);

}  // namespace msmt

#endif  // MSMT_FUSION_HPP
