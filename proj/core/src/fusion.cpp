// SPDX-License-Identifier: Apache-2.0
#include "msmt/fusion.hpp"

#include <cmath>

namespace msmt {

namespace {

// b + (a - b) g per element. std::lerp keeps the result inside [min(a, b), max(a, b)]
// for g in [0, 1] even after rounding.
Tensor mix(const Tensor& a, const Tensor& b, const Tensor& g) {
  const auto av = a.data(), bv = b.data(), gv = g.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::lerp(bv[i], av[i], gv[i]);
  return make_op_result("fuse_mix", a.shape(), std::move(out), {a, b, g}, [](detail::Node& self) {
    const auto& x = self.inputs[0]->value;
    const auto& y = self.inputs[1]->value;
    const auto& w = self.inputs[2]->value;
    const auto& up = self.grad;
    for (std::size_t k = 0; k < 3; ++k) {
      auto& in = *self.inputs[k];
      if (!in.requires_grad) continue;
      auto& gr = in.grad_buffer();
      for (std::size_t i = 0; i < up.size(); ++i) {
        gr[i] += up[i] * (k == 0 ? w[i] : k == 1 ? 1.0 - w[i] : x[i] - y[i]);
      }
    }
  });
}

}  // namespace

FusionParams FusionParams::create(ParamInit& init, std::size_t channels) {
  return {init.scaled({1, 2 * channels}, 2 * channels), init.zeros({1})};
}

void FusionParams::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".gate", gate});
  out.push_back({prefix + ".bias", bias});
}

Tensor fusion_gate(const Tensor& a, const Tensor& b, const FusionParams& params) {
  if (a.shape() != b.shape()) {
    throw ShapeError("fuse: operand shapes differ " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  if (a.rank() == 0) throw ShapeError("fuse: operands need a channel axis");
  const std::size_t c = a.shape().back();
  if (params.gate.rank() != 2 || params.gate.dim(0) != 1 || params.gate.dim(1) != 2 * c) {
    throw ShapeError("fuse: gate matrix " + to_string(params.gate.shape()) + " does not match " +
                     std::to_string(c) + " channels");
  }
  const std::size_t last = a.rank() - 1;
  Tensor joint = concat({a, b}, last);
  Tensor logits = sum(mul(joint, reshape(params.gate, {2 * c})), last);
  return sigmoid(add(logits, params.bias));
}

Tensor fuse(const Tensor& a, const Tensor& b, const FusionParams& params) {
  Tensor g = fusion_gate(a, b, params);
  Shape with_channel = g.shape();
  with_channel.push_back(1);
  Tensor gate = broadcast_to(reshape(g, with_channel), a.shape());
  return mix(a, b, gate);
}

}  // namespace msmt
