// SPDX-License-Identifier: Apache-2.0
#include "msmt/nn.hpp"

#include <cmath>

namespace msmt {

std::size_t count_parameters(const ParamList& params) {
  std::size_t total = 0;
  for (const auto& p : params) total += p.tensor.numel();
  return total;
}

Tensor ParamInit::normal(Shape shape, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> values(numel_of(shape));
  for (auto& v : values) v = dist(engine_);
  return Tensor::from(std::move(shape), std::move(values), true);
}

Tensor ParamInit::scaled(Shape shape, std::size_t fan_in) {
  return normal(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)));
}

Tensor ParamInit::zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }

Linear Linear::create(ParamInit& init, std::size_t in, std::size_t out) {
  return {init.scaled({in, out}, in), init.zeros({out})};
}

void Linear::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Conv2d Conv2d::create(ParamInit& init, std::size_t kernel_size, std::size_t in, std::size_t out,
                      Conv2dOptions options) {
  return {init.scaled({kernel_size, kernel_size, in, out}, kernel_size * kernel_size * in),
          init.zeros({out}), options};
}

void Conv2d::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".kernel", kernel});
  out.push_back({prefix + ".bias", bias});
}

}  // namespace msmt
