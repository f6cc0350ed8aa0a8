// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_NN_HPP
#define MSMT_NN_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "msmt/ops.hpp"
#include "msmt/tensor.hpp"

namespace msmt {

struct NamedParam {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedParam>;

std::size_t count_parameters(const ParamList& params);

/// Seeded parameter factory. Draw order is the construction order, so equal
/// seeds and equal configurations give identical models.
class ParamInit {
 public:
  explicit ParamInit(std::uint64_t seed) : engine_(seed) {}

  Tensor normal(Shape shape, double stddev);
  /// N(0, 1/fan_in) entries.
  Tensor scaled(Shape shape, std::size_t fan_in);
  Tensor zeros(Shape shape);

 private:
  std::mt19937_64 engine_;
};

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  static Linear create(ParamInit& init, std::size_t in, std::size_t out);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
  void collect(ParamList& out, const std::string& prefix) const;
};

struct Conv2d {
  Tensor kernel;  // [kh, kw, Cin, Cout]
  Tensor bias;    // [Cout]
  Conv2dOptions options;

  static Conv2d create(ParamInit& init, std::size_t kernel_size, std::size_t in, std::size_t out,
                       Conv2dOptions options = {});
  Tensor operator()(const Tensor& x) const { return add(conv2d(x, kernel, options), bias); }
  std::size_t out_channels() const { return kernel.dim(3); }
  void collect(ParamList& out, const std::string& prefix) const;
};

}  // namespace msmt

#endif  // MSMT_NN_HPP
