// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_OPTIM_HPP
#define MSMT_OPTIM_HPP

#include <vector>

#include "msmt/nn.hpp"

namespace msmt {

struct AdamOptions {
  double learning_rate = 0.0002;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction.
class Adam {
 public:
  Adam(ParamList params, AdamOptions options);

  void zero_grad();
  void step();
  std::size_t steps() const { return steps_; }
  const ParamList& params() const { return params_; }

 private:
  ParamList params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t steps_ = 0;
};

}  // namespace msmt

#endif  // MSMT_OPTIM_HPP
