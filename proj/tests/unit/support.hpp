// SPDX-License-Identifier: Apache-2.0
// Test-side oracles. Nothing here calls into the library's own gradient audit.
#ifndef MSMT_TEST_SUPPORT_HPP
#define MSMT_TEST_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "msmt/ops.hpp"
#include "msmt/tensor.hpp"

namespace msmt::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = true) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(numel_of(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

inline std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

/// Max relative error |a - n| / max(|a|, |n|, floor) between backward() and
/// central differences over every entry of every input.
inline double max_gradient_error(const std::function<Tensor()>& loss, const std::vector<Tensor>& inputs,
                                 double step = 1e-4, double floor = 1e-6) {
  for (auto t : inputs) t.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor x = inputs[k];
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const double orig = x.data()[i];
      x.mutable_data()[i] = orig + step;
      double plus, minus;
      {
        NoGradGuard g;
        plus = loss().item();
      }
      x.mutable_data()[i] = orig - step;
      {
        NoGradGuard g;
        minus = loss().item();
      }
      x.mutable_data()[i] = orig;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[k][i];
      worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor}));
    }
  }
  return worst;
}

/// Fixed random weights of the given shape, scaled so sum(x * w) stays O(1).
inline Tensor projection_weights(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0 / std::sqrt(static_cast<double>(numel_of(shape))));
  std::vector<double> v(numel_of(shape));
  for (auto& e : v) e = d(rng);
  return Tensor::from(shape, std::move(v));
}

}  // namespace msmt::testing

#endif  // MSMT_TEST_SUPPORT_HPP
