// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_METRICS_HPP
#define MSMT_METRICS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "msmt/nn.hpp"

namespace msmt {

/// Frozen random conv stack followed by global average pooling.
class FeatureExtractor {
 public:
  static constexpr std::size_t kDim = 16;

  explicit FeatureExtractor(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::size_t dim() const { return kDim; }
  /// image [H, W, 3] in [-1, 1]; H and W even.
  Eigen::VectorXd extract(const Tensor& image) const;

 private:
  std::uint64_t seed_;
  Conv2d first_;
  Conv2d second_;
};

struct FeatureSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::size_t count = 0;

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  /// Fewer than d + 1 samples cannot give a full-rank covariance.
  bool rank_deficient() const { return count < dim() + 1; }
};

/// Mean and unbiased (n - 1) covariance of the rows; needs at least two.
FeatureSummary summarize(const std::vector<Eigen::VectorXd>& features);
FeatureSummary summarize(const Eigen::MatrixXd& rows);

/// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).
/// Throws std::invalid_argument on dimension mismatch or non-finite input.
double frechet_distance(const FeatureSummary& a, const FeatureSummary& b);

/// Symmetric PSD square root; eigenvalues below `floor` are treated as zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double floor = 1e-8);

}  // namespace msmt

#endif  // MSMT_METRICS_HPP
