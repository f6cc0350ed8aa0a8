// SPDX-License-Identifier: Apache-2.0
#include "msmt/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace msmt {

namespace {

constexpr std::size_t kHidden = 16;

Conv2d frozen(Conv2d conv) {
  conv.kernel.set_requires_grad(false);
  conv.bias.set_requires_grad(false);
  return conv;
}

Conv2d with_bias(ParamInit& init, std::size_t in, std::size_t out) {
  Conv2d c = Conv2d::create(init, 3, in, out);
  c.bias = init.normal({out}, 0.5);
  return frozen(c);
}

void require_finite(const FeatureSummary& s, const char* which) {
  if (!s.mean.allFinite() || !s.covariance.allFinite()) {
    throw std::invalid_argument(std::string("frechet_distance: non-finite values in summary ") + which);
  }
}

}  // namespace

FeatureExtractor::FeatureExtractor(std::uint64_t seed) : seed_(seed) {
  ParamInit init(seed);
  first_ = with_bias(init, 3, kHidden);
  second_ = with_bias(init, kHidden, kDim);
}

Eigen::VectorXd FeatureExtractor::extract(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(2) != 3) throw ShapeError("extract: expected [H, W, 3], got " + to_string(image.shape()));
  NoGradGuard guard;
  Tensor h = avg_pool(tanh(first_(image)), 2);
  h = tanh(second_(h));
  const std::size_t pixels = h.dim(0) * h.dim(1);
  const auto v = h.data();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kDim);
  for (std::size_t p = 0; p < pixels; ++p)
    for (std::size_t c = 0; c < kDim; ++c) out[static_cast<Eigen::Index>(c)] += v[p * kDim + c];
  return out / static_cast<double>(pixels);
}

FeatureSummary summarize(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2) throw std::invalid_argument("summarize: need at least two samples");
  FeatureSummary s;
  s.count = static_cast<std::size_t>(rows.rows());
  s.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - s.mean.transpose();
  s.covariance = centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
  return s;
}

FeatureSummary summarize(const std::vector<Eigen::VectorXd>& features) {
  if (features.empty()) throw std::invalid_argument("summarize: need at least two samples");
  const auto d = features.front().size();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(features.size()), d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) throw std::invalid_argument("summarize: ragged feature vectors");
    rows.row(static_cast<Eigen::Index>(i)) = features[i].transpose();
  }
  return summarize(rows);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double floor) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw std::runtime_error("psd_sqrt: eigendecomposition failed");
  Eigen::VectorXd root = eig.eigenvalues();
  for (auto& v : root) v = v < floor ? 0.0 : std::sqrt(v);
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double frechet_distance(const FeatureSummary& a, const FeatureSummary& b) {
  if (a.dim() != b.dim() || a.covariance.rows() != b.covariance.rows()) {
    throw std::invalid_argument("frechet_distance: summaries differ in dimension");
  }
  require_finite(a, "a");
  require_finite(b, "b");
  // (S_a S_b)^(1/2) has the trace of (S_a^(1/2) S_b S_a^(1/2))^(1/2), which is symmetric.
  const Eigen::MatrixXd ra = psd_sqrt(a.covariance);
  const Eigen::MatrixXd cross = psd_sqrt(ra * b.covariance * ra);
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double fd = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross.trace();
  return fd < 0.0 ? 0.0 : fd;
}

}  // namespace msmt
