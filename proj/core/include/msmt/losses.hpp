// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_LOSSES_HPP
#define MSMT_LOSSES_HPP

#include <vector>

#include "msmt/tensor.hpp"

namespace msmt {

/// Lower clamp applied inside every log.
inline constexpr double kLogEpsilon = 1e-7;

struct LossWeights {
  double ca = 1.0;          // lambda_1
  double redundancy = 0.5;  // lambda_2
  double matching = 5.0;    // lambda_3, kept for reference; the matching term is not computed
};

/// log(clamp(x, eps, 1))
Tensor safe_log(const Tensor& x);

/// Spatial mean of a head output [s, s, C] -> [C].
Tensor head_summary(const Tensor& head_output);

/// Sum over head pairs i < j of cosine(f(i), f(j)); 0 for a single head.
Tensor redundancy_loss(const std::vector<Tensor>& head_outputs);

/// Discriminator probabilities for one stage over a batch, each [B].
struct StageScores {
  Tensor unconditional;
  Tensor conditional;
};

/// -1/2 [mean log D(x) + mean log D(x, s)] over generated samples.
Tensor generator_adversarial_loss(const StageScores& fake);

/// Unconditional plus conditional binary cross-entropy halves.
Tensor discriminator_loss(const StageScores& real, const StageScores& fake);

/// Per-caption generator-side quantities.
struct SampleTerms {
  Tensor mu;
  Tensor logvar;
  std::vector<std::vector<Tensor>> head_outputs;  // [refinement stage][head]
};

struct GeneratorLoss {
  Tensor total;
  Tensor ca;                         // batch mean of the KL term
  std::vector<Tensor> redundancy;    // per refinement stage (k >= 2), batch mean
  std::vector<Tensor> adversarial;   // per stage, L_G_k
};

/// lambda_1 L_CA + sum_{k>=2} lambda_2 L_RED_k + sum_k L_G_k.
GeneratorLoss generator_loss(const std::vector<StageScores>& fake, const std::vector<SampleTerms>& samples,
                             const LossWeights& weights);

}  // namespace msmt

#endif  // MSMT_LOSSES_HPP
