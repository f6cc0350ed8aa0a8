// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_MODEL_HPP
#define MSMT_MODEL_HPP

#include <random>
#include <span>
#include <vector>

#include "msmt/config.hpp"
#include "msmt/discriminator.hpp"
#include "msmt/imhm.hpp"
#include "msmt/mtwig.hpp"
#include "msmt/text.hpp"

namespace msmt {

/// Text encoder, conditioning augmentation, the initial stage and the
/// refinement stages.
class Generator {
 public:
  static Generator create(ParamInit& init, const Config& config, std::size_t vocab_size);

  struct Output {
    TextBatch text;
    MtwigStage::Output initial;
    std::vector<RefinementStage::Output> refined;
    std::vector<Tensor> images;  // one per stage, coarse to fine
  };

  /// eps has N_ca entries, noise N_z.
  Output forward(std::span<const std::size_t> ids, std::span<const double> eps, std::span<const double> noise) const;
  /// Draws eps and then z from `rng`.
  Output forward(std::span<const std::size_t> ids, std::mt19937_64& rng) const;

  std::size_t stage_count() const { return 1 + refinements.size(); }
  std::size_t min_caption_length() const { return initial.shape().kernel_size; }
  void collect(ParamList& out, const std::string& prefix) const;

  TextEncoder encoder;
  ConditioningAugmentation augmentation;
  MtwigStage initial;
  std::vector<RefinementStage> refinements;
};

struct Model {
  Generator generator;
  std::vector<DiscriminatorStage> discriminators;

  ParamList generator_params() const;
  ParamList discriminator_params() const;
  /// Generator tensors ("G." prefix) followed by discriminator tensors ("D.").
  ParamList all_params() const;
};

/// Deterministic in (config, vocab_size): parameters are drawn from config.seed.
Model build_model(const Config& config, std::size_t vocab_size);

}  // namespace msmt

#endif  // MSMT_MODEL_HPP
