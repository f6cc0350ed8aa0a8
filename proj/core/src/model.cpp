// SPDX-License-Identifier: Apache-2.0
#include "msmt/model.hpp"

namespace msmt {

Generator Generator::create(ParamInit& init, const Config& config, std::size_t vocab_size) {
  config.validate();
  Generator g;
  g.encoder = TextEncoder::create(init, vocab_size, config.n_w);
  g.augmentation = ConditioningAugmentation::create(init, config.n_w, config.n_ca);

  MtwigShape m;
  m.augmented_dim = config.n_ca;
  m.noise_dim = config.n_z;
  m.word_dim = config.n_w;
  m.feature_channels = config.n_r;
  m.kernel_size = config.ks;
  m.resolution = config.resolutions.front();
  g.initial = MtwigStage::create(init, m);

  for (std::size_t k = 1; k < config.resolutions.size(); ++k) {
    RefinementShape r;
    r.input_resolution = config.resolutions[k - 1];
    r.grid_cells = config.h;
    r.head_count = config.head_count;
    r.word_dim = config.n_w;
    r.feature_dim = config.n_r;
    r.memory_dim = config.n_m;
    g.refinements.push_back(RefinementStage::create(init, r));
  }
  return g;
}

Generator::Output Generator::forward(std::span<const std::size_t> ids, std::span<const double> eps,
                                     std::span<const double> noise) const {
  if (ids.size() < min_caption_length()) {
    throw std::invalid_argument("caption has " + std::to_string(ids.size()) + " tokens, at least " +
                                std::to_string(min_caption_length()) + " are needed");
  }
  if (noise.size() != initial.shape().noise_dim) throw ShapeError("generator: noise has wrong length");
  Output out;
  EncodedText enc = encoder.encode(ids);
  AugmentedSentence aug = augmentation.apply(enc.sentence, eps);
  out.text = TextBatch{enc.words, enc.sentence, aug.resampled,
                       Tensor::from({noise.size()}, std::vector<double>(noise.begin(), noise.end())), aug.mu,
                       aug.logvar};
  out.initial = initial.forward(out.text);
  out.images.push_back(out.initial.image);
  Tensor features = out.initial.features;
  for (const auto& stage : refinements) {
    out.refined.push_back(stage.refine(features, enc.words));
    features = out.refined.back().features;
    out.images.push_back(out.refined.back().image);
  }
  return out;
}

Generator::Output Generator::forward(std::span<const std::size_t> ids, std::mt19937_64& rng) const {
  const Tensor eps = sample_noise(augmentation.output_dim(), rng);
  const Tensor z = sample_noise(initial.shape().noise_dim, rng);
  return forward(ids, eps.data(), z.data());
}

void Generator::collect(ParamList& out, const std::string& prefix) const {
  encoder.collect(out, prefix + "encoder");
  augmentation.collect(out, prefix + "ca");
  initial.collect(out, prefix + "stage1");
  for (std::size_t k = 0; k < refinements.size(); ++k) {
    refinements[k].collect(out, prefix + "stage" + std::to_string(k + 2));
  }
}

ParamList Model::generator_params() const {
  ParamList out;
  generator.collect(out, "G.");
  return out;
}

ParamList Model::discriminator_params() const {
  ParamList out;
  for (std::size_t k = 0; k < discriminators.size(); ++k) {
    discriminators[k].collect(out, "D.stage" + std::to_string(k + 1));
  }
  return out;
}

ParamList Model::all_params() const {
  ParamList out = generator_params();
  ParamList d = discriminator_params();
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

Model build_model(const Config& config, std::size_t vocab_size) {
  ParamInit init(config.seed);
  Model m;
  m.generator = Generator::create(init, config, vocab_size);
  for (auto res : config.resolutions) {
    DiscriminatorShape d;
    d.resolution = res;
    d.sentence_dim = config.n_w;
    d.base_channels = config.discriminator_channels();
    m.discriminators.push_back(DiscriminatorStage::create(init, d));
  }
  return m;
}

}  // namespace msmt
