// SPDX-License-Identifier: Apache-2.0
#include "msmt/evaluation.hpp"

#include <random>

#include <nlohmann/json.hpp>

#include "msmt/data_synth.hpp"

namespace msmt {

namespace {

// Evaluation captions are drawn away from the training corpus stream.
constexpr std::uint64_t kHeldOutStream = 0xa0761d6478bd642fULL;

std::vector<Eigen::VectorXd> features_of(const FeatureExtractor& fx, const std::vector<CorpusItem>& items) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(fx.extract(item.images.back()));
  return out;
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["fd"] = fd;
  j["n_real"] = n_real;
  j["n_fake"] = n_fake;
  j["extractor_seed"] = extractor_seed;
  return j.dump(2);
}

EvalReport evaluate(const Generator& generator, const Config& config, std::size_t n, std::uint64_t extractor_seed,
                    std::uint64_t eval_seed) {
  if (n < 2) throw std::invalid_argument("evaluate: n must be at least 2");
  const std::size_t final_res = config.resolutions.back();
  const auto items = sample_corpus(n, eval_seed ^ kHeldOutStream, {final_res});
  const FeatureExtractor fx(extractor_seed);

  std::mt19937_64 rng(eval_seed);
  std::vector<Eigen::VectorXd> fake;
  fake.reserve(n);
  {
    NoGradGuard guard;
    for (const auto& item : items) fake.push_back(fx.extract(generator.forward(item.tokens, rng).images.back()));
  }
  EvalReport report;
  report.fd = frechet_distance(summarize(features_of(fx, items)), summarize(fake));
  report.n_real = n;
  report.n_fake = n;
  report.extractor_seed = extractor_seed;
  return report;
}

double real_vs_real(const Config& config, std::size_t n, std::uint64_t extractor_seed, std::uint64_t seed) {
  const std::size_t final_res = config.resolutions.back();
  const FeatureExtractor fx(extractor_seed);
  const auto a = sample_corpus(n, seed, {final_res});
  const auto b = sample_corpus(n, seed ^ kHeldOutStream, {final_res});
  return frechet_distance(summarize(features_of(fx, a)), summarize(features_of(fx, b)));
}

}  // namespace msmt
