// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_EVALUATION_HPP
#define MSMT_EVALUATION_HPP

#include <cstdint>
#include <string>

#include "msmt/config.hpp"
#include "msmt/metrics.hpp"
#include "msmt/model.hpp"

namespace msmt {

inline constexpr std::uint64_t kDefaultExtractorSeed = 1234;

struct EvalReport {
  double fd = 0.0;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
  std::uint64_t extractor_seed = 0;

  /// {"fd", "n_real", "n_fake", "extractor_seed"}
  std::string to_json() const;
};

/// Features of the final-stage images generated for n freshly sampled
/// captions, against features of the renders of those captions.
EvalReport evaluate(const Generator& generator, const Config& config, std::size_t n,
                    std::uint64_t extractor_seed = kDefaultExtractorSeed, std::uint64_t eval_seed = 7);

/// Two independent corpora of n real renders each; the self-distance baseline.
double real_vs_real(const Config& config, std::size_t n, std::uint64_t extractor_seed, std::uint64_t seed);

}  // namespace msmt

#endif  // MSMT_EVALUATION_HPP
