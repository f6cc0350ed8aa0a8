// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_GRADCHECK_HPP
#define MSMT_GRADCHECK_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "msmt/config.hpp"
#include "msmt/nn.hpp"

namespace msmt {

struct GradcheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  /// Entries checked per tensor; smaller tensors are checked exhaustively.
  std::size_t samples_per_tensor = 4;
  /// Step reductions tried when a probe crosses a kink.
  std::size_t kink_retries = 3;
  /// Denominator floor of the relative error.
  double scale_floor = 1e-6;
};

struct GradcheckRow {
  std::string group;
  std::string tensor;
  std::size_t checked = 0;
  std::size_t kink_retries = 0;
  std::size_t skipped = 0;  // entries whose probes straddle a kink at every step tried
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckRow> rows;
  double tolerance = 0.0;

  bool passed() const;
  double max_error() const;
  /// Max relative error per group, in audit order.
  std::vector<std::pair<std::string, double>> group_maxima() const;
  /// Group summary lines; with per_tensor, one line per audited tensor too.
  std::string to_text(bool per_tensor = false) const;
};

/// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

using LossFn = std::function<Tensor()>;

/// Compares the backward pass of `loss` against central differences on a
/// seeded subset of the entries of every tensor in `inputs`.
std::vector<GradcheckRow> audit(const std::string& group, const LossFn& loss, const ParamList& inputs,
                                const GradcheckOptions& options, std::uint64_t seed);

/// Audits MTWIG, SDM, IMHM, discriminator, loss and end-to-end paths of a
/// model built from `config` with parameters drawn from `seed`.
GradcheckReport run_gradcheck(const Config& config, std::uint64_t seed, const GradcheckOptions& options = {});

}  // namespace msmt

#endif  // MSMT_GRADCHECK_HPP
