// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_IMHM_HPP
#define MSMT_IMHM_HPP

#include <string>
#include <vector>

#include "msmt/fusion.hpp"
#include "msmt/sdm.hpp"

namespace msmt {

struct RefinementShape {
  std::size_t input_resolution = 16;  // s of R_{k-1}
  std::size_t grid_cells = 4;         // h
  std::size_t head_count = 2;         // T
  std::size_t word_dim = 16;          // N_w
  std::size_t feature_dim = 8;        // N_r
  std::size_t memory_dim = 16;        // N_m
  std::size_t residual_blocks = 2;
};

struct ResidualBlock {
  Conv2d first;
  Conv2d second;

  Tensor operator()(const Tensor& x) const;
  void collect(ParamList& out, const std::string& prefix) const;
};

/// One refinement stage: T memory heads chained through gated fusion, a skip
/// fusion with the stage input, residual blocks, and one upsampling block.
class RefinementStage {
 public:
  static RefinementStage create(ParamInit& init, const RefinementShape& shape);

  const RefinementShape& shape() const { return shape_; }
  GridSpec grid() const { return GridSpec::make(shape_.input_resolution, shape_.grid_cells); }

  struct Output {
    Tensor features;                   // R_k, [2s, 2s, N_r]
    Tensor image;                      // [2s, 2s, 3]
    Tensor response;                   // skip-fused response, [s, s, N_r]
    std::vector<Tensor> head_outputs;  // O_1..O_T
    std::vector<Tensor> updates;       // U_1..U_T
    std::vector<MemoryBank> banks;
    std::size_t sdm_passes = 0;
    std::size_t fuse_calls = 0;
  };

  Output refine(const Tensor& previous, const Tensor& words) const;

  void collect(ParamList& out, const std::string& prefix) const;

  std::vector<SdmParams> heads;
  std::vector<FusionParams> head_fusion;  // (P_t, rho_t)
  FusionParams skip_fusion;
  std::vector<ResidualBlock> residual;
  Conv2d upsample;
  Conv2d to_image;

 private:
  RefinementShape shape_;
};

/// Checks that every head's memory was written from (previous, words) and not
/// from the iterated features. Returns false on the first mismatch.
bool memory_written_from_input(const RefinementStage& stage, const RefinementStage::Output& output,
                               const Tensor& previous, const Tensor& words);

}  // namespace msmt

#endif  // MSMT_IMHM_HPP
