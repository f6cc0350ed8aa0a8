// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_MTWIG_HPP
#define MSMT_MTWIG_HPP

#include <string>
#include <vector>

#include "msmt/fusion.hpp"
#include "msmt/nn.hpp"
#include "msmt/text.hpp"

namespace msmt {

struct MtwigShape {
  std::size_t augmented_dim = 16;  // N_ca
  std::size_t noise_dim = 8;       // N_z
  std::size_t word_dim = 16;       // N_w
  std::size_t conv_channels = 0;   // N_f; 0 means N_ca + N_z + N_w
  std::size_t feature_channels = 8;  // N_r
  std::size_t kernel_size = 3;     // ks of the 1-D convolution
  std::size_t resolution = 16;     // s0, a power of two >= 4

  std::size_t input_dim() const { return augmented_dim + noise_dim + word_dim; }
  std::size_t f_channels() const { return conv_channels ? conv_channels : input_dim(); }
  /// Number of upsampling blocks from the 4x4 seed to s0.
  std::size_t tower_depth() const;
  /// Channels of the 4x4 seed map.
  std::size_t seed_channels() const;
  /// Output channels of each tower block, ending at N_r.
  std::vector<std::size_t> tower_channels() const;
};

/// Word n-gram tails: F = conv1d(inputs) [T, N_f] and one feature map per row.
struct TailSequence {
  Tensor conv_out;
  std::vector<Tensor> tails;  // each [s0, s0, N_r]
  std::size_t kernel_size = 0;

  std::size_t count() const { return tails.size(); }
};

/// Number of tails for a caption of `length` words: length - ks + 1.
std::size_t tail_count(std::size_t length, std::size_t kernel_size);

/// concat(s', z, w_l) for every word, as rows of an [L, N_ca + N_z + N_w] matrix.
Tensor make_tail_inputs(const TextBatch& batch, std::size_t kernel_size);

/// Initial generation stage: one tail per n-gram, folded by gated fusion.
class MtwigStage {
 public:
  static MtwigStage create(ParamInit& init, const MtwigShape& shape);

  const MtwigShape& shape() const { return shape_; }

  TailSequence generate_tails(const Tensor& inputs) const;
  /// Left fold S_{1:t} = fuse(S_{1:t-1}, S_t); returns R_1.
  Tensor fuse_tails(const TailSequence& tails) const;
  /// 3x3 convolution then tanh: [s, s, N_r] -> [s, s, 3].
  Tensor predict_image(const Tensor& features) const;

  struct Output {
    TailSequence tails;
    Tensor features;  // R_1
    Tensor image;
  };
  Output forward(const TextBatch& batch) const;

  void collect(ParamList& out, const std::string& prefix) const;

  // Parameters, exposed for tests and audits.
  Tensor sequence_kernel;  // V, [ks, N_in, N_f]
  Tensor sequence_bias;    // [N_f]
  Linear seed;             // N_f -> 4 * 4 * C0
  std::vector<Conv2d> tower;
  FusionParams fusion;
  Conv2d to_image;

 private:
  MtwigShape shape_;
};

/// Shared 3x3 image head used by every stage.
Tensor predict_image(const Conv2d& head, const Tensor& features);

}  // namespace msmt

#endif  // MSMT_MTWIG_HPP
