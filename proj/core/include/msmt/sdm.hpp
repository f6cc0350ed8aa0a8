// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_SDM_HPP
#define MSMT_SDM_HPP

#include <iosfwd>
#include <string>

#include "msmt/nn.hpp"

namespace msmt {

/// Coarse h x h partition of an s x s feature map; p = s / h pixels per cell side.
struct GridSpec {
  std::size_t side = 0;  // s
  std::size_t cells = 0; // h

  static GridSpec make(std::size_t side, std::size_t cells);
  std::size_t cell_pixels() const { return side / cells; }  // p
};

/// Pixel coordinate of offset `offset` inside cell `cell` (0-based): cell * p + offset.
constexpr std::size_t cell_to_pixel(std::size_t cell, std::size_t offset, std::size_t p) {
  return cell * p + offset;
}

/// Parameters of one memory head.
struct SdmParams {
  Tensor word_gate;    // A, [1, N_w]
  Tensor region_gate;  // B, one 1 x N_r row per cell: [h, h, N_r]
  Linear word_encoder; // M_w (1x1 convolution over words), N_w -> N_m
  Conv2d region_encoder;  // M_c, 3x3 over the grid, N_r -> N_m
  Conv2d key;          // phi_K, N_m -> 3 N_r
  Conv2d value;        // phi_V, N_m -> N_r
  Conv2d query_global; // N_r -> N_r, applied to the query source
  Conv2d query_grid;
  Conv2d query_pixel;

  static SdmParams create(ParamInit& init, std::size_t word_dim, std::size_t feature_dim,
                          std::size_t memory_dim, std::size_t grid_cells);
  std::size_t grid_cells() const { return region_gate.dim(0); }
  std::size_t feature_dim() const { return region_gate.dim(2); }
  void collect(ParamList& out, const std::string& prefix) const;
};

struct MemoryBank {
  Tensor slots;  // m, [L, h, h, N_m]
  Tensor gates;  // g^w, [L, h, h]
  Tensor grid;   // C, [h, h, N_r]
};

struct QueryField {
  Tensor global;     // [N_r]
  Tensor grid;       // [h, h, N_r]
  Tensor pixel;      // [h, h, p, p, N_r]
  Tensor assembled;  // [h, h, p, p, 3 N_r]
};

struct AttentionField {
  Tensor keys;     // phi_K(m), [L, h, h, 3 N_r]
  Tensor weights;  // alpha, [L, h, h, p, p]
};

struct RefinementOutput {
  Tensor cells;     // e, [h, h, p, p, N_r]
  Tensor features;  // O, [s, s, N_r]
};

/// Mean of each p x p block: [s, s, C] -> [h, h, C].
Tensor grid_average(const Tensor& features, const GridSpec& grid);

/// [s, s, C] -> [h, h, p, p, C], pixel (i p + a, j p + b) to cell entry (i, j, a, b).
Tensor gather_cells(const Tensor& features, const GridSpec& grid);
/// Inverse of gather_cells: o[i p + a, j p + b] = e[i, j, a, b].
Tensor scatter_cells(const Tensor& cells, const GridSpec& grid);

MemoryBank write_memory(const Tensor& words, const Tensor& grid_features, const SdmParams& params);
QueryField build_queries(const Tensor& source, const GridSpec& grid, const SdmParams& params);
AttentionField address_keys(const MemoryBank& bank, const QueryField& queries, const SdmParams& params);
RefinementOutput read_values(const MemoryBank& bank, const AttentionField& attention, const GridSpec& grid,
                             const SdmParams& params);

struct SdmPass {
  MemoryBank bank;
  QueryField queries;
  AttentionField attention;
  RefinementOutput output;
};

/// One head: memory from (memory_source, words), queries from query_source.
SdmPass run_sdm(const Tensor& memory_source, const Tensor& words, const Tensor& query_source,
                const GridSpec& grid, const SdmParams& params);

/// CSV dump "l,i,j,a,b,alpha" with 0-based indices.
void write_attention_csv(std::ostream& os, const AttentionField& attention);

}  // namespace msmt

#endif  // MSMT_SDM_HPP
