// SPDX-License-Identifier: Apache-2.0
#include "msmt/sdm.hpp"

#include <iomanip>
#include <ostream>

namespace msmt {

GridSpec GridSpec::make(std::size_t side, std::size_t cells) {
  if (side == 0 || cells == 0 || side % cells != 0) {
    throw ShapeError("grid of " + std::to_string(cells) + " cells does not divide side " + std::to_string(side));
  }
  return {side, cells};
}

namespace {

void check_map(const char* op, const Tensor& x, const GridSpec& grid) {
  if (x.rank() != 3 || x.dim(0) != grid.side || x.dim(1) != grid.side) {
    throw ShapeError(std::string(op) + ": expected a " + std::to_string(grid.side) + "x" +
                     std::to_string(grid.side) + " feature map, got " + to_string(x.shape()));
  }
}

// Flat offsets into an [s, s, C] map for each cell-layout position.
std::vector<std::size_t> cell_order(const GridSpec& grid, std::size_t channels) {
  const std::size_t h = grid.cells, p = grid.cell_pixels(), s = grid.side;
  std::vector<std::size_t> order;
  order.reserve(s * s);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < h; ++j)
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b)
          order.push_back((cell_to_pixel(i, a, p) * s + cell_to_pixel(j, b, p)) * channels);
  return order;
}

}  // namespace

SdmParams SdmParams::create(ParamInit& init, std::size_t word_dim, std::size_t feature_dim,
                            std::size_t memory_dim, std::size_t grid_cells) {
  SdmParams p;
  p.word_gate = init.scaled({1, word_dim}, word_dim);
  p.region_gate = init.scaled({grid_cells, grid_cells, feature_dim}, feature_dim);
  p.word_encoder = Linear::create(init, word_dim, memory_dim);
  p.region_encoder = Conv2d::create(init, 3, feature_dim, memory_dim);
  p.key = Conv2d::create(init, 3, memory_dim, 3 * feature_dim);
  p.value = Conv2d::create(init, 3, memory_dim, feature_dim);
  p.query_global = Conv2d::create(init, 3, feature_dim, feature_dim);
  p.query_grid = Conv2d::create(init, 3, feature_dim, feature_dim);
  p.query_pixel = Conv2d::create(init, 3, feature_dim, feature_dim);
  return p;
}

void SdmParams::collect(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".word_gate", word_gate});
  out.push_back({prefix + ".region_gate", region_gate});
  word_encoder.collect(out, prefix + ".word_encoder");
  region_encoder.collect(out, prefix + ".region_encoder");
  key.collect(out, prefix + ".key");
  value.collect(out, prefix + ".value");
  query_global.collect(out, prefix + ".query_global");
  query_grid.collect(out, prefix + ".query_grid");
  query_pixel.collect(out, prefix + ".query_pixel");
}

Tensor grid_average(const Tensor& features, const GridSpec& grid) {
  check_map("grid_average", features, grid);
  return avg_pool(features, grid.cell_pixels());
}

Tensor gather_cells(const Tensor& features, const GridSpec& grid) {
  check_map("gather_cells", features, grid);
  const std::size_t c = features.dim(2), h = grid.cells, p = grid.cell_pixels();
  auto order = cell_order(grid, c);
  const auto xv = features.data();
  std::vector<double> out(xv.size());
  for (std::size_t k = 0; k < order.size(); ++k)
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(order[k]), c, out.begin() + static_cast<std::ptrdiff_t>(k * c));
  return make_op_result("gather_cells", {h, h, p, p, c}, std::move(out), {features},
                        [order = std::move(order), c](detail::Node& self) {
                          auto& gx = self.inputs[0]->grad_buffer();
                          for (std::size_t k = 0; k < order.size(); ++k)
                            for (std::size_t ch = 0; ch < c; ++ch) gx[order[k] + ch] += self.grad[k * c + ch];
                        });
}

Tensor scatter_cells(const Tensor& cells, const GridSpec& grid) {
  const std::size_t h = grid.cells, p = grid.cell_pixels(), s = grid.side;
  const Shape& cs = cells.shape();
  if (cs.size() != 5 || cs[0] != h || cs[1] != h || cs[2] != p || cs[3] != p) {
    throw ShapeError("scatter_cells: expected [" + std::to_string(h) + ", " + std::to_string(h) + ", " +
                     std::to_string(p) + ", " + std::to_string(p) + ", C], got " + to_string(cs));
  }
  const std::size_t c = cs[4];
  auto order = cell_order(grid, c);
  const auto ev = cells.data();
  std::vector<double> out(ev.size());
  for (std::size_t k = 0; k < order.size(); ++k)
    std::copy_n(ev.begin() + static_cast<std::ptrdiff_t>(k * c), c, out.begin() + static_cast<std::ptrdiff_t>(order[k]));
  return make_op_result("scatter_cells", {s, s, c}, std::move(out), {cells},
                        [order = std::move(order), c](detail::Node& self) {
                          auto& ge = self.inputs[0]->grad_buffer();
                          for (std::size_t k = 0; k < order.size(); ++k)
                            for (std::size_t ch = 0; ch < c; ++ch) ge[k * c + ch] += self.grad[order[k] + ch];
                        });
}

MemoryBank write_memory(const Tensor& words, const Tensor& grid_features, const SdmParams& params) {
  const std::size_t h = params.grid_cells();
  const std::size_t n_r = params.feature_dim();
  if (words.rank() != 2 || words.dim(1) != params.word_gate.dim(1)) {
    throw ShapeError("write_memory: words must be [L, " + std::to_string(params.word_gate.dim(1)) + "], got " +
                     to_string(words.shape()));
  }
  if (grid_features.shape() != Shape{h, h, n_r}) {
    throw ShapeError("write_memory: grid features must be [" + std::to_string(h) + ", " + std::to_string(h) +
                     ", " + std::to_string(n_r) + "], got " + to_string(grid_features.shape()));
  }
  const std::size_t len = words.dim(0);
  const std::size_t n_m = params.word_encoder.weight.dim(1);

  Tensor word_logit = sum(mul(words, reshape(params.word_gate, {words.dim(1)})), 1);       // [L]
  Tensor region_logit = sum(mul(grid_features, params.region_gate), 2);                     // [h, h]
  Tensor logits = add(broadcast_to(reshape(word_logit, {len, 1, 1}), {len, h, h}), region_logit);
  Tensor gates = sigmoid(logits);

  const Shape slot_shape{len, h, h, n_m};
  Tensor word_content = broadcast_to(reshape(params.word_encoder(words), {len, 1, 1, n_m}), slot_shape);
  Tensor region_content = params.region_encoder(grid_features);  // [h, h, N_m]
  Tensor g = broadcast_to(reshape(gates, {len, h, h, 1}), slot_shape);
  Tensor slots = add(mul(word_content, g), mul(rsub(1.0, g), region_content));
  return {slots, gates, grid_features};
}

QueryField build_queries(const Tensor& source, const GridSpec& grid, const SdmParams& params) {
  check_map("build_queries", source, grid);
  if (grid.cells != params.grid_cells()) throw ShapeError("build_queries: grid does not match head parameters");
  const std::size_t s = grid.side, h = grid.cells, p = grid.cell_pixels();
  const std::size_t n_r = params.feature_dim();

  Tensor q_global_map = params.query_global(source);
  Tensor q_grid_map = params.query_grid(source);
  Tensor q_pixel_map = params.query_pixel(source);

  QueryField q;
  q.global = mul(sum(reshape(q_global_map, {s * s, n_r}), 0), 1.0 / static_cast<double>(s * s));
  q.grid = avg_pool(q_grid_map, p);
  q.pixel = gather_cells(q_pixel_map, grid);
  const Shape field{h, h, p, p, n_r};
  q.assembled = concat({broadcast_to(q.global, field), broadcast_to(reshape(q.grid, {h, h, 1, 1, n_r}), field),
                        q.pixel},
                       4);
  return q;
}

AttentionField address_keys(const MemoryBank& bank, const QueryField& queries, const SdmParams& params) {
  const Shape& qs = queries.assembled.shape();
  const std::size_t len = bank.slots.dim(0), h = bank.slots.dim(1);
  Tensor keys = params.key(bank.slots);  // [L, h, h, D]
  const std::size_t d = keys.dim(3);
  if (qs.size() != 5 || qs[4] != d || qs[0] != h) {
    throw ShapeError("address_keys: key width " + std::to_string(d) + " does not match query field " +
                     to_string(qs));
  }
  const std::size_t p = qs[2];
  Tensor spread = broadcast_to(reshape(keys, {len, h, h, 1, 1, d}), {len, h, h, p, p, d});
  Tensor logits = sum(mul(spread, queries.assembled), 5);  // [L, h, h, p, p]
  return {keys, softmax(logits, 0)};
}

RefinementOutput read_values(const MemoryBank& bank, const AttentionField& attention, const GridSpec& grid,
                             const SdmParams& params) {
  Tensor values = params.value(bank.slots);  // [L, h, h, N_r]
  const std::size_t len = values.dim(0), h = values.dim(1), n_r = values.dim(3);
  const std::size_t p = grid.cell_pixels();
  if (attention.weights.shape() != Shape{len, h, h, p, p}) {
    throw ShapeError("read_values: attention field " + to_string(attention.weights.shape()) +
                     " does not match memory bank");
  }
  const Shape spread{len, h, h, p, p, n_r};
  Tensor v = broadcast_to(reshape(values, {len, h, h, 1, 1, n_r}), spread);
  Tensor a = broadcast_to(reshape(attention.weights, {len, h, h, p, p, 1}), spread);
  Tensor cells = sum(mul(a, v), 0);  // [h, h, p, p, N_r]
  return {cells, scatter_cells(cells, grid)};
}

SdmPass run_sdm(const Tensor& memory_source, const Tensor& words, const Tensor& query_source,
                const GridSpec& grid, const SdmParams& params) {
  SdmPass pass;
  pass.bank = write_memory(words, grid_average(memory_source, grid), params);
  pass.queries = build_queries(query_source, grid, params);
  pass.attention = address_keys(pass.bank, pass.queries, params);
  pass.output = read_values(pass.bank, pass.attention, grid, params);
  return pass;
}

void write_attention_csv(std::ostream& os, const AttentionField& attention) {
  const Shape& s = attention.weights.shape();
  const auto w = attention.weights.data();
  os << "l,i,j,a,b,alpha\n" << std::setprecision(17);
  std::size_t k = 0;
  for (std::size_t l = 0; l < s[0]; ++l)
    for (std::size_t i = 0; i < s[1]; ++i)
      for (std::size_t j = 0; j < s[2]; ++j)
        for (std::size_t a = 0; a < s[3]; ++a)
          for (std::size_t b = 0; b < s[4]; ++b) os << l << ',' << i << ',' << j << ',' << a << ',' << b << ',' << w[k++] << '\n';
}

}  // namespace msmt
