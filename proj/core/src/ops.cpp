// SPDX-License-Identifier: Apache-2.0
#include "msmt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace msmt {

namespace {

using detail::Node;

std::vector<double>* grad_of(Node& self, std::size_t input) {
  Node& in = *self.inputs[input];
  return in.requires_grad ? &in.grad_buffer() : nullptr;
}

bool trailing_match(const Shape& a, const Shape& b) {
  if (b.size() > a.size()) return false;
  return std::equal(b.begin(), b.end(), a.end() - static_cast<std::ptrdiff_t>(b.size()));
}

void check_broadcastable(const char* op, const Tensor& a, const Tensor& b) {
  if (b.numel() == 1 || a.shape() == b.shape() || trailing_match(a.shape(), b.shape())) return;
  throw ShapeError(std::string(op) + ": shape " + to_string(b.shape()) +
                   " cannot broadcast onto " + to_string(a.shape()));
}

// y = f(a, b); dy/da = fa(a, b, y), dy/db = fb(a, b, y). b index is i % nb.
template <class F, class Fa, class Fb>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F f, Fa fa, Fb fb) {
  check_broadcastable(op, a, b);
  const auto av = a.data();
  const auto bv = b.data();
  const std::size_t n = av.size();
  const std::size_t nb = bv.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(av[i], bv[i % nb]);
  return make_op_result(op, a.shape(), std::move(out), {a, b}, [fa, fb, nb](Node& self) {
    const auto& x = self.inputs[0]->value;
    const auto& y = self.inputs[1]->value;
    const auto& g = self.grad;
    if (auto* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * fa(x[i], y[i % nb], self.value[i]);
    }
    if (auto* gb = grad_of(self, 1)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % nb] += g[i] * fb(x[i], y[i % nb], self.value[i]);
    }
  });
}

// y = f(x); dy/dx = df(x, y).
template <class F, class Df>
Tensor unary(const char* op, const Tensor& x, F f, Df df) {
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return make_op_result(op, x.shape(), std::move(out), {x}, [df](Node& self) {
    auto* gx = grad_of(self, 0);
    const auto& xs = self.inputs[0]->value;
    for (std::size_t i = 0; i < self.grad.size(); ++i) (*gx)[i] += self.grad[i] * df(xs[i], self.value[i]);
  });
}

struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Tensor add(const Tensor& a, double b) {
  return unary(
      "add_scalar", a, [b](double x) { return x + b; }, [](double, double) { return 1.0; });
}

Tensor mul(const Tensor& a, double b) {
  return unary(
      "mul_scalar", a, [b](double x) { return x * b; }, [b](double, double) { return b; });
}

Tensor neg(const Tensor& a) { return mul(a, -1.0); }

Tensor rsub(double c, const Tensor& a) {
  return unary(
      "rsub", a, [c](double x) { return c - x; }, [](double, double) { return -1.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(
      "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
  return unary(
      "sqrt", x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Tensor square(const Tensor& x) {
  return unary(
      "square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor relu(const Tensor& x) { return leaky_relu(x, 0.0); }

Tensor leaky_relu(const Tensor& x, double slope) {
  if (detail::branch_probe_active()) {
    for (double v : x.data()) detail::record_branch(v > 0);
  }
  return unary(
      "leaky_relu", x, [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (detail::branch_probe_active()) {
    for (double v : x.data()) detail::record_branch(v > lo && v < hi);
  }
  return unary(
      "clamp", x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const auto s = split_axis(x.shape(), axis);
  const auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double mx = xv[base];
      for (std::size_t k = 1; k < s.n; ++k) mx = std::max(mx, xv[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.n; ++k) {
        const double e = std::exp(xv[base + k * s.inner] - mx);
        out[base + k * s.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < s.n; ++k) out[base + k * s.inner] /= total;
    }
  }
  return make_op_result("softmax", x.shape(), std::move(out), {x}, [s](Node& self) {
    auto& gx = *grad_of(self, 0);
    const auto& y = self.value;
    const auto& g = self.grad;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.n * s.inner + in;
        double dot = 0.0;
        for (std::size_t k = 0; k < s.n; ++k) dot += g[base + k * s.inner] * y[base + k * s.inner];
        for (std::size_t k = 0; k < s.n; ++k) {
          const std::size_t i = base + k * s.inner;
          gx[i] += y[i] * (g[i] - dot);
        }
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  const auto xv = x.data();
  const double total = std::accumulate(xv.begin(), xv.end(), 0.0);
  return make_op_result("sum", {}, {total}, {x}, [](Node& self) {
    auto& gx = *grad_of(self, 0);
    for (auto& v : gx) v += self.grad[0];
  });
}

Tensor sum(const Tensor& x, std::size_t axis) {
  const auto s = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const auto xv = x.data();
  std::vector<double> out(s.outer * s.inner, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.n; ++k)
      for (std::size_t in = 0; in < s.inner; ++in)
        out[o * s.inner + in] += xv[(o * s.n + k) * s.inner + in];
  return make_op_result("sum_axis", std::move(out_shape), std::move(out), {x}, [s](Node& self) {
    auto& gx = *grad_of(self, 0);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t k = 0; k < s.n; ++k)
        for (std::size_t in = 0; in < s.inner; ++in)
          gx[(o * s.n + k) * s.inner + in] += self.grad[o * s.inner + in];
  });
}

Tensor mean(const Tensor& x) { return mul(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel_of(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_op_result("reshape", std::move(shape), std::move(out), {x}, [](Node& self) {
    auto& gx = *grad_of(self, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
  const Shape& src = x.shape();
  if (src.size() > shape.size()) {
    throw ShapeError("broadcast_to: " + to_string(src) + " has higher rank than " + to_string(shape));
  }
  const std::size_t offset = shape.size() - src.size();
  // Source stride per target axis, 0 on broadcast axes.
  std::vector<std::size_t> stride(shape.size(), 0);
  std::size_t running = 1;
  for (std::size_t i = src.size(); i-- > 0;) {
    const std::size_t t = i + offset;
    if (src[i] == shape[t]) {
      stride[t] = running;
    } else if (src[i] != 1) {
      throw ShapeError("broadcast_to: cannot broadcast " + to_string(src) + " to " + to_string(shape));
    }
    running *= src[i];
  }
  const std::size_t n = numel_of(shape);
  std::vector<std::size_t> source(n);
  std::vector<std::size_t> idx(shape.size(), 0);
  std::size_t src_flat = 0;
  for (std::size_t i = 0; i < n; ++i) {
    source[i] = src_flat;
    for (std::size_t ax = shape.size(); ax-- > 0;) {
      if (++idx[ax] < shape[ax]) {
        src_flat += stride[ax];
        break;
      }
      src_flat -= stride[ax] * (shape[ax] - 1);
      idx[ax] = 0;
    }
  }
  const auto xv = x.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = xv[source[i]];
  return make_op_result("broadcast_to", shape, std::move(out), {x},
                        [source = std::move(source)](Node& self) {
                          auto& gx = *grad_of(self, 0);
                          for (std::size_t i = 0; i < source.size(); ++i) gx[source[i]] += self.grad[i];
                        });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + to_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;  // per part: dims[axis] * inner
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == first[i];
    if (!ok) throw ShapeError("concat: incompatible shapes " + to_string(first) + " and " + to_string(s));
    out_shape[axis] += s[axis];
    widths.push_back(s[axis] * inner);
  }
  const std::size_t row = out_shape[axis] * inner;
  std::vector<double> out(outer * row);
  std::size_t col = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto v = parts[p].data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(o * widths[p]), widths[p],
                  out.begin() + static_cast<std::ptrdiff_t>(o * row + col));
    col += widths[p];
  }
  return make_op_result("concat", std::move(out_shape), std::move(out), parts,
                        [widths, outer, row](Node& self) {
                          std::size_t c = 0;
                          for (std::size_t p = 0; p < widths.size(); ++p) {
                            if (auto* gp = grad_of(self, p)) {
                              for (std::size_t o = 0; o < outer; ++o)
                                for (std::size_t k = 0; k < widths[p]; ++k)
                                  (*gp)[o * widths[p] + k] += self.grad[o * row + c + k];
                            }
                            c += widths[p];
                          }
                        });
}

Tensor select(const Tensor& x, std::size_t index) {
  const Shape& s = x.shape();
  if (s.empty() || index >= s[0]) {
    throw ShapeError("select: index " + std::to_string(index) + " out of range for " + to_string(s));
  }
  Shape out_shape(s.begin() + 1, s.end());
  const std::size_t block = numel_of(out_shape);
  const auto xv = x.data();
  std::vector<double> out(xv.begin() + static_cast<std::ptrdiff_t>(index * block),
                          xv.begin() + static_cast<std::ptrdiff_t>((index + 1) * block));
  return make_op_result("select", std::move(out_shape), std::move(out), {x},
                        [offset = index * block](Node& self) {
                          auto& gx = *grad_of(self, 0);
                          for (std::size_t i = 0; i < self.grad.size(); ++i) gx[offset + i] += self.grad[i];
                        });
}

Tensor stack(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  const Shape& first = parts.front().shape();
  const std::size_t block = numel_of(first);
  std::vector<double> out;
  out.reserve(block * parts.size());
  for (const auto& p : parts) {
    if (p.shape() != first) {
      throw ShapeError("stack: shape " + to_string(p.shape()) + " differs from " + to_string(first));
    }
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  Shape out_shape{parts.size()};
  out_shape.insert(out_shape.end(), first.begin(), first.end());
  return make_op_result("stack", std::move(out_shape), std::move(out), parts, [block](Node& self) {
    for (std::size_t p = 0; p < self.inputs.size(); ++p) {
      if (auto* gp = grad_of(self, p)) {
        for (std::size_t i = 0; i < block; ++i) (*gp)[i] += self.grad[p * block + i];
      }
    }
  });
}

Tensor embedding(const Tensor& table, std::span<const std::size_t> ids) {
  if (table.rank() != 2) throw ShapeError("embedding: table must be [V, D], got " + to_string(table.shape()));
  if (ids.empty()) throw ShapeError("embedding: empty id sequence");
  const std::size_t vocab = table.dim(0);
  const std::size_t width = table.dim(1);
  std::vector<std::size_t> rows(ids.begin(), ids.end());
  std::vector<double> out(rows.size() * width);
  const auto tv = table.data();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= vocab) {
      throw ShapeError("embedding: id " + std::to_string(rows[r]) + " outside vocabulary of size " +
                       std::to_string(vocab));
    }
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(rows[r] * width), width,
                out.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return make_op_result("embedding", {rows.size(), width}, std::move(out), {table},
                        [rows, width](Node& self) {
                          auto& gt = *grad_of(self, 0);
                          for (std::size_t r = 0; r < rows.size(); ++r)
                            for (std::size_t c = 0; c < width; ++c)
                              gt[rows[r] * width + c] += self.grad[r * width + c];
                        });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) {
    throw ShapeError("cosine_similarity: sizes differ " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const auto av = a.data();
  const auto bv = b.data();
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    dot += av[i] * bv[i];
    aa += av[i] * av[i];
    bb += bv[i] * bv[i];
  }
  const double na = std::sqrt(aa);
  const double nb = std::sqrt(bb);
  const bool degenerate = na == 0.0 || nb == 0.0;
  const double c = degenerate ? 0.0 : dot / (na * nb);
  return make_op_result("cosine_similarity", {}, {c}, {a, b}, [na, nb, c, degenerate](Node& self) {
    if (degenerate) return;
    const auto& x = self.inputs[0]->value;
    const auto& y = self.inputs[1]->value;
    const double g = self.grad[0];
    if (auto* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < x.size(); ++i) (*ga)[i] += g * (y[i] / (na * nb) - c * x[i] / (na * na));
    }
    if (auto* gb = grad_of(self, 1)) {
      for (std::size_t i = 0; i < y.size(); ++i) (*gb)[i] += g * (x[i] / (na * nb) - c * y[i] / (nb * nb));
    }
  });
}

}  // namespace msmt
