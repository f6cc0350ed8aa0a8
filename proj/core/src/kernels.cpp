// SPDX-License-Identifier: Apache-2.0
// Dense kernels (products, convolutions, resampling) on top of Eigen.
#include <Eigen/Core>
#include <string>

#include "msmt/ops.hpp"

namespace msmt {

namespace {

using detail::Node;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using ConstMapRow = Eigen::Map<const RowMat>;

std::vector<double>* grad_of(Node& self, std::size_t input) {
  Node& in = *self.inputs[input];
  return in.requires_grad ? &in.grad_buffer() : nullptr;
}

// Views a [H,W,C] or [N,H,W,C] tensor as N images.
struct ImageBatch {
  std::size_t n, h, w, c;
  bool batched;
};

ImageBatch as_images(const char* op, const Shape& s) {
  if (s.size() == 3) return {1, s[0], s[1], s[2], false};
  if (s.size() == 4) return {s[0], s[1], s[2], s[3], true};
  throw ShapeError(std::string(op) + ": expected [H,W,C] or [N,H,W,C], got " + to_string(s));
}

Shape image_shape(const ImageBatch& b, std::size_t h, std::size_t w, std::size_t c) {
  if (b.batched) return {b.n, h, w, c};
  return {h, w, c};
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: cannot multiply " + to_string(a.shape()) + " by " + to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  MapRow(out.data(), m, n).noalias() =
      ConstMapRow(a.data().data(), m, k) * ConstMapRow(b.data().data(), k, n);
  return make_op_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    ConstMapRow g(self.grad.data(), m, n);
    if (auto* ga = grad_of(self, 0)) {
      MapRow(ga->data(), m, k).noalias() += g * ConstMapRow(self.inputs[1]->value.data(), k, n).transpose();
    }
    if (auto* gb = grad_of(self, 1)) {
      MapRow(gb->data(), k, n).noalias() += ConstMapRow(self.inputs[0]->value.data(), m, k).transpose() * g;
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) throw ShapeError("linear: weight must be [in, out], got " + to_string(weight.shape()));
  Tensor y;
  if (x.rank() == 1) {
    y = reshape(matmul(reshape(x, {1, x.dim(0)}), weight), {weight.dim(1)});
  } else {
    y = matmul(x, weight);
  }
  return bias.defined() ? add(y, bias) : y;
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, Conv2dOptions options) {
  const auto img = as_images("conv2d", x.shape());
  const Shape& ks = kernel.shape();
  if (ks.size() != 4) throw ShapeError("conv2d: kernel must be [kh,kw,Cin,Cout], got " + to_string(ks));
  const std::size_t kh = ks[0], kw = ks[1], cout = ks[3];
  if (ks[2] != img.c) {
    throw ShapeError("conv2d: input has " + std::to_string(img.c) + " channels but kernel expects " +
                     std::to_string(ks[2]));
  }
  const std::size_t stride = options.stride;
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  std::size_t pad_h = 0, pad_w = 0;
  switch (options.padding) {
    case Padding::Same:
      if (stride != 1 || kh % 2 == 0 || kw % 2 == 0) {
        throw ShapeError("conv2d: same padding needs stride 1 and odd kernel sides");
      }
      pad_h = kh / 2;
      pad_w = kw / 2;
      break;
    case Padding::Valid:
      break;
    case Padding::Explicit:
      pad_h = pad_w = options.pad;
      break;
  }
  if (img.h + 2 * pad_h < kh || img.w + 2 * pad_w < kw) {
    throw ShapeError("conv2d: kernel " + to_string(ks) + " does not fit input " + to_string(x.shape()));
  }
  const std::size_t ho = (img.h + 2 * pad_h - kh) / stride + 1;
  const std::size_t wo = (img.w + 2 * pad_w - kw) / stride + 1;
  const std::size_t patch = kh * kw * img.c;
  const std::size_t rows = img.n * ho * wo;

  // im2col: one row per output pixel, columns ordered (ky, kx, c) like the kernel.
  auto cols = std::make_shared<std::vector<double>>(rows * patch, 0.0);
  const auto xv = x.data();
  for (std::size_t b = 0; b < img.n; ++b)
    for (std::size_t oy = 0; oy < ho; ++oy)
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double* dst = cols->data() + ((b * ho + oy) * wo + ox) * patch;
        for (std::size_t ky = 0; ky < kh; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad_h);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(img.h)) continue;
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad_w);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(img.w)) continue;
            const double* src = xv.data() + ((b * img.h + static_cast<std::size_t>(iy)) * img.w +
                                             static_cast<std::size_t>(ix)) * img.c;
            std::copy_n(src, img.c, dst + (ky * kw + kx) * img.c);
          }
        }
      }

  std::vector<double> out(rows * cout);
  MapRow(out.data(), rows, cout).noalias() =
      ConstMapRow(cols->data(), rows, patch) * ConstMapRow(kernel.data().data(), patch, cout);

  return make_op_result(
      "conv2d", image_shape(img, ho, wo, cout), std::move(out), {x, kernel},
      [=](Node& self) {
        ConstMapRow g(self.grad.data(), rows, cout);
        if (auto* gk = grad_of(self, 1)) {
          MapRow(gk->data(), patch, cout).noalias() += ConstMapRow(cols->data(), rows, patch).transpose() * g;
        }
        if (auto* gx = grad_of(self, 0)) {
          RowMat dcols = g * ConstMapRow(self.inputs[1]->value.data(), patch, cout).transpose();
          for (std::size_t b = 0; b < img.n; ++b)
            for (std::size_t oy = 0; oy < ho; ++oy)
              for (std::size_t ox = 0; ox < wo; ++ox) {
                const double* src = dcols.data() + ((b * ho + oy) * wo + ox) * patch;
                for (std::size_t ky = 0; ky < kh; ++ky) {
                  const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad_h);
                  if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(img.h)) continue;
                  for (std::size_t kx = 0; kx < kw; ++kx) {
                    const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad_w);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(img.w)) continue;
                    double* dst = gx->data() + ((b * img.h + static_cast<std::size_t>(iy)) * img.w +
                                                static_cast<std::size_t>(ix)) * img.c;
                    const double* s = src + (ky * kw + kx) * img.c;
                    for (std::size_t c = 0; c < img.c; ++c) dst[c] += s[c];
                  }
                }
              }
        }
      });
}

Tensor conv1d(const Tensor& seq, const Tensor& kernel) {
  if (seq.rank() != 2) throw ShapeError("conv1d: sequence must be [L, Cin], got " + to_string(seq.shape()));
  if (kernel.rank() != 3) throw ShapeError("conv1d: kernel must be [ks, Cin, Cout], got " + to_string(kernel.shape()));
  const std::size_t len = seq.dim(0), cin = seq.dim(1);
  const std::size_t ks = kernel.dim(0), cout = kernel.dim(2);
  if (kernel.dim(1) != cin) {
    throw ShapeError("conv1d: sequence has " + std::to_string(cin) + " channels but kernel expects " +
                     std::to_string(kernel.dim(1)));
  }
  if (len < ks) {
    throw ShapeError("conv1d: sequence length " + std::to_string(len) + " is shorter than kernel size " +
                     std::to_string(ks));
  }
  const std::size_t steps = len - ks + 1;
  const std::size_t patch = ks * cin;
  using Strided = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
  std::vector<double> out(steps * cout);
  // Window t is the contiguous run of rows t..t+ks-1.
  MapRow(out.data(), steps, cout).noalias() =
      Strided(seq.data().data(), steps, patch, Eigen::OuterStride<>(cin)) *
      ConstMapRow(kernel.data().data(), patch, cout);
  return make_op_result("conv1d", {steps, cout}, std::move(out), {seq, kernel}, [=](Node& self) {
    ConstMapRow g(self.grad.data(), steps, cout);
    if (auto* gk = grad_of(self, 1)) {
      MapRow(gk->data(), patch, cout).noalias() +=
          Strided(self.inputs[0]->value.data(), steps, patch, Eigen::OuterStride<>(cin)).transpose() * g;
    }
    if (auto* gs = grad_of(self, 0)) {
      RowMat dwin = g * ConstMapRow(self.inputs[1]->value.data(), patch, cout).transpose();
      for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t i = 0; i < patch; ++i) (*gs)[t * cin + i] += dwin(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
    }
  });
}

Tensor upsample_nearest(const Tensor& x, std::size_t factor) {
  const auto img = as_images("upsample_nearest", x.shape());
  if (factor == 0) throw ShapeError("upsample_nearest: factor must be positive");
  const std::size_t ho = img.h * factor, wo = img.w * factor;
  const auto xv = x.data();
  std::vector<double> out(img.n * ho * wo * img.c);
  for (std::size_t b = 0; b < img.n; ++b)
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t xx = 0; xx < wo; ++xx)
        std::copy_n(xv.data() + ((b * img.h + y / factor) * img.w + xx / factor) * img.c, img.c,
                    out.data() + ((b * ho + y) * wo + xx) * img.c);
  return make_op_result("upsample_nearest", image_shape(img, ho, wo, img.c), std::move(out), {x},
                        [=](Node& self) {
                          auto& gx = *grad_of(self, 0);
                          for (std::size_t b = 0; b < img.n; ++b)
                            for (std::size_t y = 0; y < ho; ++y)
                              for (std::size_t xx = 0; xx < wo; ++xx) {
                                double* dst = gx.data() + ((b * img.h + y / factor) * img.w + xx / factor) * img.c;
                                const double* src = self.grad.data() + ((b * ho + y) * wo + xx) * img.c;
                                for (std::size_t c = 0; c < img.c; ++c) dst[c] += src[c];
                              }
                        });
}

Tensor avg_pool(const Tensor& x, std::size_t factor) {
  const auto img = as_images("avg_pool", x.shape());
  if (factor == 0 || img.h % factor != 0 || img.w % factor != 0) {
    throw ShapeError("avg_pool: factor " + std::to_string(factor) + " does not divide " + to_string(x.shape()));
  }
  const std::size_t ho = img.h / factor, wo = img.w / factor;
  const double scale = 1.0 / static_cast<double>(factor * factor);
  const auto xv = x.data();
  std::vector<double> out(img.n * ho * wo * img.c, 0.0);
  for (std::size_t b = 0; b < img.n; ++b)
    for (std::size_t y = 0; y < img.h; ++y)
      for (std::size_t xx = 0; xx < img.w; ++xx) {
        const double* src = xv.data() + ((b * img.h + y) * img.w + xx) * img.c;
        double* dst = out.data() + ((b * ho + y / factor) * wo + xx / factor) * img.c;
        for (std::size_t c = 0; c < img.c; ++c) dst[c] += src[c] * scale;
      }
  return make_op_result("avg_pool", image_shape(img, ho, wo, img.c), std::move(out), {x},
                        [=](Node& self) {
                          auto& gx = *grad_of(self, 0);
                          for (std::size_t b = 0; b < img.n; ++b)
                            for (std::size_t y = 0; y < img.h; ++y)
                              for (std::size_t xx = 0; xx < img.w; ++xx) {
                                double* dst = gx.data() + ((b * img.h + y) * img.w + xx) * img.c;
                                const double* src = self.grad.data() + ((b * ho + y / factor) * wo + xx / factor) * img.c;
                                for (std::size_t c = 0; c < img.c; ++c) dst[c] += src[c] * scale;
                              }
                        });
}

}  // namespace msmt
