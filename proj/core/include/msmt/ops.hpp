// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_OPS_HPP
#define MSMT_OPS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "msmt/tensor.hpp"

namespace msmt {

/// Slope used wherever a nonlinearity is left open by the architecture.
inline constexpr double kLeakySlope = 0.2;

// Elementwise binary operations. `b` must have the same shape as `a`, be a
// single element, or match the trailing dimensions of `a`. The result always
// has the shape of `a`.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, double b);
Tensor mul(const Tensor& a, double b);
Tensor neg(const Tensor& a);
/// c - a
Tensor rsub(double c, const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator+(const Tensor& a, double b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, double b) { return add(a, -b); }
inline Tensor operator*(const Tensor& a, double b) { return mul(a, b); }
inline Tensor operator*(double b, const Tensor& a) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, double b) { return mul(a, 1.0 / b); }
inline Tensor operator-(double c, const Tensor& a) { return rsub(c, a); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = kLeakySlope);
/// Gradient passes only where lo < x < hi.
Tensor clamp(const Tensor& x, double lo, double hi);

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// x [in] or [rows,in], weight [in,out], bias [out] (may be undefined).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

enum class Padding { Same, Valid, Explicit };

struct Conv2dOptions {
  std::size_t stride = 1;
  Padding padding = Padding::Same;
  std::size_t pad = 0;  // only read for Padding::Explicit
};

/// x [H,W,Cin] or [N,H,W,Cin]; kernel [kh,kw,Cin,Cout].
/// Same padding requires stride 1 and odd kernel sides.
Tensor conv2d(const Tensor& x, const Tensor& kernel, Conv2dOptions options = {});

/// seq [L,Cin]; kernel [ks,Cin,Cout]; stride 1, no padding -> [L-ks+1, Cout].
Tensor conv1d(const Tensor& seq, const Tensor& kernel);

/// Replicates each pixel into a factor x factor block. [H,W,C] or [N,H,W,C].
Tensor upsample_nearest(const Tensor& x, std::size_t factor = 2);
/// Mean over non-overlapping factor x factor blocks. [H,W,C] or [N,H,W,C].
Tensor avg_pool(const Tensor& x, std::size_t factor);

/// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);

Tensor sum(const Tensor& x);
/// Reduces `axis` away.
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
/// Right-aligned broadcast: every dimension of x is 1 or equals the target.
Tensor broadcast_to(const Tensor& x, const Shape& shape);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// x[index, ...]
Tensor select(const Tensor& x, std::size_t index);
/// Stacks equal-shaped tensors along a new leading axis.
Tensor stack(const std::vector<Tensor>& parts);

/// Rows of `table` [V,D] picked by `ids` -> [ids.size(), D].
Tensor embedding(const Tensor& table, std::span<const std::size_t> ids);

/// Cosine similarity of two equally sized tensors, treated as flat vectors.
/// Defined as 0 (with zero gradient) when either vector is zero.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

}  // namespace msmt

#endif  // MSMT_OPS_HPP
