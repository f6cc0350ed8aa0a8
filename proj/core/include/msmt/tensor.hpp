// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_TENSOR_HPP
#define MSMT_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace msmt {

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string to_string(const Shape& shape);

/// Raised for any shape or argument violation detected by an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

struct Node;
using BackwardFn = std::function<void(Node& self)>;

/// One vertex of the computation graph. Value and gradient are row-major.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, only when requires_grad
  bool requires_grad = false;
  bool consumed = false;     // set after the graph through this node was backpropagated
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  bool is_leaf() const { return inputs.empty() && !backward; }
  std::vector<double>& grad_buffer();
};

}  // namespace detail

/// Dense row-major array of doubles with optional reverse-mode gradient.
///
/// Copies share the underlying node, so a Tensor behaves like a handle.
/// Operations build a graph only when gradient recording is enabled and at
/// least one input requires a gradient.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  /// Direct write access. Only meaningful on leaves (parameters, inputs).
  std::span<double> mutable_data();
  double item() const;
  double operator[](std::size_t flat_index) const { return data()[flat_index]; }
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  /// Accumulated gradient; all zeros when none has been accumulated yet.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// A leaf holding a copy of this value, cut from the graph.
  Tensor detach() const;

  /// Backpropagates from this scalar. The traversed graph is released, so a
  /// second call without a fresh forward pass throws std::logic_error.
  void backward() const;

  const char* op_name() const;
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  // Graph plumbing for operation implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  detail::Node& node() const;
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Gradient recording switch, scoped. Thread-local.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Builds the result of a differentiable operation. `backward` is recorded
/// only if recording is enabled and some input requires a gradient.
Tensor make_op_result(const char* op, Shape shape, std::vector<double> value,
                      std::vector<Tensor> inputs, detail::BackwardFn backward);

/// Fingerprint of the branch decisions (activation signs, clamp hits) taken by
/// piecewise operations while a probe is active. Gradient audits use it to
/// detect finite-difference stencils that straddle a kink.
class BranchProbe {
 public:
  BranchProbe();
  ~BranchProbe();
  BranchProbe(const BranchProbe&) = delete;
  BranchProbe& operator=(const BranchProbe&) = delete;

  std::uint64_t fingerprint() const;

 private:
  bool previous_active_;
  std::uint64_t previous_hash_;
};

namespace detail {
bool branch_probe_active();
void record_branch(bool taken);
}  // namespace detail

}  // namespace msmt

#endif  // MSMT_TENSOR_HPP
