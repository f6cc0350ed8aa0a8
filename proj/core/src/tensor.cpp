// SPDX-License-Identifier: Apache-2.0
#include "msmt/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace msmt {

namespace {
thread_local bool g_grad_enabled = true;
thread_local bool g_probe_active = false;
thread_local std::uint64_t g_probe_hash = 0;

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;
}  // namespace

std::size_t numel_of(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<double>& detail::Node::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

namespace {

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> values,
                                        bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
  }
  if (numel_of(shape) != values.size()) {
    throw ShapeError("shape " + to_string(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = numel_of(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = numel_of(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(make_leaf({}, {value}, requires_grad));
}

detail::Node& Tensor::node() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return node().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return node().value.size(); }

std::span<const double> Tensor::data() const { return node().value; }

std::span<double> Tensor::mutable_data() { return node().value; }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() needs a single-element tensor, got " + to_string(shape()));
  return node().value[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw ShapeError("index rank does not match " + to_string(s));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= s[axis]) throw ShapeError("index out of range for " + to_string(s));
    flat = flat * s[axis] + i;
    ++axis;
  }
  return node().value[flat];
}

bool Tensor::requires_grad() const { return node().requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  auto& n = node();
  if (!n.is_leaf()) throw std::logic_error("requires_grad can only be set on leaf tensors");
  n.requires_grad = flag;
}

std::span<const double> Tensor::grad() const {
  auto& n = node();
  if (!n.requires_grad) throw std::logic_error("tensor does not require a gradient");
  return n.grad_buffer();
}

std::span<double> Tensor::mutable_grad() {
  auto& n = node();
  if (!n.requires_grad) throw std::logic_error("tensor does not require a gradient");
  return n.grad_buffer();
}

void Tensor::zero_grad() {
  auto& n = node();
  if (!n.requires_grad) return;
  auto& g = n.grad_buffer();
  std::fill(g.begin(), g.end(), 0.0);
}

Tensor Tensor::detach() const {
  return Tensor(make_leaf(shape(), node().value, false));
}

const char* Tensor::op_name() const { return node().op; }

void Tensor::backward() const {
  auto& root = node();
  if (root.value.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + to_string(root.shape));
  }
  if (root.consumed) {
    throw std::logic_error("backward() called twice on the same graph; run a new forward pass first");
  }
  if (!root.requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [current, next] = stack.back();
    if (next < current->inputs.size()) {
      detail::Node* child = current->inputs[next++].get();
      if (child->consumed) {
        throw std::logic_error("backward() reached a graph that was already backpropagated");
      }
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(current);
      stack.pop_back();
    }
  }

  root.grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward) n->backward(*n);
  }
  // Release the graph: interior nodes drop their inputs and closures.
  for (detail::Node* n : order) {
    if (n->is_leaf()) continue;
    n->backward = nullptr;
    n->inputs.clear();
    n->grad.clear();
    n->grad.shrink_to_fit();
    n->consumed = true;
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_op_result(const char* op, Shape shape, std::vector<double> value,
                      std::vector<Tensor> inputs, detail::BackwardFn backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  if (numel_of(node->shape) != node->value.size()) {
    throw ShapeError(std::string(op) + ": result shape " + to_string(node->shape) +
                     " does not match value length");
  }
  if (g_grad_enabled) {
    bool any = std::any_of(inputs.begin(), inputs.end(),
                           [](const Tensor& t) { return t.defined() && t.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->inputs.reserve(inputs.size());
      for (auto& t : inputs) node->inputs.push_back(t.node_ptr());
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

BranchProbe::BranchProbe() : previous_active_(g_probe_active), previous_hash_(g_probe_hash) {
  g_probe_active = true;
  g_probe_hash = kFnvOffset;
}

BranchProbe::~BranchProbe() {
  g_probe_active = previous_active_;
  g_probe_hash = previous_hash_;
}

std::uint64_t BranchProbe::fingerprint() const { return g_probe_hash; }

bool detail::branch_probe_active() { return g_probe_active; }

void detail::record_branch(bool taken) {
  g_probe_hash = (g_probe_hash ^ (taken ? 0x9eU : 0x35U)) * kFnvPrime;
}

}  // namespace msmt
