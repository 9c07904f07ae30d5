#include "acdnet/tensor.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace acdnet {

namespace {
thread_local bool g_grad_enabled = true;
}

std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << '(' << s.n << ", " << s.c << ", " << s.h << ", " << s.w << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  impl_->shape = shape;
  impl_->data.assign(shape.numel(), 0.0);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl>()) {
  if (values.size() != shape.numel()) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) +
                     " does not match shape " + to_string(shape));
  }
  impl_->shape = shape;
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  return Tensor(shape, std::vector<double>(shape.numel(), value), requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return impl_->data[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  return Tensor(shape(), impl_->data, false);
}

void Tensor::backward() const { acdnet::backward(*this); }

ComputeGraph trace(const Tensor& root) {
  ComputeGraph graph;
  if (!root.defined()) return graph;

  // Iterative post-order DFS; inputs are visited in recorded order so the
  // resulting schedule is a pure function of the graph structure.
  std::unordered_set<const detail::TensorImpl*> visited;
  struct Frame {
    std::shared_ptr<detail::TensorImpl> impl;
    std::size_t next_input;
  };
  std::vector<Frame> stack;
  stack.push_back({root.impl(), 0});
  visited.insert(root.impl().get());
  while (!stack.empty()) {
    Frame& top = stack.back();
    const auto& node = top.impl->producer;
    if (node && top.next_input < node->inputs.size()) {
      auto child = node->inputs[top.next_input++];
      if (child->producer && visited.insert(child.get()).second) {
        stack.push_back({std::move(child), 0});
      }
      continue;
    }
    if (node) graph.nodes.push_back({top.impl, node});
    stack.pop_back();
  }
  return graph;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward() requires a scalar loss");
  }
  const ComputeGraph graph = trace(loss);
  loss.impl()->grad_buffer()[0] += 1.0;
  for (auto it = graph.nodes.rbegin(); it != graph.nodes.rend(); ++it) {
    const auto& out = *it->output;
    if (out.grad.empty()) continue;
    it->node->backward(out.grad, it->node->inputs);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(Shape shape, std::vector<double> values, std::string_view op,
                   std::vector<Tensor> inputs, detail::BackwardFn backward) {
  Tensor out(shape, std::move(values));
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;

  auto node = std::make_shared<detail::Node>();
  node->op = std::string(op);
  node->inputs.reserve(inputs.size());
  for (const auto& in : inputs) node->inputs.push_back(in.impl());
  node->backward = std::move(backward);
  out.impl()->producer = std::move(node);
  out.set_requires_grad(true);
  return out;
}

Tensor roll_width(const Tensor& input, std::ptrdiff_t shift) {
  const Shape s = input.shape();
  Tensor out(s);
  const auto w = static_cast<std::ptrdiff_t>(s.w);
  if (w == 0) return out;
  auto src = input.data();
  auto dst = out.mutable_data();
  const std::ptrdiff_t k = ((shift % w) + w) % w;
  for (std::size_t row = 0; row < s.n * s.c * s.h; ++row) {
    const double* in_row = src.data() + row * s.w;
    double* out_row = dst.data() + row * s.w;
    for (std::ptrdiff_t x = 0; x < w; ++x) out_row[(x + k) % w] = in_row[x];
  }
  return out;
}

std::uint64_t Rng::next_u64() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  return next_u64() % bound;
}

Tensor random_uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
  std::vector<double> v(shape.numel());
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(shape, std::move(v), requires_grad);
}

}  // namespace acdnet
