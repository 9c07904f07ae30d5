#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace acdnet {

/// Raised when operand shapes are incompatible with an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense NCHW extent. Every tensor in the engine is 4-D; vectors are stored
/// as (batch, length, 1, 1).
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t numel() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  std::size_t offset(std::size_t bn, std::size_t ch, std::size_t y, std::size_t x) const {
    return ((bn * c + ch) * h + y) * w + x;
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

class Tensor;

namespace detail {

struct TensorImpl;

using BackwardFn = std::function<void(std::span<const double> grad_out,
                                      std::span<const std::shared_ptr<TensorImpl>> inputs)>;

/// One recorded operation: the inputs it read and the closure that maps the
/// output gradient onto input gradients. Saved activations live in the closure.
struct Node {
  std::string op;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient reaches this tensor
  bool requires_grad = false;
  std::shared_ptr<Node> producer;

  std::span<double> grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Shared handle to a dense 64-bit tensor with optional gradient tracking.
///
/// Copies alias the same storage. Results of recorded operations are
/// immutable; only leaves should be written through `mutable_data()` (for
/// initialization, optimizer updates and finite-difference probes).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor full(Shape shape, double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return impl_->data[impl_->shape.offset(n, c, h, w)];
  }
  /// Value of a single-element tensor.
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const { return impl_->producer == nullptr; }

  bool has_grad() const { return !impl_->grad.empty(); }
  /// Accumulated gradient; empty span when nothing has been propagated yet.
  std::span<const double> grad() const { return impl_->grad; }
  void zero_grad();

  /// Copy of the values with no graph history.
  Tensor detach() const;

  /// Reverse-mode sweep from this scalar. See acdnet::backward.
  void backward() const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Topologically ordered record of the operations reachable from a root.
struct ComputeGraph {
  struct Entry {
    std::shared_ptr<detail::TensorImpl> output;
    std::shared_ptr<detail::Node> node;
  };
  std::vector<Entry> nodes;  // inputs before consumers
};

ComputeGraph trace(const Tensor& root);

/// Accumulates d(loss)/d(leaf) into every reachable leaf that requires grad.
/// Throws ShapeError when `loss` is not a single element.
void backward(const Tensor& loss);

/// Disables graph recording on this thread while alive.
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

/// Builds an op result. A node is attached only when recording is enabled and
/// at least one input requires grad.
Tensor make_result(Shape shape, std::vector<double> values, std::string_view op,
                   std::vector<Tensor> inputs, detail::BackwardFn backward);

/// Horizontal circular shift: out[..., x] = in[..., (x - shift) mod W].
/// Not recorded.
Tensor roll_width(const Tensor& input, std::ptrdiff_t shift);

/// Deterministic SplitMix64 generator with explicit uniform/normal mapping so
/// that streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

Tensor random_uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false);

}  // namespace acdnet
