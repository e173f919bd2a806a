#pragma once

// Dense row-major tensors with reverse-mode automatic differentiation.
//
// A BasicTensor is a handle: copies share storage and gradient, the same way
// autograd frameworks treat parameters. Use clone() for an independent copy.
// Operations record themselves on a Tape; backward() replays the tape in
// reverse and accumulates gradients into every tensor with requires_grad.
//
// Everything is templated on the scalar type. Training runs in float; the
// gradient and equation checks instantiate the same code with double.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sebert {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

template <typename T>
class BasicTensor {
 public:
  BasicTensor();
  explicit BasicTensor(Shape shape, bool requires_grad = false);
  BasicTensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static BasicTensor scalar(T value, bool requires_grad = false);
  static BasicTensor row(std::vector<T> values, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(impl_); }
  const Shape& shape() const;
  std::size_t numel() const;
  std::size_t dim() const { return shape().size(); }
  /// Rows/cols of a 2-D tensor.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<T> data();
  std::span<const T> data() const;
  T& at(std::size_t r, std::size_t c);
  T at(std::size_t r, std::size_t c) const;
  /// Value of a single-element tensor.
  T item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  /// True once a gradient buffer exists.
  bool has_grad() const;
  /// Gradient values; empty span when no gradient has been allocated.
  std::span<const T> grad() const;
  /// Gradient buffer, allocated zero-filled on first use.
  std::span<T> grad_mut();
  void zero_grad();

  /// Deep copy of values; the copy has no gradient and shares nothing.
  BasicTensor clone() const;
  /// Same storage identity.
  bool is(const BasicTensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
  Impl& impl() const;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

/// Ordered record of differentiable operations.
template <typename T>
class Tape {
 public:
  explicit Tape(bool enabled = true) : enabled_(enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool enabled() const noexcept { return enabled_; }
  std::size_t size() const noexcept { return entries_.size(); }
  void clear() { entries_.clear(); }

  /// Appends one operation. `backward` reads output's gradient and
  /// accumulates into the inputs it captured.
  void record(BasicTensor<T> output, std::function<void()> backward);

  /// True if any input requires grad and recording is on.
  template <typename... Ts>
  bool should_record(const Ts&... inputs) const {
    return enabled_ && (inputs.requires_grad() || ...);
  }

 private:
  struct Entry {
    BasicTensor<T> output;
    std::function<void()> backward;
  };
  bool enabled_;
  std::vector<Entry> entries_;

  template <typename U>
  friend void backward(Tape<U>& tape, const BasicTensor<U>& loss);
};

/// Reverse sweep from a scalar loss recorded on `tape`. Gradients of leaves
/// accumulate across calls; intermediate gradients are reset on each call.
template <typename T>
void backward(Tape<T>& tape, const BasicTensor<T>& loss);

}  // namespace sebert
