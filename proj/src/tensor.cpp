#include "sebert/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "sebert/errors.hpp"

namespace sebert {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor dimension sizes must be positive, got " + shape_str(shape));
}
}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor() = default;

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, bool requires_grad) : impl_(std::make_shared<Impl>()) {
  check_shape(shape);
  impl_->data.assign(shape_numel(shape), T(0));
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> values, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  check_shape(shape);
  if (values.size() != shape_numel(shape))
    throw DimensionError("value count " + std::to_string(values.size()) + " does not match shape " +
                         shape_str(shape));
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value, bool requires_grad) {
  return BasicTensor({1}, {value}, requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::row(std::vector<T> values, bool requires_grad) {
  const std::size_t n = values.size();
  return BasicTensor({1, n}, std::move(values), requires_grad);
}

template <typename T>
typename BasicTensor<T>::Impl& BasicTensor<T>::impl() const {
  if (!impl_) throw ContractError("use of an undefined tensor");
  return *impl_;
}

template <typename T>
const Shape& BasicTensor<T>::shape() const {
  return impl().shape;
}

template <typename T>
std::size_t BasicTensor<T>::numel() const {
  return impl().data.size();
}

template <typename T>
std::size_t BasicTensor<T>::rows() const {
  const auto& s = shape();
  if (s.size() != 2) throw DimensionError("expected a 2-D tensor, got " + shape_str(s));
  return s[0];
}

template <typename T>
std::size_t BasicTensor<T>::cols() const {
  const auto& s = shape();
  if (s.size() != 2) throw DimensionError("expected a 2-D tensor, got " + shape_str(s));
  return s[1];
}

template <typename T>
std::span<T> BasicTensor<T>::data() {
  return impl().data;
}

template <typename T>
std::span<const T> BasicTensor<T>::data() const {
  return impl().data;
}

template <typename T>
T& BasicTensor<T>::at(std::size_t r, std::size_t c) {
  const std::size_t n = cols();
  if (r >= rows() || c >= n) throw IndexError("index out of range for " + shape_str(shape()));
  return impl().data[r * n + c];
}

template <typename T>
T BasicTensor<T>::at(std::size_t r, std::size_t c) const {
  const std::size_t n = cols();
  if (r >= rows() || c >= n) throw IndexError("index out of range for " + shape_str(shape()));
  return impl().data[r * n + c];
}

template <typename T>
T BasicTensor<T>::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return impl().data[0];
}

template <typename T>
bool BasicTensor<T>::requires_grad() const {
  return impl().requires_grad;
}

template <typename T>
void BasicTensor<T>::set_requires_grad(bool flag) {
  impl().requires_grad = flag;
  if (!flag) impl().grad.clear();
}

template <typename T>
bool BasicTensor<T>::has_grad() const {
  return !impl().grad.empty();
}

template <typename T>
std::span<const T> BasicTensor<T>::grad() const {
  return impl().grad;
}

template <typename T>
std::span<T> BasicTensor<T>::grad_mut() {
  auto& im = impl();
  if (!im.requires_grad) throw ContractError("gradient requested for a tensor without requires_grad");
  if (im.grad.empty()) im.grad.assign(im.data.size(), T(0));
  return im.grad;
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  auto& g = impl().grad;
  std::fill(g.begin(), g.end(), T(0));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone() const {
  return BasicTensor(shape(), impl().data, false);
}

template <typename T>
void Tape<T>::record(BasicTensor<T> output, std::function<void()> backward) {
  entries_.push_back(Entry{std::move(output), std::move(backward)});
}

template <typename T>
void backward(Tape<T>& tape, const BasicTensor<T>& loss) {
  if (loss.numel() != 1)
    throw ContractError("backward needs a scalar loss, got shape " + shape_str(loss.shape()));
  const bool on_tape = std::any_of(tape.entries_.rbegin(), tape.entries_.rend(),
                                   [&](const auto& e) { return e.output.is(loss); });
  if (!on_tape) throw ContractError("loss was not produced on this tape");

  for (auto& e : tape.entries_) e.output.zero_grad();
  BasicTensor<T> seed = loss;
  seed.grad_mut()[0] = T(1);
  for (auto it = tape.entries_.rbegin(); it != tape.entries_.rend(); ++it) {
    if (it->output.has_grad()) it->backward();
  }
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template class Tape<float>;
template class Tape<double>;
template void backward<float>(Tape<float>&, const BasicTensor<float>&);
template void backward<double>(Tape<double>&, const BasicTensor<double>&);

}  // namespace sebert
