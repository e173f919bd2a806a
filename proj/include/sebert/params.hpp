#pragma once

#include <string>
#include <vector>

#include "sebert/rng.hpp"
#include "sebert/tensor.hpp"

namespace sebert {

template <typename T>
struct NamedTensor {
  std::string name;
  BasicTensor<T> tensor;
};

/// Trainable tensors in a fixed, documented order.
template <typename T>
using ParamList = std::vector<NamedTensor<T>>;

/// Uniform in [-bound, bound], requires_grad set.
template <typename T>
BasicTensor<T> uniform_param(Shape shape, double bound, Rng& rng) {
  BasicTensor<T> t(std::move(shape), true);
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
BasicTensor<T> constant_param(Shape shape, T value) {
  BasicTensor<T> t(std::move(shape), true);
  for (auto& v : t.data()) v = value;
  return t;
}

}  // namespace sebert
