#pragma once

// Differentiable primitives. Binary elementwise ops need identical shapes;
// the only broadcast allowed is a one-element tensor against any tensor.
// linear() adds its bias row to every row as part of the op itself.

#include <cstddef>
#include <span>
#include <vector>

#include "sebert/tensor.hpp"

namespace sebert::ops {

template <typename T> using TensorT = BasicTensor<T>;

template <typename T> TensorT<T> add(Tape<T>& tape, const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> sub(Tape<T>& tape, const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> mul(Tape<T>& tape, const TensorT<T>& a, const TensorT<T>& b);
/// c * a for a constant c.
template <typename T> TensorT<T> scale(Tape<T>& tape, const TensorT<T>& a, T c);
/// c - a for a constant c.
template <typename T> TensorT<T> rsub(Tape<T>& tape, T c, const TensorT<T>& a);

template <typename T> TensorT<T> sigmoid(Tape<T>& tape, const TensorT<T>& a);
template <typename T> TensorT<T> tanh(Tape<T>& tape, const TensorT<T>& a);
template <typename T> TensorT<T> relu(Tape<T>& tape, const TensorT<T>& a);

/// [m x k] * [k x n] -> [m x n]
template <typename T> TensorT<T> matmul(Tape<T>& tape, const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> transpose(Tape<T>& tape, const TensorT<T>& a);
/// x * w + bias, where bias is [1 x n] and is added to every row.
template <typename T>
TensorT<T> linear(Tape<T>& tape, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& bias);

template <typename T> TensorT<T> sum(Tape<T>& tape, const TensorT<T>& a);
template <typename T> TensorT<T> mean(Tape<T>& tape, const TensorT<T>& a);

/// Softmax over the last axis restricted to positions where mask is true.
/// Masked positions get exactly 0. `mask` covers either every element or one
/// row (shared by all rows).
template <typename T>
TensorT<T> masked_softmax(Tape<T>& tape, const TensorT<T>& logits, const std::vector<bool>& mask);
/// Log of masked_softmax, computed stably; masked positions hold -inf.
template <typename T>
TensorT<T> masked_log_softmax(Tape<T>& tape, const TensorT<T>& logits, const std::vector<bool>& mask);
/// -logprobs[target] as a one-element tensor.
template <typename T>
TensorT<T> cross_entropy(Tape<T>& tape, const TensorT<T>& logprobs, std::size_t target);

/// 2-D concatenation along axis 0 (rows) or 1 (columns).
template <typename T>
TensorT<T> concat(Tape<T>& tape, const std::vector<TensorT<T>>& parts, std::size_t axis);
template <typename T>
TensorT<T> slice_rows(Tape<T>& tape, const TensorT<T>& a, std::size_t begin, std::size_t count);
template <typename T>
TensorT<T> slice_cols(Tape<T>& tape, const TensorT<T>& a, std::size_t begin, std::size_t count);
template <typename T> TensorT<T> reshape(Tape<T>& tape, const TensorT<T>& a, Shape shape);

/// Rows of `table` selected by ids -> [ids.size() x d].
template <typename T>
TensorT<T> embedding_lookup(Tape<T>& tape, const TensorT<T>& table, std::span<const int> ids);

/// Row-wise layer normalization with gain/bias rows of width n.
template <typename T>
TensorT<T> layer_norm(Tape<T>& tape, const TensorT<T>& x, const TensorT<T>& gain, const TensorT<T>& bias,
                      T eps = T(1e-5));

}  // namespace sebert::ops
