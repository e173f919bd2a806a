#include "sebert/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sebert/errors.hpp"

namespace sebert::ops {

namespace {

template <typename T>
TensorT<T> make_output(Shape shape, bool track) {
  return TensorT<T>(std::move(shape), track);
}

// One-element operands broadcast against the other operand.
template <typename T>
Shape binary_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
  if (a.shape() == b.shape()) return a.shape();
  if (a.numel() == 1) return b.shape();
  if (b.numel() == 1) return a.shape();
  throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
}

template <typename T, typename Fwd, typename GradA, typename GradB>
TensorT<T> binary(Tape<T>& tape, const TensorT<T>& a, const TensorT<T>& b, const char* name, Fwd fwd,
                  GradA grad_a, GradB grad_b) {
  const Shape shape = binary_shape(a, b, name);
  const bool track = tape.should_record(a, b);
  TensorT<T> out = make_output<T>(shape, track);
  const std::size_t n = out.numel();
  const std::size_t sa = a.numel() == 1 ? 0 : 1;
  const std::size_t sb = b.numel() == 1 ? 0 : 1;
  {
    auto x = a.data();
    auto y = b.data();
    auto o = out.data();
    for (std::size_t i = 0; i < n; ++i) o[i] = fwd(x[i * sa], y[i * sb]);
  }
  if (track) {
    tape.record(out, [a = a, b = b, out, n, sa, sb, grad_a, grad_b]() mutable {
      auto g = out.grad();
      auto x = a.data();
      auto y = b.data();
      if (a.requires_grad()) {
        auto ga = a.grad_mut();
        for (std::size_t i = 0; i < n; ++i) ga[i * sa] += grad_a(x[i * sa], y[i * sb], g[i]);
      }
      if (b.requires_grad()) {
        auto gb = b.grad_mut();
        for (std::size_t i = 0; i < n; ++i) gb[i * sb] += grad_b(x[i * sa], y[i * sb], g[i]);
      }
    });
  }
  return out;
}

// Unary map whose derivative is expressed through input x and output y.
template <typename T, typename Fwd, typename Deriv>
TensorT<T> unary(Tape<T>& tape, const TensorT<T>& a, Fwd fwd, Deriv deriv) {
  const bool track = tape.should_record(a);
  TensorT<T> out = make_output<T>(a.shape(), track);
  const std::size_t n = a.numel();
  {
    auto x = a.data();
    auto o = out.data();
    for (std::size_t i = 0; i < n; ++i) o[i] = fwd(x[i]);
  }
  if (track) {
    tape.record(out, [a = a, out, n, deriv]() mutable {
      auto g = out.grad();
      auto x = a.data();
      auto y = out.data();
      auto ga = a.grad_mut();
      for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * deriv(x[i], y[i]);
    });
  }
  return out;
}

template <typename T>
void require_2d(const TensorT<T>& a, const char* op) {
  if (a.dim() != 2) throw DimensionError(std::string(op) + ": expected 2-D tensor, got " + shape_str(a.shape()));
}

// o[m x n] += a[m x k] * b[k x n]; per output element the k-terms are added
// in ascending k starting from the existing value.
template <typename T>
void gemm_nn(std::span<const T> a, std::span<const T> b, std::span<T> o, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* orow = o.data() + i * n;
    const T* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

std::size_t mask_row_stride(std::size_t mask_size, std::size_t numel, std::size_t last, const Shape& shape) {
  if (mask_size == numel) return last;
  if (mask_size == last) return 0;
  throw DimensionError("mask of size " + std::to_string(mask_size) + " does not fit logits " + shape_str(shape));
}

}  // namespace

template <typename T>
TensorT<T> add(Tape<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
  return binary(
      tape, a, b, "add", [](T x, T y) { return x + y; }, [](T, T, T g) { return g; },
      [](T, T, T g) { return g; });
}

template <typename T>
TensorT<T> sub(Tape<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
  return binary(
      tape, a, b, "sub", [](T x, T y) { return x - y; }, [](T, T, T g) { return g; },
      [](T, T, T g) { return -g; });
}

template <typename T>
TensorT<T> mul(Tape<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
  return binary(
      tape, a, b, "mul", [](T x, T y) { return x * y; }, [](T, T y, T g) { return g * y; },
      [](T x, T, T g) { return g * x; });
}

template <typename T>
TensorT<T> scale(Tape<T>& tape, const TensorT<T>& a, T c) {
  return unary(
      tape, a, [c](T x) { return c * x; }, [c](T, T) { return c; });
}

template <typename T>
TensorT<T> rsub(Tape<T>& tape, T c, const TensorT<T>& a) {
  return unary(
      tape, a, [c](T x) { return c - x; }, [](T, T) { return T(-1); });
}

template <typename T>
TensorT<T> sigmoid(Tape<T>& tape, const TensorT<T>& a) {
  return unary(
      tape, a, [](T x) { return T(1) / (T(1) + std::exp(-x)); }, [](T, T s) { return s * (T(1) - s); });
}

template <typename T>
TensorT<T> tanh(Tape<T>& tape, const TensorT<T>& a) {
  return unary(
      tape, a, [](T x) { return std::tanh(x); }, [](T, T t) { return T(1) - t * t; });
}

template <typename T>
TensorT<T> relu(Tape<T>& tape, const TensorT<T>& a) {
  return unary(
      tape, a, [](T x) { return x > T(0) ? x : T(0); }, [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
TensorT<T> matmul(Tape<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const bool track = tape.should_record(a, b);
  TensorT<T> out = make_output<T>({m, n}, track);
  gemm_nn<T>(a.data(), b.data(), out.data(), m, k, n);
  if (track) {
    tape.record(out, [a = a, b = b, out, m, k, n]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        // dA = G * B^T
        auto ga = a.grad_mut();
        auto bd = b.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            T acc = T(0);
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bd[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (b.requires_grad()) {
        // dB = A^T * G
        auto gb = b.grad_mut();
        auto ad = a.data();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const T av = ad[i * k + p];
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
          }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> transpose(Tape<T>& tape, const TensorT<T>& a) {
  require_2d(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  const bool track = tape.should_record(a);
  TensorT<T> out = make_output<T>({n, m}, track);
  auto x = a.data();
  auto o = out.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) o[j * m + i] = x[i * n + j];
  if (track) {
    tape.record(out, [a = a, out, m, n]() mutable {
      auto g = out.grad();
      auto ga = a.grad_mut();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
    });
  }
  return out;
}

template <typename T>
TensorT<T> linear(Tape<T>& tape, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& bias) {
  require_2d(x, "linear");
  require_2d(w, "linear");
  const std::size_t m = x.rows(), k = x.cols(), n = w.cols();
  if (w.rows() != k)
    throw DimensionError("linear: inner dimensions differ, " + shape_str(x.shape()) + " x " + shape_str(w.shape()));
  if (bias.shape() != Shape{1, n})
    throw DimensionError("linear: bias " + shape_str(bias.shape()) + " does not match output width " +
                         std::to_string(n));
  TensorT<T> prod = matmul(tape, x, w);
  const bool track = tape.should_record(prod, bias);
  TensorT<T> out = make_output<T>({m, n}, track);
  {
    auto p = prod.data();
    auto bd = bias.data();
    auto o = out.data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) o[i * n + j] = p[i * n + j] + bd[j];
  }
  if (track) {
    tape.record(out, [prod, bias = bias, out, m, n]() mutable {
      auto g = out.grad();
      if (prod.requires_grad()) {
        auto gp = prod.grad_mut();
        for (std::size_t i = 0; i < m * n; ++i) gp[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad_mut();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> sum(Tape<T>& tape, const TensorT<T>& a) {
  const bool track = tape.should_record(a);
  TensorT<T> out = make_output<T>({1}, track);
  T acc = T(0);
  for (T v : a.data()) acc += v;
  out.data()[0] = acc;
  if (track) {
    tape.record(out, [a = a, out]() mutable {
      const T g = out.grad()[0];
      for (auto& v : a.grad_mut()) v += g;
    });
  }
  return out;
}

template <typename T>
TensorT<T> mean(Tape<T>& tape, const TensorT<T>& a) {
  return scale(tape, sum(tape, a), T(1) / static_cast<T>(a.numel()));
}

template <typename T>
TensorT<T> masked_softmax(Tape<T>& tape, const TensorT<T>& logits, const std::vector<bool>& mask) {
  const std::size_t last = logits.shape().back();
  const std::size_t numel = logits.numel();
  const std::size_t rows = numel / last;
  const std::size_t mstride = mask_row_stride(mask.size(), numel, last, logits.shape());
  const bool track = tape.should_record(logits);
  TensorT<T> out = make_output<T>(logits.shape(), track);
  auto x = logits.data();
  auto y = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t off = r * last, moff = r * mstride;
    T mx = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < last; ++j)
      if (mask[moff + j]) {
        mx = any ? std::max(mx, x[off + j]) : x[off + j];
        any = true;
      }
    if (!any) throw DegenerateMaskError("masked_softmax: row " + std::to_string(r) + " is fully masked");
    T z = T(0);
    for (std::size_t j = 0; j < last; ++j) {
      const T e = mask[moff + j] ? std::exp(x[off + j] - mx) : T(0);
      y[off + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < last; ++j) y[off + j] /= z;
  }
  if (track) {
    tape.record(out, [logits = logits, out, rows, last]() mutable {
      auto g = out.grad();
      auto y = out.data();
      auto gx = logits.grad_mut();
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t off = r * last;
        T dot = T(0);
        for (std::size_t j = 0; j < last; ++j) dot += g[off + j] * y[off + j];
        for (std::size_t j = 0; j < last; ++j) gx[off + j] += y[off + j] * (g[off + j] - dot);
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> masked_log_softmax(Tape<T>& tape, const TensorT<T>& logits, const std::vector<bool>& mask) {
  const std::size_t last = logits.shape().back();
  const std::size_t numel = logits.numel();
  const std::size_t rows = numel / last;
  const std::size_t mstride = mask_row_stride(mask.size(), numel, last, logits.shape());
  const bool track = tape.should_record(logits);
  TensorT<T> out = make_output<T>(logits.shape(), track);
  auto x = logits.data();
  auto y = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t off = r * last, moff = r * mstride;
    T mx = T(0);
    bool any = false;
    for (std::size_t j = 0; j < last; ++j)
      if (mask[moff + j]) {
        mx = any ? std::max(mx, x[off + j]) : x[off + j];
        any = true;
      }
    if (!any) throw DegenerateMaskError("masked_log_softmax: row " + std::to_string(r) + " is fully masked");
    T z = T(0);
    for (std::size_t j = 0; j < last; ++j)
      if (mask[moff + j]) z += std::exp(x[off + j] - mx);
    const T lz = std::log(z);
    for (std::size_t j = 0; j < last; ++j)
      y[off + j] = mask[moff + j] ? x[off + j] - mx - lz : -std::numeric_limits<T>::infinity();
  }
  if (track) {
    tape.record(out, [logits = logits, out, rows, last, mask, mstride]() mutable {
      auto g = out.grad();
      auto y = out.data();
      auto gx = logits.grad_mut();
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t off = r * last, moff = r * mstride;
        T gs = T(0);
        for (std::size_t j = 0; j < last; ++j)
          if (mask[moff + j]) gs += g[off + j];
        for (std::size_t j = 0; j < last; ++j)
          if (mask[moff + j]) gx[off + j] += g[off + j] - std::exp(y[off + j]) * gs;
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> cross_entropy(Tape<T>& tape, const TensorT<T>& logprobs, std::size_t target) {
  if (target >= logprobs.numel())
    throw IndexError("cross_entropy: target " + std::to_string(target) + " outside " +
                     shape_str(logprobs.shape()));
  const bool track = tape.should_record(logprobs);
  TensorT<T> out = make_output<T>({1}, track);
  out.data()[0] = -logprobs.data()[target];
  if (track) {
    tape.record(out, [logprobs = logprobs, out, target]() mutable { logprobs.grad_mut()[target] -= out.grad()[0]; });
  }
  return out;
}

template <typename T>
TensorT<T> concat(Tape<T>& tape, const std::vector<TensorT<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of an empty list");
  if (axis > 1) throw DimensionError("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_2d(p, "concat");
  const std::size_t other = axis == 0 ? parts[0].cols() : parts[0].rows();
  std::size_t total = 0;
  bool track = false;
  for (const auto& p : parts) {
    const std::size_t o = axis == 0 ? p.cols() : p.rows();
    if (o != other)
      throw DimensionError("concat: " + shape_str(parts[0].shape()) + " and " + shape_str(p.shape()) +
                           " differ off the concat axis");
    total += axis == 0 ? p.rows() : p.cols();
    track = track || tape.should_record(p);
  }
  const Shape shape = axis == 0 ? Shape{total, other} : Shape{other, total};
  TensorT<T> out = make_output<T>(shape, track);
  const std::size_t out_cols = shape[1];
  auto o = out.data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    auto x = p.data();
    const std::size_t r = p.rows(), c = p.cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const std::size_t dst = axis == 0 ? (offset + i) * out_cols + j : i * out_cols + offset + j;
        o[dst] = x[i * c + j];
      }
    offset += axis == 0 ? r : c;
  }
  if (track) {
    tape.record(out, [parts = parts, out, axis, out_cols]() mutable {
      auto g = out.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t r = p.rows(), c = p.cols();
        if (p.requires_grad()) {
          auto gp = p.grad_mut();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
              const std::size_t src = axis == 0 ? (offset + i) * out_cols + j : i * out_cols + offset + j;
              gp[i * c + j] += g[src];
            }
        }
        offset += axis == 0 ? r : c;
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> slice_rows(Tape<T>& tape, const TensorT<T>& a, std::size_t begin, std::size_t count) {
  require_2d(a, "slice_rows");
  const std::size_t n = a.cols();
  if (count == 0 || begin + count > a.rows())
    throw IndexError("slice_rows: [" + std::to_string(begin) + ", +" + std::to_string(count) + ") outside " +
                     shape_str(a.shape()));
  const bool track = tape.should_record(a);
  TensorT<T> out = make_output<T>({count, n}, track);
  auto x = a.data();
  std::copy(x.begin() + begin * n, x.begin() + (begin + count) * n, out.data().begin());
  if (track) {
    tape.record(out, [a = a, out, begin, count, n]() mutable {
      auto g = out.grad();
      auto ga = a.grad_mut();
      for (std::size_t i = 0; i < count * n; ++i) ga[begin * n + i] += g[i];
    });
  }
  return out;
}

template <typename T>
TensorT<T> slice_cols(Tape<T>& tape, const TensorT<T>& a, std::size_t begin, std::size_t count) {
  require_2d(a, "slice_cols");
  const std::size_t m = a.rows(), n = a.cols();
  if (count == 0 || begin + count > n)
    throw IndexError("slice_cols: [" + std::to_string(begin) + ", +" + std::to_string(count) + ") outside " +
                     shape_str(a.shape()));
  const bool track = tape.should_record(a);
  TensorT<T> out = make_output<T>({m, count}, track);
  auto x = a.data();
  auto o = out.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < count; ++j) o[i * count + j] = x[i * n + begin + j];
  if (track) {
    tape.record(out, [a = a, out, begin, count, m, n]() mutable {
      auto g = out.grad();
      auto ga = a.grad_mut();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < count; ++j) ga[i * n + begin + j] += g[i * count + j];
    });
  }
  return out;
}

template <typename T>
TensorT<T> reshape(Tape<T>& tape, const TensorT<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw DimensionError("reshape: " + shape_str(a.shape()) + " cannot become " + shape_str(shape));
  const bool track = tape.should_record(a);
  TensorT<T> out(std::move(shape), std::vector<T>(a.data().begin(), a.data().end()), track);
  if (track) {
    tape.record(out, [a = a, out]() mutable {
      auto g = out.grad();
      auto ga = a.grad_mut();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

template <typename T>
TensorT<T> embedding_lookup(Tape<T>& tape, const TensorT<T>& table, std::span<const int> ids) {
  require_2d(table, "embedding_lookup");
  const std::size_t vocab = table.rows(), d = table.cols();
  if (ids.empty()) throw ContractError("embedding_lookup: empty id list");
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw IndexError("embedding_lookup: id " + std::to_string(id) + " outside table of " + std::to_string(vocab) +
                       " rows");
  const bool track = tape.should_record(table);
  TensorT<T> out = make_output<T>({ids.size(), d}, track);
  auto x = table.data();
  auto o = out.data();
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy_n(x.begin() + static_cast<std::size_t>(ids[i]) * d, d, o.begin() + i * d);
  if (track) {
    std::vector<int> idv(ids.begin(), ids.end());
    tape.record(out, [table = table, out, idv = std::move(idv), d]() mutable {
      auto g = out.grad();
      auto gt = table.grad_mut();
      for (std::size_t i = 0; i < idv.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) gt[static_cast<std::size_t>(idv[i]) * d + j] += g[i * d + j];
    });
  }
  return out;
}

template <typename T>
TensorT<T> layer_norm(Tape<T>& tape, const TensorT<T>& x, const TensorT<T>& gain, const TensorT<T>& bias, T eps) {
  require_2d(x, "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.shape() != Shape{1, n} || bias.shape() != Shape{1, n})
    throw DimensionError("layer_norm: gain " + shape_str(gain.shape()) + " / bias " + shape_str(bias.shape()) +
                         " do not match width " + std::to_string(n));
  const bool track = tape.should_record(x, gain, bias);
  TensorT<T> out = make_output<T>({m, n}, track);
  std::vector<T> xhat(m * n), rstd(m);
  auto xd = x.data();
  auto gd = gain.data();
  auto bd = bias.data();
  auto o = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    T mu = T(0);
    for (std::size_t j = 0; j < n; ++j) mu += xd[i * n + j];
    mu /= static_cast<T>(n);
    T var = T(0);
    for (std::size_t j = 0; j < n; ++j) {
      const T c = xd[i * n + j] - mu;
      var += c * c;
    }
    var /= static_cast<T>(n);
    rstd[i] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (xd[i * n + j] - mu) * rstd[i];
      o[i * n + j] = xhat[i * n + j] * gd[j] + bd[j];
    }
  }
  if (track) {
    tape.record(out, [x = x, gain = gain, bias = bias, out, m, n, xhat = std::move(xhat), rstd = std::move(rstd)]() mutable {
      auto g = out.grad();
      auto gd = gain.data();
      if (gain.requires_grad()) {
        auto gg = gain.grad_mut();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gg[j] += g[i * n + j] * xhat[i * n + j];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad_mut();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
      }
      if (x.requires_grad()) {
        auto gx = x.grad_mut();
        const T inv_n = T(1) / static_cast<T>(n);
        for (std::size_t i = 0; i < m; ++i) {
          T s1 = T(0), s2 = T(0);
          for (std::size_t j = 0; j < n; ++j) {
            const T dxh = g[i * n + j] * gd[j];
            s1 += dxh;
            s2 += dxh * xhat[i * n + j];
          }
          for (std::size_t j = 0; j < n; ++j) {
            const T dxh = g[i * n + j] * gd[j];
            gx[i * n + j] += rstd[i] * (dxh - s1 * inv_n - xhat[i * n + j] * s2 * inv_n);
          }
        }
      }
    });
  }
  return out;
}

#define SEBERT_INSTANTIATE_OPS(T)                                                                          \
  template TensorT<T> add(Tape<T>&, const TensorT<T>&, const TensorT<T>&);                                 \
  template TensorT<T> sub(Tape<T>&, const TensorT<T>&, const TensorT<T>&);                                 \
  template TensorT<T> mul(Tape<T>&, const TensorT<T>&, const TensorT<T>&);                                 \
  template TensorT<T> scale(Tape<T>&, const TensorT<T>&, T);                                               \
  template TensorT<T> rsub(Tape<T>&, T, const TensorT<T>&);                                                \
  template TensorT<T> sigmoid(Tape<T>&, const TensorT<T>&);                                                \
  template TensorT<T> tanh(Tape<T>&, const TensorT<T>&);                                                   \
  template TensorT<T> relu(Tape<T>&, const TensorT<T>&);                                                   \
  template TensorT<T> matmul(Tape<T>&, const TensorT<T>&, const TensorT<T>&);                              \
  template TensorT<T> transpose(Tape<T>&, const TensorT<T>&);                                              \
  template TensorT<T> linear(Tape<T>&, const TensorT<T>&, const TensorT<T>&, const TensorT<T>&);           \
  template TensorT<T> sum(Tape<T>&, const TensorT<T>&);                                                    \
  template TensorT<T> mean(Tape<T>&, const TensorT<T>&);                                                   \
  template TensorT<T> masked_softmax(Tape<T>&, const TensorT<T>&, const std::vector<bool>&);               \
  template TensorT<T> masked_log_softmax(Tape<T>&, const TensorT<T>&, const std::vector<bool>&);           \
  template TensorT<T> cross_entropy(Tape<T>&, const TensorT<T>&, std::size_t);                             \
  template TensorT<T> concat(Tape<T>&, const std::vector<TensorT<T>>&, std::size_t);                       \
  template TensorT<T> slice_rows(Tape<T>&, const TensorT<T>&, std::size_t, std::size_t);                   \
  template TensorT<T> slice_cols(Tape<T>&, const TensorT<T>&, std::size_t, std::size_t);                   \
  template TensorT<T> reshape(Tape<T>&, const TensorT<T>&, Shape);                                         \
  template TensorT<T> embedding_lookup(Tape<T>&, const TensorT<T>&, std::span<const int>);                 \
  template TensorT<T> layer_norm(Tape<T>&, const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, T);

SEBERT_INSTANTIATE_OPS(float)
SEBERT_INSTANTIATE_OPS(double)

#undef SEBERT_INSTANTIATE_OPS

}  // namespace sebert::ops
