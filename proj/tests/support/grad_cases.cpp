#include "grad_cases.hpp"

#include "random_tensors.hpp"
#include "sebert/encoder.hpp"
#include "sebert/ops.hpp"
#include "sebert/recurrent.hpp"
#include "sebert/span_head.hpp"

namespace sebert::testing {

namespace {

using T64 = Tensor64;
using Build = std::function<T64(Tape<double>&)>;

// sum(out * probe): a scalar whose gradient reaches every output element.
T64 project(Tape<double>& tape, const T64& out, const T64& probe) {
  return ops::sum(tape, ops::mul(tape, out, probe));
}

Shape random_shape(Rng& rng, std::size_t max_rows = 4, std::size_t max_cols = 5) {
  return {1 + rng.below(max_rows), 1 + rng.below(max_cols)};
}

template <typename Op>
GradCase unary_case(std::string name, Op op, bool avoid_zero = false) {
  return {name, [op, avoid_zero](Rng& rng) {
            const Shape s = random_shape(rng);
            T64 a = avoid_zero ? random_nonzero(s, rng) : random_tensor(s, rng, -2.0, 2.0);
            Tape<double> shape_tape(false);
            const T64 probe = probe_like(op(shape_tape, a), rng);
            return check_gradients([=](Tape<double>& t) { return project(t, op(t, a), probe); }, {a});
          }};
}

template <typename Op>
GradCase binary_case(std::string name, Op op) {
  return {name, [op](Rng& rng) {
            const Shape s = random_shape(rng);
            T64 a = random_tensor(s, rng);
            T64 b = random_tensor(s, rng, 0.5, 1.5);
            const T64 probe = probe_like(a, rng);
            return check_gradients([=](Tape<double>& t) { return project(t, op(t, a, b), probe); }, {a, b});
          }};
}

void randomize(std::vector<NamedTensor<double>> params, Rng& rng, double bound) {
  for (auto& p : params)
    for (auto& v : p.tensor.data()) v = rng.uniform(-bound, bound);
}

std::vector<T64> tensors_of(const ParamList<double>& list) {
  std::vector<T64> out;
  for (const auto& p : list) out.push_back(p.tensor);
  return out;
}

}  // namespace

std::vector<GradCase> primitive_grad_cases() {
  std::vector<GradCase> cases;
  cases.push_back(binary_case("add", [](Tape<double>& t, const T64& a, const T64& b) { return ops::add(t, a, b); }));
  cases.push_back(binary_case("sub", [](Tape<double>& t, const T64& a, const T64& b) { return ops::sub(t, a, b); }));
  cases.push_back(binary_case("mul", [](Tape<double>& t, const T64& a, const T64& b) { return ops::mul(t, a, b); }));
  cases.push_back({"mul_by_one_element", [](Rng& rng) {
                     T64 a = random_tensor(random_shape(rng), rng);
                     T64 c = random_tensor({1, 1}, rng);
                     const T64 probe = probe_like(a, rng);
                     return check_gradients([=](Tape<double>& t) { return project(t, ops::mul(t, a, c), probe); },
                                            {a, c});
                   }});
  cases.push_back(unary_case("scale", [](Tape<double>& t, const T64& a) { return ops::scale(t, a, -1.7); }));
  cases.push_back(unary_case("rsub", [](Tape<double>& t, const T64& a) { return ops::rsub(t, 0.3, a); }));
  cases.push_back(unary_case("sigmoid", [](Tape<double>& t, const T64& a) { return ops::sigmoid(t, a); }));
  cases.push_back(unary_case("tanh", [](Tape<double>& t, const T64& a) { return ops::tanh(t, a); }));
  cases.push_back(unary_case("relu", [](Tape<double>& t, const T64& a) { return ops::relu(t, a); }, true));
  cases.push_back(unary_case("transpose", [](Tape<double>& t, const T64& a) { return ops::transpose(t, a); }));
  cases.push_back({"sum", [](Rng& rng) {
                     T64 a = random_tensor(random_shape(rng), rng);
                     return check_gradients([=](Tape<double>& t) { return ops::scale(t, ops::sum(t, a), 0.7); }, {a});
                   }});
  cases.push_back({"mean", [](Rng& rng) {
                     T64 a = random_tensor(random_shape(rng), rng);
                     return check_gradients([=](Tape<double>& t) { return ops::mean(t, a); }, {a});
                   }});
  cases.push_back({"matmul", [](Rng& rng) {
                     const std::size_t m = 1 + rng.below(4), k = 1 + rng.below(4), n = 1 + rng.below(4);
                     T64 a = random_tensor({m, k}, rng);
                     T64 b = random_tensor({k, n}, rng);
                     const T64 probe = random_tensor<double>({m, n}, rng, -1, 1, false);
                     return check_gradients([=](Tape<double>& t) { return project(t, ops::matmul(t, a, b), probe); },
                                            {a, b});
                   }});
  cases.push_back({"linear", [](Rng& rng) {
                     const std::size_t m = 1 + rng.below(4), k = 1 + rng.below(4), n = 1 + rng.below(4);
                     T64 x = random_tensor({m, k}, rng);
                     T64 w = random_tensor({k, n}, rng);
                     T64 b = random_tensor({1, n}, rng);
                     const T64 probe = random_tensor<double>({m, n}, rng, -1, 1, false);
                     return check_gradients(
                         [=](Tape<double>& t) { return project(t, ops::linear(t, x, w, b), probe); }, {x, w, b});
                   }});
  cases.push_back({"masked_softmax", [](Rng& rng) {
                     const Shape s = random_shape(rng, 3, 6);
                     T64 a = random_tensor(s, rng, -2.0, 2.0);
                     const bool per_element = rng.bernoulli(0.5);
                     const auto mask = random_mask(per_element ? a.numel() : s[1], rng);
                     // A fully masked row would be degenerate; keep one slot per row.
                     auto m = mask;
                     if (per_element)
                       for (std::size_t r = 0; r < s[0]; ++r) m[r * s[1]] = true;
                     const T64 probe = probe_like(a, rng);
                     return check_gradients(
                         [=](Tape<double>& t) { return project(t, ops::masked_softmax(t, a, m), probe); }, {a});
                   }});
  cases.push_back({"masked_log_softmax+cross_entropy", [](Rng& rng) {
                     const std::size_t n = 1 + rng.below(8);
                     T64 a = random_tensor({1, n}, rng, -2.0, 2.0);
                     const auto mask = random_mask(n, rng);
                     std::size_t target = rng.below(n);
                     while (!mask[target]) target = rng.below(n);
                     return check_gradients(
                         [=](Tape<double>& t) {
                           return ops::cross_entropy(t, ops::masked_log_softmax(t, a, mask), target);
                         },
                         {a});
                   }});
  cases.push_back({"concat", [](Rng& rng) {
                     const std::size_t axis = rng.below(2);
                     const std::size_t r = 1 + rng.below(3), c = 1 + rng.below(3);
                     T64 a = random_tensor({r, c}, rng);
                     T64 b = random_tensor(axis == 0 ? Shape{1 + rng.below(3), c} : Shape{r, 1 + rng.below(3)}, rng);
                     Tape<double> shape_tape(false);
                     const T64 probe = probe_like(ops::concat(shape_tape, {a, b}, axis), rng);
                     return check_gradients(
                         [=](Tape<double>& t) { return project(t, ops::concat(t, {a, b}, axis), probe); },
                         {a, b});
                   }});
  cases.push_back({"slice_rows", [](Rng& rng) {
                     T64 a = random_tensor({2 + rng.below(4), 1 + rng.below(4)}, rng);
                     const std::size_t begin = rng.below(a.rows());
                     const std::size_t count = 1 + rng.below(a.rows() - begin);
                     const T64 probe = random_tensor<double>({count, a.cols()}, rng, -1, 1, false);
                     return check_gradients(
                         [=](Tape<double>& t) { return project(t, ops::slice_rows(t, a, begin, count), probe); }, {a});
                   }});
  cases.push_back({"slice_cols", [](Rng& rng) {
                     T64 a = random_tensor({1 + rng.below(4), 2 + rng.below(4)}, rng);
                     const std::size_t begin = rng.below(a.cols());
                     const std::size_t count = 1 + rng.below(a.cols() - begin);
                     const T64 probe = random_tensor<double>({a.rows(), count}, rng, -1, 1, false);
                     return check_gradients(
                         [=](Tape<double>& t) { return project(t, ops::slice_cols(t, a, begin, count), probe); }, {a});
                   }});
  cases.push_back({"reshape", [](Rng& rng) {
                     const std::size_t r = 1 + rng.below(4), c = 1 + rng.below(4);
                     T64 a = random_tensor({r, c}, rng);
                     const T64 probe = random_tensor<double>({c, r}, rng, -1, 1, false);
                     return check_gradients(
                         [=](Tape<double>& t) { return project(t, ops::reshape(t, a, Shape{c, r}), probe); }, {a});
                   }});
  cases.push_back({"embedding_lookup", [](Rng& rng) {
                     const std::size_t v = 2 + rng.below(5), d = 1 + rng.below(4), n = 1 + rng.below(6);
                     T64 table = random_tensor({v, d}, rng);
                     std::vector<int> ids(n);
                     for (auto& id : ids) id = static_cast<int>(rng.below(v));  // repeats on purpose
                     const T64 probe = random_tensor<double>({n, d}, rng, -1, 1, false);
                     return check_gradients(
                         [=](Tape<double>& t) {
                           return project(t, ops::embedding_lookup(t, table, std::span<const int>(ids)), probe);
                         },
                         {table});
                   }});
  cases.push_back({"layer_norm", [](Rng& rng) {
                     const std::size_t m = 1 + rng.below(4), n = 2 + rng.below(5);
                     T64 x = random_tensor({m, n}, rng, -2.0, 2.0);
                     T64 g = random_tensor({1, n}, rng, 0.5, 1.5);
                     T64 b = random_tensor({1, n}, rng);
                     const T64 probe = random_tensor<double>({m, n}, rng, -1, 1, false);
                     return check_gradients(
                         [=](Tape<double>& t) { return project(t, ops::layer_norm(t, x, g, b), probe); }, {x, g, b});
                   }});
  for (auto cell : {CellType::Lstm, CellType::Gru}) {
    cases.push_back({cell_name(cell) + "_step", [cell](Rng& rng) {
                       const std::size_t in = 1 + rng.below(4), hid = 1 + rng.below(4);
                       auto p = RecurrentParams<double>::init(cell, in, hid, rng);
                       ParamList<double> list;
                       p.append_parameters("", list);
                       randomize(list, rng, 1.0);
                       T64 x = random_tensor({1, in}, rng);
                       T64 h = random_tensor({1, hid}, rng);
                       T64 c = random_tensor({1, hid}, rng);
                       const T64 probe = random_tensor<double>({1, hid}, rng, -1, 1, false);
                       auto inputs = tensors_of(list);
                       inputs.insert(inputs.end(), {x, h, c});
                       return check_gradients(
                           [=](Tape<double>& t) {
                             if (cell == CellType::Gru) return project(t, gru_step(t, x, h, p), probe);
                             const auto next = lstm_step(t, x, CellState<double>{h, c}, p);
                             return ops::add(t, project(t, next.h, probe), project(t, next.c, probe));
                           },
                           inputs);
                     }});
    cases.push_back({"bidirectional_" + cell_name(cell), [cell](Rng& rng) {
                       const std::size_t n = 1 + rng.below(5), in = 1 + rng.below(3), hid = 1 + rng.below(3);
                       auto fwd = RecurrentParams<double>::init(cell, in, hid, rng);
                       auto bwd = RecurrentParams<double>::init(cell, in, hid, rng);
                       ParamList<double> list;
                       fwd.append_parameters("f.", list);
                       bwd.append_parameters("b.", list);
                       T64 seq = random_tensor({n, in}, rng);
                       const auto mask = random_mask(n, rng);
                       const T64 probe = random_tensor<double>({n, 2 * hid}, rng, -1, 1, false);
                       auto inputs = tensors_of(list);
                       inputs.push_back(seq);
                       return check_gradients(
                           [=](Tape<double>& t) { return project(t, bidirectional_encode(t, seq, mask, fwd, bwd), probe); },
                           inputs);
                     }});
  }
  cases.push_back({"span_head+span_loss", [](Rng& rng) {
                     const std::size_t n = 3 + rng.below(6), w = 1 + rng.below(4);
                     auto head = SpanHeadParams<double>::init(w, rng);
                     ParamList<double> list;
                     head.append_parameters("", list);
                     randomize(list, rng, 1.0);
                     T64 hidden = random_tensor({n, w}, rng);
                     const std::size_t first = 1 + rng.below(n - 2);
                     const std::size_t last = first + rng.below(n - 1 - first);
                     const SpanRange text{first, last};
                     const std::size_t s = first + rng.below(last - first + 1);
                     const SpanRange gold{s, s + rng.below(last - s + 1)};
                     auto inputs = tensors_of(list);
                     inputs.push_back(hidden);
                     return check_gradients(
                         [=](Tape<double>& t) { return span_loss(t, score(t, hidden, head, text), gold); }, inputs);
                   }});
  return cases;
}

GradCheckResult composed_grad_trial(Rng& rng) {
  EncoderConfig cfg;
  cfg.d_model = 4;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_ff = 6;
  cfg.max_len = 4;
  cfg.vocab_size = 7;
  cfg.dropout = 0.0;
  cfg.activation = FeedForwardActivation::Tanh;
  const std::size_t n = 4, hid = 3;
  Encoder<double> encoder(cfg, rng);
  auto fwd = RecurrentParams<double>::init(CellType::Lstm, cfg.d_model, hid, rng);
  auto bwd = RecurrentParams<double>::init(CellType::Lstm, cfg.d_model, hid, rng);
  auto head = SpanHeadParams<double>::init(2 * hid, rng);
  ParamList<double> list;
  encoder.append_parameters("encoder.", list);
  fwd.append_parameters("forward.", list);
  bwd.append_parameters("backward.", list);
  head.append_parameters("head.", list);
  randomize(list, rng, 1.0);

  std::vector<int> ids(n), segs(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = static_cast<int>(rng.below(cfg.vocab_size));
    segs[i] = i < 3 ? 0 : 1;
  }
  const std::vector<bool> mask(n, true);
  const SpanRange text{1, 2};
  const std::size_t s = 1 + rng.below(2);
  const SpanRange gold{s, s + rng.below(3 - s)};
  return check_gradients(
      [=, &encoder](Tape<double>& t) {
        const auto enc = encoder.encode(t, ids, segs, mask);
        const auto seq = bidirectional_encode(t, enc.hidden, mask, fwd, bwd);
        return span_loss(t, score(t, seq, head, text), gold);
      },
      tensors_of(list));
}

}  // namespace sebert::testing
