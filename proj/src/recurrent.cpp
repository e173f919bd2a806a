#include "sebert/recurrent.hpp"

#include <cmath>

#include "sebert/errors.hpp"
#include "sebert/ops.hpp"

namespace sebert {

std::size_t gate_count(CellType cell) { return cell == CellType::Lstm ? 4 : 3; }

std::string cell_name(CellType cell) { return cell == CellType::Lstm ? "lstm" : "gru"; }

CellType parse_cell(const std::string& name) {
  if (name == "lstm") return CellType::Lstm;
  if (name == "gru") return CellType::Gru;
  throw ContractError("unknown cell type '" + name + "' (expected lstm or gru)");
}

template <typename T>
RecurrentParams<T> RecurrentParams<T>::init(CellType cell, std::size_t input_size, std::size_t hidden_size,
                                            Rng& rng) {
  if (input_size == 0 || hidden_size == 0) throw ContractError("recurrent sizes must be positive");
  RecurrentParams p;
  p.cell = cell;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  const double w_bound = 1.0 / std::sqrt(static_cast<double>(input_size));
  const double u_bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  for (std::size_t g = 0; g < gate_count(cell); ++g) {
    GateParams<T> gp;
    gp.w = uniform_param<T>({input_size, hidden_size}, w_bound, rng);
    gp.u = uniform_param<T>({hidden_size, hidden_size}, u_bound, rng);
    gp.b = constant_param<T>({1, hidden_size}, T(0));
    p.gates.push_back(std::move(gp));
  }
  return p;
}

template <typename T>
void RecurrentParams<T>::append_parameters(const std::string& prefix, ParamList<T>& out) const {
  static const char* lstm_names[] = {"forget", "input", "output", "candidate"};
  static const char* gru_names[] = {"update", "reset", "candidate"};
  for (std::size_t g = 0; g < gates.size(); ++g) {
    const std::string gp = prefix + (cell == CellType::Lstm ? lstm_names[g] : gru_names[g]) + ".";
    out.push_back({gp + "w", gates[g].w});
    out.push_back({gp + "u", gates[g].u});
    out.push_back({gp + "b", gates[g].b});
  }
}

template <typename T>
void RecurrentParams<T>::validate() const {
  if (gates.size() != gate_count(cell))
    throw DimensionError(cell_name(cell) + " needs " + std::to_string(gate_count(cell)) + " gates, got " +
                         std::to_string(gates.size()));
  for (const auto& g : gates) {
    if (g.w.shape() != Shape{input_size, hidden_size} || g.u.shape() != Shape{hidden_size, hidden_size} ||
        g.b.shape() != Shape{1, hidden_size})
      throw DimensionError("gate shapes " + shape_str(g.w.shape()) + ", " + shape_str(g.u.shape()) + ", " +
                           shape_str(g.b.shape()) + " do not match input " + std::to_string(input_size) +
                           " / hidden " + std::to_string(hidden_size));
  }
}

template <typename T>
CellState<T> zero_state(CellType cell, std::size_t hidden_size) {
  CellState<T> s;
  s.h = BasicTensor<T>({1, hidden_size});
  if (cell == CellType::Lstm) s.c = BasicTensor<T>({1, hidden_size});
  return s;
}

namespace {

// l W + h U + b, summed in that order.
template <typename T>
BasicTensor<T> preactivation(Tape<T>& tape, const BasicTensor<T>& input, const BasicTensor<T>& h,
                             const GateParams<T>& g) {
  return ops::add(tape, ops::add(tape, ops::matmul(tape, input, g.w), ops::matmul(tape, h, g.u)), g.b);
}

template <typename T>
void check_step_shapes(const BasicTensor<T>& input, const BasicTensor<T>& h, const RecurrentParams<T>& p) {
  if (input.shape() != Shape{1, p.input_size})
    throw DimensionError("recurrent input " + shape_str(input.shape()) + " expected [1x" +
                         std::to_string(p.input_size) + "]");
  if (h.shape() != Shape{1, p.hidden_size})
    throw DimensionError("recurrent state " + shape_str(h.shape()) + " expected [1x" +
                         std::to_string(p.hidden_size) + "]");
}

}  // namespace

template <typename T>
CellState<T> lstm_step(Tape<T>& tape, const BasicTensor<T>& input, const CellState<T>& prev,
                       const RecurrentParams<T>& p, LstmTrace<T>* trace) {
  if (p.cell != CellType::Lstm) throw ContractError("lstm_step called with GRU parameters");
  check_step_shapes(input, prev.h, p);
  if (!prev.c.defined() || prev.c.shape() != prev.h.shape()) throw DimensionError("LSTM cell state missing or misshaped");

  auto f = ops::sigmoid(tape, preactivation(tape, input, prev.h, p.gate(LstmGate::Forget)));
  auto i = ops::sigmoid(tape, preactivation(tape, input, prev.h, p.gate(LstmGate::Input)));
  auto o = ops::sigmoid(tape, preactivation(tape, input, prev.h, p.gate(LstmGate::Output)));
  auto cand = ops::tanh(tape, preactivation(tape, input, prev.h, p.gate(LstmGate::Candidate)));
  CellState<T> next;
  next.c = ops::add(tape, ops::mul(tape, f, prev.c), ops::mul(tape, i, cand));
  next.h = ops::mul(tape, o, ops::tanh(tape, next.c));
  if (trace) *trace = {f, i, o, cand};
  return next;
}

template <typename T>
BasicTensor<T> gru_step(Tape<T>& tape, const BasicTensor<T>& input, const BasicTensor<T>& prev_h,
                        const RecurrentParams<T>& p, GruTrace<T>* trace) {
  if (p.cell != CellType::Gru) throw ContractError("gru_step called with LSTM parameters");
  check_step_shapes(input, prev_h, p);

  auto z = ops::sigmoid(tape, preactivation(tape, input, prev_h, p.gate(GruGate::Update)));
  auto r = ops::sigmoid(tape, preactivation(tape, input, prev_h, p.gate(GruGate::Reset)));
  auto cand = ops::tanh(tape, preactivation(tape, input, ops::mul(tape, r, prev_h), p.gate(GruGate::Candidate)));
  auto keep = ops::mul(tape, ops::rsub(tape, T(1), z), prev_h);
  if (trace) *trace = {z, r, cand};
  return ops::add(tape, keep, ops::mul(tape, z, cand));
}

template <typename T>
BasicTensor<T> bidirectional_encode(Tape<T>& tape, const BasicTensor<T>& seq, const std::vector<bool>& mask,
                                    const RecurrentParams<T>& forward, const RecurrentParams<T>& backward) {
  forward.validate();
  backward.validate();
  const std::size_t n = seq.rows();
  if (mask.size() != n) throw DimensionError("mask length differs from sequence length");
  if (seq.cols() != forward.input_size || seq.cols() != backward.input_size)
    throw DimensionError("sequence width " + std::to_string(seq.cols()) + " does not match recurrent input size");
  bool any = false;
  for (bool m : mask) any = any || m;
  if (!any) throw DegenerateMaskError("bidirectional_encode: every position is masked");

  auto run = [&](const RecurrentParams<T>& p, bool reverse) {
    std::vector<BasicTensor<T>> rows(n);
    CellState<T> state = zero_state<T>(p.cell, p.hidden_size);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t t = reverse ? n - 1 - k : k;
      if (!mask[t]) {
        rows[t] = BasicTensor<T>({1, p.hidden_size});
        continue;
      }
      auto x = ops::slice_rows(tape, seq, t, 1);
      if (p.cell == CellType::Lstm) {
        state = lstm_step(tape, x, state, p);
      } else {
        state.h = gru_step(tape, x, state.h, p);
      }
      rows[t] = state.h;
    }
    return n == 1 ? rows.front() : ops::concat(tape, rows, 0);
  };

  auto fwd = run(forward, false);
  auto bwd = run(backward, true);
  return ops::concat(tape, std::vector<BasicTensor<T>>{fwd, bwd}, 1);
}

#define SEBERT_INSTANTIATE_RECURRENT(T)                                                                     \
  template struct RecurrentParams<T>;                                                                       \
  template CellState<T> zero_state<T>(CellType, std::size_t);                                               \
  template CellState<T> lstm_step(Tape<T>&, const BasicTensor<T>&, const CellState<T>&,                      \
                                  const RecurrentParams<T>&, LstmTrace<T>*);                                \
  template BasicTensor<T> gru_step(Tape<T>&, const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                   const RecurrentParams<T>&, GruTrace<T>*);                                \
  template BasicTensor<T> bidirectional_encode(Tape<T>&, const BasicTensor<T>&, const std::vector<bool>&,   \
                                               const RecurrentParams<T>&, const RecurrentParams<T>&);

SEBERT_INSTANTIATE_RECURRENT(float)
SEBERT_INSTANTIATE_RECURRENT(double)

#undef SEBERT_INSTANTIATE_RECURRENT

}  // namespace sebert
