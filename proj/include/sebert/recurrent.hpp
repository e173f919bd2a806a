#pragma once

// Masked bidirectional recurrence over encoder outputs.
//
// LSTM step:
//   f = sigmoid(l W_f + h U_f + b_f)      i = sigmoid(l W_i + h U_i + b_i)
//   o = sigmoid(l W_o + h U_o + b_o)      c~ = tanh(l W_c + h U_c + b_c)
//   c' = f * c + i * c~                   h' = o * tanh(c')
// GRU step:
//   z = sigmoid(l W_z + h U_z + b_z)      r = sigmoid(l W_r + h U_r + b_r)
//   h~ = tanh(l W_h + (r * h) U_h + b_h)  h' = (1 - z) * h + z * h~
// Vectors are [1 x n] rows, so W is [input x hidden] and U is [hidden x hidden].

#include <cstddef>
#include <string>
#include <vector>

#include "sebert/params.hpp"
#include "sebert/rng.hpp"
#include "sebert/tensor.hpp"

namespace sebert {

enum class CellType { Lstm, Gru };

enum class LstmGate : std::size_t { Forget = 0, Input = 1, Output = 2, Candidate = 3 };
enum class GruGate : std::size_t { Update = 0, Reset = 1, Candidate = 2 };

std::size_t gate_count(CellType cell);
std::string cell_name(CellType cell);
CellType parse_cell(const std::string& name);

template <typename T>
struct GateParams {
  BasicTensor<T> w;  // [input x hidden]
  BasicTensor<T> u;  // [hidden x hidden]
  BasicTensor<T> b;  // [1 x hidden]
};

template <typename T>
struct RecurrentParams {
  CellType cell = CellType::Gru;
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::vector<GateParams<T>> gates;

  /// Fan-in scaled uniform weights, zero biases.
  static RecurrentParams init(CellType cell, std::size_t input_size, std::size_t hidden_size, Rng& rng);

  GateParams<T>& gate(LstmGate g) { return gates.at(static_cast<std::size_t>(g)); }
  const GateParams<T>& gate(LstmGate g) const { return gates.at(static_cast<std::size_t>(g)); }
  GateParams<T>& gate(GruGate g) { return gates.at(static_cast<std::size_t>(g)); }
  const GateParams<T>& gate(GruGate g) const { return gates.at(static_cast<std::size_t>(g)); }

  void append_parameters(const std::string& prefix, ParamList<T>& out) const;
  /// Throws DimensionError when gate shapes disagree with the sizes.
  void validate() const;
};

template <typename T>
struct CellState {
  BasicTensor<T> h;
  BasicTensor<T> c;  // undefined for GRU
};

/// Zero state for a cell of the given width.
template <typename T>
CellState<T> zero_state(CellType cell, std::size_t hidden_size);

/// Gate activations of one LSTM step, for inspection.
template <typename T>
struct LstmTrace {
  BasicTensor<T> forget, input, output, candidate;
};

template <typename T>
struct GruTrace {
  BasicTensor<T> update, reset, candidate;
};

template <typename T>
CellState<T> lstm_step(Tape<T>& tape, const BasicTensor<T>& input, const CellState<T>& prev,
                       const RecurrentParams<T>& params, LstmTrace<T>* trace = nullptr);

template <typename T>
BasicTensor<T> gru_step(Tape<T>& tape, const BasicTensor<T>& input, const BasicTensor<T>& prev_h,
                        const RecurrentParams<T>& params, GruTrace<T>* trace = nullptr);

/// Runs `forward` left to right and `backward` right to left over the rows of
/// seq ([seq_len x input]). At masked steps the carried state is left
/// untouched and the emitted row is zero. Returns [seq_len x 2*hidden] with
/// the forward state in the first half of each row.
template <typename T>
BasicTensor<T> bidirectional_encode(Tape<T>& tape, const BasicTensor<T>& seq, const std::vector<bool>& mask,
                                    const RecurrentParams<T>& forward, const RecurrentParams<T>& backward);

}  // namespace sebert
