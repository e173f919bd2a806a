#pragma once

// Adam, plain SGD, and SWATS (Adam that hands over to SGD once the projected
// SGD step size settles).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sebert/tensor.hpp"

namespace sebert {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  AdamHyper hyper;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::uint64_t step = 0;
};

/// p^T p and p^T g of the step that was just applied, p being the parameter delta.
struct StepProjection {
  double pp = 0.0;
  double pg = 0.0;
};

/// One Adam update from the gradients held by `params`. Moments are created
/// zero-filled on the first call. Throws DivergenceError on non-finite gradients.
template <typename T>
StepProjection adam_step(std::span<BasicTensor<T>> params, AdamState<T>& state);

/// theta <- theta - lr * g
template <typename T>
void sgd_step(std::span<BasicTensor<T>> params, T lr);

enum class SwatsPhase { Adam, Sgd };

template <typename T>
struct SwatsState {
  AdamState<T> adam;
  SwatsPhase phase = SwatsPhase::Adam;
  /// Exponential average of projected step sizes (uncorrected).
  double lambda = 0.0;
  /// Frozen SGD rate; set exactly when phase is Sgd.
  std::optional<double> sgd_lr;
  double switch_eps = 1e-9;
  /// Adam step count at which the switch happened (0 if none).
  std::uint64_t switch_step = 0;
  /// SGD steps taken since the switch.
  std::uint64_t sgd_steps = 0;
};

/// Adam phase: Adam step p, gamma = -(p^T p)/(p^T g) when p^T g != 0,
/// lambda <- beta2 lambda + (1 - beta2) gamma, switch when k > 1 and
/// |lambda / (1 - beta2^k) - gamma| < switch_eps. SGD phase: plain SGD at the
/// frozen rate. Returns the phase that produced this step.
template <typename T>
SwatsPhase swats_step(std::span<BasicTensor<T>> params, SwatsState<T>& state);

enum class OptimizerKind { Adam, Sgd, Swats };

std::string optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Swats;
  AdamHyper adam;
  /// Learning rate for the plain SGD optimizer.
  double sgd_lr = 0.01;
  double switch_eps = 1e-9;
};

template <typename T>
struct SgdState {
  double lr = 0.01;
  std::uint64_t step = 0;
};

/// Runtime-selected optimizer.
template <typename T>
class Optimizer {
 public:
  using State = std::variant<AdamState<T>, SgdState<T>, SwatsState<T>>;

  explicit Optimizer(const OptimizerConfig& config);
  explicit Optimizer(State state) : state_(std::move(state)) {}

  void step(std::span<BasicTensor<T>> params);

  OptimizerKind kind() const;
  /// "adam", "sgd", or for SWATS the current phase ("swats:adam"/"swats:sgd").
  std::string phase_name() const;
  std::uint64_t steps() const;

  const State& state() const noexcept { return state_; }
  State& state() noexcept { return state_; }

 private:
  State state_;
};

}  // namespace sebert
