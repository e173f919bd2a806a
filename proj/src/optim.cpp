#include "sebert/optim.hpp"

#include <cmath>

#include "sebert/errors.hpp"

namespace sebert {

namespace {

template <typename T>
void require_finite_grads(std::span<BasicTensor<T>> params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (T g : params[i].grad())
      if (!std::isfinite(g)) throw DivergenceError("non-finite gradient in parameter #" + std::to_string(i));
  }
}

}  // namespace

template <typename T>
StepProjection adam_step(std::span<BasicTensor<T>> params, AdamState<T>& st) {
  require_finite_grads(params);
  if (st.m.empty()) {
    for (const auto& p : params) {
      st.m.emplace_back(p.numel(), T(0));
      st.v.emplace_back(p.numel(), T(0));
    }
  }
  if (st.m.size() != params.size()) throw ContractError("optimizer state was built for a different parameter set");

  st.step += 1;
  const T b1 = static_cast<T>(st.hyper.beta1);
  const T b2 = static_cast<T>(st.hyper.beta2);
  const T lr = static_cast<T>(st.hyper.lr);
  const T eps = static_cast<T>(st.hyper.eps);
  const T bc1 = T(1) - static_cast<T>(std::pow(st.hyper.beta1, static_cast<double>(st.step)));
  const T bc2 = T(1) - static_cast<T>(std::pow(st.hyper.beta2, static_cast<double>(st.step)));

  StepProjection proj;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].data();
    auto g = params[i].grad();
    auto& m = st.m[i];
    auto& v = st.v[i];
    if (m.size() != theta.size()) throw ContractError("optimizer moment shape mismatch");
    if (g.empty()) continue;  // never touched by the loss: zero gradient
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      const T m_hat = m[j] / bc1;
      const T v_hat = v[j] / bc2;
      const T delta = -lr * m_hat / (std::sqrt(v_hat) + eps);
      theta[j] += delta;
      proj.pp += static_cast<double>(delta) * static_cast<double>(delta);
      proj.pg += static_cast<double>(delta) * static_cast<double>(g[j]);
    }
  }
  return proj;
}

template <typename T>
void sgd_step(std::span<BasicTensor<T>> params, T lr) {
  require_finite_grads(params);
  for (auto& p : params) {
    auto theta = p.data();
    auto g = p.grad();
    if (g.empty()) continue;
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= lr * g[j];
  }
}

template <typename T>
SwatsPhase swats_step(std::span<BasicTensor<T>> params, SwatsState<T>& st) {
  if (st.phase == SwatsPhase::Sgd) {
    sgd_step(params, static_cast<T>(*st.sgd_lr));
    st.sgd_steps += 1;
    return SwatsPhase::Sgd;
  }
  const StepProjection proj = adam_step(params, st.adam);
  if (proj.pg != 0.0) {
    const double beta2 = st.adam.hyper.beta2;
    const double k = static_cast<double>(st.adam.step);
    const double gamma = -proj.pp / proj.pg;
    st.lambda = beta2 * st.lambda + (1.0 - beta2) * gamma;
    const double corrected = st.lambda / (1.0 - std::pow(beta2, k));
    if (st.adam.step > 1 && std::abs(corrected - gamma) < st.switch_eps) {
      st.phase = SwatsPhase::Sgd;
      st.sgd_lr = corrected;
      st.switch_step = st.adam.step;
    }
  }
  return SwatsPhase::Adam;
}

std::string optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Swats: return "swats";
  }
  return "?";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "swats") return OptimizerKind::Swats;
  throw ContractError("unknown optimizer '" + name + "' (expected adam, sgd or swats)");
}

template <typename T>
Optimizer<T>::Optimizer(const OptimizerConfig& config) {
  switch (config.kind) {
    case OptimizerKind::Adam:
      state_ = AdamState<T>{config.adam, {}, {}, 0};
      break;
    case OptimizerKind::Sgd:
      state_ = SgdState<T>{config.sgd_lr, 0};
      break;
    case OptimizerKind::Swats: {
      SwatsState<T> s;
      s.adam.hyper = config.adam;
      s.switch_eps = config.switch_eps;
      state_ = std::move(s);
      break;
    }
  }
}

template <typename T>
void Optimizer<T>::step(std::span<BasicTensor<T>> params) {
  if (auto* adam = std::get_if<AdamState<T>>(&state_)) {
    adam_step(params, *adam);
  } else if (auto* sgd = std::get_if<SgdState<T>>(&state_)) {
    sgd_step(params, static_cast<T>(sgd->lr));
    sgd->step += 1;
  } else {
    swats_step(params, std::get<SwatsState<T>>(state_));
  }
}

template <typename T>
OptimizerKind Optimizer<T>::kind() const {
  if (std::holds_alternative<AdamState<T>>(state_)) return OptimizerKind::Adam;
  if (std::holds_alternative<SgdState<T>>(state_)) return OptimizerKind::Sgd;
  return OptimizerKind::Swats;
}

template <typename T>
std::string Optimizer<T>::phase_name() const {
  if (const auto* s = std::get_if<SwatsState<T>>(&state_))
    return s->phase == SwatsPhase::Adam ? "swats:adam" : "swats:sgd";
  return optimizer_name(kind());
}

template <typename T>
std::uint64_t Optimizer<T>::steps() const {
  if (const auto* a = std::get_if<AdamState<T>>(&state_)) return a->step;
  if (const auto* s = std::get_if<SgdState<T>>(&state_)) return s->step;
  const auto& w = std::get<SwatsState<T>>(state_);
  return w.adam.step + w.sgd_steps;
}

#define SEBERT_INSTANTIATE_OPTIM(T)                                                       \
  template StepProjection adam_step(std::span<BasicTensor<T>>, AdamState<T>&);            \
  template void sgd_step(std::span<BasicTensor<T>>, T);                                   \
  template SwatsPhase swats_step(std::span<BasicTensor<T>>, SwatsState<T>&);              \
  template class Optimizer<T>;

SEBERT_INSTANTIATE_OPTIM(float)
SEBERT_INSTANTIATE_OPTIM(double)

#undef SEBERT_INSTANTIATE_OPTIM

}  // namespace sebert
