#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "flowsmooth/core.hpp"
#include "flowsmooth/fields.hpp"
#include "flowsmooth/schedules.hpp"

namespace flowsmooth {

// Per-run sampler memory. `ema` holds the running average from the previous
// step (look_back only); `momentum` the first-moment vector (momentum only).
struct SamplerState {
  StateVector z;
  std::size_t k = 0;
  std::optional<StateVector> ema;
  std::optional<StateVector> momentum;
};

struct StepResult {
  SamplerState state;
  StepRecord record;
};

struct SchedulerPrediction {
  StateVector z_tilde;
  double t_tilde;
};

inline SamplerState initial_state(const SamplerConfig& config, const StateVector& z_init) {
  SamplerState s{z_init, 0, std::nullopt, std::nullopt};
  if (config.algorithm == Algorithm::look_back) s.ema = z_init;
  if (config.algorithm == Algorithm::momentum) s.momentum = StateVector::zeros(z_init.dim());
  return s;
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

// z - eta * v(z, t). One model call.
inline StateVector euler_step(const StateVector& z, double t_k, double eta_k, const VelocityFieldSpec& field,
                              CallCounter& counter) {
  if (!(eta_k > 0.0)) throw InvalidArgument("euler_step: eta must be positive");
  const StateVector v = evaluate_field(field, z, t_k, counter);
  return z - eta_k * v;
}

// The scheduler's native predictor: z~ = z - eta_k v, t~ = t_k - delta_k.
// Uses the supplied velocity; no model call.
inline SchedulerPrediction scheduler_step(const StateVector& z, const StateVector& v, std::size_t k,
                                          const TimeGrid& grid) {
  if (k >= grid.num_steps()) throw InvalidArgument("scheduler_step: step index past the end of the grid");
  return {z - grid.step_size(k) * v, grid.time(k) - grid.delta(k)};
}

// Finite-difference peek velocity (z - z~) / delta_k.
inline StateVector estimate_peek_velocity(const StateVector& z, const StateVector& z_tilde, double delta_k) {
  if (!(delta_k > 0.0)) throw InvalidArgument("estimate_peek_velocity: delta must be positive");
  return (z - z_tilde) / delta_k;
}

// kappa = |v~ - v| / (|z~ - z| + epsilon)
inline double curvature(const StateVector& v, const StateVector& v_tilde, const StateVector& z,
                        const StateVector& z_tilde, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("curvature: epsilon must be positive");
  const double kappa = distance(v_tilde, v) / (distance(z_tilde, z) + epsilon);
  if (!std::isfinite(kappa)) throw NumericFailure("curvature: non-finite kappa");
  return kappa;
}

namespace detail {

template <typename Body>
StepResult with_step_index(std::size_t k, Body&& body) {
  try {
    return body();
  } catch (const NumericFailure& e) {
    if (e.step()) throw;
    throw e.at_step(k);
  }
}

inline void require_algorithm(const SamplerConfig& config, Algorithm expected, const char* who) {
  if (config.algorithm != expected) {
    throw InvalidArgument(std::string(who) + ": config selects " + to_string(config.algorithm));
  }
}

inline void require_in_grid(const SamplerState& state, const TimeGrid& grid, const char* who) {
  if (state.k >= grid.num_steps()) throw InvalidArgument(std::string(who) + ": step index past the end of the grid");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-algorithm steps
// ---------------------------------------------------------------------------

inline StepResult euler_sampler_step(const SamplerState& state, const TimeGrid& grid, const VelocityFieldSpec& field,
                                     CallCounter& counter) {
  detail::require_in_grid(state, grid, "euler_sampler_step");
  return detail::with_step_index(state.k, [&] {
    const std::uint64_t before = counter.count();
    StateVector next = euler_step(state.z, grid.time(state.k), grid.step_size(state.k), field, counter);
    StepRecord rec;
    rec.model_calls = counter.count() - before;
    return StepResult{SamplerState{std::move(next), state.k + 1, std::nullopt, std::nullopt}, rec};
  });
}

// Curvature-gated Look-Ahead step. Accepts the scheduler prediction when
// kappa <= tau_curv and otherwise moves only gamma_interp of the way towards
// it. The time index advances in both branches.
inline StepResult look_ahead_step(const SamplerState& state, const TimeGrid& grid, const SamplerConfig& config,
                                  const VelocityFieldSpec& field, CallCounter& counter) {
  detail::require_algorithm(config, Algorithm::look_ahead, "look_ahead_step");
  detail::require_in_grid(state, grid, "look_ahead_step");
  const std::size_t k = state.k;
  return detail::with_step_index(k, [&] {
    const std::uint64_t before = counter.count();
    const StateVector v = evaluate_field(field, state.z, grid.time(k), counter);
    const SchedulerPrediction pred = scheduler_step(state.z, v, k, grid);

    const StateVector v_tilde = config.peek_mode == PeekMode::finite_difference
                                    ? estimate_peek_velocity(state.z, pred.z_tilde, grid.delta(k))
                                    : evaluate_field(field, pred.z_tilde, pred.t_tilde, counter);
    const double kappa = curvature(v, v_tilde, state.z, pred.z_tilde, config.epsilon);

    StepRecord rec;
    rec.kappa = kappa;
    rec.accepted_full_step = kappa <= config.tau_curv;
    StateVector next = *rec.accepted_full_step
                           ? pred.z_tilde
                           : state.z + config.gamma_interp * (pred.z_tilde - state.z);
    rec.model_calls = counter.count() - before;
    return StepResult{SamplerState{std::move(next), k + 1, std::nullopt, std::nullopt}, rec};
  });
}

// Look-Back step. The EMA is advanced with gamma(t_k) while the velocity is
// evaluated at the blend of z_k and the previous average.
inline StepResult look_back_step(const SamplerState& state, const TimeGrid& grid, const SamplerConfig& config,
                                 const VelocityFieldSpec& field, const SnrSchedule& snr, CallCounter& counter) {
  detail::require_algorithm(config, Algorithm::look_back, "look_back_step");
  detail::require_in_grid(state, grid, "look_back_step");
  if (!state.ema) throw InvalidArgument("look_back_step: state carries no running average");
  const std::size_t k = state.k;
  return detail::with_step_index(k, [&] {
    const std::uint64_t before = counter.count();
    const double t_k = grid.time(k);
    const double gamma = lookback_decay(snr, t_k, config);
    const StateVector& ema_prev = *state.ema;

    StateVector ema_next = gamma * ema_prev + (1.0 - gamma) * state.z;
    const StateVector peek = (1.0 - config.lambda_blend) * state.z + config.lambda_blend * ema_prev;
    const StateVector v = evaluate_field(field, peek, t_k, counter);
    StateVector next = state.z - grid.step_size(k) * v;

    StepRecord rec;
    rec.gamma_t = gamma;
    rec.model_calls = counter.count() - before;
    return StepResult{SamplerState{std::move(next), k + 1, std::move(ema_next), std::nullopt}, rec};
  });
}

// Momentum step: g = -v, m' = beta1 m + (1 - beta1) g, z' = z + eta m'.
inline StepResult momentum_step(const SamplerState& state, const TimeGrid& grid, const SamplerConfig& config,
                                const VelocityFieldSpec& field, CallCounter& counter) {
  detail::require_algorithm(config, Algorithm::momentum, "momentum_step");
  detail::require_in_grid(state, grid, "momentum_step");
  if (!state.momentum) throw InvalidArgument("momentum_step: state carries no momentum vector");
  const std::size_t k = state.k;
  return detail::with_step_index(k, [&] {
    const std::uint64_t before = counter.count();
    const StateVector g = -1.0 * evaluate_field(field, state.z, grid.time(k), counter);
    StateVector m_next = config.beta1 * *state.momentum + (1.0 - config.beta1) * g;
    StateVector next = state.z + grid.step_size(k) * m_next;

    StepRecord rec;
    rec.model_calls = counter.count() - before;
    return StepResult{SamplerState{std::move(next), k + 1, std::nullopt, std::move(m_next)}, rec};
  });
}

inline StepResult sampler_step(const SamplerState& state, const TimeGrid& grid, const SamplerConfig& config,
                               const VelocityFieldSpec& field, const SnrSchedule& snr, CallCounter& counter) {
  switch (config.algorithm) {
    case Algorithm::euler: return euler_sampler_step(state, grid, field, counter);
    case Algorithm::look_ahead: return look_ahead_step(state, grid, config, field, counter);
    case Algorithm::look_back: return look_back_step(state, grid, config, field, snr, counter);
    case Algorithm::momentum: return momentum_step(state, grid, config, field, counter);
  }
  throw InvalidArgument("sampler_step: unknown algorithm");
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

// Integrates from t = 1 to t = 0 over `grid`, recording every state and step.
inline Trajectory run_sampler(const SamplerConfig& config, const VelocityFieldSpec& field, const SnrSchedule& snr,
                              const TimeGrid& grid, const StateVector& z_init) {
  config.validate();
  if (grid.num_steps() == 0) throw InvalidArgument("run_sampler: empty grid");
  if (z_init.dim() != field.dim()) {
    throw InvalidArgument("run_sampler: initial state has dimension " + std::to_string(z_init.dim()) +
                          ", field expects " + std::to_string(field.dim()));
  }

  Trajectory traj;
  traj.states.reserve(grid.num_steps() + 1);
  traj.steps.reserve(grid.num_steps());
  traj.times = grid.times();
  traj.states.push_back(z_init);

  CallCounter counter;
  SamplerState state = initial_state(config, z_init);
  for (std::size_t k = 0; k < grid.num_steps(); ++k) {
    StepResult result = sampler_step(state, grid, config, field, snr, counter);
    traj.states.push_back(result.state.z);
    traj.steps.push_back(result.record);
    state = std::move(result.state);
  }
  return traj;
}

inline Trajectory run_sampler(const SamplerConfig& config, const VelocityFieldSpec& field, const TimeGrid& grid,
                              const StateVector& z_init) {
  return run_sampler(config, field, SnrSchedule::rectified_flow(), grid, z_init);
}

}  // namespace flowsmooth
