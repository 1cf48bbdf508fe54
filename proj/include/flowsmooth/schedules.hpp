#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "flowsmooth/core.hpp"

namespace flowsmooth {

// Signal-to-noise description of the forward path z_t = a_t x0 + b_t eps.
//
// rectified_flow: a_t = 1 - t, b_t = t, so xi(t) = 2 log((1 - t) / t).
// diffusion:      a_t = sqrt(abar_t), b_t = sqrt(1 - abar_t), with abar_t
//                 supplied as a table of (t, abar) knots and interpolated
//                 linearly in t.
class SnrSchedule {
 public:
  enum class Kind { rectified_flow, diffusion };

  static SnrSchedule rectified_flow() { return SnrSchedule(Kind::rectified_flow, {}); }

  // Knots must have strictly increasing t and abar strictly decreasing in (0, 1).
  static SnrSchedule diffusion(std::vector<std::pair<double, double>> alpha_bar_knots) {
    if (alpha_bar_knots.size() < 2) throw InvalidArgument("diffusion schedule: need at least two alpha_bar knots");
    for (std::size_t i = 0; i < alpha_bar_knots.size(); ++i) {
      const auto [t, ab] = alpha_bar_knots[i];
      if (!(ab > 0.0 && ab < 1.0)) throw InvalidArgument("diffusion schedule: alpha_bar must lie in (0, 1)");
      if (!std::isfinite(t)) throw InvalidArgument("diffusion schedule: knot times must be finite");
      if (i > 0) {
        const auto [t_prev, ab_prev] = alpha_bar_knots[i - 1];
        if (!(t > t_prev)) throw InvalidArgument("diffusion schedule: knot times must increase");
        if (!(ab < ab_prev)) throw InvalidArgument("diffusion schedule: alpha_bar must strictly decrease in t");
      }
    }
    return SnrSchedule(Kind::diffusion, std::move(alpha_bar_knots));
  }

  Kind kind() const noexcept { return kind_; }
  const std::vector<std::pair<double, double>>& alpha_bar_knots() const noexcept { return knots_; }

  double alpha_bar(double t) const {
    if (kind_ != Kind::diffusion) throw InvalidArgument("alpha_bar: only defined for diffusion schedules");
    if (t < knots_.front().first || t > knots_.back().first) {
      throw DomainError("alpha_bar: t outside the tabulated range");
    }
    auto hi = std::lower_bound(knots_.begin(), knots_.end(), t,
                               [](const std::pair<double, double>& knot, double x) { return knot.first < x; });
    if (hi->first == t) return hi->second;
    auto lo = hi - 1;
    const double w = (t - lo->first) / (hi->first - lo->first);
    return (1.0 - w) * lo->second + w * hi->second;
  }

 private:
  SnrSchedule(Kind kind, std::vector<std::pair<double, double>> knots) : kind_(kind), knots_(std::move(knots)) {}

  Kind kind_;
  std::vector<std::pair<double, double>> knots_;
};

// xi(t) = log(a_t^2 / b_t^2).
inline double log_snr(const SnrSchedule& schedule, double t) {
  if (schedule.kind() == SnrSchedule::Kind::rectified_flow) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("log_snr: rectified-flow log-SNR is infinite outside (0, 1)");
    return 2.0 * std::log((1.0 - t) / t);
  }
  const double ab = schedule.alpha_bar(t);
  return std::log(ab / (1.0 - ab));
}

inline constexpr double kDecayTimeFloor = 1e-6;

inline double logistic(double x) {
  // Split by sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// gamma(t) = gamma_max * sigmoid(beta * (xi_star - xi(t))): close to gamma_max
// at low SNR and decaying to zero as the SNR grows. DecaySign::printed uses
// sigmoid(beta * (xi(t) - xi_star)) instead.
//
// t is clamped to [1e-6, 1 - 1e-6] for rectified flows; diffusion schedules
// clamp to the tabulated range.
inline double lookback_decay(const SnrSchedule& schedule, double t, double gamma_max, double beta, double xi_star,
                             DecaySign sign = DecaySign::prose) {
  if (!(gamma_max >= 0.0 && gamma_max < 1.0)) throw InvalidArgument("lookback_decay: gamma_max must lie in [0, 1)");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("lookback_decay: beta must be positive");
  double t_clamped = 0.0;
  if (schedule.kind() == SnrSchedule::Kind::rectified_flow) {
    t_clamped = std::clamp(t, kDecayTimeFloor, 1.0 - kDecayTimeFloor);
  } else {
    const auto& knots = schedule.alpha_bar_knots();
    t_clamped = std::clamp(t, knots.front().first, knots.back().first);
  }
  const double xi = log_snr(schedule, t_clamped);
  const double arg = sign == DecaySign::prose ? beta * (xi_star - xi) : beta * (xi - xi_star);
  return gamma_max * logistic(arg);
}

inline double lookback_decay(const SnrSchedule& schedule, double t, const SamplerConfig& config) {
  return lookback_decay(schedule, t, config.gamma_max, config.beta_steepness, config.xi_star, config.decay_sign);
}

}  // namespace flowsmooth
