#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flowsmooth/core.hpp"

namespace flowsmooth {

struct KappaStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct TrajectoryReport {
  std::optional<double> endpoint_error;  // only when an oracle endpoint exists
  double oscillation_energy = 0.0;
  std::uint64_t total_model_calls = 0;
  std::optional<KappaStats> kappa_stats;
  double path_length = 0.0;
};

// |z_K - oracle|_2
inline double endpoint_error(const Trajectory& traj, const StateVector& oracle_z0) {
  if (traj.states.empty()) throw InvalidArgument("endpoint_error: empty trajectory");
  if (traj.final_state().dim() != oracle_z0.dim()) throw InvalidArgument("endpoint_error: dimension mismatch");
  return distance(traj.final_state(), oracle_z0);
}

// Sum of squared second differences |z_{k+1} - 2 z_k + z_{k-1}|^2 over the
// interior states.
inline double oscillation_energy(const Trajectory& traj) {
  const auto& s = traj.states;
  if (s.size() < 3) throw InvalidArgument("oscillation_energy: need at least 3 states");
  double energy = 0.0;
  for (std::size_t k = 1; k + 1 < s.size(); ++k) {
    for (std::size_t i = 0; i < s[k].dim(); ++i) {
      const double d2 = s[k + 1][i] - 2.0 * s[k][i] + s[k - 1][i];
      energy += d2 * d2;
    }
  }
  return energy;
}

inline double path_length(const Trajectory& traj) {
  double len = 0.0;
  for (std::size_t k = 1; k < traj.states.size(); ++k) len += distance(traj.states[k], traj.states[k - 1]);
  return len;
}

inline std::optional<KappaStats> kappa_stats(const Trajectory& traj) {
  std::optional<KappaStats> out;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& rec : traj.steps) {
    if (!rec.kappa) continue;
    const double kappa = *rec.kappa;
    if (!out) {
      out = KappaStats{kappa, kappa, 0.0};
    } else {
      out->min = std::min(out->min, kappa);
      out->max = std::max(out->max, kappa);
    }
    sum += kappa;
    ++n;
  }
  if (out) out->mean = sum / static_cast<double>(n);
  return out;
}

struct EnsembleMoments {
  std::vector<double> mean;
  std::vector<double> stddev;  // unbiased, n - 1 denominator
};

inline EnsembleMoments ensemble_moments(std::span<const StateVector> endpoints) {
  if (endpoints.empty()) throw InvalidArgument("ensemble_moments: empty collection");
  if (endpoints.size() < 2) throw InvalidArgument("ensemble_moments: need at least two endpoints");
  const std::size_t dim = endpoints.front().dim();
  const double n = static_cast<double>(endpoints.size());

  EnsembleMoments m{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (const auto& e : endpoints) {
    if (e.dim() != dim) throw InvalidArgument("ensemble_moments: dimension mismatch");
    for (std::size_t i = 0; i < dim; ++i) m.mean[i] += e[i];
  }
  for (double& x : m.mean) x /= n;
  for (const auto& e : endpoints) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = e[i] - m.mean[i];
      m.stddev[i] += d * d;
    }
  }
  for (double& x : m.stddev) x = std::sqrt(x / (n - 1.0));
  return m;
}

// True iff every step used exactly `expected_calls_per_step` model calls and
// the total matches K times that.
inline bool verify_call_budget(const Trajectory& traj, std::uint64_t expected_calls_per_step) {
  for (const auto& rec : traj.steps) {
    if (rec.model_calls != expected_calls_per_step) return false;
  }
  return traj.total_model_calls() == traj.steps.size() * expected_calls_per_step;
}

inline TrajectoryReport make_report(const Trajectory& traj, const std::optional<StateVector>& oracle_z0) {
  TrajectoryReport r;
  if (oracle_z0) r.endpoint_error = endpoint_error(traj, *oracle_z0);
  r.oscillation_energy = traj.states.size() >= 3 ? oscillation_energy(traj) : 0.0;
  r.total_model_calls = traj.total_model_calls();
  r.kappa_stats = kappa_stats(traj);
  r.path_length = path_length(traj);
  return r;
}

}  // namespace flowsmooth
