#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flowsmooth {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised when a state, velocity or intermediate quantity stops being finite.
// Samplers attach the index of the step that produced it.
class NumericFailure : public std::runtime_error {
 public:
  explicit NumericFailure(const std::string& what, std::optional<std::size_t> step = std::nullopt)
      : std::runtime_error(step ? what + " (step " + std::to_string(*step) + ")" : what),
        detail_(what),
        step_(step) {}

  std::optional<std::size_t> step() const noexcept { return step_; }
  const std::string& detail() const noexcept { return detail_; }

  NumericFailure at_step(std::size_t k) const { return NumericFailure(detail_, k); }

 private:
  std::string detail_;
  std::optional<std::size_t> step_;
};

// ---------------------------------------------------------------------------
// StateVector
// ---------------------------------------------------------------------------

// Fixed-dimension vector of finite doubles. Every constructor and arithmetic
// operation re-checks finiteness and throws NumericFailure otherwise.
class StateVector {
 public:
  explicit StateVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw InvalidArgument("StateVector: dimension must be positive");
    require_finite("StateVector");
  }
  StateVector(std::initializer_list<double> values) : StateVector(std::vector<double>(values)) {}

  static StateVector zeros(std::size_t dim) { return StateVector(std::vector<double>(dim, 0.0)); }

  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& to_vector() const noexcept { return values_; }

  double norm() const {
    double s = 0.0;
    for (double x : values_) s += x * x;
    return std::sqrt(s);
  }

  friend StateVector operator+(const StateVector& a, const StateVector& b) {
    return combine(a, b, [](double x, double y) { return x + y; }, "addition");
  }
  friend StateVector operator-(const StateVector& a, const StateVector& b) {
    return combine(a, b, [](double x, double y) { return x - y; }, "subtraction");
  }
  friend StateVector operator*(double s, const StateVector& a) {
    std::vector<double> out(a.values_);
    for (double& x : out) x *= s;
    return checked(std::move(out), "scaling");
  }
  friend StateVector operator*(const StateVector& a, double s) { return s * a; }
  friend StateVector operator/(const StateVector& a, double s) {
    std::vector<double> out(a.values_);
    for (double& x : out) x /= s;
    return checked(std::move(out), "division");
  }

  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  template <typename Op>
  static StateVector combine(const StateVector& a, const StateVector& b, Op op, const char* what) {
    if (a.dim() != b.dim()) {
      throw InvalidArgument(std::string("StateVector ") + what + ": dimension mismatch (" +
                            std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
    }
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a.values_[i], b.values_[i]);
    return checked(std::move(out), what);
  }

  static StateVector checked(std::vector<double> out, const char* what) {
    for (double x : out) {
      if (!std::isfinite(x)) throw NumericFailure(std::string("non-finite result in StateVector ") + what);
    }
    StateVector v;
    v.values_ = std::move(out);
    return v;
  }

  void require_finite(const char* where) const {
    for (double x : values_) {
      if (!std::isfinite(x)) throw NumericFailure(std::string(where) + ": non-finite coordinate");
    }
  }

  StateVector() = default;

  std::vector<double> values_;
};

// Euclidean distance between two states of equal dimension.
inline double distance(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// TimeGrid
// ---------------------------------------------------------------------------

struct UniformSchedule {};
struct SigmaShiftSchedule {
  double shift = 3.0;
};

// Decreasing grid 1 = t_0 > ... > t_K = 0. `deltas` are the time advances,
// `step_sizes` the scheduler's update magnitudes (they coincide on uniform grids).
class TimeGrid {
 public:
  TimeGrid(std::vector<double> times, std::vector<double> step_sizes)
      : times_(std::move(times)), step_sizes_(std::move(step_sizes)) {
    if (times_.size() < 2) throw InvalidArgument("TimeGrid: need at least one step");
    if (times_.front() != 1.0 || times_.back() != 0.0) {
      throw InvalidArgument("TimeGrid: times must run from 1 to 0");
    }
    if (step_sizes_.size() != times_.size() - 1) {
      throw InvalidArgument("TimeGrid: step_sizes must have one entry per step");
    }
    deltas_.resize(step_sizes_.size());
    for (std::size_t k = 0; k < deltas_.size(); ++k) {
      deltas_[k] = times_[k] - times_[k + 1];
      if (!(deltas_[k] > 0.0)) throw InvalidArgument("TimeGrid: times must be strictly decreasing");
      if (!(step_sizes_[k] > 0.0) || !std::isfinite(step_sizes_[k])) {
        throw InvalidArgument("TimeGrid: step sizes must be positive and finite");
      }
    }
  }

  std::size_t num_steps() const noexcept { return deltas_.size(); }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& deltas() const noexcept { return deltas_; }
  const std::vector<double>& step_sizes() const noexcept { return step_sizes_; }

  double time(std::size_t k) const { return times_.at(k); }
  double delta(std::size_t k) const { return deltas_.at(k); }
  double step_size(std::size_t k) const { return step_sizes_.at(k); }

 private:
  std::vector<double> times_;
  std::vector<double> deltas_;
  std::vector<double> step_sizes_;
};

// sigma(t) = shift*t / (1 + (shift-1)*t), the flow-matching timestep shift.
inline double shifted_sigma(double t, double shift) { return shift * t / (1.0 + (shift - 1.0) * t); }

inline TimeGrid make_time_grid(std::size_t n_steps, UniformSchedule = {}) {
  if (n_steps == 0) throw InvalidArgument("make_time_grid: n_steps must be >= 1");
  const double K = static_cast<double>(n_steps);
  std::vector<double> times(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) times[k] = 1.0 - static_cast<double>(k) / K;
  std::vector<double> eta(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) eta[k] = times[k] - times[k + 1];
  return TimeGrid(std::move(times), std::move(eta));
}

inline TimeGrid make_time_grid(std::size_t n_steps, SigmaShiftSchedule schedule) {
  if (n_steps == 0) throw InvalidArgument("make_time_grid: n_steps must be >= 1");
  if (!(schedule.shift > 0.0) || !std::isfinite(schedule.shift)) {
    throw InvalidArgument("make_time_grid: shift must be > 0");
  }
  const double K = static_cast<double>(n_steps);
  std::vector<double> times(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) times[k] = 1.0 - static_cast<double>(k) / K;
  std::vector<double> eta(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    eta[k] = shifted_sigma(times[k], schedule.shift) - shifted_sigma(times[k + 1], schedule.shift);
  }
  return TimeGrid(std::move(times), std::move(eta));
}

// ---------------------------------------------------------------------------
// Model-call accounting
// ---------------------------------------------------------------------------

// Counts velocity-field evaluations. Owned by a single sampling run.
class CallCounter {
 public:
  void increment() noexcept { ++count_; }
  std::uint64_t count() const noexcept { return count_; }
  void reset() noexcept { count_ = 0; }

 private:
  std::uint64_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Sampler configuration
// ---------------------------------------------------------------------------

enum class Algorithm { euler, look_ahead, look_back, momentum };
enum class PeekMode { finite_difference, model_eval };

// Which sign the decay sigmoid uses. `prose` makes the decay high at low SNR
// and vanish at high SNR; `printed` flips the argument for comparison runs.
enum class DecaySign { prose, printed };

inline constexpr double kInfiniteThreshold = std::numeric_limits<double>::infinity();

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::euler: return "euler";
    case Algorithm::look_ahead: return "look_ahead";
    case Algorithm::look_back: return "look_back";
    case Algorithm::momentum: return "momentum";
  }
  return "unknown";
}

inline const char* to_string(PeekMode m) {
  return m == PeekMode::finite_difference ? "finite_difference" : "model_eval";
}

struct SamplerConfig {
  Algorithm algorithm = Algorithm::euler;

  // Look-Ahead
  double tau_curv = 10.0;  // kInfiniteThreshold disables the gate
  double gamma_interp = 0.9;
  PeekMode peek_mode = PeekMode::finite_difference;

  // Look-Back
  double lambda_blend = 0.1;
  double gamma_max = 0.9;
  double beta_steepness = 1.0;
  double xi_star = 0.0;
  DecaySign decay_sign = DecaySign::prose;

  // Momentum
  double beta1 = 0.8;

  double epsilon = 1e-8;

  void validate() const {
    if (!(tau_curv > 0.0) || std::isnan(tau_curv)) throw InvalidArgument("tau_curv must be positive or infinite");
    if (!(gamma_interp > 0.0 && gamma_interp <= 1.0)) throw InvalidArgument("gamma_interp must lie in (0, 1]");
    if (!(lambda_blend >= 0.0 && lambda_blend <= 1.0)) throw InvalidArgument("lambda_blend must lie in [0, 1]");
    if (!(gamma_max >= 0.0 && gamma_max < 1.0)) throw InvalidArgument("gamma_max must lie in [0, 1)");
    if (!(beta_steepness > 0.0) || !std::isfinite(beta_steepness)) {
      throw InvalidArgument("beta_steepness must be positive and finite");
    }
    if (!std::isfinite(xi_star)) throw InvalidArgument("xi_star must be finite");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("beta1 must lie in [0, 1)");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("epsilon must be positive");
  }

  static SamplerConfig euler() { return {}; }

  static SamplerConfig look_ahead(double gamma_interp = 0.9, double tau_curv = 10.0,
                                  PeekMode mode = PeekMode::finite_difference) {
    SamplerConfig c;
    c.algorithm = Algorithm::look_ahead;
    c.gamma_interp = gamma_interp;
    c.tau_curv = tau_curv;
    c.peek_mode = mode;
    c.validate();
    return c;
  }

  static SamplerConfig look_back(double lambda_blend = 0.1, double gamma_max = 0.9, double beta_steepness = 1.0,
                                 double xi_star = 0.0) {
    SamplerConfig c;
    c.algorithm = Algorithm::look_back;
    c.lambda_blend = lambda_blend;
    c.gamma_max = gamma_max;
    c.beta_steepness = beta_steepness;
    c.xi_star = xi_star;
    c.validate();
    return c;
  }

  static SamplerConfig momentum(double beta1 = 0.8) {
    SamplerConfig c;
    c.algorithm = Algorithm::momentum;
    c.beta1 = beta1;
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

struct StepRecord {
  std::optional<double> kappa;               // look_ahead only
  std::optional<bool> accepted_full_step;    // look_ahead only
  std::optional<double> gamma_t;             // look_back only
  std::uint64_t model_calls = 0;
};

struct Trajectory {
  std::vector<StateVector> states;
  std::vector<double> times;
  std::vector<StepRecord> steps;

  std::size_t num_steps() const noexcept { return steps.size(); }
  const StateVector& final_state() const { return states.back(); }

  std::uint64_t total_model_calls() const {
    return std::accumulate(steps.begin(), steps.end(), std::uint64_t{0},
                           [](std::uint64_t acc, const StepRecord& r) { return acc + r.model_calls; });
  }
};

}  // namespace flowsmooth
