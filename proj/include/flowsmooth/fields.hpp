#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "flowsmooth/core.hpp"

namespace flowsmooth {

// Dense row-major square matrix, sized for the small linear test fields.
class SquareMatrix {
 public:
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {
    if (n == 0) throw InvalidArgument("SquareMatrix: dimension must be positive");
  }

  static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    SquareMatrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw InvalidArgument("SquareMatrix: rows must form a square matrix");
      for (std::size_t j = 0; j < rows.size(); ++j) {
        if (!std::isfinite(rows[i][j])) throw InvalidArgument("SquareMatrix: entries must be finite");
        m(i, j) = rows[i][j];
      }
    }
    return m;
  }

  static SquareMatrix identity(std::size_t n) {
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  // Max absolute row sum.
  double inf_norm() const {
    double best = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n_; ++j) row += std::abs((*this)(i, j));
      best = std::max(best, row);
    }
    return best;
  }

  friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
    SquareMatrix c(a.n_);
    for (std::size_t i = 0; i < a.n_; ++i)
      for (std::size_t k = 0; k < a.n_; ++k) {
        const double aik = a(i, k);
        for (std::size_t j = 0; j < a.n_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend SquareMatrix operator*(double s, SquareMatrix a) {
    for (double& x : a.data_) x *= s;
    return a;
  }

  friend SquareMatrix operator+(SquareMatrix a, const SquareMatrix& b) {
    for (std::size_t i = 0; i < a.data_.size(); ++i) a.data_[i] += b.data_[i];
    return a;
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

// exp(M) by scaling and squaring with a truncated Taylor series. The scaled
// matrix has norm <= 1/2, where 20 terms are well below double round-off.
inline SquareMatrix matrix_exponential(const SquareMatrix& m) {
  const double norm = m.inf_norm();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const SquareMatrix scaled = std::ldexp(1.0, -squarings) * m;

  SquareMatrix result = SquareMatrix::identity(m.size());
  SquareMatrix term = SquareMatrix::identity(m.size());
  for (int k = 1; k <= 20; ++k) {
    term = (1.0 / k) * (term * scaled);
    result = result + term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

// ---------------------------------------------------------------------------
// Analytic fields
// ---------------------------------------------------------------------------

// Marginal flow-matching velocity between centered Gaussians N(0, s0^2 I) at
// t = 0 and N(0, I) at t = 1 along z_t = (1-t) x0 + t eps.
struct GaussianRfField {
  double s0 = 1.0;
  std::size_t dim = 1;

  // s_t^2 = (1-t)^2 s0^2 + t^2
  double marginal_scale(double t) const { return std::sqrt((1.0 - t) * (1.0 - t) * s0 * s0 + t * t); }

  // v(z, t) = c(t) z
  double coefficient(double t) const {
    const double s2 = s0 * s0;
    return (t - (1.0 - t) * s2) / ((1.0 - t) * (1.0 - t) * s2 + t * t);
  }
};

// v(z, t) = A z.
struct LinearMatrixField {
  SquareMatrix matrix{1};
};

// v(z, t) = -stiffness (z - g(t)), g(t) = (sin 2 pi t, cos 2 pi t, sin 2 pi t, ...).
struct StiffTrackingField {
  double stiffness = 50.0;
  std::size_t dim = 2;

  std::vector<double> target(double t) const {
    std::vector<double> g(dim);
    const double phase = 2.0 * std::numbers::pi * t;
    for (std::size_t i = 0; i < dim; ++i) g[i] = (i % 2 == 0) ? std::sin(phase) : std::cos(phase);
    return g;
  }
};

// Caller-supplied field. `velocity` must be deterministic and return `dim`
// coordinates.
struct CustomField {
  std::size_t dim = 1;
  std::function<std::vector<double>(std::span<const double>, double)> velocity;
};

enum class FieldKind { gaussian_rf, linear_matrix, stiff_tracking, custom };

inline const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::gaussian_rf: return "gaussian_rf";
    case FieldKind::linear_matrix: return "linear_matrix";
    case FieldKind::stiff_tracking: return "stiff_tracking";
    case FieldKind::custom: return "custom";
  }
  return "unknown";
}

struct VelocityFieldSpec {
  std::variant<GaussianRfField, LinearMatrixField, StiffTrackingField, CustomField> field;
  // Opaque conditioning context. Analytic fields ignore it.
  std::optional<std::string> conditioning;

  FieldKind kind() const { return static_cast<FieldKind>(field.index()); }

  std::size_t dim() const {
    return std::visit(
        [](const auto& f) -> std::size_t {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, LinearMatrixField>) {
            return f.matrix.size();
          } else {
            return f.dim;
          }
        },
        field);
  }

  void validate() const {
    std::visit(
        [](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, GaussianRfField>) {
            if (!(f.s0 > 0.0) || !std::isfinite(f.s0)) throw InvalidArgument("gaussian_rf: s0 must be > 0");
            if (f.dim == 0) throw InvalidArgument("gaussian_rf: dim must be positive");
          } else if constexpr (std::is_same_v<F, StiffTrackingField>) {
            if (!(f.stiffness > 0.0) || !std::isfinite(f.stiffness)) {
              throw InvalidArgument("stiff_tracking: stiffness must be > 0");
            }
            if (f.dim == 0) throw InvalidArgument("stiff_tracking: dim must be positive");
          } else if constexpr (std::is_same_v<F, CustomField>) {
            if (f.dim == 0) throw InvalidArgument("custom: dim must be positive");
            if (!f.velocity) throw InvalidArgument("custom: velocity callback is empty");
          }
        },
        field);
  }
};

inline VelocityFieldSpec gaussian_rf(double s0, std::size_t dim) {
  VelocityFieldSpec spec{GaussianRfField{s0, dim}, std::nullopt};
  spec.validate();
  return spec;
}

inline VelocityFieldSpec linear_matrix(const std::vector<std::vector<double>>& rows) {
  return VelocityFieldSpec{LinearMatrixField{SquareMatrix::from_rows(rows)}, std::nullopt};
}

// A = omega * [[0, -1], [1, 0]]
inline VelocityFieldSpec rotation_field(double omega) { return linear_matrix({{0.0, -omega}, {omega, 0.0}}); }

inline VelocityFieldSpec stiff_tracking(double stiffness, std::size_t dim) {
  VelocityFieldSpec spec{StiffTrackingField{stiffness, dim}, std::nullopt};
  spec.validate();
  return spec;
}

inline VelocityFieldSpec custom_field(std::size_t dim,
                                      std::function<std::vector<double>(std::span<const double>, double)> v) {
  VelocityFieldSpec spec{CustomField{dim, std::move(v)}, std::nullopt};
  spec.validate();
  return spec;
}

inline VelocityFieldSpec constant_field(std::vector<double> velocity) {
  const std::size_t dim = velocity.size();
  return custom_field(dim, [v = std::move(velocity)](std::span<const double>, double) { return v; });
}

namespace detail {

inline std::vector<double> raw_velocity(const VelocityFieldSpec& spec, std::span<const double> z, double t) {
  return std::visit(
      [&](const auto& f) -> std::vector<double> {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, GaussianRfField>) {
          const double c = f.coefficient(t);
          std::vector<double> v(z.begin(), z.end());
          for (double& x : v) x *= c;
          return v;
        } else if constexpr (std::is_same_v<F, LinearMatrixField>) {
          return f.matrix.apply(z);
        } else if constexpr (std::is_same_v<F, StiffTrackingField>) {
          const std::vector<double> g = f.target(t);
          std::vector<double> v(z.size());
          for (std::size_t i = 0; i < z.size(); ++i) v[i] = -f.stiffness * (z[i] - g[i]);
          return v;
        } else {
          return f.velocity(z, t);
        }
      },
      spec.field);
}

}  // namespace detail

// Evaluates v(z, t) and counts one model call.
inline StateVector evaluate_field(const VelocityFieldSpec& spec, const StateVector& z, double t,
                                  CallCounter& counter) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("evaluate_field: t must lie in [0, 1]");
  if (z.dim() != spec.dim()) {
    throw InvalidArgument("evaluate_field: state has dimension " + std::to_string(z.dim()) + ", field expects " +
                          std::to_string(spec.dim()));
  }
  counter.increment();
  std::vector<double> v = detail::raw_velocity(spec, z.values(), t);
  if (v.size() != z.dim()) throw InvalidArgument("evaluate_field: velocity has wrong dimension");
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericFailure(std::string("non-finite velocity from ") + to_string(spec.kind()) + " field");
    }
  }
  return StateVector(std::move(v));
}

// ---------------------------------------------------------------------------
// Exact-solution oracles
// ---------------------------------------------------------------------------

inline bool has_closed_form(const VelocityFieldSpec& spec) {
  return spec.kind() == FieldKind::gaussian_rf || spec.kind() == FieldKind::linear_matrix;
}

// Exact flow map of dz/dt = v(z, t) from t_from to t_to (either direction).
inline StateVector exact_flow(const VelocityFieldSpec& spec, const StateVector& z, double t_from, double t_to) {
  if (z.dim() != spec.dim()) throw InvalidArgument("exact_flow: dimension mismatch");
  if (const auto* g = std::get_if<GaussianRfField>(&spec.field)) {
    return (g->marginal_scale(t_to) / g->marginal_scale(t_from)) * z;
  }
  if (const auto* lin = std::get_if<LinearMatrixField>(&spec.field)) {
    const SquareMatrix propagator = matrix_exponential((t_to - t_from) * lin->matrix);
    return StateVector(propagator.apply(z.values()));
  }
  throw InvalidArgument(std::string("exact_flow: no closed form for ") + to_string(spec.kind()) + " field");
}

// psi_0(z1): exact state at t = 0 starting from z1 at t = 1.
inline StateVector exact_endpoint(const VelocityFieldSpec& spec, const StateVector& z1) {
  return exact_flow(spec, z1, 1.0, 0.0);
}

inline constexpr std::size_t kReferenceSteps = 100000;

// Brute-force reference endpoint: uniform Euler with `n_steps` steps from
// t = 1 to t = 0. Used for fields without a closed form.
inline StateVector fine_euler_reference(const VelocityFieldSpec& spec, const StateVector& z1,
                                        std::size_t n_steps = kReferenceSteps) {
  if (n_steps == 0) throw InvalidArgument("fine_euler_reference: n_steps must be >= 1");
  if (z1.dim() != spec.dim()) throw InvalidArgument("fine_euler_reference: dimension mismatch");
  std::vector<double> z = z1.to_vector();
  const double h = 1.0 / static_cast<double>(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = 1.0 - static_cast<double>(k) * h;
    const std::vector<double> v = detail::raw_velocity(spec, z, t);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= h * v[i];
  }
  return StateVector(std::move(z));
}

// Closed form where available, otherwise the brute-force reference.
inline StateVector reference_endpoint(const VelocityFieldSpec& spec, const StateVector& z1) {
  return has_closed_form(spec) ? exact_endpoint(spec, z1) : fine_euler_reference(spec, z1);
}

}  // namespace flowsmooth
