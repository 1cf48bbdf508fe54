#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "flowsmooth/diagnostics.hpp"
#include "flowsmooth/samplers.hpp"
#include "oracles.hpp"

namespace fs = flowsmooth;
using std::numbers::pi;

namespace {

const fs::SnrSchedule rf = fs::SnrSchedule::rectified_flow();

void expect_same_states(const fs::Trajectory& a, const fs::Trajectory& b, double tol) {
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k)
    for (std::size_t i = 0; i < a.states[k].dim(); ++i)
      ASSERT_NEAR(a.states[k][i], b.states[k][i], tol) << "state " << k << " coord " << i;
}

fs::VelocityFieldSpec random_linear_field(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<double> n;
  std::vector<std::vector<double>> rows(dim, std::vector<double>(dim));
  for (auto& r : rows)
    for (auto& x : r) x = n(gen);
  return fs::linear_matrix(rows);
}

fs::StateVector random_state(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<double> n;
  std::vector<double> z(dim);
  for (auto& x : z) x = n(gen);
  return fs::StateVector(z);
}

}  // namespace

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

TEST(EulerStep, ZeroFieldLeavesStateUnchanged) {
  fs::CallCounter c;
  const fs::StateVector z{1.5, -2.0};
  EXPECT_EQ(fs::euler_step(z, 0.7, 0.1, fs::constant_field({0.0, 0.0}), c), z);
  EXPECT_EQ(c.count(), 1u);
}

TEST(EulerStep, RotationHandArithmetic) {
  fs::CallCounter c;
  const auto z = fs::euler_step(fs::StateVector{1.0, 0.0}, 0.5, 0.1, fs::linear_matrix({{0, -1}, {1, 0}}), c);
  EXPECT_NEAR(z[0], 1.0, 1e-12);
  EXPECT_NEAR(z[1], -0.1, 1e-12);
}

TEST(EulerStep, ConstantFieldUnitStep) {
  fs::CallCounter c;
  EXPECT_EQ(fs::euler_step(fs::StateVector{0.0}, 1.0, 1.0, fs::constant_field({2.0}), c), fs::StateVector({-2.0}));
  EXPECT_THROW(fs::euler_step(fs::StateVector{0.0}, 1.0, 0.0, fs::constant_field({2.0}), c), fs::InvalidArgument);
}

TEST(SchedulerStep, UniformGrid) {
  const auto p = fs::scheduler_step(fs::StateVector{0.0}, fs::StateVector{1.0}, 0, fs::make_time_grid(2));
  EXPECT_EQ(p.z_tilde, fs::StateVector({-0.5}));
  EXPECT_EQ(p.t_tilde, 0.5);
}

TEST(SchedulerStep, ZeroVelocity) {
  const auto g = fs::make_time_grid(4);
  const auto p = fs::scheduler_step(fs::StateVector{3.0}, fs::StateVector{0.0}, 1, g);
  EXPECT_EQ(p.z_tilde, fs::StateVector({3.0}));
  EXPECT_EQ(p.t_tilde, g.time(1) - g.delta(1));
}

TEST(SchedulerStep, SigmaShiftGrid) {
  const auto p =
      fs::scheduler_step(fs::StateVector{0.0}, fs::StateVector{1.0}, 0, fs::make_time_grid(2, fs::SigmaShiftSchedule{3}));
  EXPECT_NEAR(p.z_tilde[0], -0.25, 1e-12);
  EXPECT_EQ(p.t_tilde, 0.5);
  EXPECT_THROW(fs::scheduler_step(fs::StateVector{0.0}, fs::StateVector{1.0}, 2, fs::make_time_grid(2)),
               fs::InvalidArgument);
}

TEST(PeekVelocity, Examples) {
  EXPECT_EQ(fs::estimate_peek_velocity(fs::StateVector{2.0}, fs::StateVector{1.0}, 0.5), fs::StateVector({2.0}));
  EXPECT_EQ(fs::estimate_peek_velocity(fs::StateVector{4.0, 1.0}, fs::StateVector{4.0, 1.0}, 0.3),
            fs::StateVector({0.0, 0.0}));
  EXPECT_EQ(fs::estimate_peek_velocity(fs::StateVector{0.0, 0.0}, fs::StateVector{-1.0, 2.0}, 1.0),
            fs::StateVector({1.0, -2.0}));
  EXPECT_THROW(fs::estimate_peek_velocity(fs::StateVector{0.0}, fs::StateVector{0.0}, 0.0), fs::InvalidArgument);
  EXPECT_THROW(fs::estimate_peek_velocity(fs::StateVector{0.0}, fs::StateVector{0.0}, -1.0), fs::InvalidArgument);
}

TEST(Curvature, Examples) {
  const fs::StateVector v{-1.0, 0.0};
  EXPECT_EQ(fs::curvature(v, v, fs::StateVector{0.0, 0.0}, fs::StateVector{1.0, 0.0}, 1e-8), 0.0);
  EXPECT_NEAR(fs::curvature(v, fs::StateVector{-2.0, 0.0}, fs::StateVector{0.0, 0.0}, fs::StateVector{1.0, 0.0}, 1e-8),
              1.0 / (1.0 + 1e-8), 1e-12);
  const fs::StateVector z{0.3, 0.4};
  EXPECT_NEAR(fs::curvature(fs::StateVector{0.0, 0.0}, fs::StateVector{0.3, 0.4}, z, z, 1e-8), 5e7, 1e-4);
}

TEST(Curvature, NonNegativeAndFinite) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> eps(1e-12, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double k = fs::curvature(random_state(gen, 3), random_state(gen, 3), random_state(gen, 3),
                                   random_state(gen, 3), eps(gen));
    EXPECT_GE(k, 0.0);
    EXPECT_TRUE(std::isfinite(k));
  }
}

// ---------------------------------------------------------------------------
// Look-Ahead
// ---------------------------------------------------------------------------

TEST(LookAhead, InterpolationBranchHandExample) {
  // v(z, t) = -2t: v = -2 at t = 1 and v~ = 0 at t~ = 0 in model_eval mode,
  // so kappa = 2 / (2 + eps) > 0.5 and the step is interpolated.
  const auto field = fs::custom_field(1, [](std::span<const double>, double t) { return std::vector<double>{-2.0 * t}; });
  const auto cfg = fs::SamplerConfig::look_ahead(0.9, 0.5, fs::PeekMode::model_eval);
  fs::CallCounter c;
  const auto res = fs::look_ahead_step(fs::initial_state(cfg, fs::StateVector{0.0}), fs::make_time_grid(1), cfg, field, c);
  EXPECT_NEAR(res.state.z[0], 1.8, 1e-12);
  EXPECT_FALSE(*res.record.accepted_full_step);
  EXPECT_NEAR(*res.record.kappa, 2.0 / (2.0 + 1e-8), 1e-12);
  EXPECT_EQ(res.record.model_calls, 2u);
  EXPECT_EQ(res.state.k, 1u);
}

TEST(LookAhead, AcceptedBranchTakesPrediction) {
  const auto field = fs::custom_field(1, [](std::span<const double>, double t) { return std::vector<double>{-2.0 * t}; });
  const auto cfg = fs::SamplerConfig::look_ahead(0.9, 5.0, fs::PeekMode::model_eval);
  fs::CallCounter c;
  const auto res = fs::look_ahead_step(fs::initial_state(cfg, fs::StateVector{0.0}), fs::make_time_grid(1), cfg, field, c);
  EXPECT_EQ(res.state.z, fs::StateVector({2.0}));
  EXPECT_TRUE(*res.record.accepted_full_step);
}

TEST(LookAhead, FiniteDifferencePeekIsDegenerateOnUniformGrid) {
  const auto field = fs::rotation_field(pi / 2);
  const auto traj = fs::run_sampler(fs::SamplerConfig::look_ahead(0.9, 1e-3), field, fs::make_time_grid(25),
                                    fs::StateVector{1.0, 0.0});
  for (const auto& r : traj.steps) {
    EXPECT_LT(*r.kappa, 1e-6);
    EXPECT_TRUE(*r.accepted_full_step);
  }
}

TEST(LookAhead, SigmaShiftKappaIsScheduleMismatch) {
  // Finite-difference peek: v~ = (eta/delta) v, so kappa = |eta/delta - 1| / (eta + eps/|v|) roughly.
  const auto field = fs::rotation_field(pi / 2);
  const auto grid = fs::make_time_grid(25, fs::SigmaShiftSchedule{3.0});
  const auto traj = fs::run_sampler(fs::SamplerConfig::look_ahead(0.9, 1.0), field, grid, fs::StateVector{1.0, 0.0});
  for (std::size_t k = 0; k < traj.steps.size(); ++k) {
    const double eta = grid.step_size(k), delta = grid.delta(k);
    const double speed = (pi / 2) * traj.states[k].norm();
    const double want = std::abs(eta / delta - 1.0) * speed / (eta * speed + 1e-8);
    EXPECT_NEAR(*traj.steps[k].kappa, want, 1e-9 * (1.0 + want));
  }
}

TEST(LookAhead, ReducesToEulerWhenGateDisabledOrGammaOne) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto field = random_linear_field(gen, 3);
    const auto z = random_state(gen, 3);
    const auto grid = fs::make_time_grid(1 + trial);
    const auto euler = fs::run_sampler(fs::SamplerConfig::euler(), field, grid, z);
    expect_same_states(fs::run_sampler(fs::SamplerConfig::look_ahead(0.5, fs::kInfiniteThreshold), field, grid, z),
                       euler, 1e-12);
    expect_same_states(fs::run_sampler(fs::SamplerConfig::look_ahead(1.0, 1e-9), field, grid, z), euler, 1e-12);
  }
}

TEST(LookAhead, InfiniteThresholdMatchesSchedulerStepsOnShiftedGrid) {
  const auto field = fs::rotation_field(1.3);
  const auto grid = fs::make_time_grid(10, fs::SigmaShiftSchedule{2.0});
  const auto traj =
      fs::run_sampler(fs::SamplerConfig::look_ahead(0.9, fs::kInfiniteThreshold), field, grid, fs::StateVector{1.0, 0.5});
  fs::StateVector z{1.0, 0.5};
  fs::CallCounter c;
  for (std::size_t k = 0; k < grid.num_steps(); ++k) {
    z = fs::scheduler_step(z, fs::evaluate_field(field, z, grid.time(k), c), k, grid).z_tilde;
    EXPECT_EQ(traj.states[k + 1], z);
  }
}

TEST(LookAhead, InterpolationContainment) {
  std::mt19937_64 gen(29);
  std::uniform_real_distribution<double> gamma(0.05, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto field = random_linear_field(gen, 2);
    const auto cfg = fs::SamplerConfig::look_ahead(gamma(gen), 1e-12, fs::PeekMode::model_eval);
    const auto grid = fs::make_time_grid(8);
    auto state = fs::initial_state(cfg, random_state(gen, 2));
    fs::CallCounter c;
    for (std::size_t k = 0; k < grid.num_steps(); ++k) {
      const fs::StateVector z = state.z;
      fs::CallCounter probe;
      const auto z_tilde =
          fs::scheduler_step(z, fs::evaluate_field(field, z, grid.time(k), probe), k, grid).z_tilde;
      auto res = fs::look_ahead_step(state, grid, cfg, field, c);
      if (!*res.record.accepted_full_step) {
        const double full = fs::distance(z_tilde, z);
        const double moved = fs::distance(res.state.z, z);
        EXPECT_NEAR(moved, cfg.gamma_interp * full, 1e-12 * (1.0 + full));
        EXPECT_LE(moved, full * (1.0 + 1e-15));
      }
      state = std::move(res.state);
    }
  }
}

// ---------------------------------------------------------------------------
// Look-Back
// ---------------------------------------------------------------------------

namespace {

// Field that records the last point it was evaluated at.
struct Recorder {
  std::shared_ptr<std::vector<double>> last = std::make_shared<std::vector<double>>();
  fs::VelocityFieldSpec field(std::size_t dim) const {
    auto sink = last;
    return fs::custom_field(dim, [sink, dim](std::span<const double> z, double) {
      sink->assign(z.begin(), z.end());
      return std::vector<double>(dim, 0.0);
    });
  }
};

}  // namespace

TEST(LookBack, PeekBlendExamples) {
  const auto grid = fs::make_time_grid(4);
  for (auto [lambda, want] : {std::pair{1.0, 0.0}, std::pair{0.1, 9.0}, std::pair{0.0, 10.0}}) {
    Recorder rec;
    const auto cfg = fs::SamplerConfig::look_back(lambda);
    fs::SamplerState s{fs::StateVector{10.0}, 1, fs::StateVector{0.0}, std::nullopt};
    fs::CallCounter c;
    fs::look_back_step(s, grid, cfg, rec.field(1), rf, c);
    ASSERT_EQ(rec.last->size(), 1u);
    EXPECT_NEAR((*rec.last)[0], want, 1e-12) << "lambda=" << lambda;
  }
}

TEST(LookBack, EmaUpdateHandExample) {
  // Place t_1 where gamma(t_1) = 0.9 * sigmoid(-xi) = 0.5, i.e. xi = -log(1.25).
  const double t1 = 1.0 / (1.0 + std::pow(1.25, -0.5));
  const fs::TimeGrid grid({1.0, t1, 0.0}, {1.0 - t1, t1});
  const auto cfg = fs::SamplerConfig::look_back(0.1, 0.9, 1.0, 0.0);
  fs::SamplerState s{fs::StateVector{3.0}, 1, fs::StateVector{1.0}, std::nullopt};
  fs::CallCounter c;
  const auto res = fs::look_back_step(s, grid, cfg, fs::constant_field({0.0}), rf, c);
  EXPECT_NEAR(*res.record.gamma_t, 0.5, 1e-12);
  EXPECT_NEAR((*res.state.ema)[0], 2.0, 1e-12);
  EXPECT_EQ(res.record.model_calls, 1u);
}

TEST(LookBack, FirstStepBlendsWithInitialState) {
  const auto cfg = fs::SamplerConfig::look_back(0.5);
  const auto s = fs::initial_state(cfg, fs::StateVector{4.0, -1.0});
  ASSERT_TRUE(s.ema.has_value());
  EXPECT_EQ(*s.ema, s.z);
  EXPECT_FALSE(s.momentum.has_value());
}

TEST(LookBack, ZeroBlendIsEuler) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> gmax(0.0, 0.99);
  for (int trial = 0; trial < 30; ++trial) {
    const auto field = random_linear_field(gen, 2);
    const auto z = random_state(gen, 2);
    const auto grid = fs::make_time_grid(5 + trial);
    expect_same_states(fs::run_sampler(fs::SamplerConfig::look_back(0.0, gmax(gen)), field, grid, z),
                       fs::run_sampler(fs::SamplerConfig::euler(), field, grid, z), 1e-12);
  }
}

TEST(LookBack, PeekConvexityAndEmaBoundedness) {
  std::mt19937_64 gen(37);
  std::uniform_real_distribution<double> lambda(0.0, 1.0), gmax(0.0, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    Recorder rec;
    const auto field = random_linear_field(gen, 2);
    auto spy = fs::custom_field(2, [&, field](std::span<const double> z, double t) {
      rec.last->assign(z.begin(), z.end());
      fs::CallCounter unused;
      return fs::evaluate_field(field, fs::StateVector({z[0], z[1]}), t, unused).to_vector();
    });
    const auto cfg = fs::SamplerConfig::look_back(lambda(gen), gmax(gen));
    const auto grid = fs::make_time_grid(12);
    auto state = fs::initial_state(cfg, random_state(gen, 2));
    std::vector<double> lo(state.z.to_vector()), hi(state.z.to_vector());
    fs::CallCounter c;
    for (std::size_t k = 0; k < grid.num_steps(); ++k) {
      const fs::StateVector z = state.z, ema_prev = *state.ema;
      for (int i = 0; i < 2; ++i) {
        lo[i] = std::min(lo[i], z[i]);
        hi[i] = std::max(hi[i], z[i]);
      }
      auto res = fs::look_back_step(state, grid, cfg, spy, rf, c);
      for (int i = 0; i < 2; ++i) {
        const double a = std::min(z[i], ema_prev[i]), b = std::max(z[i], ema_prev[i]);
        const double slack = 1e-12 * (1.0 + std::abs(a) + std::abs(b));
        EXPECT_GE((*rec.last)[i], a - slack);
        EXPECT_LE((*rec.last)[i], b + slack);
        EXPECT_GE((*res.state.ema)[i], lo[i] - slack);
        EXPECT_LE((*res.state.ema)[i], hi[i] + slack);
      }
      state = std::move(res.state);
    }
  }
}

// ---------------------------------------------------------------------------
// Momentum
// ---------------------------------------------------------------------------

TEST(Momentum, HandExample) {
  const auto cfg = fs::SamplerConfig::momentum(0.5);
  fs::CallCounter c;
  const auto res = fs::momentum_step(fs::initial_state(cfg, fs::StateVector{0.0}), fs::make_time_grid(1), cfg,
                                     fs::constant_field({-2.0}), c);
  EXPECT_EQ(*res.state.momentum, fs::StateVector({1.0}));
  EXPECT_EQ(res.state.z, fs::StateVector({1.0}));
  EXPECT_EQ(res.record.model_calls, 1u);
}

TEST(Momentum, ZeroFieldZeroMemory) {
  const auto cfg = fs::SamplerConfig::momentum(0.8);
  const auto traj = fs::run_sampler(cfg, fs::constant_field({0.0, 0.0}), fs::make_time_grid(7), fs::StateVector{1.0, 2.0});
  for (const auto& s : traj.states) EXPECT_EQ(s, fs::StateVector({1.0, 2.0}));
}

TEST(Momentum, ZeroBeta1IsEuler) {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 30; ++trial) {
    const auto field = random_linear_field(gen, 3);
    const auto z = random_state(gen, 3);
    const auto grid = fs::make_time_grid(3 + trial);
    expect_same_states(fs::run_sampler(fs::SamplerConfig::momentum(0.0), field, grid, z),
                       fs::run_sampler(fs::SamplerConfig::euler(), field, grid, z), 1e-12);
  }
}

TEST(Momentum, ConstantGradientTelescopes) {
  // Constant v = -g: m_k = (1 - beta1^k) g, so |m_k - g| = beta1^k |g|.
  const std::vector<double> g{1.5, -0.5};
  const double gnorm = std::hypot(g[0], g[1]);
  for (double beta1 : {0.0, 0.3, 0.8, 0.95}) {
    const auto cfg = fs::SamplerConfig::momentum(beta1);
    const auto field = fs::constant_field({-g[0], -g[1]});
    const auto grid = fs::make_time_grid(20);
    auto state = fs::initial_state(cfg, fs::StateVector{0.0, 0.0});
    fs::CallCounter c;
    for (std::size_t k = 1; k <= grid.num_steps(); ++k) {
      state = fs::momentum_step(state, grid, cfg, field, c).state;
      const double gap = fs::distance(*state.momentum, fs::StateVector(g));
      EXPECT_NEAR(gap, std::pow(beta1, static_cast<double>(k)) * gnorm, 1e-13);
    }
  }
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

TEST(RunSampler, SingleEulerStep) {
  const auto traj =
      fs::run_sampler(fs::SamplerConfig::euler(), fs::constant_field({1.0}), fs::make_time_grid(1), fs::StateVector{0.0});
  ASSERT_EQ(traj.states.size(), 2u);
  EXPECT_EQ(traj.states[0], fs::StateVector({0.0}));
  EXPECT_EQ(traj.states[1], fs::StateVector({-1.0}));
}

TEST(RunSampler, EulerMatchesPlainRecurrence) {
  const auto traj = fs::run_sampler(fs::SamplerConfig::euler(), fs::rotation_field(pi / 2), fs::make_time_grid(25),
                                    fs::StateVector{1.0, 0.0});
  const auto want = fs::oracle::rotation_euler_states(pi / 2, {1.0, 0.0}, 25);
  for (std::size_t k = 0; k < want.size(); ++k) {
    EXPECT_NEAR(traj.states[k][0], want[k][0], 1e-12);
    EXPECT_NEAR(traj.states[k][1], want[k][1], 1e-12);
  }
}

TEST(RunSampler, CallBudgetAndRecordShape) {
  const auto field = fs::gaussian_rf(2.0, 3);
  const fs::StateVector z{0.1, 0.2, 0.3};
  for (std::size_t K : {1u, 25u, 60u}) {
    const auto grid = fs::make_time_grid(K, fs::SigmaShiftSchedule{3.0});
    for (const auto& cfg : {fs::SamplerConfig::euler(), fs::SamplerConfig::look_ahead(0.9, 1.0),
                            fs::SamplerConfig::look_back(), fs::SamplerConfig::momentum()}) {
      const auto traj = fs::run_sampler(cfg, field, grid, z);
      EXPECT_EQ(traj.states.size(), K + 1);
      EXPECT_EQ(traj.times.size(), K + 1);
      EXPECT_EQ(traj.total_model_calls(), K);
      EXPECT_TRUE(fs::verify_call_budget(traj, 1));
      for (std::size_t k = 0; k < K; ++k) {
        EXPECT_EQ(traj.times[k] - traj.times[k + 1], grid.delta(k));
        EXPECT_EQ(traj.steps[k].kappa.has_value(), cfg.algorithm == fs::Algorithm::look_ahead);
        EXPECT_EQ(traj.steps[k].accepted_full_step.has_value(), cfg.algorithm == fs::Algorithm::look_ahead);
        EXPECT_EQ(traj.steps[k].gamma_t.has_value(), cfg.algorithm == fs::Algorithm::look_back);
      }
    }
    const auto two =
        fs::run_sampler(fs::SamplerConfig::look_ahead(0.9, 1.0, fs::PeekMode::model_eval), field, grid, z);
    EXPECT_EQ(two.total_model_calls(), 2 * K);
  }
}

TEST(RunSampler, NumericFailureCarriesStepIndex) {
  // Finite until t drops below 0.5, which on a K=10 grid first happens at step 6 (t = 0.4).
  const auto field = fs::custom_field(1, [](std::span<const double>, double t) {
    return std::vector<double>{t < 0.5 ? std::numeric_limits<double>::infinity() : 1.0};
  });
  for (const auto& cfg : {fs::SamplerConfig::euler(), fs::SamplerConfig::look_ahead(), fs::SamplerConfig::look_back(),
                          fs::SamplerConfig::momentum()}) {
    try {
      fs::run_sampler(cfg, field, fs::make_time_grid(10), fs::StateVector{0.0});
      FAIL() << "expected NumericFailure";
    } catch (const fs::NumericFailure& e) {
      ASSERT_TRUE(e.step().has_value());
      EXPECT_EQ(*e.step(), 6u);
    }
  }
}

TEST(RunSampler, OverflowingStateIsNumericFailure) {
  const auto field = fs::custom_field(1, [](std::span<const double> z, double) { return std::vector<double>{-1e200 * z[0]}; });
  EXPECT_THROW(fs::run_sampler(fs::SamplerConfig::euler(), field, fs::make_time_grid(10), fs::StateVector{1.0}),
               fs::NumericFailure);
}

TEST(RunSampler, Errors) {
  EXPECT_THROW(fs::run_sampler(fs::SamplerConfig::euler(), fs::gaussian_rf(1.0, 2), fs::make_time_grid(3),
                               fs::StateVector{1.0}),
               fs::InvalidArgument);
  fs::SamplerConfig bad;
  bad.gamma_interp = 2.0;
  EXPECT_THROW(fs::run_sampler(bad, fs::gaussian_rf(1.0, 1), fs::make_time_grid(3), fs::StateVector{1.0}),
               fs::InvalidArgument);
  fs::CallCounter c;
  const auto cfg = fs::SamplerConfig::euler();
  EXPECT_THROW(fs::look_ahead_step(fs::initial_state(cfg, fs::StateVector{1.0}), fs::make_time_grid(2), cfg,
                                   fs::gaussian_rf(1.0, 1), c),
               fs::InvalidArgument);
  const auto mom = fs::SamplerConfig::momentum();
  fs::SamplerState done{fs::StateVector{1.0}, 2, std::nullopt, fs::StateVector{0.0}};
  EXPECT_THROW(fs::momentum_step(done, fs::make_time_grid(2), mom, fs::gaussian_rf(1.0, 1), c), fs::InvalidArgument);
}
