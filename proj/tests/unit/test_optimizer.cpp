#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "pass/optimizer.hpp"

using namespace pass;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXcd random_w(int M, int K, CounterRng& rng, double scale = 1.0) {
  Eigen::MatrixXcd W(M, K);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) W(m, k) = scale * rng.complex_normal();
  return W;
}

Eigen::VectorXd random_s(int M, int N, CounterRng& rng) {
  Eigen::VectorXd s(M * N);
  for (int j = 0; j < M * N; ++j) s(j) = rng.uniform() + 0.05;
  for (int m = 0; m < M; ++m) s.segment(m * N, N).normalize();
  return s;
}

struct Instance {
  SystemConfig cfg = reference_config();
  UserLayout users = reference_users();
  ChannelState ch;
  Eigen::VectorXd s;
  Eigen::MatrixXcd W;
  AuxState aux;
  double pa = pa_power(ProtocolKind::STT, PAPowerComponents{});
};

Instance reference_instance(std::uint64_t seed) {
  Instance in;
  CounterRng rng(seed, 99);
  in.ch = synth_channels(equal_interval_placement(in.cfg), in.users, in.cfg);
  in.s = random_s(in.cfg.M, in.cfg.N, rng);
  in.W = random_w(in.cfg.M, in.cfg.K, rng, 0.5);
  in.aux = update_aux(in.W, in.s, in.ch, in.cfg, in.pa);
  return in;
}

// Minimizes the precoding quadratic over the power ball by projected gradient.
Eigen::MatrixXcd projected_gradient(const PrecodingQuadratic& quad, double p_max, int iters) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(quad.base);
  const double step = 1.0 / es.eigenvalues().maxCoeff();
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(quad.linear.rows(), quad.linear.cols());
  for (int it = 0; it < iters; ++it) {
    W -= step * (quad.base * W - quad.linear);
    const double n2 = W.squaredNorm();
    if (n2 > p_max) W *= std::sqrt(p_max / n2);
  }
  return W;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST(Aux, ZeroPrecoderFixedPoint) {
  const Instance in = reference_instance(1);
  const AuxState aux = update_aux(Eigen::MatrixXcd::Zero(3, 4), in.s, in.ch, in.cfg, in.pa);
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(aux.t(k), cd(0.0, 0.0));
    EXPECT_EQ(aux.epsilon(k), 1.0);
    EXPECT_EQ(aux.kappa(k), 1.0);
  }
  EXPECT_EQ(aux.q, 0.0);
}

TEST(Aux, ScalarMmseIdentity) {
  SystemConfig cfg = reference_config(1, 1);
  cfg.K = 1;
  UserLayout users{{30.0, 60.0}};
  cfg.y_bar = {50.0};
  const ChannelState ch = synth_channels(equal_interval_placement(cfg), users, cfg);
  const Eigen::VectorXd s = uniform_amplitudes(1, 1);
  Eigen::MatrixXcd W(1, 1);
  W(0, 0) = cd(0.3, -0.7);
  const AuxState aux = update_aux(W, s, ch, cfg, 0.01);
  const double gamma = sinr_closed_form(W, s, ch, cfg)(0);
  EXPECT_NEAR(aux.epsilon(0), 1.0 / (1.0 + gamma), 1e-12 / (1.0 + gamma));
}

TEST(Aux, RateIdentityAtMrt) {
  const SystemConfig cfg = reference_config();
  const ChannelState ch = synth_channels(equal_interval_placement(cfg), reference_users(), cfg);
  const Eigen::VectorXd s = uniform_amplitudes(3, 4);
  const Eigen::MatrixXcd W = mrt_precoder(effective_channel(s, ch, cfg), cfg.p_max);
  const double pa = pa_power(ProtocolKind::STT, PAPowerComponents{});
  const AuxState aux = update_aux(W, s, ch, cfg, pa);
  const RateResult r = sum_rate(W, s, ch, cfg);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(-std::log2(aux.epsilon(k)), r.per_user(k), 1e-9);
    EXPECT_NEAR(aux.kappa(k) * aux.epsilon(k), 1.0, 1e-12);
  }
  EXPECT_NEAR(aux.q, energy_efficiency(W, s, ch, cfg, pa), 1e-12 * aux.q);
}

TEST(Aux, RateIdentityAtRandomPrecoders) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Instance in = reference_instance(seed);
    const RateResult r = sum_rate(in.W, in.s, in.ch, in.cfg);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(-std::log2(in.aux.epsilon(k)), r.per_user(k), 1e-9);
  }
}

// ---------------------------------------------------------------------------

TEST(Precoding, ZeroLinearTermGivesZero) {
  PrecodingQuadratic quad{Eigen::MatrixXcd::Identity(2, 2), Eigen::MatrixXcd::Zero(2, 2)};
  const PrecodingResult res = solve_precoding(quad, 1.0);
  EXPECT_EQ(res.W.norm(), 0.0);
  EXPECT_EQ(res.dual.rho, 0.0);
}

TEST(Precoding, InactiveConstraintKeepsUnconstrainedSolution) {
  CounterRng rng(2, 0);
  PrecodingQuadratic quad{4.0 * Eigen::MatrixXcd::Identity(3, 3), random_w(3, 2, rng, 0.1)};
  const PrecodingResult res = solve_precoding(quad, 10.0);
  EXPECT_EQ(res.dual.rho, 0.0);
  EXPECT_NEAR((res.W - quad.linear / 4.0).norm(), 0.0, 1e-15);
}

TEST(Precoding, MatchesProjectedGradientOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed, 3);
    const Eigen::MatrixXcd X = random_w(2, 2, rng);
    PrecodingQuadratic quad{X * X.adjoint() + 0.1 * Eigen::MatrixXcd::Identity(2, 2),
                            random_w(2, 2, rng)};
    for (double p_max : {0.05, 0.5, 100.0}) {
      const PrecodingResult res = solve_precoding(quad, p_max);
      const Eigen::MatrixXcd W_pg = projected_gradient(quad, p_max, 20000);
      const double f = quad.objective(res.W), f_pg = quad.objective(W_pg);
      EXPECT_LE(f - f_pg, 1e-6 * std::abs(f_pg)) << "seed " << seed << " p " << p_max;
      EXPECT_LE(res.W.squaredNorm(), p_max * (1 + 1e-9));
    }
  }
}

TEST(Precoding, KktConditionsOnReferenceInstance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Instance in = reference_instance(seed);
    for (double p_dbw : {-10.0, 5.0, 30.0}) {
      SystemConfig cfg = in.cfg;
      cfg.p_max = dbw_to_watt(p_dbw);
      const RateProblem prob = rate_problem(cfg, in.pa);
      const EffectiveChannel eff = effective_channel(in.s, in.ch, cfg);
      const PrecodingQuadratic quad = build_precoding_quadratic(in.aux, eff, prob);
      const PrecodingResult res = solve_precoding(quad, cfg.p_max);
      const double power = res.W.squaredNorm();
      EXPECT_LE(power, cfg.p_max * (1 + 1e-9));
      EXPECT_GE(res.dual.rho, 0.0);
      EXPECT_LE(res.dual.rho * std::abs(power - cfg.p_max), 1e-6 * cfg.p_max);
      EXPECT_LT(quad.gradient(res.W, res.dual.rho).norm(), 1e-8 * quad.linear.norm());
    }
  }
}

TEST(Precoding, QuadraticMatchesMseObjective) {
  // sum_k kappa_k eps_k(W) + q/(nu B) ||W||^2 equals the quadratic plus a constant.
  const Instance in = reference_instance(4);
  const RateProblem prob = rate_problem(in.cfg, in.pa);
  const EffectiveChannel eff = effective_channel(in.s, in.ch, in.cfg);
  const PrecodingQuadratic quad = build_precoding_quadratic(in.aux, eff, prob);
  auto mse_objective = [&](const Eigen::MatrixXcd& W) {
    const SignalTerms terms = signal_terms(W, eff, prob.noise);
    double f = in.aux.q / (prob.nu * prob.bandwidth) * W.squaredNorm();
    for (int k = 0; k < 4; ++k) {
      const cd t = in.aux.t(k);
      const double eps = std::norm(t) * terms.received(k) -
                         2.0 * std::real(std::conj(t) * terms.desired(k)) + 1.0;
      f += in.aux.kappa(k) * eps;
    }
    return f;
  };
  CounterRng rng(4, 5);
  const Eigen::MatrixXcd W1 = random_w(3, 4, rng), W2 = random_w(3, 4, rng);
  const double d_mse = mse_objective(W1) - mse_objective(W2);
  const double d_quad = quad.objective(W1) - quad.objective(W2);
  EXPECT_NEAR(d_quad, d_mse, 1e-9 * std::abs(d_mse));
}

// ---------------------------------------------------------------------------

TEST(Radiation, QuadraticMatchesWeightedMse) {
  // With t, kappa fixed, sum_k kappa_k eps_k(s) = f2(s) + const.
  const Instance in = reference_instance(5);
  const RadiationQuadratic quad = build_radiation_quadratic(in.aux, in.W, in.ch, in.cfg);
  auto mse = [&](const Eigen::VectorXd& s) {
    const SignalTerms terms = signal_terms(in.W, effective_channel(s, in.ch, in.cfg), in.cfg.noise);
    double f = 0.0;
    for (int k = 0; k < 4; ++k) {
      const cd t = in.aux.t(k);
      f += in.aux.kappa(k) * (std::norm(t) * terms.received(k) -
                              2.0 * std::real(std::conj(t) * terms.desired(k)) + 1.0);
    }
    return f;
  };
  CounterRng rng(5, 6);
  const Eigen::VectorXd s1 = random_s(3, 4, rng), s2 = random_s(3, 4, rng);
  const double d_mse = mse(s1) - mse(s2);
  EXPECT_NEAR(quad.value(s1) - quad.value(s2), d_mse, 1e-9 * std::abs(d_mse));
}

TEST(Radiation, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Instance in = reference_instance(seed);
    const RadiationQuadratic quad = build_radiation_quadratic(in.aux, in.W, in.ch, in.cfg);
    const Eigen::VectorXd g = euclidean_grad_f2(in.s, quad);
    double worst = 0.0;
    for (int j = 0; j < in.s.size(); ++j) {
      Eigen::VectorXd sp = in.s, sm = in.s;
      sp(j) += 1e-6;
      sm(j) -= 1e-6;
      const double fd = (quad.value(sp) - quad.value(sm)) / 2e-6;
      worst = std::max(worst, std::abs(fd - g(j)) / g.cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-5);
  }
}

TEST(Radiation, GradientSpecialCases) {
  const Instance in = reference_instance(7);
  RadiationQuadratic quad = build_radiation_quadratic(in.aux, in.W, in.ch, in.cfg);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(12);
  EXPECT_NEAR((euclidean_grad_f2(zero, quad) + 2.0 * quad.linear).norm(), 0.0, 0.0);
  AuxState silent = in.aux;
  silent.t.setZero();
  quad = build_radiation_quadratic(silent, in.W, in.ch, in.cfg);
  EXPECT_EQ(quad.linear.norm(), 0.0);
  const Eigen::VectorXd g = euclidean_grad_f2(in.s, quad);
  EXPECT_NEAR((g - (quad.A + quad.A.transpose()) * in.s).norm(), 0.0, 1e-30);
}

TEST(Radiation, RiemannianGradientExamples) {
  Eigen::VectorXd s(3), e2(3);
  s << 1, 0, 0;
  e2 << 0, 1, 0;
  EXPECT_EQ(riemannian_grad(s, 2.5 * s).norm(), 0.0);
  EXPECT_EQ(riemannian_grad(s, e2), e2);
  CounterRng rng(8, 0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd sm(5), gm(5);
    for (int i = 0; i < 5; ++i) {
      sm(i) = rng.normal();
      gm(i) = rng.normal();
    }
    sm.normalize();
    EXPECT_LT(std::abs(riemannian_grad(sm, gm).dot(sm)), 1e-12);
  }
}

TEST(Radiation, SingleElementWaveguidesAreFixed) {
  RadiationQuadratic quad{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Constant(3, 2.0)};
  const Eigen::VectorXd s = Eigen::VectorXd::Ones(3);
  const RadiationResult res = optimize_radiation(s, quad, 3, 1);
  EXPECT_EQ(res.s, s);
  EXPECT_EQ(res.f2_trace.front(), res.f2_trace.back());
}

TEST(Radiation, IsotropicQuadraticIsConstant) {
  RadiationQuadratic quad{Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)};
  Eigen::VectorXd s(2);
  s << 0.6, 0.8;
  const RadiationResult res = optimize_radiation(s, quad, 1, 2);
  EXPECT_NEAR(res.s.norm(), 1.0, 1e-12);
  for (double f : res.f2_trace) EXPECT_NEAR(f, 1.0, 1e-12);
}

TEST(Radiation, ReachesSphericalGridMinimum) {
  OptimizerConfig opt;
  opt.eps_xi = 1e-12;
  opt.max_radiation_iters = 5000;
  const double deg = kPi / 180.0;
  int reached = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed, 10);
    SystemConfig cfg = reference_config(1, 3);
    cfg.y_bar = {100.0 * rng.uniform()};
    UserLayout users(4);
    for (auto& u : users) u = {100.0 * rng.uniform(), 100.0 * rng.uniform()};
    PAPlacement p{Eigen::MatrixXd(3, 1)};
    p.x << 10.0 + 20.0 * rng.uniform(), 40.0 + 20.0 * rng.uniform(), 70.0 + 20.0 * rng.uniform();
    const ChannelState ch = synth_channels(p, users, cfg);
    const Eigen::VectorXd s0 = random_s(1, 3, rng);
    const Eigen::MatrixXcd W = random_w(1, 4, rng);
    const AuxState aux = update_aux(W, s0, ch, cfg, 0.01);
    const RadiationQuadratic quad = build_radiation_quadratic(aux, W, ch, cfg);

    double grid_min = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 90; ++a)
      for (int b = 0; b <= 90; ++b) {
        Eigen::Vector3d v(std::sin(a * deg) * std::cos(b * deg),
                          std::sin(a * deg) * std::sin(b * deg), std::cos(a * deg));
        grid_min = std::min(grid_min, quad.value(v));
      }
    const RadiationResult res = optimize_radiation(s0, quad, 1, 3, opt);
    if (res.f2_trace.back() <= grid_min + 1e-6 * std::max(1.0, std::abs(grid_min))) ++reached;
    EXPECT_NEAR(res.s.norm(), 1.0, 1e-12);
    EXPECT_GE(res.s.minCoeff(), 0.0);
  }
  // These quadratics occasionally have a second local minimum on a face of the
  // orthant (about 1 instance in 100); seed 4 of this set is one of them.
  EXPECT_GE(reached, 9);
}

TEST(Radiation, EndsAtFaceStationaryPointOfNonconvexQuadratic) {
  // Generic quadratics on the sphere have several local minima; a descent
  // method only promises stationarity on the face it ends on.
  OptimizerConfig opt;
  opt.eps_xi = 1e-14;
  opt.max_radiation_iters = 5000;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed, 10);
    Eigen::MatrixXd X(3, 3);
    for (int i = 0; i < 9; ++i) X(i) = rng.normal();
    RadiationQuadratic quad{X * X.transpose(), Eigen::VectorXd(3)};
    for (int i = 0; i < 3; ++i) quad.linear(i) = rng.normal();
    const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(3, 1.0 / std::sqrt(3.0));
    const RadiationResult res = optimize_radiation(s0, quad, 1, 3, opt);
    EXPECT_LE(res.f2_trace.back(), res.f2_trace.front());
    // KKT on the sphere within the orthant: mu = s^T g, then g - mu s is zero
    // on the support and nonnegative off it.
    const Eigen::VectorXd g = euclidean_grad_f2(res.s, quad);
    const Eigen::VectorXd rg = riemannian_grad(res.s, g);
    for (int j = 0; j < 3; ++j) {
      if (res.s(j) > 1e-9)
        EXPECT_NEAR(rg(j), 0.0, 1e-5 * g.norm()) << "seed " << seed << " j " << j;
      else
        EXPECT_GE(rg(j), -1e-5 * g.norm()) << "seed " << seed << " j " << j;
    }
  }
}

TEST(Radiation, MonotoneUnitNormNonnegativeOnReferenceInstance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Instance in = reference_instance(seed);
    const RadiationQuadratic quad = build_radiation_quadratic(in.aux, in.W, in.ch, in.cfg);
    const RadiationResult res = optimize_radiation(in.s, quad, 3, 4);
    for (std::size_t i = 1; i < res.f2_trace.size(); ++i)
      EXPECT_LE(res.f2_trace[i], res.f2_trace[i - 1]);
    EXPECT_LT(amplitude_norm_error(res.s, 3, 4), 1e-12);
    EXPECT_GE(res.s.minCoeff(), 0.0);
  }
}

// ---------------------------------------------------------------------------

namespace {

// Free-space single link, the setting desired_signal_power is defined for.
SystemConfig single_waveguide() {
  SystemConfig cfg = reference_config(1, 1);
  cfg.K = 1;
  cfg.y_bar = {50.0};
  cfg.beta_u = 2.0;
  return cfg;
}

}  // namespace

TEST(Positions, CoarseForcedChoice) {
  const SystemConfig cfg = single_waveguide();
  const UserLayout users{{20.0, 10.0}};
  const UniformGrid one{42.0, 1.0, 1};
  const Eigen::MatrixXd b = Eigen::MatrixXd::Constant(1, 1, 123.0);
  EXPECT_EQ(coarse_search(b, one, users, cfg, 1, 1)(0, 0), 42.0);
  EXPECT_THROW(coarse_search(Eigen::MatrixXd::Zero(2, 1), one, users, cfg, 1, 2), ConfigError);
}

TEST(Positions, CoarseExactMatch) {
  SystemConfig cfg = reference_config(2, 1);
  cfg.y_bar = {30.0, 70.0};
  const UserLayout users = reference_users();
  const UniformGrid grid{0.0, 10.0, 11};
  Eigen::MatrixXd b(2, 4);
  for (int k = 0; k < 4; ++k) {
    b(0, k) = amplitude_factor(60.0, 30.0, users[k], cfg);
    b(1, k) = amplitude_factor(20.0, 70.0, users[k], cfg);
  }
  const Eigen::MatrixXd x = coarse_search(b, grid, users, cfg, 2, 1);
  EXPECT_EQ(x(0, 0), 60.0);
  EXPECT_EQ(x(0, 1), 20.0);
}

TEST(Positions, CoarseMatchesExhaustiveScan) {
  const SystemConfig cfg = reference_config(1, 3);
  const UserLayout users = reference_users();
  const UniformGrid grid{0.0, 10.0, 11};
  CounterRng rng(12, 0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd b(3, 4);
    for (int i = 0; i < b.size(); ++i) b(i) = 2e-4 * rng.uniform();
    const Eigen::MatrixXd x = coarse_search(b, grid, users, cfg, 1, 3);
    std::vector<int> used;
    for (int n = 0; n < 3; ++n) {
      int best = -1;
      double best_cost = 0.0;
      for (int g = 0; g <= 10; ++g) {
        if (std::find(used.begin(), used.end(), g) != used.end()) continue;
        const double xg = 10.0 * g;
        double cost = 0.0;
        for (int k = 0; k < 4; ++k) {
          const double r = std::hypot(users[k].x - xg, users[k].y - 50.0);
          const double u = std::exp(-cfg.alpha_g * xg) * std::pow(r, -1.1);
          cost += (b(n, k) - u) * (b(n, k) - u);
        }
        if (best < 0 || cost < best_cost) {
          best = g;
          best_cost = cost;
        }
      }
      used.push_back(best);
      EXPECT_DOUBLE_EQ(x(n, 0), 10.0 * best) << "trial " << trial << " n " << n;
    }
  }
}

TEST(Positions, FineForcedChoiceAndExactMatch) {
  const SystemConfig cfg = single_waveguide();
  const UserLayout users{{37.0, 12.0}};
  const Eigen::MatrixXd xc = Eigen::MatrixXd::Constant(1, 1, 40.0);
  const UniformGrid one{-0.1, 0.01, 1};
  EXPECT_EQ(fine_search(Eigen::MatrixXcd::Ones(1, 1), xc, one, users, cfg)(0, 0), -0.1);
  const UniformGrid grid{-0.1, 0.01, 21};
  Eigen::MatrixXcd c(1, 1);
  c(0, 0) = phase_factor(40.0 + grid[13], 50.0, users[0], cfg);
  EXPECT_EQ(fine_search(c, xc, grid, users, cfg)(0, 0), grid[13]);
}

TEST(Positions, FineMatchesExhaustiveScan) {
  const SystemConfig cfg = reference_config(1, 2);
  const UserLayout users = reference_users();
  const UniformGrid grid{-0.1, 0.01, 21};
  Eigen::MatrixXd xc(2, 1);
  xc << 30.0, 70.0;
  CounterRng rng(13, 0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXcd c(2, 4);
    for (int i = 0; i < c.size(); ++i) c(i) = rng.complex_normal();
    const Eigen::MatrixXd dx = fine_search(c, xc, grid, users, cfg);
    for (int n = 0; n < 2; ++n) {
      int best = 0;
      double best_cost = std::numeric_limits<double>::infinity();
      for (int f = 0; f < 21; ++f) {
        const double x = xc(n) - 0.1 + 0.01 * f;
        double cost = 0.0;
        for (int k = 0; k < 4; ++k) {
          const double r = std::hypot(users[k].x - x, users[k].y - 50.0);
          const double ph = 2 * kPi / cfg.lambda_g * x + 2 * kPi / cfg.lambda * r;
          cost += std::norm(c(n, k) - std::exp(cd(0.0, -ph)));
        }
        if (cost < best_cost) {
          best_cost = cost;
          best = f;
        }
      }
      EXPECT_NEAR(dx(n, 0), grid[best], 1e-15) << "trial " << trial;
    }
  }
}

TEST(Positions, PhaseEntriesHaveUnitModulus) {
  const Instance in = reference_instance(3);
  const GridSets grids = make_grids(ProtocolKind::STT, in.cfg, GridConfig{});
  PositionAux pos = init_position_aux(equal_interval_placement(in.cfg), in.users, in.cfg, 10.0, 2.0);
  const PositionProblem prob = position_problem(in.aux, in.W, in.s, in.cfg);
  optimize_positions(prob, pos, grids, in.users, in.cfg);
  EXPECT_EQ((pos.z.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-15, true);
}

TEST(Positions, AugmentedLagrangianNonincreasingAcrossBlocks) {
  const Instance in = reference_instance(6);
  const GridSets grids = make_grids(ProtocolKind::STT, in.cfg, GridConfig{});
  for (double varrho : {1e-2, 1.0, 100.0}) {
    PositionAux pos =
        init_position_aux(equal_interval_placement(in.cfg), in.users, in.cfg, varrho, 2.0);
    const PositionProblem prob = position_problem(in.aux, in.W, in.s, in.cfg);
    for (int pass = 0; pass < 4; ++pass) {
      const double before = augmented_lagrangian(prob, pos);
      const Eigen::MatrixXd xc_before = pos.x_coarse;
      const bool was_on_grid = pos.coarse_on_grid;
      update_amplitude_block(prob, pos, grids, in.users, in.cfg);
      const double mid = augmented_lagrangian(prob, pos);
      // the first coarse search moves off-grid starts onto the grid
      if (was_on_grid) EXPECT_LE(mid, before + 1e-9 * std::abs(before));
      update_phase_block(prob, pos, grids, in.users, in.cfg);
      const double after = augmented_lagrangian(prob, pos);
      if (pos.x_coarse == xc_before) EXPECT_LE(after, mid + 1e-9 * std::abs(mid));
    }
  }
}

TEST(Positions, NegligibleLossSingleLinkPicksNearestCoarsePoint) {
  SystemConfig cfg = single_waveguide();
  cfg.alpha_g = 1e-9;
  const UserLayout users{{50.0, 60.0}};
  GridConfig grid;
  grid.delta_c = 10.0;
  grid.delta_f = 0.01;
  const GridSets grids = make_grids(ProtocolKind::STT, cfg, grid);
  OptimizerConfig opt;
  opt.max_outer_iters = 5;
  const Algorithm2Result res =
      run_algorithm2(cfg, ProtocolKind::STT, grid, PAPowerComponents{}, users, opt, 0);
  EXPECT_EQ(res.best.positions.x_coarse(0, 0), 50.0);
}

TEST(Positions, TinyInstanceNearJointExhaustiveOptimum) {
  // One PA and one user: desired power depends on position through amplitude
  // only; compare against all 11 x 21 composites. The amplitude target only
  // exceeds the current amplitude by a factor 1 + 1/SNR, so the search is run
  // where the link is noise limited.
  SystemConfig cfg = single_waveguide();
  cfg.p_max = dbw_to_watt(-20.0);
  GridConfig grid;
  grid.delta_c = 10.0;
  grid.delta_f = 0.01;
  const GridSets grids = make_grids(ProtocolKind::STT, cfg, grid);
  ASSERT_EQ(grids.coarse.size(), 11u);
  ASSERT_EQ(grids.fine.size(), 21u);
  OptimizerConfig opt;
  opt.varrho0 = 1.0;
  const double xi[] = {1.0};
  CounterRng rng(77, 0);
  for (int trial = 0; trial < 12; ++trial) {
    const UserLayout users{{100.0 * rng.uniform(), 100.0 * rng.uniform()}};
    double best = 0.0;
    for (std::size_t g = 0; g < 11; ++g)
      for (std::size_t f = 0; f < 21; ++f) {
        const double x[] = {std::clamp(grids.coarse[g] + grids.fine[f], cfg.x_min, cfg.x_max)};
        best = std::max(best, desired_signal_power(x, 50.0, users[0], xi, cfg));
      }
    const Algorithm2Result res =
        run_algorithm2(cfg, ProtocolKind::STT, grid, PAPowerComponents{}, users, opt, 0);
    const double x[] = {res.best.placement.x(0, 0)};
    EXPECT_GE(desired_signal_power(x, 50.0, users[0], xi, cfg), 0.95 * best) << "trial " << trial;
  }
}

TEST(SingleLink, UserAboveGridPointWithoutLoss) {
  SystemConfig cfg = single_waveguide();
  cfg.alpha_g = 0.0;
  const GridSets grids = make_grids(ProtocolKind::STT, cfg, GridConfig{});
  const SingleLinkResult res = single_link_dsd({37.0, 58.0}, 50.0, grids, cfg);
  EXPECT_EQ(res.x_coarse, 37.0);
}

TEST(SingleLink, PhaseWithinGridBoundAndLinearEvaluationCount) {
  const SystemConfig cfg = single_waveguide();
  const GridSets grids = make_grids(ProtocolKind::STT, cfg, GridConfig{});
  ASSERT_GE(0.2, cfg.lambda_g);
  const double bound = kPi * 1e-4 * (2 * kPi / cfg.lambda_g + 2 * kPi / cfg.lambda) / (2 * kPi);
  CounterRng rng(14, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const UserPosition user{10.0 + 80.0 * rng.uniform(), 60.0 + 30.0 * rng.uniform()};
    const double target = 2 * kPi * rng.uniform() - kPi;
    const SingleLinkResult res = single_link_dsd(user, 50.0, grids, cfg, target);
    EXPECT_EQ(res.evaluations, grids.coarse.size() + grids.fine.size());
    const cd z = phase_factor(res.x_coarse + res.dx_fine, 50.0, user, cfg);
    EXPECT_LE(std::abs(std::arg(z * std::polar(1.0, target))), bound);
  }
}

// ---------------------------------------------------------------------------

TEST(Algorithm2, VanishingBudget) {
  SystemConfig cfg = reference_config();
  cfg.p_max = 1e-12;
  OptimizerConfig opt;
  opt.max_outer_iters = 2;
  const Algorithm2Result res = run_algorithm2(cfg, ProtocolKind::STT, GridConfig{},
                                              PAPowerComponents{}, reference_users(), opt, 0);
  EXPECT_LE(res.best.W.squaredNorm(), 1e-12 * (1 + 1e-9));
  EXPECT_LT(res.best.ee, 1.0);  // bits/joule; a 5 dBW run is ~1e7
}

TEST(Algorithm2, ImprovesOnInitializationAndIsDeterministic) {
  const SystemConfig cfg = reference_config();
  OptimizerConfig opt;
  const Algorithm2Result a = run_algorithm2(cfg, ProtocolKind::STT, GridConfig{},
                                            PAPowerComponents{}, reference_users(), opt, 0);
  EXPECT_GT(a.best.ee, a.initial_ee);
  EXPECT_FALSE(a.trace.empty());
  EXPECT_LT(amplitude_norm_error(a.best.s, 3, 4), 1e-12);
  EXPECT_TRUE(a.best.placement.violations(cfg).empty());
  EXPECT_LE(a.best.W.squaredNorm(), cfg.p_max * (1 + 1e-9));
  const double ee = energy_efficiency(a.best.W, a.best.s,
                                      synth_channels(a.best.placement, reference_users(), cfg),
                                      cfg, pa_power(ProtocolKind::STT, PAPowerComponents{}));
  EXPECT_NEAR(ee, a.best.ee, 1e-12 * ee);
  for (std::size_t i = 1; i < a.trace.size(); ++i)
    EXPECT_GE(a.trace[i].varrho, a.trace[i - 1].varrho);

  OptimizerConfig short_opt;
  short_opt.max_outer_iters = 2;
  const Algorithm2Result b1 = run_algorithm2(cfg, ProtocolKind::SAT, GridConfig{},
                                             PAPowerComponents{}, reference_users(), short_opt, 3);
  const Algorithm2Result b2 = run_algorithm2(cfg, ProtocolKind::SAT, GridConfig{},
                                             PAPowerComponents{}, reference_users(), short_opt, 3);
  EXPECT_EQ(b1.best.ee, b2.best.ee);
  EXPECT_EQ(b1.trace.size(), b2.trace.size());
}

TEST(Algorithm2, RejectsInvalidConfig) {
  SystemConfig cfg = reference_config();
  cfg.nu = -1.0;
  EXPECT_THROW(run_algorithm2(cfg, ProtocolKind::STT, GridConfig{}, PAPowerComponents{},
                              reference_users(), OptimizerConfig{}, 0),
               ConfigError);
}
