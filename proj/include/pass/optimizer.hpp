#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pass/config.hpp"
#include "pass/dsd.hpp"
#include "pass/model.hpp"

namespace pass {

/// The linear solve of the precoding step failed to factor.
class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
  double eps_xi = 1e-4;
  double eps_in = 1e-8;
  double eps_out = 1e-8;
  // Armijo backtracking on the sphere blocks
  double varpi0 = 1e2;
  double armijo_contraction = 0.5;
  double armijo_slope = 1e-4;
  int armijo_max_halvings = 50;
  int max_radiation_iters = 200;
  // Algorithm 2 loops
  int max_inner_iters = 30;
  int max_outer_iters = 15;
  // rho bisection
  double bisection_growth = 2.0;
  double bisection_tol = 1e-8;
  int bisection_max_steps = 400;
  // penalty schedule
  double varrho0 = 230.0;
  double c_varrho = 1.0 / 0.9;
  int position_passes = 1;

  std::vector<std::string> violations() const;
};

// ---------------------------------------------------------------------------
// Fractional-programming auxiliaries

struct AuxState {
  Eigen::VectorXcd t;
  Eigen::VectorXd kappa;
  Eigen::VectorXd epsilon;
  double q = 0.0;  // bits/joule
};

struct DualState {
  double rho = 0.0;
};

/// Quantities the auxiliary update needs beyond the channel.
struct RateProblem {
  double bandwidth = 0.0;
  double noise = 0.0;
  double nu = 1.0;
  double p_max = 0.0;
  double hardware_power = 0.0;  // static + per-element hardware draw (W)
};

RateProblem rate_problem(const SystemConfig& cfg, double pa_power_per_element);

/// MMSE receiver t, weights kappa = 1/epsilon and Dinkelbach ratio q for the
/// current precoder.
AuxState update_aux(const Eigen::MatrixXcd& W, const EffectiveChannel& eff,
                    const RateProblem& prob);
AuxState update_aux(const Eigen::MatrixXcd& W, const Eigen::VectorXd& s, const ChannelState& ch,
                    const SystemConfig& cfg, double pa_power_per_element);

// ---------------------------------------------------------------------------
// Precoding

/// min sum_k w_k^H A w_k - 2 Re{v_k^H w_k} + rho (sum ||w_k||^2 - P_max).
/// `base` excludes rho; the same matrix applies to every user.
struct PrecodingQuadratic {
  Eigen::MatrixXcd base;    // D x D Hermitian
  Eigen::MatrixXcd linear;  // D x K, column k is v_k

  double objective(const Eigen::MatrixXcd& W, double rho = 0.0) const;
  /// d objective / d W^* for the given rho.
  Eigen::MatrixXcd gradient(const Eigen::MatrixXcd& W, double rho = 0.0) const;
  Eigen::MatrixXcd solve(double rho) const;
};

PrecodingQuadratic build_precoding_quadratic(const AuxState& aux, const EffectiveChannel& eff,
                                             const RateProblem& prob);

struct PrecodingResult {
  Eigen::MatrixXcd W;
  DualState dual;
  int bisection_steps = 0;
};

PrecodingResult solve_precoding(const PrecodingQuadratic& quad, double p_max,
                                const OptimizerConfig& opt = {});
PrecodingResult solve_precoding(const AuxState& aux, const EffectiveChannel& eff,
                                const RateProblem& prob, const OptimizerConfig& opt = {});
PrecodingResult solve_precoding(const AuxState& aux, const Eigen::VectorXd& s,
                                const ChannelState& ch, const SystemConfig& cfg,
                                const OptimizerConfig& opt = {});

// ---------------------------------------------------------------------------
// Radiation amplitudes (block coordinate manifold optimization)

/// f2(s) = s^T A s - 2 linear^T s with A symmetric.
struct RadiationQuadratic {
  Eigen::MatrixXd A;
  Eigen::VectorXd linear;

  double value(const Eigen::VectorXd& s) const { return s.dot(A * s) - 2.0 * linear.dot(s); }
};

RadiationQuadratic build_radiation_quadratic(const AuxState& aux, const Eigen::MatrixXcd& W,
                                             const ChannelState& ch, const SystemConfig& cfg);

Eigen::VectorXd euclidean_grad_f2(const Eigen::VectorXd& s, const RadiationQuadratic& quad);

/// Projection of a Euclidean gradient block onto the tangent space of the
/// unit sphere at s_m.
Eigen::VectorXd riemannian_grad(const Eigen::VectorXd& s_m, const Eigen::VectorXd& g_m);

struct RadiationResult {
  Eigen::VectorXd s;
  std::vector<double> f2_trace;  // value after every sweep, starting with the input
  int iterations = 0;
  int skipped_steps = 0;         // block steps where Armijo found no decrease
  bool converged = false;
};

RadiationResult optimize_radiation(const Eigen::VectorXd& s_init, const RadiationQuadratic& quad,
                                   int M, int N, const OptimizerConfig& opt = {});

// ---------------------------------------------------------------------------
// Positions (penalty-based dual-scale search)

/// Amplitude u = exp(-alpha_g x) r^(-beta/2) of a PA at x on row y for a user.
double amplitude_factor(double x, double y, const UserPosition& user, const SystemConfig& cfg);
/// Unit-modulus phase z = exp(-j 2pi/lambda_g x - j 2pi/lambda r).
cd phase_factor(double x, double y, const UserPosition& user, const SystemConfig& cfg);

/// Auxiliary state of the position subproblem. Matrices are MN x K with the
/// element index j = m*N + n; coordinates are N x M.
struct PositionAux {
  Eigen::MatrixXd b;
  Eigen::MatrixXd u;
  Eigen::MatrixXcd c;
  Eigen::MatrixXcd z;
  double varrho = 1.0;
  double c_varrho = 1.0 / 0.9;
  Eigen::MatrixXd x_coarse;
  Eigen::MatrixXd dx_fine;
  bool coarse_on_grid = false;  // x_coarse was produced by a grid search

  PAPlacement placement(const SystemConfig& cfg) const;
};

/// u, z evaluated at the given placement with b = u, c = z and zero fine offsets.
PositionAux init_position_aux(const PAPlacement& placement, const UserLayout& users,
                              const SystemConfig& cfg, double varrho, double c_varrho);

/// Fixed data of the position subproblem (W, s and the auxiliaries).
struct PositionProblem {
  Eigen::MatrixXcd W;  // M x K
  Eigen::VectorXd s;   // MN
  Eigen::VectorXcd t;
  Eigen::VectorXd kappa;
  double los_gain = 0.0;   // sqrt(C0 Kr / (Kr+1))
  double nlos_gain = 0.0;  // C0 / (Kr+1)
  int M = 0;
  int N = 0;
};

PositionProblem position_problem(const AuxState& aux, const Eigen::MatrixXcd& W,
                                 const Eigen::VectorXd& s, const SystemConfig& cfg);

/// f4 with amplitudes b and phases c in place of the position-dependent terms.
double surrogate_f4(const PositionProblem& prob, const Eigen::MatrixXd& b,
                    const Eigen::MatrixXcd& c);
/// f4(b, c) + varrho (||u - b||^2 + ||z - c||^2).
double augmented_lagrangian(const PositionProblem& prob, const PositionAux& pos);

/// Closed-form b followed by the coarse search for x_coarse and the rebuild of u.
void update_amplitude_block(const PositionProblem& prob, PositionAux& pos, const GridSets& grids,
                            const UserLayout& users, const SystemConfig& cfg);
/// Closed-form c followed by the fine search for dx_fine and the rebuild of z.
void update_phase_block(const PositionProblem& prob, PositionAux& pos, const GridSets& grids,
                        const UserLayout& users, const SystemConfig& cfg);

/// Coarse search alone: for each waveguide, assigns PAs in order n = 0..N-1 to
/// the grid point minimizing sum_k (b_mnk - u(x))^2, skipping points within
/// delta_x of earlier assignments. Ties go to the smaller coordinate.
Eigen::MatrixXd coarse_search(const Eigen::MatrixXd& b, const UniformGrid& coarse,
                              const UserLayout& users, const SystemConfig& cfg, int M, int N);
/// Fine search alone for fixed coarse coordinates.
Eigen::MatrixXd fine_search(const Eigen::MatrixXcd& c, const Eigen::MatrixXd& x_coarse,
                            const UniformGrid& fine, const UserLayout& users,
                            const SystemConfig& cfg);

/// Runs `opt.position_passes` rounds of the four block updates and returns the
/// composite placement, clamped to the deployment range.
PAPlacement optimize_positions(const PositionProblem& prob, PositionAux& pos,
                               const GridSets& grids, const UserLayout& users,
                               const SystemConfig& cfg, const OptimizerConfig& opt = {});

struct SingleLinkResult {
  double x_coarse = 0.0;
  double dx_fine = 0.0;
  double power = 0.0;
  std::size_t evaluations = 0;
};

/// Two sequential one-dimensional searches for one PA serving one user:
/// amplitude match on the coarse grid, then phase match on the fine grid.
SingleLinkResult single_link_dsd(const UserPosition& user, double y_wave, const GridSets& grids,
                                 const SystemConfig& cfg, double target_phase = 0.0);

// ---------------------------------------------------------------------------
// Alternating optimization driver

struct TraceRecord {
  int iteration = 0;
  int outer = 0;
  int inner = 0;
  std::string stage;
  double f2 = 0.0;
  double ee = 0.0;
  double rho = 0.0;
  double varrho = 0.0;
  double tx_power = 0.0;
};

struct SolutionState {
  Eigen::MatrixXcd W;
  Eigen::VectorXd s;
  PAPlacement placement;
  AuxState aux;
  DualState dual;
  PositionAux positions;
  double ee = 0.0;
};

struct Algorithm2Result {
  SolutionState best;
  double initial_ee = 0.0;  // MRT precoding, uniform radiation, equal-interval positions
  std::vector<TraceRecord> trace;
  bool hit_iteration_cap = false;
  int outer_iterations = 0;
};

/// Initial PA placement for a run: equal-interval positions with a seeded
/// sub-base offset drawn uniformly from the fine range.
PAPlacement initial_placement(const SystemConfig& cfg, const GridConfig& grid,
                              std::uint64_t seed);

Algorithm2Result run_algorithm2(const SystemConfig& cfg, ProtocolKind protocol,
                                const GridConfig& grid, const PAPowerComponents& comps,
                                const UserLayout& users, const OptimizerConfig& opt,
                                std::uint64_t seed);

}  // namespace pass
