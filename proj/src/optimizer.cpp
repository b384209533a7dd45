#include "pass/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pass {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double relative_change(double now, double before) {
  return std::abs(now - before) / std::max(std::abs(before), 1e-30);
}

// W expanded to element level: wbar(j, i) = W(m(j), i).
Eigen::MatrixXcd expand_precoder(const Eigen::MatrixXcd& W, int N) {
  Eigen::MatrixXcd out(W.rows() * N, W.cols());
  for (Eigen::Index m = 0; m < W.rows(); ++m) out.middleRows(m * N, N).rowwise() = W.row(m);
  return out;
}

double clamp_to_range(double x, const SystemConfig& cfg) {
  return std::clamp(x, cfg.x_min, cfg.x_max);
}

}  // namespace

std::vector<std::string> OptimizerConfig::violations() const {
  std::vector<std::string> out;
  auto need = [&out](bool ok, const char* what) {
    if (!ok) out.emplace_back(what);
  };
  need(eps_xi > 0, "eps_xi: must be > 0");
  need(eps_in > 0, "eps_in: must be > 0");
  need(eps_out > 0, "eps_out: must be > 0");
  need(varpi0 > 0, "varpi0: must be > 0");
  need(armijo_contraction > 0 && armijo_contraction < 1, "armijo_contraction: must lie in (0, 1)");
  need(armijo_slope > 0 && armijo_slope < 1, "armijo_slope: must lie in (0, 1)");
  need(armijo_max_halvings >= 1, "armijo_max_halvings: must be >= 1");
  need(max_radiation_iters >= 1, "max_radiation_iters: must be >= 1");
  need(max_inner_iters >= 1, "max_inner_iters: must be >= 1");
  need(max_outer_iters >= 1, "max_outer_iters: must be >= 1");
  need(bisection_growth > 1, "bisection_growth: must be > 1");
  need(bisection_tol > 0, "bisection_tol: must be > 0");
  need(bisection_max_steps >= 1, "bisection_max_steps: must be >= 1");
  need(varrho0 > 0, "varrho0: must be > 0");
  need(c_varrho > 1, "c_varrho: must be > 1");
  need(position_passes >= 1, "position_passes: must be >= 1");
  return out;
}

// ---------------------------------------------------------------------------

RateProblem rate_problem(const SystemConfig& cfg, double pa_power_per_element) {
  return {cfg.bandwidth, cfg.noise, cfg.nu, cfg.p_max,
          cfg.p_bs_static + static_cast<double>(cfg.M) * cfg.N * pa_power_per_element};
}

AuxState update_aux(const Eigen::MatrixXcd& W, const EffectiveChannel& eff,
                    const RateProblem& prob) {
  const SignalTerms terms = signal_terms(W, eff, prob.noise);
  const Eigen::Index K = terms.desired.size();
  AuxState aux{Eigen::VectorXcd(K), Eigen::VectorXd(K), Eigen::VectorXd(K), 0.0};
  for (Eigen::Index k = 0; k < K; ++k) {
    const cd a = terms.desired(k);
    const double total = terms.received(k);
    const cd t = a / total;
    const double eps = std::norm(t) * total - 2.0 * std::real(std::conj(t) * a) + 1.0;
    aux.t(k) = t;
    aux.epsilon(k) = eps;
    aux.kappa(k) = 1.0 / eps;
  }
  const double rate = rates_from_sinr(sinr(W, eff, prob.noise)).sum;
  aux.q = prob.bandwidth * rate / total_power(W, prob.nu, 0.0, prob.hardware_power);
  return aux;
}

AuxState update_aux(const Eigen::MatrixXcd& W, const Eigen::VectorXd& s, const ChannelState& ch,
                    const SystemConfig& cfg, double pa_power_per_element) {
  return update_aux(W, effective_channel(s, ch, cfg), rate_problem(cfg, pa_power_per_element));
}

// ---------------------------------------------------------------------------

double PrecodingQuadratic::objective(const Eigen::MatrixXcd& W, double rho) const {
  double f = 0.0;
  for (Eigen::Index k = 0; k < W.cols(); ++k) {
    f += std::real(W.col(k).dot(base * W.col(k))) + rho * W.col(k).squaredNorm();
    f -= 2.0 * std::real(linear.col(k).dot(W.col(k)));
  }
  return f;
}

Eigen::MatrixXcd PrecodingQuadratic::gradient(const Eigen::MatrixXcd& W, double rho) const {
  return base * W + rho * W - linear;
}

Eigen::MatrixXcd PrecodingQuadratic::solve(double rho) const {
  const Eigen::Index D = base.rows();
  Eigen::LLT<Eigen::MatrixXcd> llt(base + rho * Eigen::MatrixXcd::Identity(D, D));
  if (llt.info() != Eigen::Success)
    throw SingularSystemError("solve_precoding: regularized system is not positive definite");
  return llt.solve(linear);
}

PrecodingQuadratic build_precoding_quadratic(const AuxState& aux, const EffectiveChannel& eff,
                                             const RateProblem& prob) {
  const Eigen::Index D = eff.los.rows();
  const Eigen::Index K = eff.los.cols();
  PrecodingQuadratic quad{Eigen::MatrixXcd::Zero(D, D), Eigen::MatrixXcd(D, K)};
  for (Eigen::Index k = 0; k < K; ++k) {
    const double weight = aux.kappa(k) * std::norm(aux.t(k));
    const Eigen::VectorXcd e_conj = eff.los.col(k).conjugate();
    quad.base += weight * (e_conj * e_conj.adjoint());
    quad.base.diagonal().real() += weight * eff.nlos_var.col(k);
    quad.linear.col(k) = aux.kappa(k) * aux.t(k) * e_conj;
  }
  // the whole objective is divided by B, so rho is per unit bandwidth
  quad.base.diagonal().real().array() += aux.q / (prob.nu * prob.bandwidth);
  return quad;
}

PrecodingResult solve_precoding(const PrecodingQuadratic& quad, double p_max,
                                const OptimizerConfig& opt) {
  const Eigen::Index D = quad.linear.rows();
  const Eigen::Index K = quad.linear.cols();
  PrecodingResult res{Eigen::MatrixXcd::Zero(D, K), {0.0}, 0};
  if (quad.linear.squaredNorm() == 0.0) return res;

  // Power at rho; +inf when the system cannot be factored.
  auto power_at = [&](double rho, Eigen::MatrixXcd& W) {
    try {
      W = quad.solve(rho);
    } catch (const SingularSystemError&) {
      if (rho > 0.0) throw;
      return std::numeric_limits<double>::infinity();
    }
    return W.squaredNorm();
  };

  Eigen::MatrixXcd W;
  if (power_at(0.0, W) <= p_max) {
    res.W = std::move(W);
    return res;
  }
  double lo = 0.0;
  double hi = 1.0;
  Eigen::MatrixXcd W_hi;
  int steps = 0;
  while (power_at(hi, W_hi) > p_max) {
    lo = hi;
    hi *= opt.bisection_growth;
    if (++steps > opt.bisection_max_steps)
      throw SingularSystemError("solve_precoding: no feasible multiplier found");
  }
  while (hi - lo > opt.bisection_tol * hi && steps < opt.bisection_max_steps) {
    const double mid = 0.5 * (lo + hi);
    Eigen::MatrixXcd W_mid;
    if (power_at(mid, W_mid) <= p_max) {
      hi = mid;
      W_hi = std::move(W_mid);
    } else {
      lo = mid;
    }
    ++steps;
  }
  res.W = std::move(W_hi);
  res.dual.rho = hi;
  res.bisection_steps = steps;
  return res;
}

PrecodingResult solve_precoding(const AuxState& aux, const EffectiveChannel& eff,
                                const RateProblem& prob, const OptimizerConfig& opt) {
  return solve_precoding(build_precoding_quadratic(aux, eff, prob), prob.p_max, opt);
}

PrecodingResult solve_precoding(const AuxState& aux, const Eigen::VectorXd& s,
                                const ChannelState& ch, const SystemConfig& cfg,
                                const OptimizerConfig& opt) {
  // hardware power does not enter the precoding step
  return solve_precoding(aux, effective_channel(s, ch, cfg), rate_problem(cfg, 0.0), opt);
}

// ---------------------------------------------------------------------------

RadiationQuadratic build_radiation_quadratic(const AuxState& aux, const Eigen::MatrixXcd& W,
                                             const ChannelState& ch, const SystemConfig& cfg) {
  const int MN = ch.M * ch.N;
  const Eigen::Index K = ch.K();
  const double nlos_gain = cfg.c0 / (cfg.rician + 1.0);
  const Eigen::MatrixXcd wbar = expand_precoder(W, ch.N);
  const Eigen::VectorXd g_pow = ch.g.cwiseAbs2();

  RadiationQuadratic quad{Eigen::MatrixXd::Zero(MN, MN), Eigen::VectorXd::Zero(MN)};
  for (Eigen::Index k = 0; k < K; ++k) {
    const double weight = aux.kappa(k) * std::norm(aux.t(k));
    const Eigen::VectorXcd hg = ch.h_bar.col(k).cwiseProduct(ch.g);
    for (Eigen::Index i = 0; i < K; ++i) {
      // a_ki = v^T s
      const Eigen::VectorXcd v = hg.cwiseProduct(wbar.col(i));
      const Eigen::VectorXd vr = v.real();
      const Eigen::VectorXd vi = v.imag();
      quad.A.noalias() += weight * (vr * vr.transpose() + vi * vi.transpose());
      quad.A.diagonal() += weight * nlos_gain *
                           ch.path_gain.col(k).cwiseProduct(g_pow).cwiseProduct(
                               wbar.col(i).cwiseAbs2());
      if (i == k) quad.linear += aux.kappa(k) * (std::conj(aux.t(k)) * v).real();
    }
  }
  return quad;
}

Eigen::VectorXd euclidean_grad_f2(const Eigen::VectorXd& s, const RadiationQuadratic& quad) {
  return (quad.A + quad.A.transpose()) * s - 2.0 * quad.linear;
}

Eigen::VectorXd riemannian_grad(const Eigen::VectorXd& s_m, const Eigen::VectorXd& g_m) {
  return g_m - s_m.dot(g_m) * s_m;
}

RadiationResult optimize_radiation(const Eigen::VectorXd& s_init, const RadiationQuadratic& quad,
                                   int M, int N, const OptimizerConfig& opt) {
  RadiationResult res{s_init, {}, 0, 0, false};
  Eigen::VectorXd& s = res.s;
  double f = quad.value(s);
  res.f2_trace.push_back(f);
  if (N == 1) {
    res.converged = true;
    return res;
  }

  for (int it = 0; it < opt.max_radiation_iters; ++it) {
    const double f_start = f;
    for (int m = 0; m < M; ++m) {
      const Eigen::VectorXd grad = euclidean_grad_f2(s, quad);
      const Eigen::VectorXd s_m = s.segment(m * N, N);
      const Eigen::VectorXd rg = riemannian_grad(s_m, grad.segment(m * N, N));
      const double rg_sq = rg.squaredNorm();
      if (rg_sq <= 1e-300) continue;

      double step = opt.varpi0;
      bool accepted = false;
      for (int h = 0; h < opt.armijo_max_halvings; ++h, step *= opt.armijo_contraction) {
        // Retraction onto the sphere within the nonnegative orthant. Entries that
        // would turn negative are clamped to zero (a projected arc); reflecting
        // them instead stalls the search whenever the optimum lies on a face.
        Eigen::VectorXd cand = (s_m - step * rg).cwiseMax(0.0);
        const double nrm = cand.norm();
        if (nrm == 0.0) continue;
        cand /= nrm;
        Eigen::VectorXd trial = s;
        trial.segment(m * N, N) = cand;
        const double f_trial = quad.value(trial);
        // sufficient decrease along the displacement actually taken
        const double predicted = rg.dot(cand - s_m);
        if (predicted < 0.0 && f_trial <= f + opt.armijo_slope * predicted) {
          s = std::move(trial);
          f = f_trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) ++res.skipped_steps;
    }
    ++res.iterations;
    res.f2_trace.push_back(f);
    if (f_start - f <= opt.eps_xi * std::max(std::abs(f_start), 1e-300)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

double amplitude_factor(double x, double y, const UserPosition& user, const SystemConfig& cfg) {
  const double r = std::hypot(user.x - x, user.y - y);
  if (r == 0.0) throw GeometryError("amplitude_factor: user coincides with a PA");
  return std::exp(-cfg.alpha_g * x) * std::pow(r, -cfg.beta_u / 2.0);
}

cd phase_factor(double x, double y, const UserPosition& user, const SystemConfig& cfg) {
  const double r = std::hypot(user.x - x, user.y - y);
  return std::polar(1.0, -(kTwoPi / cfg.lambda_g * x + kTwoPi / cfg.lambda * r));
}

PAPlacement PositionAux::placement(const SystemConfig& cfg) const {
  PAPlacement p{x_coarse + dx_fine};
  p.x = p.x.unaryExpr([&cfg](double v) { return clamp_to_range(v, cfg); });
  return p;
}

namespace {

void rebuild_amplitudes(PositionAux& pos, const UserLayout& users, const SystemConfig& cfg) {
  const int N = static_cast<int>(pos.x_coarse.rows());
  const int M = static_cast<int>(pos.x_coarse.cols());
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n)
      for (std::size_t k = 0; k < users.size(); ++k)
        pos.u(m * N + n, k) = amplitude_factor(pos.x_coarse(n, m), cfg.y_bar[m], users[k], cfg);
}

void rebuild_phases(PositionAux& pos, const UserLayout& users, const SystemConfig& cfg) {
  const int N = static_cast<int>(pos.x_coarse.rows());
  const int M = static_cast<int>(pos.x_coarse.cols());
  const PAPlacement p = pos.placement(cfg);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n)
      for (std::size_t k = 0; k < users.size(); ++k)
        pos.z(m * N + n, k) = phase_factor(p.x(n, m), cfg.y_bar[m], users[k], cfg);
}

}  // namespace

PositionAux init_position_aux(const PAPlacement& placement, const UserLayout& users,
                              const SystemConfig& cfg, double varrho, double c_varrho) {
  const int M = placement.M(), N = placement.N();
  const auto K = static_cast<Eigen::Index>(users.size());
  PositionAux pos;
  pos.varrho = varrho;
  pos.c_varrho = c_varrho;
  pos.x_coarse = placement.x;
  pos.dx_fine = Eigen::MatrixXd::Zero(N, M);
  pos.u.resize(M * N, K);
  pos.z.resize(M * N, K);
  rebuild_amplitudes(pos, users, cfg);
  rebuild_phases(pos, users, cfg);
  pos.b = pos.u;
  pos.c = pos.z;
  return pos;
}

PositionProblem position_problem(const AuxState& aux, const Eigen::MatrixXcd& W,
                                 const Eigen::VectorXd& s, const SystemConfig& cfg) {
  PositionProblem p;
  p.W = W;
  p.s = s;
  p.t = aux.t;
  p.kappa = aux.kappa;
  p.los_gain = std::sqrt(cfg.c0 * cfg.rician / (cfg.rician + 1.0));
  p.nlos_gain = cfg.c0 / (cfg.rician + 1.0);
  p.M = static_cast<int>(W.rows());
  p.N = static_cast<int>(s.size() / std::max<Eigen::Index>(W.rows(), 1));
  return p;
}

double surrogate_f4(const PositionProblem& prob, const Eigen::MatrixXd& b,
                    const Eigen::MatrixXcd& c) {
  const Eigen::MatrixXcd wbar = expand_precoder(prob.W, prob.N);
  const Eigen::Index K = prob.W.cols();
  double f = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double weight = prob.kappa(k) * std::norm(prob.t(k));
    const Eigen::VectorXcd bc = b.col(k).cast<cd>().cwiseProduct(c.col(k));
    const Eigen::VectorXd b_sq = b.col(k).cwiseAbs2();
    for (Eigen::Index i = 0; i < K; ++i) {
      const Eigen::VectorXcd sw = prob.s.cast<cd>().cwiseProduct(wbar.col(i));
      const cd a = prob.los_gain * (sw.array() * bc.array()).sum();
      const double nlos = prob.nlos_gain * (sw.cwiseAbs2().array() * b_sq.array()).sum();
      f += weight * (std::norm(a) + nlos);
      if (i == k) f -= 2.0 * prob.kappa(k) * std::real(std::conj(prob.t(k)) * a);
    }
  }
  return f;
}

double augmented_lagrangian(const PositionProblem& prob, const PositionAux& pos) {
  return surrogate_f4(prob, pos.b, pos.c) +
         pos.varrho * ((pos.u - pos.b).squaredNorm() + (pos.z - pos.c).squaredNorm());
}

Eigen::MatrixXd coarse_search(const Eigen::MatrixXd& b, const UniformGrid& coarse,
                              const UserLayout& users, const SystemConfig& cfg, int M, int N) {
  if (coarse.size() < static_cast<std::size_t>(N))
    throw ConfigError({"coarse grid: fewer grid points than PAs per waveguide"});
  const std::size_t G = coarse.size();
  const std::size_t K = users.size();
  Eigen::MatrixXd x(N, M);
  std::vector<double> table(G * K);
  for (int m = 0; m < M; ++m) {
    for (std::size_t g = 0; g < G; ++g)
      for (std::size_t k = 0; k < K; ++k)
        table[g * K + k] = amplitude_factor(coarse[g], cfg.y_bar[m], users[k], cfg);
    std::vector<double> taken;
    for (int n = 0; n < N; ++n) {
      const int j = m * N + n;
      double best_cost = std::numeric_limits<double>::infinity();
      std::size_t best = G;
      for (std::size_t g = 0; g < G; ++g) {
        const double xg = coarse[g];
        bool blocked = false;
        for (double t : taken)
          if (std::abs(xg - t) < std::max(cfg.delta_x, 1e-12)) blocked = true;
        if (blocked) continue;
        double cost = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          const double d = b(j, k) - table[g * K + k];
          cost += d * d;
        }
        if (cost < best_cost) {
          best_cost = cost;
          best = g;
        }
      }
      if (best == G)
        throw ConfigError({"coarse grid: no grid point left at the minimum spacing"});
      x(n, m) = coarse[best];
      taken.push_back(coarse[best]);
    }
  }
  return x;
}

Eigen::MatrixXd fine_search(const Eigen::MatrixXcd& c, const Eigen::MatrixXd& x_coarse,
                            const UniformGrid& fine, const UserLayout& users,
                            const SystemConfig& cfg) {
  const int N = static_cast<int>(x_coarse.rows());
  const int M = static_cast<int>(x_coarse.cols());
  const std::size_t K = users.size();
  Eigen::MatrixXd dx(N, M);
  for (int m = 0; m < M; ++m) {
    std::vector<double> placed;
    for (int n = 0; n < N; ++n) {
      const int j = m * N + n;
      double best_cost = std::numeric_limits<double>::infinity();
      double best_sep = -1.0;
      std::size_t best = 0, fallback = 0;
      bool found = false;
      for (std::size_t f = 0; f < fine.size(); ++f) {
        const double xf = clamp_to_range(x_coarse(n, m) + fine[f], cfg);
        double sep = std::numeric_limits<double>::infinity();
        for (double p : placed) sep = std::min(sep, std::abs(xf - p));
        if (sep < cfg.delta_x) {
          if (sep > best_sep) {
            best_sep = sep;
            fallback = f;
          }
          continue;
        }
        double cost = 0.0;
        for (std::size_t k = 0; k < K; ++k)
          cost += std::norm(c(j, k) - phase_factor(xf, cfg.y_bar[m], users[k], cfg));
        if (cost < best_cost) {
          best_cost = cost;
          best = f;
          found = true;
        }
      }
      const std::size_t pick = found ? best : fallback;
      dx(n, m) = fine[pick];
      placed.push_back(clamp_to_range(x_coarse(n, m) + fine[pick], cfg));
    }
  }
  return dx;
}

void update_amplitude_block(const PositionProblem& prob, PositionAux& pos, const GridSets& grids,
                            const UserLayout& users, const SystemConfig& cfg) {
  const int M = prob.M, N = prob.N, MN = M * N;
  const Eigen::Index K = prob.W.cols();
  const Eigen::MatrixXcd wbar = expand_precoder(prob.W, N);
  const Eigen::VectorXd s_sq = prob.s.cwiseAbs2();

  for (Eigen::Index k = 0; k < K; ++k) {
    const double weight = prob.kappa(k) * std::norm(prob.t(k));
    Eigen::MatrixXd Q = pos.varrho * Eigen::MatrixXd::Identity(MN, MN);
    Eigen::VectorXd rhs = pos.varrho * pos.u.col(k);
    for (Eigen::Index i = 0; i < K; ++i) {
      const Eigen::VectorXcd y = prob.los_gain * prob.s.cast<cd>().cwiseProduct(wbar.col(i))
                                                    .cwiseProduct(pos.c.col(k));
      const Eigen::VectorXd yr = y.real(), yi = y.imag();
      Q.noalias() += weight * (yr * yr.transpose() + yi * yi.transpose());
      Q.diagonal() += weight * prob.nlos_gain * s_sq.cwiseProduct(wbar.col(i).cwiseAbs2());
      if (i == k) rhs += prob.kappa(k) * (std::conj(prob.t(k)) * y).real();
    }
    pos.b.col(k) = Q.llt().solve(rhs);
  }

  Eigen::MatrixXd x_new = coarse_search(pos.b, grids.coarse, users, cfg, M, N);
  if (pos.coarse_on_grid) {
    // The previous assignment is feasible; sequential assignment is greedy, so
    // keep whichever fits b better on each waveguide.
    for (int m = 0; m < M; ++m) {
      double cost_new = 0.0, cost_old = 0.0;
      for (int n = 0; n < N; ++n) {
        for (Eigen::Index k = 0; k < K; ++k) {
          const int j = m * N + n;
          cost_new += std::pow(pos.b(j, k) - amplitude_factor(x_new(n, m), cfg.y_bar[m],
                                                              users[k], cfg), 2);
          cost_old += std::pow(pos.b(j, k) - amplitude_factor(pos.x_coarse(n, m),
                                                              cfg.y_bar[m], users[k], cfg), 2);
        }
      }
      if (cost_old < cost_new) x_new.col(m) = pos.x_coarse.col(m);
    }
  }
  pos.x_coarse = std::move(x_new);
  pos.coarse_on_grid = true;
  rebuild_amplitudes(pos, users, cfg);
}

void update_phase_block(const PositionProblem& prob, PositionAux& pos, const GridSets& grids,
                        const UserLayout& users, const SystemConfig& cfg) {
  const int M = prob.M, N = prob.N, MN = M * N;
  const Eigen::Index K = prob.W.cols();
  const Eigen::MatrixXcd wbar = expand_precoder(prob.W, N);

  for (Eigen::Index k = 0; k < K; ++k) {
    const double weight = prob.kappa(k) * std::norm(prob.t(k));
    Eigen::MatrixXcd H = pos.varrho * Eigen::MatrixXcd::Identity(MN, MN);
    Eigen::VectorXcd rhs = pos.varrho * pos.z.col(k);
    for (Eigen::Index i = 0; i < K; ++i) {
      const Eigen::VectorXcd p = prob.los_gain * prob.s.cast<cd>().cwiseProduct(wbar.col(i))
                                                    .cwiseProduct(pos.b.col(k).cast<cd>());
      const Eigen::VectorXcd pc = p.conjugate();
      H.noalias() += weight * (pc * pc.adjoint());
      if (i == k) rhs += prob.kappa(k) * prob.t(k) * pc;
    }
    pos.c.col(k) = H.llt().solve(rhs);
  }

  pos.dx_fine = fine_search(pos.c, pos.x_coarse, grids.fine, users, cfg);
  rebuild_phases(pos, users, cfg);
}

PAPlacement optimize_positions(const PositionProblem& prob, PositionAux& pos,
                               const GridSets& grids, const UserLayout& users,
                               const SystemConfig& cfg, const OptimizerConfig& opt) {
  for (int pass = 0; pass < opt.position_passes; ++pass) {
    update_amplitude_block(prob, pos, grids, users, cfg);
    update_phase_block(prob, pos, grids, users, cfg);
  }
  return pos.placement(cfg);
}

// ---------------------------------------------------------------------------

namespace {

// Continuous maximizer of exp(-alpha x) r^(-beta/2) on [x_min, x_max].
double best_amplitude_position(const UserPosition& user, double y_wave, const SystemConfig& cfg) {
  const double h = std::abs(user.y - y_wave);
  const double half_beta = cfg.beta_u / 2.0;
  double d = 0.0;  // user.x - x at the interior stationary point
  bool interior = true;
  if (cfg.alpha_g > 0.0) {
    const double disc = half_beta * half_beta - 4.0 * cfg.alpha_g * cfg.alpha_g * h * h;
    if (disc < 0.0)
      interior = false;
    else
      d = (half_beta - std::sqrt(disc)) / (2.0 * cfg.alpha_g);
  }
  std::vector<double> candidates{cfg.x_min, cfg.x_max};
  if (interior) candidates.push_back(clamp_to_range(user.x - d, cfg));
  double best_x = cfg.x_min, best_a = -1.0;
  for (double x : candidates) {
    const double r = std::hypot(user.x - x, user.y - y_wave);
    if (r == 0.0) return x;
    const double a = std::exp(-cfg.alpha_g * x) * std::pow(r, -half_beta);
    if (a > best_a) {
      best_a = a;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace

SingleLinkResult single_link_dsd(const UserPosition& user, double y_wave, const GridSets& grids,
                                 const SystemConfig& cfg, double target_phase) {
  const double a_target =
      amplitude_factor(best_amplitude_position(user, y_wave, cfg), y_wave, user, cfg);
  const cd phase_target = std::polar(1.0, -target_phase);

  SingleLinkResult res;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grids.coarse.size(); ++g) {
    const double a = amplitude_factor(grids.coarse[g], y_wave, user, cfg);
    ++res.evaluations;
    const double cost = (a_target - a) * (a_target - a);
    if (cost < best_cost) {
      best_cost = cost;
      res.x_coarse = grids.coarse[g];
    }
  }
  best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < grids.fine.size(); ++f) {
    const double x = clamp_to_range(res.x_coarse + grids.fine[f], cfg);
    const cd z = phase_factor(x, y_wave, user, cfg);
    ++res.evaluations;
    const double cost = std::norm(phase_target - z);
    if (cost < best_cost) {
      best_cost = cost;
      res.dx_fine = grids.fine[f];
    }
  }
  const double x = clamp_to_range(res.x_coarse + res.dx_fine, cfg);
  res.power = cfg.c0 * std::pow(amplitude_factor(x, y_wave, user, cfg), 2);
  return res;
}

// ---------------------------------------------------------------------------

PAPlacement initial_placement(const SystemConfig& cfg, const GridConfig& grid,
                              std::uint64_t seed) {
  PAPlacement p = equal_interval_placement(cfg);
  CounterRng rng(seed, 0x706c6163ULL);
  for (int m = 0; m < cfg.M; ++m)
    for (int n = 0; n < cfg.N; ++n)
      p.x(n, m) = clamp_to_range(p.x(n, m) + (rng.uniform() - 0.5) * grid.l_f, cfg);
  return p;
}

Algorithm2Result run_algorithm2(const SystemConfig& cfg, ProtocolKind protocol,
                                const GridConfig& grid, const PAPowerComponents& comps,
                                const UserLayout& users, const OptimizerConfig& opt,
                                std::uint64_t seed) {
  {
    auto issues = cfg.violations();
    for (auto& v : grid.violations()) issues.push_back(std::move(v));
    for (auto& v : opt.violations()) issues.push_back(std::move(v));
    if (static_cast<int>(users.size()) != cfg.K) issues.emplace_back("users: expected K entries");
    if (!issues.empty()) throw ConfigError(std::move(issues));
  }
  const GridSets grids = make_grids(protocol, cfg, grid);
  const double element_power = pa_power(protocol, comps);
  const RateProblem prob = rate_problem(cfg, element_power);

  SolutionState cur;
  cur.placement = initial_placement(cfg, grid, seed);
  ChannelState ch = synth_channels(cur.placement, users, cfg);
  cur.s = uniform_amplitudes(cfg.M, cfg.N);
  EffectiveChannel eff = effective_channel(cur.s, ch, cfg);
  cur.W = mrt_precoder(eff, cfg.p_max);
  cur.positions = init_position_aux(cur.placement, users, cfg, opt.varrho0, opt.c_varrho);
  auto ee_of = [&](const Eigen::MatrixXcd& W, const EffectiveChannel& e) {
    return prob.bandwidth * rates_from_sinr(sinr(W, e, prob.noise)).sum /
           total_power(W, prob.nu, 0.0, prob.hardware_power);
  };
  cur.ee = ee_of(cur.W, eff);

  Algorithm2Result out;
  out.initial_ee = cur.ee;
  out.best = cur;

  int iteration = 0;
  double ee_outer_prev = cur.ee;
  for (int outer = 0; outer < opt.max_outer_iters; ++outer) {
    double ee_prev = cur.ee;
    bool inner_converged = false;
    for (int inner = 0; inner < opt.max_inner_iters; ++inner) {
      cur.aux = update_aux(cur.W, eff, prob);
      PrecodingResult pre = solve_precoding(cur.aux, eff, prob, opt);
      cur.W = std::move(pre.W);
      cur.dual = pre.dual;

      const RadiationQuadratic quad = build_radiation_quadratic(cur.aux, cur.W, ch, cfg);
      RadiationResult rad = optimize_radiation(cur.s, quad, cfg.M, cfg.N, opt);
      cur.s = std::move(rad.s);

      const PositionProblem pp = position_problem(cur.aux, cur.W, cur.s, cfg);
      cur.placement = optimize_positions(pp, cur.positions, grids, users, cfg, opt);
      ch = synth_channels(cur.placement, users, cfg);
      eff = effective_channel(cur.s, ch, cfg);
      cur.ee = ee_of(cur.W, eff);

      out.trace.push_back({iteration++, outer, inner, "inner", rad.f2_trace.back(), cur.ee,
                           cur.dual.rho, cur.positions.varrho, cur.W.squaredNorm()});
      if (cur.ee > out.best.ee) out.best = cur;
      if (relative_change(cur.ee, ee_prev) < opt.eps_in) {
        inner_converged = true;
        break;
      }
      ee_prev = cur.ee;
    }
    if (!inner_converged) out.hit_iteration_cap = true;
    out.outer_iterations = outer + 1;
    cur.positions.varrho *= cur.positions.c_varrho;
    if (relative_change(cur.ee, ee_outer_prev) < opt.eps_out) break;
    ee_outer_prev = cur.ee;
    if (outer + 1 == opt.max_outer_iters) out.hit_iteration_cap = true;
  }
  return out;
}

}  // namespace pass
