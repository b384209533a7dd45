#include "pass/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace pass {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double distance(double x, double y, const UserPosition& u) {
  return std::hypot(u.x - x, u.y - y);
}

}  // namespace

std::vector<CascadeTap> cascade_propagate(const WaveguideCascade& cascade, cd s0,
                                          const SystemConfig& cfg) {
  if (cascade.delta.size() != cascade.segment_lengths.size())
    throw DomainError("cascade: delta and segment_lengths differ in length");
  for (double d : cascade.delta)
    if (!(d >= 0.0 && d <= 1.0)) throw DomainError("cascade: split coefficient outside [0, 1]");
  for (double l : cascade.segment_lengths)
    if (!(l >= 0.0)) throw DomainError("cascade: negative segment length");

  const cd gamma_g{cfg.alpha_g, kTwoPi / cfg.lambda_g};
  std::vector<CascadeTap> taps;
  taps.reserve(cascade.delta.size());
  cd through = s0;
  for (std::size_t n = 0; n < cascade.delta.size(); ++n) {
    const cd incident = std::exp(-gamma_g * cascade.segment_lengths[n]) * through;
    const double d = cascade.delta[n];
    through = std::sqrt(1.0 - d) * incident;
    taps.push_back({std::sqrt(d) * incident, through, incident});
  }
  return taps;
}

std::vector<double> effective_radiation_coeffs(std::span<const double> delta) {
  std::vector<double> xi(delta.size());
  double remaining = 1.0;
  for (std::size_t n = 0; n < delta.size(); ++n) {
    if (!(delta[n] >= 0.0 && delta[n] <= 1.0))
      throw DomainError("effective_radiation_coeffs: split coefficient outside [0, 1]");
    xi[n] = delta[n] * remaining;
    remaining *= 1.0 - delta[n];
  }
  return xi;
}

double desired_signal_power(std::span<const double> x, double y_wave, const UserPosition& user,
                            std::span<const double> xi, const SystemConfig& cfg) {
  if (x.size() != xi.size()) throw DomainError("desired_signal_power: size mismatch");
  cd sum{0.0, 0.0};
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double r = distance(x[n], y_wave, user);
    if (r == 0.0) throw GeometryError("desired_signal_power: user coincides with a PA");
    const double d = x[n];
    const double phase = kTwoPi / cfg.lambda * r + kTwoPi / cfg.lambda_g * d;
    sum += std::sqrt(cfg.c0 * xi[n]) / r * std::exp(cd{-cfg.alpha_g * d, -phase});
  }
  return std::norm(sum);
}

std::vector<std::string> PAPlacement::violations(const SystemConfig& cfg, double tol) const {
  std::vector<std::string> out;
  for (int m = 0; m < M(); ++m) {
    for (int n = 0; n < N(); ++n) {
      const double v = x(n, m);
      if (v < cfg.x_min - tol || v > cfg.x_max + tol) {
        std::ostringstream os;
        os << "x[" << m << "][" << n << "] = " << v << " outside [" << cfg.x_min << ", "
           << cfg.x_max << "]";
        out.push_back(os.str());
      }
      for (int n2 = n + 1; n2 < N(); ++n2) {
        if (std::abs(v - x(n2, m)) < cfg.delta_x - tol) {
          std::ostringstream os;
          os << "x[" << m << "][" << n << "] and x[" << m << "][" << n2
             << "] closer than delta_x";
          out.push_back(os.str());
        }
      }
    }
  }
  return out;
}

PAPlacement equal_interval_placement(const SystemConfig& cfg) {
  PAPlacement p{Eigen::MatrixXd(cfg.N, cfg.M)};
  for (int m = 0; m < cfg.M; ++m)
    for (int n = 0; n < cfg.N; ++n)
      p.x(n, m) = cfg.x_min + (cfg.x_max - cfg.x_min) * (n + 1) / (cfg.N + 1);
  return p;
}

Eigen::MatrixXcd ChannelState::dense_g() const {
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(M) * N, M);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < N; ++n) G(m * N + n, m) = g(m * N + n);
  return G;
}

ChannelState synth_channels(const PAPlacement& placement, const UserLayout& users,
                            const SystemConfig& cfg) {
  const int M = placement.M();
  const int N = placement.N();
  const int K = static_cast<int>(users.size());
  if (static_cast<int>(cfg.y_bar.size()) < M)
    throw DomainError("synth_channels: fewer waveguide rows than waveguides");

  ChannelState ch;
  ch.M = M;
  ch.N = N;
  ch.g.resize(M * N);
  ch.h_bar.resize(M * N, K);
  ch.path_gain.resize(M * N, K);
  ch.distance.resize(M * N, K);

  const cd gamma_g{cfg.alpha_g, kTwoPi / cfg.lambda_g};
  const double los_scale = std::sqrt(cfg.rician / (cfg.rician + 1.0));
  for (int m = 0; m < M; ++m) {
    for (int n = 0; n < N; ++n) {
      const int j = m * N + n;
      const double x = placement.x(n, m);
      ch.g(j) = std::exp(-gamma_g * x);
      for (int k = 0; k < K; ++k) {
        const double r = distance(x, cfg.y_bar[m], users[k]);
        if (r == 0.0) {
          std::ostringstream os;
          os << "synth_channels: user " << k << " coincides with PA (" << m << ", " << n << ")";
          throw GeometryError(os.str());
        }
        const double pg = std::pow(r, -cfg.beta_u);
        ch.distance(j, k) = r;
        ch.path_gain(j, k) = pg;
        ch.h_bar(j, k) =
            std::sqrt(cfg.c0 * pg) * los_scale * std::exp(cd{0.0, -kTwoPi / cfg.lambda * r});
      }
    }
  }
  return ch;
}

Eigen::MatrixXcd draw_nlos(const ChannelState& ch, CounterRng& rng) {
  Eigen::MatrixXcd h(ch.h_bar.rows(), ch.h_bar.cols());
  for (Eigen::Index k = 0; k < h.cols(); ++k)
    for (Eigen::Index j = 0; j < h.rows(); ++j) h(j, k) = rng.complex_normal();
  return h;
}

Eigen::MatrixXcd realized_channel(const ChannelState& ch, const Eigen::MatrixXcd& h_tilde,
                                  const SystemConfig& cfg) {
  const double scale = cfg.c0 / (cfg.rician + 1.0);
  Eigen::MatrixXcd h = ch.h_bar;
  h.array() += (scale * ch.path_gain.array()).sqrt().cast<cd>() * h_tilde.array();
  return h;
}

Eigen::VectorXd uniform_amplitudes(int M, int N) {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(M) * N, 1.0 / std::sqrt(N));
}

double amplitude_norm_error(const Eigen::VectorXd& s, int M, int N) {
  double worst = 0.0;
  for (int m = 0; m < M; ++m)
    worst = std::max(worst, std::abs(s.segment(m * N, N).squaredNorm() - 1.0));
  return worst;
}

EffectiveChannel effective_channel(const Eigen::VectorXd& s, const ChannelState& ch,
                                   const SystemConfig& cfg) {
  const int M = ch.M, N = ch.N, K = ch.K();
  if (s.size() != static_cast<Eigen::Index>(M) * N)
    throw DomainError("effective_channel: amplitude vector has wrong length");
  const double nlos_scale = cfg.c0 / (cfg.rician + 1.0);
  EffectiveChannel eff{Eigen::MatrixXcd::Zero(M, K), Eigen::MatrixXd::Zero(M, K)};
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m) {
      cd los{0.0, 0.0};
      double var = 0.0;
      for (int n = 0; n < N; ++n) {
        const int j = m * N + n;
        los += ch.h_bar(j, k) * s(j) * ch.g(j);
        var += s(j) * s(j) * ch.path_gain(j, k) * std::norm(ch.g(j));
      }
      eff.los(m, k) = los;
      eff.nlos_var(m, k) = nlos_scale * var;
    }
  }
  return eff;
}

SignalTerms signal_terms(const Eigen::MatrixXcd& W, const EffectiveChannel& eff, double noise) {
  const Eigen::Index K = eff.los.cols();
  if (W.rows() != eff.los.rows() || W.cols() != K)
    throw DomainError("signal_terms: precoder shape does not match the channel");
  // cross(k, i) = e_k^T w_i
  const Eigen::MatrixXcd cross = eff.los.transpose() * W;
  // nlos(k, i) = sum_m D_k[m] |w_mi|^2
  const Eigen::MatrixXd nlos = eff.nlos_var.transpose() * W.cwiseAbs2();
  SignalTerms t{cross.diagonal(), Eigen::VectorXd(K)};
  for (Eigen::Index k = 0; k < K; ++k)
    t.received(k) = cross.row(k).cwiseAbs2().sum() + nlos.row(k).sum() + noise;
  return t;
}

Eigen::VectorXd sinr(const Eigen::MatrixXcd& W, const EffectiveChannel& eff, double noise) {
  const Eigen::Index K = eff.los.cols();
  if (W.rows() != eff.los.rows() || W.cols() != K)
    throw DomainError("sinr: precoder shape does not match the channel");
  const Eigen::MatrixXcd cross = eff.los.transpose() * W;
  const Eigen::MatrixXd nlos = eff.nlos_var.transpose() * W.cwiseAbs2();
  Eigen::VectorXd gamma(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    // Summed term by term rather than as total minus desired, which loses
    // digits at high SINR.
    double others = noise + nlos.row(k).sum();
    for (Eigen::Index i = 0; i < K; ++i)
      if (i != k) others += std::norm(cross(k, i));
    gamma(k) = std::norm(cross(k, k)) / others;
  }
  return gamma;
}

Eigen::VectorXd sinr_closed_form(const Eigen::MatrixXcd& W, const Eigen::VectorXd& s,
                                 const ChannelState& ch, const SystemConfig& cfg) {
  return sinr(W, effective_channel(s, ch, cfg), cfg.noise);
}

RateResult rates_from_sinr(const Eigen::VectorXd& gamma) {
  RateResult r{Eigen::VectorXd(gamma.size()), 0.0};
  for (Eigen::Index k = 0; k < gamma.size(); ++k) {
    r.per_user(k) = std::log2(1.0 + gamma(k));
    r.sum += r.per_user(k);
  }
  return r;
}

RateResult sum_rate(const Eigen::MatrixXcd& W, const Eigen::VectorXd& s, const ChannelState& ch,
                    const SystemConfig& cfg) {
  return rates_from_sinr(sinr_closed_form(W, s, ch, cfg));
}

double total_power(const Eigen::MatrixXcd& W, double nu, double p_static, double hardware_power) {
  return W.squaredNorm() / nu + p_static + hardware_power;
}

double total_power(const Eigen::MatrixXcd& W, const SystemConfig& cfg,
                   double pa_power_per_element) {
  return total_power(W, cfg.nu, cfg.p_bs_static,
                     static_cast<double>(cfg.M) * cfg.N * pa_power_per_element);
}

double energy_efficiency(const Eigen::MatrixXcd& W, const Eigen::VectorXd& s,
                         const ChannelState& ch, const SystemConfig& cfg,
                         double pa_power_per_element) {
  return cfg.bandwidth * sum_rate(W, s, ch, cfg).sum / total_power(W, cfg, pa_power_per_element);
}

Eigen::MatrixXcd mrt_precoder(const EffectiveChannel& eff, double p_total) {
  const Eigen::Index K = eff.los.cols();
  Eigen::MatrixXcd W(eff.los.rows(), K);
  const double per_user = p_total / static_cast<double>(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double nrm = eff.los.col(k).norm();
    if (nrm > 0.0)
      W.col(k) = std::sqrt(per_user) * eff.los.col(k).conjugate() / nrm;
    else
      W.col(k) = Eigen::VectorXcd::Constant(W.rows(), std::sqrt(per_user / W.rows()));
  }
  return W;
}

}  // namespace pass
