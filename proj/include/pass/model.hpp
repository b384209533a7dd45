#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pass/config.hpp"
#include "pass/rng.hpp"

namespace pass {

using cd = std::complex<double>;

// ---------------------------------------------------------------------------
// Single-waveguide cascade

/// Split coefficients and segment lengths of one waveguide. Segment n runs
/// from PA n-1 (or the feed point) to PA n.
struct WaveguideCascade {
  std::vector<double> delta;
  std::vector<double> segment_lengths;
};

struct CascadeTap {
  cd radiated;
  cd through;
  cd incident;
};

/// Propagates the feed signal s0 through every PA in order.
std::vector<CascadeTap> cascade_propagate(const WaveguideCascade& cascade, cd s0,
                                          const SystemConfig& cfg);

/// xi_n = delta_n * prod_{j<n} (1 - delta_j).
std::vector<double> effective_radiation_coeffs(std::span<const double> delta);

/// Free-space received power from one waveguide at row `y_wave` whose PAs sit
/// at `x` (in-waveguide distance equals the x-coordinate) with power split
/// `xi`. Uses the 1/r LoS amplitude with gain cfg.c0.
double desired_signal_power(std::span<const double> x, double y_wave, const UserPosition& user,
                            std::span<const double> xi, const SystemConfig& cfg);

// ---------------------------------------------------------------------------
// Multi-waveguide system

/// PA x-coordinates, N rows by M columns. Column m belongs to waveguide m.
struct PAPlacement {
  Eigen::MatrixXd x;

  int N() const { return static_cast<int>(x.rows()); }
  int M() const { return static_cast<int>(x.cols()); }
  /// Violated range or spacing constraints, empty when feasible.
  std::vector<std::string> violations(const SystemConfig& cfg, double tol = 1e-12) const;
};

/// x_mn = x_min + (x_max - x_min) * n / (N + 1), n = 1..N.
PAPlacement equal_interval_placement(const SystemConfig& cfg);

/// Deterministic channel state for a placement. Element index j = m*N + n.
struct ChannelState {
  Eigen::VectorXcd g;           // in-waveguide factors (nonzeros of the block-diagonal G)
  Eigen::MatrixXcd h_bar;       // MN x K, LoS channel per user
  Eigen::MatrixXd path_gain;    // MN x K, r^-beta (diagonal of R_k)
  Eigen::MatrixXd distance;     // MN x K
  int M = 0;
  int N = 0;

  /// Dense MN x M block-diagonal in-waveguide matrix.
  Eigen::MatrixXcd dense_g() const;
  int K() const { return static_cast<int>(h_bar.cols()); }
};

ChannelState synth_channels(const PAPlacement& placement, const UserLayout& users,
                            const SystemConfig& cfg);

/// One NLoS realization: MN x K matrix of independent CN(0,1) entries.
Eigen::MatrixXcd draw_nlos(const ChannelState& ch, CounterRng& rng);

/// Full channel realization h = h_bar + sqrt(C0/(Kr+1) r^-beta) * h_tilde.
Eigen::MatrixXcd realized_channel(const ChannelState& ch, const Eigen::MatrixXcd& h_tilde,
                                  const SystemConfig& cfg);

/// Radiation amplitudes s_j = sqrt(xi_j), unit norm per waveguide.
Eigen::VectorXd uniform_amplitudes(int M, int N);
/// Largest deviation of a per-waveguide block norm from 1.
double amplitude_norm_error(const Eigen::VectorXd& s, int M, int N);

/// Per-RF-chain view of a channel: the statistical-CSI SINR only depends on
/// the mean effective channel and the diagonal NLoS variance seen by each
/// chain. PASS and the baselines both reduce to this form, so they share one
/// rate implementation.
struct EffectiveChannel {
  Eigen::MatrixXcd los;      // D x K, column k: mean channel of user k
  Eigen::MatrixXd nlos_var;  // D x K, column k: NLoS variance per chain
};

EffectiveChannel effective_channel(const Eigen::VectorXd& s, const ChannelState& ch,
                                   const SystemConfig& cfg);

/// Desired-signal amplitude and the total received power (all streams, LoS
/// plus expected NLoS, plus noise) per user.
struct SignalTerms {
  Eigen::VectorXcd desired;   // e_k^T w_k
  Eigen::VectorXd received;   // sum_i |e_k^T w_i|^2 + w_i^H D_k w_i + N0
};

SignalTerms signal_terms(const Eigen::MatrixXcd& W, const EffectiveChannel& eff, double noise);

Eigen::VectorXd sinr(const Eigen::MatrixXcd& W, const EffectiveChannel& eff, double noise);
Eigen::VectorXd sinr_closed_form(const Eigen::MatrixXcd& W, const Eigen::VectorXd& s,
                                 const ChannelState& ch, const SystemConfig& cfg);

struct RateResult {
  Eigen::VectorXd per_user;  // bits/s/Hz
  double sum = 0.0;
};

RateResult rates_from_sinr(const Eigen::VectorXd& gamma);
RateResult sum_rate(const Eigen::MatrixXcd& W, const Eigen::VectorXd& s, const ChannelState& ch,
                    const SystemConfig& cfg);

/// Total consumed power: sum ||w_k||^2 / nu + static + element_count * per-element power.
double total_power(const Eigen::MatrixXcd& W, const SystemConfig& cfg, double pa_power_per_element);
double total_power(const Eigen::MatrixXcd& W, double nu, double p_static, double hardware_power);

/// bits/joule.
double energy_efficiency(const Eigen::MatrixXcd& W, const Eigen::VectorXd& s,
                         const ChannelState& ch, const SystemConfig& cfg,
                         double pa_power_per_element);

/// Maximum ratio transmission scaled to total power p_total, equal per-user shares.
Eigen::MatrixXcd mrt_precoder(const EffectiveChannel& eff, double p_total);

}  // namespace pass
