#include "pass/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace pass {

BaselineKind parse_baseline(const std::string& name) {
  std::string s;
  for (char ch : name)
    if (ch != '-' && ch != '_') s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "mimo") return BaselineKind::MIMO;
  if (s == "cellfree") return BaselineKind::CellFree;
  throw ConfigError({"baseline: unknown kind '" + name + "' (expected mimo or cellfree)"});
}

std::string to_string(BaselineKind kind) { return kind == BaselineKind::MIMO ? "mimo" : "cellfree"; }

std::vector<UserPosition> BaselineLayout::element_positions(double spacing) const {
  std::vector<UserPosition> out;
  out.reserve(static_cast<std::size_t>(antennas()));
  for (const auto& bs : bs_positions)
    for (int a = 0; a < antennas_per_bs; ++a) out.push_back({bs.x + a * spacing, bs.y});
  return out;
}

BaselineLayout make_baseline_layout(BaselineKind kind, const SystemConfig& cfg) {
  BaselineLayout layout;
  layout.kind = kind;
  if (kind == BaselineKind::MIMO) {
    layout.bs_positions = {{0.0, 0.0}};
    layout.antennas_per_bs = cfg.M;
  } else {
    for (int m = 1; m <= cfg.M; ++m) layout.bs_positions.push_back({50.0, 100.0 * m / (cfg.M + 1)});
    layout.antennas_per_bs = cfg.N;
  }
  return layout;
}

BaselineChannels synth_baseline_channels(const BaselineLayout& layout, const UserLayout& users,
                                         const SystemConfig& cfg, std::uint64_t seed) {
  if (layout.bs_positions.empty() || layout.antennas_per_bs < 1)
    throw ConfigError({"baseline layout: needs at least one station and one antenna"});
  const auto elements = layout.element_positions(cfg.lambda / 2.0);
  const auto D = static_cast<Eigen::Index>(elements.size());
  const auto K = static_cast<Eigen::Index>(users.size());
  const double los_scale = std::sqrt(cfg.rician / (cfg.rician + 1.0));
  const double nlos_scale = cfg.c0 / (cfg.rician + 1.0);

  BaselineChannels out{{Eigen::MatrixXcd(D, K), Eigen::MatrixXd(D, K)}, Eigen::MatrixXcd(D, K)};
  CounterRng rng(seed, 0x62617365ULL);
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index d = 0; d < D; ++d) {
      const double r = std::hypot(users[k].x - elements[d].x, users[k].y - elements[d].y);
      if (r == 0.0) {
        std::ostringstream os;
        os << "baseline: user " << k << " coincides with antenna " << d;
        throw GeometryError(os.str());
      }
      const double pg = std::pow(r, -cfg.beta_u);
      const cd los = std::sqrt(cfg.c0 * pg) * los_scale *
                     std::polar(1.0, -2.0 * std::numbers::pi / cfg.lambda * r);
      out.stats.los(d, k) = los;
      out.stats.nlos_var(d, k) = nlos_scale * pg;
      out.realized(d, k) = los + std::sqrt(nlos_scale * pg) * rng.complex_normal();
    }
  }
  return out;
}

double baseline_energy_efficiency(const Eigen::MatrixXcd& W, const EffectiveChannel& eff,
                                  const SystemConfig& cfg) {
  const double rate = rates_from_sinr(sinr(W, eff, cfg.noise)).sum;
  return cfg.bandwidth * rate / total_power(W, cfg.nu, cfg.p_bs_static, 0.0);
}

BaselineResult evaluate_baseline_ee(const BaselineLayout& layout, const UserLayout& users,
                                    const SystemConfig& cfg, const OptimizerConfig& opt,
                                    std::uint64_t seed) {
  cfg.validate();
  const BaselineChannels ch = synth_baseline_channels(layout, users, cfg, seed);
  const RateProblem prob = rate_problem(cfg, 0.0);  // no PA hardware

  BaselineResult res;
  res.W = mrt_precoder(ch.stats, cfg.p_max);
  res.ee = baseline_energy_efficiency(res.W, ch.stats, cfg);
  const int cap = opt.max_inner_iters * opt.max_outer_iters;
  for (int it = 0; it < cap; ++it) {
    const AuxState aux = update_aux(res.W, ch.stats, prob);
    Eigen::MatrixXcd W = solve_precoding(aux, ch.stats, prob, opt).W;
    const double ee = baseline_energy_efficiency(W, ch.stats, cfg);
    ++res.iterations;
    const double before = res.ee;
    res.W = std::move(W);
    res.ee = ee;
    if (std::abs(ee - before) / std::max(before, 1e-30) < opt.eps_in) break;
  }
  res.sum_rate = rates_from_sinr(sinr(res.W, ch.stats, cfg.noise)).sum;
  return res;
}

}  // namespace pass
