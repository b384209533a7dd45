#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pass/config.hpp"
#include "pass/model.hpp"
#include "pass/optimizer.hpp"

namespace pass {

enum class BaselineKind { MIMO, CellFree };

BaselineKind parse_baseline(const std::string& name);  // "mimo" | "cellfree"
std::string to_string(BaselineKind kind);

/// Base stations with a half-wavelength ULA along x starting at each station.
struct BaselineLayout {
  BaselineKind kind = BaselineKind::MIMO;
  std::vector<UserPosition> bs_positions;
  int antennas_per_bs = 1;

  int antennas() const { return static_cast<int>(bs_positions.size()) * antennas_per_bs; }
  std::vector<UserPosition> element_positions(double spacing) const;
};

/// MIMO: one station at (0,0) with M antennas. Cell-free: M stations at
/// (50, 100 m/(M+1)) with N antennas each.
BaselineLayout make_baseline_layout(BaselineKind kind, const SystemConfig& cfg);

/// Statistics of the stacked channel (rows are antennas, columns users) plus one
/// seeded Rician realization of it.
struct BaselineChannels {
  EffectiveChannel stats;
  Eigen::MatrixXcd realized;
};

BaselineChannels synth_baseline_channels(const BaselineLayout& layout, const UserLayout& users,
                                         const SystemConfig& cfg, std::uint64_t seed);

struct BaselineResult {
  double ee = 0.0;
  double sum_rate = 0.0;
  Eigen::MatrixXcd W;
  int iterations = 0;
};

/// EE of a precoder on a given channel with the baseline power model
/// (sum ||w||^2 / nu + P_bs_sta). Shared with the PASS evaluation path.
double baseline_energy_efficiency(const Eigen::MatrixXcd& W, const EffectiveChannel& eff,
                                  const SystemConfig& cfg);

/// Precoding optimized by alternating the auxiliary update and the precoding
/// solver from an MRT start. The closed-form EE depends only on the channel
/// statistics, so `seed` only affects the realization carried in the channels.
BaselineResult evaluate_baseline_ee(const BaselineLayout& layout, const UserLayout& users,
                                    const SystemConfig& cfg, const OptimizerConfig& opt,
                                    std::uint64_t seed);

}  // namespace pass
