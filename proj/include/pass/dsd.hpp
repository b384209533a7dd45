#pragma once

#include <cstddef>
#include <vector>

#include "pass/config.hpp"

namespace pass {

/// Arithmetic progression start + i*step, i < count. Materialized on demand.
struct UniformGrid {
  double start = 0.0;
  double step = 0.0;
  std::size_t count = 0;

  double operator[](std::size_t i) const { return start + static_cast<double>(i) * step; }
  std::size_t size() const { return count; }
  double front() const { return start; }
  double back() const { return (*this)[count - 1]; }
  std::vector<double> materialize() const;
};

/// Coarse absolute coordinates and fine signed offsets for one waveguide.
/// Every waveguide of the reference deployment shares the same range, so a
/// single pair serves all of them.
struct GridSets {
  UniformGrid coarse;
  UniformGrid fine;
};

UniformGrid coarse_grid(ProtocolKind protocol, const SystemConfig& cfg, const GridConfig& grid);
UniformGrid fine_grid(ProtocolKind protocol, const SystemConfig& cfg, const GridConfig& grid);
GridSets make_grids(ProtocolKind protocol, const SystemConfig& cfg, const GridConfig& grid);

/// Per-PA hardware power for a protocol (watts).
double pa_power(ProtocolKind protocol, const PAPowerComponents& comps);

/// Seconds to travel the coarse distance at motor speed plus the fine distance
/// at piezo speed.
double deployment_latency(double coarse_travel, double fine_travel, const MotionSpeeds& speeds);

}  // namespace pass
