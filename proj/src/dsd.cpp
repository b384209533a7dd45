#include "pass/dsd.hpp"

#include <algorithm>
#include <cmath>

namespace pass {

namespace {

bool uses_coarse_sliding(ProtocolKind p) { return p == ProtocolKind::STT || p == ProtocolKind::STA; }
bool uses_fine_tuning(ProtocolKind p) { return p == ProtocolKind::STT || p == ProtocolKind::SAT; }

// floor(span/step) with a relative guard so that 100/0.1 does not lose the
// last point to rounding.
std::size_t step_count(double span, double step) {
  const double ratio = span / step;
  return static_cast<std::size_t>(std::floor(ratio + 1e-9 * std::max(1.0, ratio)));
}

void check(const GridConfig& grid) {
  auto v = grid.violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

}  // namespace

std::vector<double> UniformGrid::materialize() const {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = (*this)[i];
  return out;
}

UniformGrid coarse_grid(ProtocolKind protocol, const SystemConfig& cfg, const GridConfig& grid) {
  check(grid);
  const double span = cfg.x_max - cfg.x_min;
  if (!(span > 0.0)) throw ConfigError({"x_max/x_min: empty deployment range"});
  if (uses_coarse_sliding(protocol))
    return {cfg.x_min, grid.delta_c, step_count(span, grid.delta_c) + 1};
  const std::size_t bases = static_cast<std::size_t>(cfg.N) * grid.n_c;
  return {cfg.x_min, span / static_cast<double>(bases), bases};
}

UniformGrid fine_grid(ProtocolKind protocol, const SystemConfig& cfg, const GridConfig& grid) {
  check(grid);
  if (uses_fine_tuning(protocol))
    return {-grid.l_f / 2.0, grid.delta_f, step_count(grid.l_f, grid.delta_f) + 1};
  const std::size_t pas = static_cast<std::size_t>(cfg.N) * grid.n_f;
  return {-grid.l_f / 2.0, grid.l_f / static_cast<double>(pas), pas};
}

GridSets make_grids(ProtocolKind protocol, const SystemConfig& cfg, const GridConfig& grid) {
  return {coarse_grid(protocol, cfg, grid), fine_grid(protocol, cfg, grid)};
}

double pa_power(ProtocolKind protocol, const PAPowerComponents& comps) {
  switch (protocol) {
    case ProtocolKind::STT: return comps.act + comps.mot + comps.pie;
    case ProtocolKind::STA: return comps.act + comps.mot;
    case ProtocolKind::SAT: return comps.act + comps.pie;
    case ProtocolKind::SAA: return comps.act;
  }
  return comps.act;
}

double deployment_latency(double coarse_travel, double fine_travel, const MotionSpeeds& speeds) {
  if (coarse_travel < 0.0 || fine_travel < 0.0)
    throw DomainError("deployment_latency: travel distances must be >= 0");
  return coarse_travel / speeds.v_mo + fine_travel / speeds.v_pi;
}

}  // namespace pass
