#include "pass/config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace pass {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::ostringstream os;
  os << "invalid configuration (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s")
     << ")";
  for (const auto& s : issues) os << "\n  " << s;
  return os.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

ProtocolKind parse_protocol(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "stt") return ProtocolKind::STT;
  if (s == "sta") return ProtocolKind::STA;
  if (s == "sat") return ProtocolKind::SAT;
  if (s == "saa") return ProtocolKind::SAA;
  throw ConfigError({"protocol: unknown protocol '" + std::string(name) +
                     "' (expected stt, sta, sat or saa)"});
}

std::string to_string(ProtocolKind p) {
  switch (p) {
    case ProtocolKind::STT: return "stt";
    case ProtocolKind::STA: return "sta";
    case ProtocolKind::SAT: return "sat";
    case ProtocolKind::SAA: return "saa";
  }
  return "?";
}

std::vector<std::string> SystemConfig::violations() const {
  std::vector<std::string> out;
  auto need = [&out](bool ok, const char* what) {
    if (!ok) out.emplace_back(what);
  };
  need(M >= 1, "M: waveguide count must be >= 1");
  need(N >= 1, "N: PAs per waveguide must be >= 1");
  need(K >= 1, "K: user count must be >= 1");
  need(bandwidth > 0, "bandwidth: must be > 0");
  need(carrier > 0, "carrier: must be > 0");
  if (carrier > 0)
    need(std::abs(lambda - kSpeedOfLight / carrier) <= 1e-9 * (kSpeedOfLight / carrier),
         "lambda: must equal c / carrier");
  need(lambda_g > 0, "lambda_g: must be > 0");
  need(alpha_g >= 0, "alpha_g: must be >= 0");
  need(c0 > 0, "c0: must be > 0");
  need(beta_u > 0, "beta_u: must be > 0");
  need(rician >= 0, "rician: must be >= 0");
  need(nu > 0 && nu <= 1, "nu: amplifier efficiency must lie in (0, 1]");
  need(p_max > 0, "p_max: must be > 0");
  need(noise > 0, "noise: must be > 0");
  need(delta_x >= 0, "delta_x: must be >= 0");
  need(x_max - x_min >= (N - 1) * delta_x,
       "x_max/x_min: range must hold N PAs at the minimum spacing");
  need(static_cast<int>(y_bar.size()) == M, "y_bar: needs exactly M entries");
  need(p_bs_static >= 0, "p_bs_static: must be >= 0");
  return out;
}

void SystemConfig::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

std::vector<double> uniform_waveguide_rows(int M, double side) {
  std::vector<double> rows(static_cast<std::size_t>(std::max(M, 0)));
  for (int m = 0; m < M; ++m) rows[m] = side * (m + 1) / (M + 1);
  return rows;
}

SystemConfig reference_config(int M, int N) {
  SystemConfig cfg;
  cfg.M = M;
  cfg.N = N;
  cfg.y_bar = uniform_waveguide_rows(M);
  return cfg;
}

UserLayout reference_users() {
  return {{15.9, 54.3}, {98.6, 85.4}, {74.5, 24.1}, {37.4, 23.9}};
}

std::vector<std::string> GridConfig::violations() const {
  std::vector<std::string> out;
  if (!(delta_c > 0)) out.emplace_back("delta_c: must be > 0");
  if (!(delta_f > 0)) out.emplace_back("delta_f: must be > 0");
  if (!(l_f > 0)) out.emplace_back("l_f: must be > 0");
  if (n_c < 1) out.emplace_back("n_c: must be >= 1");
  if (n_f < 1) out.emplace_back("n_f: must be >= 1");
  if (delta_f > l_f) out.emplace_back("delta_f: must not exceed l_f");
  return out;
}

}  // namespace pass
