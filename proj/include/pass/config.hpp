#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pass {

inline constexpr double kSpeedOfLight = 299792458.0;

/// Thrown for invalid parameters; carries every violation found, not just the
/// first one.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A user coincides with a radiating element (zero distance).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unit conversions. Applied once when a configuration is ingested.
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double dbw_to_watt(double dbw) { return std::pow(10.0, dbw / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Converts an attenuation figure of `db` decibels accumulated over
/// `ref_length_m` meters to an amplitude constant in nepers per meter.
inline double attenuation_nepers_per_m(double db, double ref_length_m) {
  return std::abs(db) * std::log(10.0) / (20.0 * ref_length_m);
}

enum class ProtocolKind { STT, STA, SAT, SAA };

inline constexpr ProtocolKind kAllProtocols[] = {ProtocolKind::STT, ProtocolKind::STA,
                                                 ProtocolKind::SAT, ProtocolKind::SAA};

/// Case-insensitive parse of "stt" | "sta" | "sat" | "saa".
ProtocolKind parse_protocol(std::string_view name);
std::string to_string(ProtocolKind p);

/// Physical parameters, all in SI linear units.
struct SystemConfig {
  int M = 3;  // waveguides
  int N = 4;  // PAs per waveguide
  int K = 4;  // users
  double bandwidth = 180e6;
  double carrier = 28e9;
  double lambda = kSpeedOfLight / 28e9;
  double lambda_g = kSpeedOfLight / 28e9 / 1.4;
  double alpha_g = attenuation_nepers_per_m(18.0, 100.0);
  double c0 = std::pow(kSpeedOfLight / 28e9 / (4.0 * std::numbers::pi), 2);
  double beta_u = 2.2;
  double rician = 0.5;
  double nu = 0.9;
  double p_max = dbw_to_watt(5.0);
  double noise = dbm_to_watt(-80.0);
  double delta_x = kSpeedOfLight / 28e9 / 2.0;
  double x_min = 0.0;
  double x_max = 100.0;
  std::vector<double> y_bar{25.0, 50.0, 75.0};
  double p_bs_static = dbw_to_watt(9.0);

  /// Every violated invariant, phrased with the offending field name.
  std::vector<std::string> violations() const;
  /// Throws ConfigError listing all violations.
  void validate() const;
};

/// Waveguide y-coordinates spread uniformly over a square area: side*m/(M+1).
std::vector<double> uniform_waveguide_rows(int M, double side = 100.0);

/// Default parameter set of the reference deployment (M waveguides, N PAs).
SystemConfig reference_config(int M = 3, int N = 4);

struct UserPosition {
  double x = 0.0;
  double y = 0.0;
};
using UserLayout = std::vector<UserPosition>;

/// The four fixed users of the reference scenario.
UserLayout reference_users();

struct GridConfig {
  double delta_c = 1.0;   // coarse resolution (m)
  double delta_f = 1e-4;  // fine resolution (m)
  double l_f = 0.2;       // fine range per base (m)
  int n_c = 1;            // pre-deployed base multiplier
  int n_f = 1;            // pre-deployed PA multiplier

  std::vector<std::string> violations() const;
};

struct PAPowerComponents {
  double act = dbm_to_watt(5.0);
  double mot = dbm_to_watt(20.0);
  double pie = dbm_to_watt(8.0);
};

struct MotionSpeeds {
  double v_mo = 10.0;
  double v_pi = 1e-2;
};

}  // namespace pass
