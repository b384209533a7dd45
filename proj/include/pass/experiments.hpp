#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pass/baselines.hpp"
#include "pass/config.hpp"
#include "pass/detail/pool.hpp"
#include "pass/optimizer.hpp"

namespace pass {

enum class ExperimentKind {
  TheoryValidation,
  Convergence,
  ArchitectureCompare,
  MNSweep,
  ResolutionSweep,
  ProtocolCompare,
};

/// Accepts kebab-case names such as "protocol-compare" (case-insensitive).
ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::ProtocolCompare;
  std::vector<double> p_max_dbw;
  std::vector<int> m_values;
  std::vector<int> n_values;
  std::vector<double> delta_c_values;
  std::vector<double> delta_f_values;
  std::vector<ProtocolKind> protocols;
  std::vector<std::uint64_t> seeds;
  double varrho0 = 230.0;
  double c_varrho = 1.0 / 0.9;
  int mc_draws = 10000;
  int mc_batches = 20;
  int sat_n_c = 2;  // base multiplier used for SAT in protocol comparisons
  int workers = 0;  // 0: one per hardware thread

  std::vector<std::string> violations() const;
};

/// Sweep lists, seeds and penalty pair used for each figure unless overridden.
ExperimentSpec default_spec(ExperimentKind kind);

using Value = std::variant<std::int64_t, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
  std::string text(std::size_t row, const std::string& name) const;
};

/// Shortest round-trip formatting for doubles, so equal tables print equally.
std::string format_value(const Value& v);
/// RFC 4180: header row, CRLF line ends, fields quoted when needed.
void write_csv(const Table& table, std::ostream& os);
std::string csv_escape(const std::string& field);

/// Thrown when a cell fails; carries the rows of all cells before it.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(const std::string& what, Table partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const Table& partial() const { return partial_; }

 private:
  Table partial_;
};

/// Everything a sweep needs besides the spec itself.
struct ExperimentContext {
  SystemConfig system;
  UserLayout users;
  GridConfig grid;
  PAPowerComponents components;
  OptimizerConfig optimizer;
  ProtocolKind protocol = ProtocolKind::STT;
};

Table run_experiment(const ExperimentSpec& spec, const ExperimentContext& ctx);

/// Closed-form EE against a Monte-Carlo estimate of the same expectations for
/// MRT precoding, uniform radiation and equal-interval positions.
struct TheoryCell {
  double ee_closed_form = 0.0;
  double ee_monte_carlo = 0.0;
  double stderr_mc = 0.0;
};

TheoryCell theory_validation_cell(const SystemConfig& cfg, const UserLayout& users,
                                  double pa_power_per_element, int draws, int batches,
                                  std::uint64_t seed);

}  // namespace pass
