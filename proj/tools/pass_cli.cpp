// Command-line front end: evaluate, optimize, experiment, baseline, grids.
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pass/baselines.hpp"
#include "pass/dsd.hpp"
#include "pass/experiments.hpp"
#include "pass/manifest.hpp"
#include "pass/optimizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pass;

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Options {
  std::string config = "default";
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out = "pass-output";
  std::string kind;
  std::string protocol;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_table(const fs::path& path, const Table& table) {
  std::ostringstream os;
  write_csv(table, os);
  write_text(path, os.str());
}

json table_json(const Table& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size(); ++i)
      std::visit([&](const auto& v) { obj[table.columns[i]] = v; }, row[i]);
    rows.push_back(obj);
  }
  return rows;
}

RunManifest prepare(const Options& o, const std::string& subcommand, bool needs_seed) {
  std::vector<std::string> overrides = o.sets;
  if (!o.protocol.empty()) overrides.push_back("protocol=" + o.protocol);
  if (!o.kind.empty()) {
    if (subcommand == "experiment") overrides.push_back("experiment_kind=" + o.kind);
    if (subcommand == "baseline") overrides.push_back("baseline=" + o.kind);
  }
  RunManifest man = load_config(o.config, overrides, o.seed);
  if (needs_seed && !man.seed)
    throw ConfigError({"--seed: required for the " + subcommand + " subcommand"});
  man.subcommand = subcommand;
  man.timestamp = utc_timestamp();
  return man;
}

fs::path open_out(const Options& o, const RunManifest& man) {
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_json(dir / "manifest.json", man.to_json());
  return dir;
}

json summary_head(const RunManifest& man) {
  return {{"subcommand", man.subcommand}, {"config_hash", man.config_hash()},
          {"tool_version", man.tool_version}};
}

Table user_table(const Eigen::VectorXd& gamma) {
  Table t;
  t.columns = {"user", "sinr", "rate_bps_hz"};
  const RateResult r = rates_from_sinr(gamma);
  for (Eigen::Index k = 0; k < gamma.size(); ++k)
    t.rows.push_back({static_cast<std::int64_t>(k), gamma(k), r.per_user(k)});
  return t;
}

int cmd_evaluate(const Options& o) {
  RunManifest man = prepare(o, "evaluate", false);
  const SystemConfig& cfg = man.system;
  const PAPlacement placement = equal_interval_placement(cfg);
  const ChannelState ch = synth_channels(placement, man.users, cfg);
  const Eigen::VectorXd s = uniform_amplitudes(cfg.M, cfg.N);
  const EffectiveChannel eff = effective_channel(s, ch, cfg);
  const Eigen::MatrixXcd W = mrt_precoder(eff, cfg.p_max);
  const double pa = pa_power(man.protocol, man.components);
  const Eigen::VectorXd gamma = sinr(W, eff, cfg.noise);

  const fs::path dir = open_out(o, man);
  write_table(dir / "evaluate.csv", user_table(gamma));
  json summary = summary_head(man);
  summary["state"] = "mrt-uniform-equal-interval";
  summary["sum_rate_bps_hz"] = rates_from_sinr(gamma).sum;
  summary["total_power_w"] = total_power(W, cfg, pa);
  summary["ee_bits_per_joule"] = energy_efficiency(W, s, ch, cfg, pa);
  write_json(dir / "summary.json", summary);
  return 0;
}

int cmd_optimize(const Options& o) {
  RunManifest man = prepare(o, "optimize", true);
  const Algorithm2Result r = run_algorithm2(man.system, man.protocol, man.grid, man.components,
                                            man.users, man.optimizer, *man.seed);
  const fs::path dir = open_out(o, man);

  Table trace;
  trace.columns = {"iteration", "outer", "inner", "stage", "f2", "ee", "rho", "varrho",
                   "tx_power_w"};
  for (const auto& t : r.trace)
    trace.rows.push_back({std::int64_t{t.iteration}, std::int64_t{t.outer},
                          std::int64_t{t.inner}, t.stage, t.f2, t.ee, t.rho, t.varrho,
                          t.tx_power});
  write_table(dir / "trace.csv", trace);

  Table sol;
  sol.columns = {"waveguide", "pa", "x_m", "amplitude"};
  const int N = man.system.N;
  for (int m = 0; m < man.system.M; ++m)
    for (int n = 0; n < N; ++n)
      sol.rows.push_back({std::int64_t{m}, std::int64_t{n}, r.best.placement.x(n, m),
                          r.best.s(m * N + n)});
  write_table(dir / "solution.csv", sol);

  json summary = summary_head(man);
  summary["seed"] = *man.seed;
  summary["protocol"] = to_string(man.protocol);
  summary["ee_initial_bits_per_joule"] = r.initial_ee;
  summary["ee_bits_per_joule"] = r.best.ee;
  summary["tx_power_w"] = r.best.W.squaredNorm();
  summary["iterations"] = r.trace.size();
  summary["outer_iterations"] = r.outer_iterations;
  summary["hit_iteration_cap"] = r.hit_iteration_cap;
  write_json(dir / "summary.json", summary);
  return 0;
}

int cmd_experiment(const Options& o) {
  RunManifest man = prepare(o, "experiment", true);
  const fs::path dir = open_out(o, man);
  json summary = summary_head(man);
  json spec = json::object();
  for (const char* key : {"experiment_kind", "sweep_p_max_dbw", "sweep_m", "sweep_n",
                          "sweep_delta_c_m", "sweep_delta_f_m", "sweep_protocols", "seeds",
                          "experiment_varrho0", "experiment_c_varrho", "mc_draws", "mc_batches",
                          "sat_n_c"})
    spec[key] = man.raw.at(key);
  summary["spec"] = spec;
  try {
    const Table t = run_experiment(man.experiment, man.context());
    write_table(dir / "results.csv", t);
    summary["cells"] = table_json(t);
    write_json(dir / "summary.json", summary);
  } catch (const ExperimentError& e) {
    write_table(dir / "results.csv", e.partial());
    summary["cells"] = table_json(e.partial());
    summary["error"] = e.what();
    write_json(dir / "summary.json", summary);
    throw;
  }
  return 0;
}

int cmd_baseline(const Options& o) {
  RunManifest man = prepare(o, "baseline", true);
  const BaselineLayout layout = make_baseline_layout(man.baseline, man.system);
  const BaselineResult r =
      evaluate_baseline_ee(layout, man.users, man.system, man.optimizer, *man.seed);
  const BaselineChannels ch = synth_baseline_channels(layout, man.users, man.system, *man.seed);
  const fs::path dir = open_out(o, man);
  write_table(dir / "baseline.csv", user_table(sinr(r.W, ch.stats, man.system.noise)));
  json summary = summary_head(man);
  summary["seed"] = *man.seed;
  summary["baseline"] = to_string(man.baseline);
  summary["antennas"] = layout.antennas();
  summary["sum_rate_bps_hz"] = r.sum_rate;
  summary["ee_bits_per_joule"] = r.ee;
  summary["iterations"] = r.iterations;
  write_json(dir / "summary.json", summary);
  return 0;
}

int cmd_grids(const Options& o, bool write_files) {
  RunManifest man = prepare(o, "grids", false);
  const GridSets g = make_grids(man.protocol, man.system, man.grid);
  std::cout << "coarse: " << g.coarse.size() << " points, fine: " << g.fine.size() << " points\n";
  if (write_files) {
    const fs::path dir = open_out(o, man);
    Table t;
    t.columns = {"set", "index", "value_m"};
    for (std::size_t i = 0; i < g.coarse.size(); ++i)
      t.rows.push_back({std::string("coarse"), static_cast<std::int64_t>(i), g.coarse[i]});
    for (std::size_t i = 0; i < g.fine.size(); ++i)
      t.rows.push_back({std::string("fine"), static_cast<std::int64_t>(i), g.fine[i]});
    write_table(dir / "grids.csv", t);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pinching-antenna energy-efficiency simulator and optimizer"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&o](CLI::App* sub, bool seeded) {
    sub->add_option("--config", o.config, "JSON config file, or 'default'");
    sub->add_option("--set", o.sets, "KEY=VALUE override (repeatable)");
    sub->add_option("--seed", o.seed, seeded ? "Seed (required)" : "Seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--kind", o.kind, "Experiment or baseline kind");
    sub->add_option("--protocol", o.protocol, "stt | sta | sat | saa");
  };
  auto* evaluate = app.add_subcommand("evaluate", "Closed-form EE of the initial state");
  auto* optimize = app.add_subcommand("optimize", "Run the alternating optimizer");
  auto* experiment = app.add_subcommand("experiment", "Run a figure sweep");
  auto* baseline = app.add_subcommand("baseline", "EE of the MIMO or cell-free benchmark");
  auto* grids = app.add_subcommand("grids", "Print the search grid sizes");
  add_common(evaluate, false);
  add_common(optimize, true);
  add_common(experiment, true);
  add_common(baseline, true);
  add_common(grids, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (optimize->parsed()) return cmd_optimize(o);
    if (experiment->parsed()) return cmd_experiment(o);
    if (baseline->parsed()) return cmd_baseline(o);
    if (grids->parsed()) return cmd_grids(o, grids->count("--out") > 0);
  } catch (const ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& issue : e.issues()) std::cerr << "  " << issue << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kRuntimeError;
}
