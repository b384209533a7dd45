#include "pass/experiments.hpp"

#include <algorithm>
#include <array>
#include <iterator>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>

namespace pass {

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::TheoryValidation, "theory-validation"},
    {ExperimentKind::Convergence, "convergence"},
    {ExperimentKind::ArchitectureCompare, "architecture-compare"},
    {ExperimentKind::MNSweep, "mn-sweep"},
    {ExperimentKind::ResolutionSweep, "resolution-sweep"},
    {ExperimentKind::ProtocolCompare, "protocol-compare"},
};

std::string normalize(const std::string& s) {
  std::string out;
  for (char ch : s) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    out += c == '_' ? '-' : c;
  }
  return out;
}

std::vector<std::uint64_t> seed_range(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::uint64_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

SystemConfig cell_config(const SystemConfig& base, int M, int N, double p_max_dbw) {
  SystemConfig cfg = base;
  if (M != base.M) cfg.y_bar = uniform_waveguide_rows(M);
  cfg.M = M;
  cfg.N = N;
  cfg.p_max = dbw_to_watt(p_max_dbw);
  return cfg;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Jobs are laid out group-major with one job per seed; only groups whose every
// seed finished produce rows.
template <class R>
std::size_t complete_groups(const std::vector<R>& results, std::size_t seeds) {
  return seeds == 0 ? 0 : results.size() / seeds;
}

template <class R>
Table finish(Table table, const PoolOutcome<R>& outcome) {
  if (outcome.error) {
    try {
      std::rethrow_exception(outcome.error);
    } catch (const std::exception& e) {
      throw ExperimentError(std::string("experiment cell failed: ") + e.what(), std::move(table));
    }
  }
  return table;
}

}  // namespace

ExperimentKind parse_experiment_kind(const std::string& name) {
  const std::string n = normalize(name);
  for (const auto& k : kKindNames)
    if (n == k.name) return k.kind;
  throw ConfigError({"experiment_kind: unknown kind '" + name + "'"});
}

std::string to_string(ExperimentKind kind) {
  for (const auto& k : kKindNames)
    if (k.kind == kind) return k.name;
  return "unknown";
}

std::vector<std::string> ExperimentSpec::violations() const {
  std::vector<std::string> out;
  auto nonempty = [&out](bool empty, const char* key) {
    if (empty) out.push_back(std::string(key) + ": sweep list must not be empty");
  };
  nonempty(seeds.empty(), "seeds");
  switch (kind) {
    case ExperimentKind::TheoryValidation:
    case ExperimentKind::MNSweep:
      nonempty(p_max_dbw.empty(), "sweep_p_max_dbw");
      nonempty(m_values.empty(), "sweep_m");
      nonempty(n_values.empty(), "sweep_n");
      break;
    case ExperimentKind::Convergence:
    case ExperimentKind::ArchitectureCompare:
      nonempty(p_max_dbw.empty(), "sweep_p_max_dbw");
      break;
    case ExperimentKind::ResolutionSweep:
      nonempty(p_max_dbw.empty(), "sweep_p_max_dbw");
      nonempty(n_values.empty(), "sweep_n");
      nonempty(delta_c_values.empty(), "sweep_delta_c_m");
      nonempty(delta_f_values.empty(), "sweep_delta_f_m");
      break;
    case ExperimentKind::ProtocolCompare:
      nonempty(p_max_dbw.empty(), "sweep_p_max_dbw");
      nonempty(protocols.empty(), "sweep_protocols");
      break;
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    out.emplace_back("seeds: must be distinct");
  for (int m : m_values)
    if (m < 1) out.emplace_back("sweep_m: entries must be >= 1");
  for (int n : n_values)
    if (n < 1) out.emplace_back("sweep_n: entries must be >= 1");
  for (double d : delta_c_values)
    if (!(d > 0)) out.emplace_back("sweep_delta_c_m: entries must be > 0");
  for (double d : delta_f_values)
    if (!(d > 0)) out.emplace_back("sweep_delta_f_m: entries must be > 0");
  if (!(varrho0 > 0)) out.emplace_back("experiment_varrho0: must be > 0");
  if (!(c_varrho > 1)) out.emplace_back("experiment_c_varrho: must be > 1");
  if (mc_draws < 2) out.emplace_back("mc_draws: must be >= 2");
  if (mc_batches < 2 || mc_batches > mc_draws)
    out.emplace_back("mc_batches: must lie in [2, mc_draws]");
  if (sat_n_c < 1) out.emplace_back("sat_n_c: must be >= 1");
  if (workers < 0) out.emplace_back("workers: must be >= 0");
  return out;
}

ExperimentSpec default_spec(ExperimentKind kind) {
  ExperimentSpec s;
  s.kind = kind;
  switch (kind) {
    case ExperimentKind::TheoryValidation:
      s.p_max_dbw = {0.0, 10.0};
      s.m_values = {2, 4};
      s.n_values = {2, 4, 6};
      s.seeds = {0};
      break;
    case ExperimentKind::Convergence:
      s.p_max_dbw = {5.0};
      s.seeds = {0};
      break;
    case ExperimentKind::ArchitectureCompare:
      s.p_max_dbw = {-5.0, 0.0, 5.0, 10.0};
      s.seeds = seed_range(20);
      break;
    case ExperimentKind::MNSweep:
      s.p_max_dbw = {-2.0};
      s.m_values = {2, 3};
      s.n_values = {3, 6, 9};
      s.seeds = seed_range(10);
      s.varrho0 = 200.0;
      s.c_varrho = 1.0 / 0.5;
      break;
    case ExperimentKind::ResolutionSweep:
      s.p_max_dbw = {5.0};
      s.n_values = {1, 6};
      s.delta_c_values = {1.0, 10.0};
      s.delta_f_values = {1e-4, 1e-2};
      s.seeds = seed_range(10);
      s.varrho0 = 90.0;
      s.c_varrho = 1.0 / 0.6;
      break;
    case ExperimentKind::ProtocolCompare:
      s.p_max_dbw = {5.0};
      s.protocols.assign(std::begin(kAllProtocols), std::end(kAllProtocols));
      s.seeds = seed_range(20);
      s.varrho0 = 450.0;
      s.c_varrho = 1.0 / 0.6;
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::out_of_range("table has no column '" + name + "'");
}

double Table::number(std::size_t row, const std::string& name) const {
  const Value& v = rows.at(row).at(column(name));
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw std::invalid_argument("column '" + name + "' is not numeric");
}

std::string Table::text(std::size_t row, const std::string& name) const {
  return format_value(rows.at(row).at(column(name)));
}

std::string format_value(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void write_csv(const Table& table, std::ostream& os) {
  auto line = [&os](const auto& fields, auto&& fmt) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os << ',';
      os << csv_escape(fmt(fields[i]));
    }
    os << "\r\n";
  };
  line(table.columns, [](const std::string& s) { return s; });
  for (const auto& row : table.rows) line(row, [](const Value& v) { return format_value(v); });
}

// ---------------------------------------------------------------------------

TheoryCell theory_validation_cell(const SystemConfig& cfg, const UserLayout& users,
                                  double pa_power_per_element, int draws, int batches,
                                  std::uint64_t seed) {
  const PAPlacement placement = equal_interval_placement(cfg);
  const ChannelState ch = synth_channels(placement, users, cfg);
  const Eigen::VectorXd s = uniform_amplitudes(cfg.M, cfg.N);
  const EffectiveChannel eff = effective_channel(s, ch, cfg);
  const Eigen::MatrixXcd W = mrt_precoder(eff, cfg.p_max);
  const double power = total_power(W, cfg, pa_power_per_element);
  const auto K = static_cast<Eigen::Index>(users.size());

  TheoryCell cell;
  cell.ee_closed_form = energy_efficiency(W, s, ch, cfg, pa_power_per_element);

  // Per batch: sum of a_kk and of |a_ki|^2 with a = e^T W on the drawn channel.
  const Eigen::VectorXd sg_scale = s;  // radiation amplitudes per element
  std::vector<Eigen::VectorXcd> sum_diag(batches, Eigen::VectorXcd::Zero(K));
  std::vector<Eigen::MatrixXd> sum_pow(batches, Eigen::MatrixXd::Zero(K, K));
  std::vector<double> count(batches, 0.0);
  CounterRng rng(seed, 0x74686579ULL ^ (static_cast<std::uint64_t>(cfg.M) << 32) ^
                           (static_cast<std::uint64_t>(cfg.N) << 16));
  Eigen::MatrixXcd e(cfg.M, K);
  for (int d = 0; d < draws; ++d) {
    const int b = static_cast<int>(static_cast<long long>(d) * batches / draws);
    const Eigen::MatrixXcd h = realized_channel(ch, draw_nlos(ch, rng), cfg);
    for (Eigen::Index k = 0; k < K; ++k)
      for (int m = 0; m < cfg.M; ++m) {
        cd acc{0.0, 0.0};
        for (int n = 0; n < cfg.N; ++n) {
          const int j = m * cfg.N + n;
          acc += h(j, k) * sg_scale(j) * ch.g(j);
        }
        e(m, k) = acc;
      }
    const Eigen::MatrixXcd a = e.transpose() * W;
    sum_diag[b] += a.diagonal();
    sum_pow[b] += a.cwiseAbs2();
    count[b] += 1.0;
  }

  auto estimate = [&](int skip) {
    Eigen::VectorXcd sd = Eigen::VectorXcd::Zero(K);
    Eigen::MatrixXd sp = Eigen::MatrixXd::Zero(K, K);
    double n = 0.0;
    for (int b = 0; b < batches; ++b) {
      if (b == skip) continue;
      sd += sum_diag[b];
      sp += sum_pow[b];
      n += count[b];
    }
    sd /= n;
    sp /= n;
    double rate = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double desired = std::norm(sd(k));
      const double others = sp.row(k).sum() - desired;  // uncertainty plus interference
      rate += std::log2(1.0 + desired / (std::max(others, 0.0) + cfg.noise));
    }
    return cfg.bandwidth * rate / power;
  };

  cell.ee_monte_carlo = estimate(-1);
  std::vector<double> loo(batches);
  for (int b = 0; b < batches; ++b) loo[b] = estimate(b);
  const double m = mean(loo);
  double ss = 0.0;
  for (double v : loo) ss += (v - m) * (v - m);
  cell.stderr_mc = std::sqrt(ss * (batches - 1) / batches);
  return cell;
}

// ---------------------------------------------------------------------------

Table run_experiment(const ExperimentSpec& spec, const ExperimentContext& ctx) {
  {
    auto issues = spec.violations();
    for (auto& v : ctx.system.violations()) issues.push_back(std::move(v));
    for (auto& v : ctx.grid.violations()) issues.push_back(std::move(v));
    for (auto& v : ctx.optimizer.violations()) issues.push_back(std::move(v));
    if (!issues.empty()) throw ConfigError(std::move(issues));
  }
  OptimizerConfig opt = ctx.optimizer;
  opt.varrho0 = spec.varrho0;
  opt.c_varrho = spec.c_varrho;
  const std::size_t S = spec.seeds.size();
  const auto& users = ctx.users;
  Table table;

  auto run_pass = [&ctx, &users, opt](const SystemConfig& cfg, ProtocolKind protocol,
                                      const GridConfig& grid, std::uint64_t seed) {
    return run_algorithm2(cfg, protocol, grid, ctx.components, users, opt, seed);
  };

  switch (spec.kind) {
    case ExperimentKind::TheoryValidation: {
      table.columns = {"p_max_dbw", "M", "N", "ee_closed_form", "ee_monte_carlo", "stderr"};
      struct Cell { double p; int M, N; };
      std::vector<Cell> cells;
      for (double p : spec.p_max_dbw)
        for (int M : spec.m_values)
          for (int N : spec.n_values) cells.push_back({p, M, N});
      const double pa = pa_power(ctx.protocol, ctx.components);
      std::vector<std::function<TheoryCell()>> jobs;
      for (const Cell& c : cells)
        jobs.emplace_back([&, c] {
          return theory_validation_cell(cell_config(ctx.system, c.M, c.N, c.p), users, pa,
                                        spec.mc_draws, spec.mc_batches, spec.seeds.front());
        });
      const auto out = run_pool(jobs, spec.workers);
      for (std::size_t i = 0; i < out.results.size(); ++i) {
        const auto& r = out.results[i];
        table.rows.push_back({cells[i].p, std::int64_t{cells[i].M}, std::int64_t{cells[i].N},
                              r.ee_closed_form, r.ee_monte_carlo, r.stderr_mc});
      }
      return finish(std::move(table), out);
    }

    case ExperimentKind::Convergence: {
      table.columns = {"seed", "iteration", "outer", "inner", "stage", "f2",
                       "ee", "rho", "varrho", "tx_power_w"};
      const SystemConfig cfg =
          cell_config(ctx.system, ctx.system.M, ctx.system.N, spec.p_max_dbw.front());
      std::vector<std::function<Algorithm2Result()>> jobs;
      for (std::uint64_t seed : spec.seeds)
        jobs.emplace_back([&, cfg, seed] { return run_pass(cfg, ctx.protocol, ctx.grid, seed); });
      const auto out = run_pool(jobs, spec.workers);
      for (std::size_t i = 0; i < out.results.size(); ++i) {
        const auto seed = static_cast<std::int64_t>(spec.seeds[i]);
        table.rows.push_back({seed, std::int64_t{-1}, std::int64_t{0}, std::int64_t{0},
                              std::string("init"), 0.0, out.results[i].initial_ee, 0.0, spec.varrho0,
                              cfg.p_max});
        for (const auto& t : out.results[i].trace)
          table.rows.push_back({seed, std::int64_t{t.iteration}, std::int64_t{t.outer},
                                std::int64_t{t.inner}, t.stage, t.f2, t.ee, t.rho, t.varrho,
                                t.tx_power});
      }
      return finish(std::move(table), out);
    }

    case ExperimentKind::ArchitectureCompare: {
      table.columns = {"p_max_dbw", "architecture", "ee", "ee_std", "seeds"};
      using Quad = std::array<double, 4>;
      std::vector<std::function<Quad()>> jobs;
      for (double p : spec.p_max_dbw)
        for (std::uint64_t seed : spec.seeds)
          jobs.emplace_back([&, p, seed] {
            const SystemConfig cfg = cell_config(ctx.system, ctx.system.M, ctx.system.N, p);
            const double mimo =
                evaluate_baseline_ee(make_baseline_layout(BaselineKind::MIMO, cfg), users, cfg,
                                     opt, seed).ee;
            const double cf =
                evaluate_baseline_ee(make_baseline_layout(BaselineKind::CellFree, cfg), users, cfg,
                                     opt, seed).ee;
            const auto r = run_pass(cfg, ctx.protocol, ctx.grid, seed);
            return Quad{mimo, cf, r.initial_ee, r.best.ee};
          });
      const auto out = run_pool(jobs, spec.workers);
      const char* names[] = {"mimo", "cellfree", "pass-initial", "pass-optimized"};
      for (std::size_t g = 0; g < complete_groups(out.results, S); ++g)
        for (int a = 0; a < 4; ++a) {
          std::vector<double> v;
          for (std::size_t s = 0; s < S; ++s) v.push_back(out.results[g * S + s][a]);
          table.rows.push_back({spec.p_max_dbw[g], std::string(names[a]), mean(v),
                                sample_std(v), static_cast<std::int64_t>(S)});
        }
      return finish(std::move(table), out);
    }

    case ExperimentKind::MNSweep: {
      table.columns = {"M", "N", "p_max_dbw", "ee_baseline", "ee_optimized", "gain", "seeds"};
      struct Cell { int M, N; double p; };
      std::vector<Cell> cells;
      for (int M : spec.m_values)
        for (int N : spec.n_values)
          for (double p : spec.p_max_dbw) cells.push_back({M, N, p});
      using Pair = std::array<double, 2>;
      std::vector<std::function<Pair()>> jobs;
      for (const Cell& c : cells)
        for (std::uint64_t seed : spec.seeds)
          jobs.emplace_back([&, c, seed] {
            const auto r = run_pass(cell_config(ctx.system, c.M, c.N, c.p), ctx.protocol,
                                    ctx.grid, seed);
            return Pair{r.initial_ee, r.best.ee};
          });
      const auto out = run_pool(jobs, spec.workers);
      for (std::size_t g = 0; g < complete_groups(out.results, S); ++g) {
        std::vector<double> base, best;
        for (std::size_t s = 0; s < S; ++s) {
          base.push_back(out.results[g * S + s][0]);
          best.push_back(out.results[g * S + s][1]);
        }
        table.rows.push_back({std::int64_t{cells[g].M}, std::int64_t{cells[g].N}, cells[g].p,
                              mean(base), mean(best), mean(best) / mean(base),
                              static_cast<std::int64_t>(S)});
      }
      return finish(std::move(table), out);
    }

    case ExperimentKind::ResolutionSweep: {
      table.columns = {"delta_c_m", "delta_f_m", "N", "ee", "ee_std", "seeds"};
      struct Cell { double dc, df; int N; };
      std::vector<Cell> cells;
      for (int N : spec.n_values)
        for (double dc : spec.delta_c_values)
          for (double df : spec.delta_f_values) cells.push_back({dc, df, N});
      std::vector<std::function<double()>> jobs;
      for (const Cell& c : cells)
        for (std::uint64_t seed : spec.seeds)
          jobs.emplace_back([&, c, seed] {
            GridConfig grid = ctx.grid;
            grid.delta_c = c.dc;
            grid.delta_f = c.df;
            const SystemConfig cfg =
                cell_config(ctx.system, ctx.system.M, c.N, spec.p_max_dbw.front());
            return run_pass(cfg, ctx.protocol, grid, seed).best.ee;
          });
      const auto out = run_pool(jobs, spec.workers);
      for (std::size_t g = 0; g < complete_groups(out.results, S); ++g) {
        std::vector<double> v(out.results.begin() + g * S, out.results.begin() + (g + 1) * S);
        table.rows.push_back({cells[g].dc, cells[g].df, std::int64_t{cells[g].N}, mean(v),
                              sample_std(v), static_cast<std::int64_t>(S)});
      }
      return finish(std::move(table), out);
    }

    case ExperimentKind::ProtocolCompare: {
      table.columns = {"protocol", "p_max_dbw", "ee", "ee_std", "ee_initial", "seeds"};
      struct Cell { ProtocolKind protocol; double p; };
      std::vector<Cell> cells;
      for (ProtocolKind pr : spec.protocols)
        for (double p : spec.p_max_dbw) cells.push_back({pr, p});
      using Pair = std::array<double, 2>;
      std::vector<std::function<Pair()>> jobs;
      for (const Cell& c : cells)
        for (std::uint64_t seed : spec.seeds)
          jobs.emplace_back([&, c, seed] {
            GridConfig grid = ctx.grid;
            if (c.protocol == ProtocolKind::SAT) grid.n_c = spec.sat_n_c;
            const auto r = run_pass(cell_config(ctx.system, ctx.system.M, ctx.system.N, c.p),
                                    c.protocol, grid, seed);
            return Pair{r.initial_ee, r.best.ee};
          });
      const auto out = run_pool(jobs, spec.workers);
      for (std::size_t g = 0; g < complete_groups(out.results, S); ++g) {
        std::vector<double> init, best;
        for (std::size_t s = 0; s < S; ++s) {
          init.push_back(out.results[g * S + s][0]);
          best.push_back(out.results[g * S + s][1]);
        }
        table.rows.push_back({to_string(cells[g].protocol), cells[g].p, mean(best),
                              sample_std(best), mean(init), static_cast<std::int64_t>(S)});
      }
      return finish(std::move(table), out);
    }
  }
  return table;
}

}  // namespace pass
