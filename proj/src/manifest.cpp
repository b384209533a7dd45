#include "pass/manifest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/evp.h>

namespace pass {

using nlohmann::json;

namespace {

const std::set<std::string> kMetaKeys = {"tool_version", "timestamp", "seed", "subcommand"};

// Defaults that do not depend on other keys.
json static_defaults() {
  const OptimizerConfig opt;
  return {
      {"m", 3},
      {"n", 4},
      {"bandwidth_hz", 180e6},
      {"carrier_hz", 28e9},
      {"n_eff", 1.4},
      {"attenuation_db", 18.0},
      {"attenuation_ref_length_m", 100.0},
      {"beta_u", 2.2},
      {"rician_factor", 0.5},
      {"nu", 0.9},
      {"p_max_dbw", 5.0},
      {"noise_dbm", -80.0},
      {"x_min_m", 0.0},
      {"x_max_m", 100.0},
      {"p_bs_static_dbw", 9.0},
      {"users_m", json::array({{15.9, 54.3}, {98.6, 85.4}, {74.5, 24.1}, {37.4, 23.9}})},
      {"delta_c_m", 1.0},
      {"delta_f_m", 1e-4},
      {"l_f_m", 0.2},
      {"n_c", 1},
      {"n_f", 1},
      {"pa_act_dbm", 5.0},
      {"pa_mot_dbm", 20.0},
      {"pa_pie_dbm", 8.0},
      {"v_mo_mps", 10.0},
      {"v_pi_mps", 1e-2},
      {"protocol", "stt"},
      {"baseline", "mimo"},
      {"eps_xi", opt.eps_xi},
      {"eps_in", opt.eps_in},
      {"eps_out", opt.eps_out},
      {"varpi0", opt.varpi0},
      {"armijo_contraction", opt.armijo_contraction},
      {"armijo_slope", opt.armijo_slope},
      {"armijo_max_halvings", opt.armijo_max_halvings},
      {"max_radiation_iters", opt.max_radiation_iters},
      {"max_inner_iters", opt.max_inner_iters},
      {"max_outer_iters", opt.max_outer_iters},
      {"bisection_growth", opt.bisection_growth},
      {"bisection_tol", opt.bisection_tol},
      {"bisection_max_steps", opt.bisection_max_steps},
      {"varrho0", opt.varrho0},
      {"c_varrho", opt.c_varrho},
      {"position_passes", opt.position_passes},
      {"experiment_kind", "protocol-compare"},
      {"mc_draws", 10000},
      {"mc_batches", 20},
      {"sat_n_c", 2},
      {"workers", 0},
  };
}

// Keys whose default is computed from other keys.
const std::vector<std::string> kDerivedKeys = {
    "c0_db",           "delta_x_m",          "y_bar_m",         "sweep_p_max_dbw",
    "sweep_m",         "sweep_n",            "sweep_delta_c_m", "sweep_delta_f_m",
    "sweep_protocols", "seeds",              "experiment_varrho0", "experiment_c_varrho"};

class Reader {
 public:
  explicit Reader(const json& raw) : raw_(raw) {}

  double num(const std::string& key) {
    const json& v = raw_.at(key);
    if (!v.is_number()) return fail(key, "expected a number"), 0.0;
    return v.get<double>();
  }
  int integer(const std::string& key) {
    const json& v = raw_.at(key);
    if (!v.is_number_integer()) return fail(key, "expected an integer"), 0;
    return v.get<int>();
  }
  std::string str(const std::string& key) {
    const json& v = raw_.at(key);
    if (!v.is_string()) return fail(key, "expected a string"), std::string();
    return v.get<std::string>();
  }
  std::vector<double> nums(const std::string& key) {
    std::vector<double> out;
    const json& v = raw_.at(key);
    if (!v.is_array()) return fail(key, "expected a list of numbers"), out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(key + "[" + std::to_string(i) + "]", "expected a number");
        continue;
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  std::vector<int> ints(const std::string& key) {
    std::vector<int> out;
    const json& v = raw_.at(key);
    if (!v.is_array()) return fail(key, "expected a list of integers"), out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) {
        fail(key + "[" + std::to_string(i) + "]", "expected an integer");
        continue;
      }
      out.push_back(v[i].get<int>());
    }
    return out;
  }
  std::vector<std::uint64_t> seeds(const std::string& key) {
    std::vector<std::uint64_t> out;
    const json& v = raw_.at(key);
    if (!v.is_array()) return fail(key, "expected a list of seeds"), out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_unsigned()) {
        fail(key + "[" + std::to_string(i) + "]", "expected a nonnegative integer");
        continue;
      }
      out.push_back(v[i].get<std::uint64_t>());
    }
    return out;
  }
  std::vector<std::string> strs(const std::string& key) {
    std::vector<std::string> out;
    const json& v = raw_.at(key);
    if (!v.is_array()) return fail(key, "expected a list of strings"), out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) {
        fail(key + "[" + std::to_string(i) + "]", "expected a string");
        continue;
      }
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }
  UserLayout users(const std::string& key) {
    UserLayout out;
    const json& v = raw_.at(key);
    if (!v.is_array()) return fail(key, "expected a list of [x, y] pairs"), out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const json& p = v[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        fail(key + "[" + std::to_string(i) + "]", "expected an [x, y] pair of numbers");
        continue;
      }
      const UserPosition u{p[0].get<double>(), p[1].get<double>()};
      if (!std::isfinite(u.x) || !std::isfinite(u.y))
        fail(key + "[" + std::to_string(i) + "]", "coordinates must be finite");
      out.push_back(u);
    }
    return out;
  }

  template <class F>
  auto parse(const std::string& key, F&& f) -> decltype(f(std::string())) {
    const std::string s = str(key);
    try {
      return f(s);
    } catch (const ConfigError& e) {
      for (const auto& i : e.issues()) issues.push_back(i);
    }
    return {};
  }

  void fail(const std::string& key, const std::string& why) { issues.push_back(key + ": " + why); }

  std::vector<std::string> issues;

 private:
  const json& raw_;
};

json parse_override_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);
  return v;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Fills in keys whose defaults depend on other (already merged) keys.
void resolve_derived(json& raw, std::optional<std::uint64_t> seed) {
  const double carrier = raw["carrier_hz"].is_number() ? raw["carrier_hz"].get<double>() : 28e9;
  const double lambda = kSpeedOfLight / carrier;
  if (!raw.contains("c0_db")) raw["c0_db"] = 20.0 * std::log10(lambda / (4.0 * std::numbers::pi));
  if (!raw.contains("delta_x_m")) raw["delta_x_m"] = lambda / 2.0;
  if (!raw.contains("y_bar_m")) {
    const int M = raw["m"].is_number_integer() ? raw["m"].get<int>() : 0;
    raw["y_bar_m"] = uniform_waveguide_rows(M);
  }

  ExperimentKind kind = ExperimentKind::ProtocolCompare;
  try {
    if (raw["experiment_kind"].is_string())
      kind = parse_experiment_kind(raw["experiment_kind"].get<std::string>());
  } catch (const ConfigError&) {
    // reported when the typed value is read
  }
  const ExperimentSpec def = default_spec(kind);
  auto put = [&raw](const char* key, const json& v) {
    if (!raw.contains(key)) raw[key] = v;
  };
  put("sweep_p_max_dbw", def.p_max_dbw);
  put("sweep_m", def.m_values);
  put("sweep_n", def.n_values);
  put("sweep_delta_c_m", def.delta_c_values);
  put("sweep_delta_f_m", def.delta_f_values);
  json protocols = json::array();
  for (ProtocolKind p : def.protocols) protocols.push_back(to_string(p));
  put("sweep_protocols", protocols);
  put("experiment_varrho0", def.varrho0);
  put("experiment_c_varrho", def.c_varrho);
  if (!raw.contains("seeds")) {
    json seeds = json::array();
    const std::uint64_t base = seed.value_or(0);
    for (std::size_t i = 0; i < def.seeds.size(); ++i) seeds.push_back(base + i);
    raw["seeds"] = seeds;
  }
}

}  // namespace

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  const json defaults = static_defaults();
  for (const auto& [k, v] : defaults.items()) keys.push_back(k);
  keys.insert(keys.end(), kDerivedKeys.begin(), kDerivedKeys.end());
  std::sort(keys.begin(), keys.end());
  return keys;
}

RunManifest load_config_json(const json& doc, const std::vector<std::string>& overrides,
                             std::optional<std::uint64_t> seed) {
  std::vector<std::string> issues;
  if (!doc.is_object()) throw ConfigError({"config: top level must be an object of key/value pairs"});

  RunManifest man;
  json user = json::object();
  for (const auto& [k, v] : doc.items()) {
    if (k == "seed") {
      if (v.is_number_unsigned())
        man.seed = v.get<std::uint64_t>();
      else
        issues.push_back("seed: expected a nonnegative integer");
    } else if (k == "subcommand" && v.is_string()) {
      man.subcommand = v.get<std::string>();
    } else if (!kMetaKeys.count(k)) {
      user[k] = v;
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      issues.push_back("override '" + o + "': expected KEY=VALUE");
      continue;
    }
    user[trim(o.substr(0, eq))] = parse_override_value(trim(o.substr(eq + 1)));
  }
  if (seed) man.seed = seed;

  const auto keys = known_keys();
  for (const auto& [k, v] : user.items())
    if (!std::binary_search(keys.begin(), keys.end(), k)) issues.push_back(k + ": unknown key");

  json raw = static_defaults();
  for (const auto& [k, v] : user.items())
    if (std::binary_search(keys.begin(), keys.end(), k)) raw[k] = v;
  resolve_derived(raw, man.seed);
  man.raw = raw;

  Reader r(man.raw);
  SystemConfig& sys = man.system;
  sys.M = r.integer("m");
  sys.N = r.integer("n");
  sys.bandwidth = r.num("bandwidth_hz");
  sys.carrier = r.num("carrier_hz");
  sys.lambda = kSpeedOfLight / sys.carrier;
  const double n_eff = r.num("n_eff");
  if (!(n_eff > 0)) r.fail("n_eff", "must be > 0");
  sys.lambda_g = sys.lambda / n_eff;
  const double ref_len = r.num("attenuation_ref_length_m");
  if (!(ref_len > 0)) r.fail("attenuation_ref_length_m", "must be > 0");
  sys.alpha_g = attenuation_nepers_per_m(r.num("attenuation_db"), ref_len);
  sys.c0 = db_to_linear(r.num("c0_db"));
  sys.beta_u = r.num("beta_u");
  sys.rician = r.num("rician_factor");
  sys.nu = r.num("nu");
  sys.p_max = dbw_to_watt(r.num("p_max_dbw"));
  sys.noise = dbm_to_watt(r.num("noise_dbm"));
  sys.delta_x = r.num("delta_x_m");
  sys.x_min = r.num("x_min_m");
  sys.x_max = r.num("x_max_m");
  sys.y_bar = r.nums("y_bar_m");
  sys.p_bs_static = dbw_to_watt(r.num("p_bs_static_dbw"));
  man.users = r.users("users_m");
  sys.K = static_cast<int>(man.users.size());

  man.grid.delta_c = r.num("delta_c_m");
  man.grid.delta_f = r.num("delta_f_m");
  man.grid.l_f = r.num("l_f_m");
  man.grid.n_c = r.integer("n_c");
  man.grid.n_f = r.integer("n_f");
  man.components.act = dbm_to_watt(r.num("pa_act_dbm"));
  man.components.mot = dbm_to_watt(r.num("pa_mot_dbm"));
  man.components.pie = dbm_to_watt(r.num("pa_pie_dbm"));
  man.speeds.v_mo = r.num("v_mo_mps");
  man.speeds.v_pi = r.num("v_pi_mps");
  if (!(man.speeds.v_mo > 0)) r.fail("v_mo_mps", "must be > 0");
  if (!(man.speeds.v_pi > 0)) r.fail("v_pi_mps", "must be > 0");
  man.protocol = r.parse("protocol", parse_protocol);
  man.baseline = r.parse("baseline", parse_baseline);

  OptimizerConfig& opt = man.optimizer;
  opt.eps_xi = r.num("eps_xi");
  opt.eps_in = r.num("eps_in");
  opt.eps_out = r.num("eps_out");
  opt.varpi0 = r.num("varpi0");
  opt.armijo_contraction = r.num("armijo_contraction");
  opt.armijo_slope = r.num("armijo_slope");
  opt.armijo_max_halvings = r.integer("armijo_max_halvings");
  opt.max_radiation_iters = r.integer("max_radiation_iters");
  opt.max_inner_iters = r.integer("max_inner_iters");
  opt.max_outer_iters = r.integer("max_outer_iters");
  opt.bisection_growth = r.num("bisection_growth");
  opt.bisection_tol = r.num("bisection_tol");
  opt.bisection_max_steps = r.integer("bisection_max_steps");
  opt.varrho0 = r.num("varrho0");
  opt.c_varrho = r.num("c_varrho");
  opt.position_passes = r.integer("position_passes");

  ExperimentSpec& ex = man.experiment;
  ex.kind = r.parse("experiment_kind", parse_experiment_kind);
  ex.p_max_dbw = r.nums("sweep_p_max_dbw");
  ex.m_values = r.ints("sweep_m");
  ex.n_values = r.ints("sweep_n");
  ex.delta_c_values = r.nums("sweep_delta_c_m");
  ex.delta_f_values = r.nums("sweep_delta_f_m");
  for (const auto& p : r.strs("sweep_protocols")) {
    try {
      ex.protocols.push_back(parse_protocol(p));
    } catch (const ConfigError& e) {
      for (const auto& i : e.issues()) r.fail("sweep_protocols", i);
    }
  }
  ex.seeds = r.seeds("seeds");
  ex.varrho0 = r.num("experiment_varrho0");
  ex.c_varrho = r.num("experiment_c_varrho");
  ex.mc_draws = r.integer("mc_draws");
  ex.mc_batches = r.integer("mc_batches");
  ex.sat_n_c = r.integer("sat_n_c");
  ex.workers = r.integer("workers");

  for (auto& i : r.issues) issues.push_back(std::move(i));
  // Invariant checks only make sense once every value has the right type.
  if (issues.empty()) {
    for (auto& v : sys.violations()) issues.push_back(std::move(v));
    for (auto& v : man.grid.violations()) issues.push_back(std::move(v));
    for (auto& v : opt.violations()) issues.push_back(std::move(v));
    for (auto& v : ex.violations()) issues.push_back(std::move(v));
    const bool sliding = man.protocol == ProtocolKind::STT || man.protocol == ProtocolKind::STA;
    if (sliding && man.grid.delta_c < sys.delta_x)
      issues.emplace_back("delta_c_m: coarse step must be >= delta_x_m for sliding protocols");
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return man;
}

RunManifest load_config(const std::string& path, const std::vector<std::string>& overrides,
                        std::optional<std::uint64_t> seed) {
  json doc = json::object();
  if (path != "default") {
    std::ifstream in(path);
    if (!in) throw ConfigError({"config: cannot open '" + path + "'"});
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
      doc = json::parse(text, nullptr, false);
      if (doc.is_discarded()) throw ConfigError({"config: '" + path + "' is not valid JSON"});
    }
  }
  return load_config_json(doc, overrides, seed);
}

ExperimentContext RunManifest::context() const {
  return {system, users, grid, components, optimizer, protocol};
}

json RunManifest::to_json() const {
  json out = raw;
  out["tool_version"] = tool_version;
  out["timestamp"] = timestamp;
  if (!subcommand.empty()) out["subcommand"] = subcommand;
  if (seed) out["seed"] = *seed;
  return out;
}

std::string RunManifest::config_hash() const {
  json canonical = raw;
  if (seed) canonical["seed"] = *seed;
  return git_blob_sha1(canonical.dump());
}

std::string git_blob_sha1(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

}  // namespace pass
