#include "config_io.hpp"

#include <hetcoop/analytic.hpp>
#include <hetcoop/policies.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace hetcoop::cli {

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

double get_number(const json& obj, const std::string& ctx, const std::string& key) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(ctx + "." + key + " must be a number");
  return v.get<double>();
}

long get_integer(const json& obj, const std::string& ctx, const std::string& key) {
  const double v = get_number(obj, ctx, key);
  if (v != std::floor(v)) throw ConfigError(ctx + "." + key + " must be an integer");
  return static_cast<long>(v);
}

// Exactly one of the raw field or its sugar form; `convert` maps sugar to SI.
double one_of(const json& obj, const std::string& ctx, const char* raw, const char* sugar,
              double (*convert)(double)) {
  const bool has_raw = obj.contains(raw);
  const bool has_sugar = obj.contains(sugar);
  if (has_raw && has_sugar)
    throw ConfigError(ctx + ": give exactly one of " + raw + " / " + sugar);
  if (!has_raw && !has_sugar)
    throw ConfigError(ctx + ": missing field (" + raw + " or " + sugar + ")");
  return has_raw ? get_number(obj, ctx, raw) : convert(get_number(obj, ctx, sugar));
}

TierParams parse_tier(const json& root, const std::string& name) {
  if (!root.contains(name)) throw ConfigError("missing required block: " + name);
  const json& t = root.at(name);
  if (!t.is_object()) throw ConfigError(name + " must be an object");
  TierParams p;
  p.density = one_of(t, name, "density_per_m2", "one_over_pi_r_squared",
                     [](double r) { return 1.0 / (r * r * std::numbers::pi); });
  p.power = one_of(t, name, "power_watts", "power_dbm",
                   [](double d) { return std::pow(10.0, (d - 30.0) / 10.0); });
  p.bandwidth =
      one_of(t, name, "bandwidth_hz", "bandwidth_mhz", [](double m) { return m * 1e6; });
  if (t.contains("pathloss_exponent")) p.pathloss_exponent = get_number(t, name, "pathloss_exponent");
  return p;
}

std::vector<double> parse_prob_array(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.empty()) throw ConfigError(ctx + " must be a non-empty array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(ctx + " entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

const char* cube_rule_name(const std::optional<UnitCubeRule>& r) {
  if (!r) return "auto";
  return *r == UnitCubeRule::tensor_gauss ? "tensor_gauss" : "sobol";
}

}  // namespace

std::string policy_name(CachePolicy p) {
  switch (p) {
    case CachePolicy::most_popular: return "mpc";
    case CachePolicy::uniform: return "uc";
    case CachePolicy::iid_popular: return "iidc";
    case CachePolicy::optimal: return "optimal";
    case CachePolicy::fixed: return "fixed";
  }
  return "?";
}

CachePolicy parse_policy(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "mpc" || n == "most_popular") return CachePolicy::most_popular;
  if (n == "uc" || n == "uniform") return CachePolicy::uniform;
  if (n == "iidc" || n == "iid" || n == "iid_popular") return CachePolicy::iid_popular;
  if (n == "optimal" || n == "opt") return CachePolicy::optimal;
  if (n == "fixed") return CachePolicy::fixed;
  throw ConfigError("unknown cache policy: " + name +
                    " (expected mpc, uc, iidc, optimal, or fixed)");
}

RunConfig run_config_from_json(const json& root) {
  if (!root.is_object()) throw ConfigError("config root must be an object");
  RunConfig rc;
  rc.net.sbs = parse_tier(root, "sbs");
  rc.net.mbs = parse_tier(root, "mbs");
  rc.net.target_rate = one_of(root, "config", "target_rate_bps", "target_rate_mbps",
                              [](double m) { return m * 1e6; });
  if (root.contains("coop_size")) {
    const long k = get_integer(root, "config", "coop_size");
    rc.coop_size = static_cast<int>(k);
  }

  if (!root.contains("popularity")) throw ConfigError("missing required block: popularity");
  const json& pj = root.at("popularity");
  const bool has_param = pj.contains("files") || pj.contains("gamma");
  const bool has_probs = pj.contains("probabilities");
  if (has_param && has_probs)
    throw ConfigError("popularity: give files + gamma or probabilities, not both");
  if (has_probs) {
    rc.pop.probabilities = parse_prob_array(pj.at("probabilities"), "popularity.probabilities");
  } else if (pj.contains("files") && pj.contains("gamma")) {
    rc.pop_parametric = true;
    rc.pop_files = static_cast<int>(get_integer(pj, "popularity", "files"));
    rc.pop_gamma = get_number(pj, "popularity", "gamma");
    rc.pop = zipf(rc.pop_files, rc.pop_gamma);
  } else {
    throw ConfigError("popularity: needs files + gamma or an explicit probabilities array");
  }

  if (!root.contains("cache")) throw ConfigError("missing required block: cache");
  const json& cj = root.at("cache");
  if (!cj.contains("size")) throw ConfigError("cache: missing field (size)");
  rc.cache_size = static_cast<int>(get_integer(cj, "cache", "size"));
  if (cj.contains("probabilities")) {
    rc.fixed_probs = parse_prob_array(cj.at("probabilities"), "cache.probabilities");
    if (cj.contains("policy") && parse_policy(cj.at("policy").get<std::string>()) != CachePolicy::fixed)
      throw ConfigError("cache: explicit probabilities require policy \"fixed\"");
    rc.policy = CachePolicy::fixed;
    if (rc.fixed_probs.size() != rc.pop.probabilities.size())
      throw ConfigError("cache.probabilities length must match the number of files");
  } else if (cj.contains("policy")) {
    if (!cj.at("policy").is_string()) throw ConfigError("cache.policy must be a string");
    rc.policy = parse_policy(cj.at("policy").get<std::string>());
    if (*rc.policy == CachePolicy::fixed)
      throw ConfigError("cache: policy \"fixed\" needs a probabilities array");
  }

  if (root.contains("quadrature")) {
    const json& qj = root.at("quadrature");
    if (qj.contains("rel_tol")) rc.quad.rel_tol = get_number(qj, "quadrature", "rel_tol");
    if (qj.contains("abs_tol")) rc.quad.abs_tol = get_number(qj, "quadrature", "abs_tol");
    if (qj.contains("unit_cube_rule")) {
      const std::string r = qj.at("unit_cube_rule").get<std::string>();
      if (r == "tensor_gauss") rc.quad.unit_cube_rule = UnitCubeRule::tensor_gauss;
      else if (r == "sobol") rc.quad.unit_cube_rule = UnitCubeRule::sobol;
      else if (r == "auto") rc.quad.unit_cube_rule.reset();
      else throw ConfigError("quadrature.unit_cube_rule: expected tensor_gauss, sobol, or auto");
    }
    if (qj.contains("gl_points_per_dim"))
      rc.quad.gl_points_per_dim = static_cast<int>(get_integer(qj, "quadrature", "gl_points_per_dim"));
    if (qj.contains("sobol_points"))
      rc.quad.sobol_points = static_cast<int>(get_integer(qj, "quadrature", "sobol_points"));
    if (qj.contains("semi_infinite_rule")) {
      const std::string r = qj.at("semi_infinite_rule").get<std::string>();
      if (r == "gauss_laguerre") rc.quad.semi_infinite_rule = SemiInfiniteRule::gauss_laguerre;
      else if (r == "adaptive_truncated") rc.quad.semi_infinite_rule = SemiInfiniteRule::adaptive_truncated;
      else throw ConfigError("quadrature.semi_infinite_rule: expected gauss_laguerre or adaptive_truncated");
    }
    if (qj.contains("laguerre_points"))
      rc.quad.laguerre_points = static_cast<int>(get_integer(qj, "quadrature", "laguerre_points"));
  }

  if (root.contains("simulation")) {
    const json& sj = root.at("simulation");
    if (sj.contains("window_side")) rc.sim.window_side = get_number(sj, "simulation", "window_side");
    if (sj.contains("realizations")) rc.sim.realizations = get_integer(sj, "simulation", "realizations");
    if (sj.contains("seed")) {
      const json& sv = sj.at("seed");
      if (!sv.is_number_unsigned() && !sv.is_number_integer())
        throw ConfigError("simulation.seed must be a non-negative integer");
      rc.sim.master_seed = sv.get<std::uint64_t>();
    }
    if (sj.contains("workers")) rc.sim.workers = static_cast<int>(get_integer(sj, "simulation", "workers"));
  }

  // fail fast with the library's own diagnostics
  rc.net.validate();
  rc.pop.validate();
  rc.quad.validate();
  rc.sim.validate();
  if (rc.coop_size < 1 || rc.coop_size > kMaxCoopSize)
    throw ConfigError("coop_size must be between 1 and " + std::to_string(kMaxCoopSize));
  if (rc.cache_size < 1 || rc.cache_size > rc.pop.files())
    throw ConfigError("cache.size must be between 1 and the number of files");
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from_json(read_json_file(path));
}

json resolved_json(const RunConfig& rc) {
  json j;
  j["sbs"] = {{"density_per_m2", rc.net.sbs.density},
              {"power_watts", rc.net.sbs.power},
              {"bandwidth_hz", rc.net.sbs.bandwidth},
              {"pathloss_exponent", rc.net.sbs.pathloss_exponent}};
  j["mbs"] = {{"density_per_m2", rc.net.mbs.density},
              {"power_watts", rc.net.mbs.power},
              {"bandwidth_hz", rc.net.mbs.bandwidth},
              {"pathloss_exponent", rc.net.mbs.pathloss_exponent}};
  j["target_rate_bps"] = rc.net.target_rate;
  j["coop_size"] = rc.coop_size;
  if (rc.pop_parametric)
    j["popularity"] = {{"files", rc.pop_files}, {"gamma", rc.pop_gamma}};
  else
    j["popularity"] = {{"probabilities", rc.pop.probabilities}};
  j["cache"]["size"] = rc.cache_size;
  if (rc.policy) j["cache"]["policy"] = policy_name(*rc.policy);
  if (!rc.fixed_probs.empty()) j["cache"]["probabilities"] = rc.fixed_probs;
  j["quadrature"] = {{"rel_tol", rc.quad.rel_tol},
                     {"abs_tol", rc.quad.abs_tol},
                     {"unit_cube_rule", cube_rule_name(rc.quad.unit_cube_rule)},
                     {"gl_points_per_dim", rc.quad.gl_points_per_dim},
                     {"sobol_points", rc.quad.sobol_points},
                     {"semi_infinite_rule",
                      rc.quad.semi_infinite_rule == SemiInfiniteRule::gauss_laguerre
                          ? "gauss_laguerre"
                          : "adaptive_truncated"},
                     {"laguerre_points", rc.quad.laguerre_points}};
  // workers is a scheduling knob, not part of the experiment: estimates are
  // identical for any worker count, and embedding it would break the
  // byte-reproducibility of otherwise equal runs
  j["simulation"] = {{"window_side", rc.sim.window_side},
                     {"realizations", rc.sim.realizations},
                     {"seed", rc.sim.master_seed}};
  return j;
}

SweepSpec load_sweep_spec(const std::string& path) {
  const json root = read_json_file(path);
  if (!root.is_object()) throw ConfigError("sweep spec root must be an object");
  SweepSpec s;

  const bool has_path = root.contains("config");
  const bool has_inline = root.contains("base");
  if (has_path == has_inline)
    throw ConfigError("sweep: give exactly one of config (path) / base (inline object)");
  if (has_path) {
    const std::filesystem::path base =
        std::filesystem::path(path).parent_path() / root.at("config").get<std::string>();
    s.base = load_run_config(base.string());
  } else {
    s.base = run_config_from_json(root.at("base"));
  }

  if (!root.contains("variable")) throw ConfigError("sweep: missing field (variable)");
  s.variable = root.at("variable").get<std::string>();
  if (s.variable != "tau" && s.variable != "K" && s.variable != "M" && s.variable != "gamma")
    throw ConfigError("sweep.variable must be one of tau, K, M, gamma");

  if (!root.contains("grid")) throw ConfigError("sweep: missing field (grid)");
  s.grid = parse_prob_array(root.at("grid"), "sweep.grid");
  for (size_t i = 0; i + 1 < s.grid.size(); ++i)
    if (!(s.grid[i] < s.grid[i + 1])) throw ConfigError("sweep.grid must be strictly ascending");
  if (s.variable == "K" || s.variable == "M")
    for (double v : s.grid)
      if (v != std::floor(v) || v < 1) throw ConfigError("sweep.grid for " + s.variable + " must be positive integers");
  if (s.variable == "gamma" && !s.base.pop_parametric)
    throw ConfigError("sweep over gamma needs popularity given as files + gamma");

  if (root.contains("schemes")) {
    for (const auto& e : root.at("schemes")) {
      const int v = e.get<int>();
      if (v != 1 && v != 2) throw ConfigError("sweep.schemes entries must be 1 or 2");
      s.schemes.push_back(v);
    }
  } else {
    s.schemes = {1, 2};
  }
  if (s.schemes.empty()) throw ConfigError("sweep.schemes must not be empty");

  if (root.contains("policies")) {
    for (const auto& e : root.at("policies")) s.policies.push_back(parse_policy(e.get<std::string>()));
  } else {
    s.policies = {CachePolicy::optimal, CachePolicy::most_popular, CachePolicy::uniform,
                  CachePolicy::iid_popular};
  }
  if (s.policies.empty()) throw ConfigError("sweep.policies must not be empty");
  for (CachePolicy p : s.policies) {
    if (p == CachePolicy::fixed && s.variable == "M")
      throw ConfigError("sweep over M cannot use the fixed policy (capacity changes)");
    if (p == CachePolicy::fixed && s.base.fixed_probs.empty())
      throw ConfigError("fixed policy in a sweep needs cache.probabilities in the base config");
  }

  if (root.contains("simulate")) s.simulate = root.at("simulate").get<bool>();
  if (root.contains("workers")) s.workers = static_cast<int>(get_integer(root, "sweep", "workers"));
  if (s.workers < 0 || s.workers > 64) throw ConfigError("sweep.workers must be in [0, 64]");

  json meta;
  meta["variable"] = s.variable;
  meta["grid"] = s.grid;
  meta["schemes"] = s.schemes;
  json pols = json::array();
  for (CachePolicy p : s.policies) pols.push_back(policy_name(p));
  meta["policies"] = pols;
  meta["simulate"] = s.simulate;
  s.resolved = meta;
  return s;
}

}  // namespace hetcoop::cli
