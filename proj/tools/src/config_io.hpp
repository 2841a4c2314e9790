#pragma once

#include <hetcoop/mcsim.hpp>
#include <hetcoop/quadrature.hpp>
#include <hetcoop/types.hpp>

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hetcoop::cli {

// Bad or missing configuration input; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CachePolicy { most_popular, uniform, iid_popular, optimal, fixed };

// Canonical short names used in CSV output: mpc, uc, iidc, optimal, fixed.
std::string policy_name(CachePolicy p);
CachePolicy parse_policy(const std::string& name);

// One experiment description: tiers and rate, cooperation size, popularity
// law, cache capacity with an optional placement policy, plus quadrature and
// simulation knobs. Tier fields accept either raw SI values or the sugar
// forms (one_over_pi_r_squared, power_dbm, bandwidth_mhz, target_rate_mbps);
// giving both forms of one field is an error.
struct RunConfig {
  NetworkConfig net;
  int coop_size = 1;
  Popularity pop;
  bool pop_parametric = false;  // popularity given as files + gamma
  int pop_files = 0;
  double pop_gamma = 0.0;
  int cache_size = 1;
  std::optional<CachePolicy> policy;
  std::vector<double> fixed_probs;  // present when policy == fixed
  QuadratureSpec quad;
  SimParams sim;
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& root);

// The fully resolved configuration (raw SI units, defaults filled in) for
// embedding into CSV provenance comments.
nlohmann::json resolved_json(const RunConfig& rc);

// Grid experiment over one variable. `tau` values are in Mbps; `K` and `M`
// must be integral; `gamma` re-derives a Zipf popularity, so the base config
// must give popularity as files + gamma.
struct SweepSpec {
  RunConfig base;
  std::string variable;  // tau | K | M | gamma
  std::vector<double> grid;
  std::vector<int> schemes;            // subset of {1, 2}
  std::vector<CachePolicy> policies;   // no `fixed` when variable == M
  bool simulate = false;
  int workers = 0;  // grid-point parallelism; 0 = one thread per grid point
  nlohmann::json resolved;
};

SweepSpec load_sweep_spec(const std::string& path);

}  // namespace hetcoop::cli
