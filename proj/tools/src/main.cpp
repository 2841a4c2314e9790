#include <CLI11.hpp>

#include <hetcoop/analytic.hpp>
#include <hetcoop/mcsim.hpp>
#include <hetcoop/optimizer.hpp>
#include <hetcoop/policies.hpp>

#include "config_io.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace hetcoop;
using namespace hetcoop::cli;
using nlohmann::json;

namespace {

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string join_row(const std::vector<std::string>& cells) {
  std::string line;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  return line;
}

// `#`-prefixed provenance block: command name plus the resolved config.
std::string comment_block(const std::string& command, const json& cfg, const json* extra) {
  std::string out = "# hetcoop " + command + "\n# config:\n";
  std::istringstream cfg_lines(cfg.dump(2));
  for (std::string line; std::getline(cfg_lines, line);) out += "#   " + line + "\n";
  if (extra) {
    out += "# sweep:\n";
    std::istringstream extra_lines(extra->dump(2));
    for (std::string line; std::getline(extra_lines, line);) out += "#   " + line + "\n";
  }
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file: " + out_path);
  f << text;
}

const char* path_name(Scheme1Path p) {
  switch (p) {
    case Scheme1Path::closed_form: return "closed_form";
    case Scheme1Path::gradient_projection: return "gradient_projection";
    case Scheme1Path::automatic: return "automatic";
  }
  return "?";
}

const char* path_name(Scheme2Path p) {
  switch (p) {
    case Scheme2Path::linear_greedy: return "linear_greedy";
    case Scheme2Path::kkt_bisection: return "kkt_bisection";
    case Scheme2Path::gradient_projection: return "gradient_projection";
  }
  return "?";
}

std::vector<int> parse_schemes(const std::string& s) {
  if (s == "1") return {1};
  if (s == "2") return {2};
  if (s == "both") return {1, 2};
  throw ConfigError("--scheme must be 1, 2, or both");
}

// Solver diagnostics captured when the optimal policy runs.
struct SolveInfo {
  std::string path;
  std::optional<int> support;
  std::optional<double> nu;
  std::optional<double> t_th;
  std::optional<double> kkt;
  bool degenerate = false;
};

CachingDistribution dist_for(const RunConfig& rc, CachePolicy p, int scheme, SolveInfo* info) {
  switch (p) {
    case CachePolicy::most_popular:
      return baseline_distribution(BaselineKind::most_popular, rc.pop, rc.cache_size);
    case CachePolicy::uniform:
      return baseline_distribution(BaselineKind::uniform, rc.pop, rc.cache_size);
    case CachePolicy::iid_popular:
      return baseline_distribution(BaselineKind::iid_popular, rc.pop, rc.cache_size);
    case CachePolicy::fixed: {
      CachingDistribution d;
      d.probs = rc.fixed_probs;
      d.cache_size = rc.cache_size;
      d.validate();
      return d;
    }
    case CachePolicy::optimal: {
      CachingDistribution d;
      d.cache_size = rc.cache_size;
      if (scheme == 1) {
        const Scheme1Solution sol =
            optimize_scheme1(rc.net, rc.pop, rc.cache_size, rc.coop_size, Scheme1Path::automatic, rc.quad);
        d.probs = sol.probs;
        if (info) {
          info->path = sol.degenerate ? "degenerate_most_popular" : path_name(sol.path);
          info->support = sol.support;
          info->t_th = sol.degenerate ? std::optional<double>{} : std::optional<double>{sol.t_th};
          info->degenerate = sol.degenerate;
        }
      } else {
        const Scheme2Solution sol =
            optimize_scheme2(rc.net, rc.pop, rc.cache_size, rc.coop_size, rc.quad);
        d.probs = sol.probs;
        if (info) {
          info->path = path_name(sol.path);
          info->nu = sol.nu;
          info->kkt = sol.kkt_residual;
        }
      }
      return d;
    }
  }
  throw ConfigError("unknown cache policy");
}

double analytic_stp(const RunConfig& rc, const CachingDistribution& dist, int scheme) {
  return scheme == 1 ? stp_scheme1(rc.net, rc.pop, dist, rc.coop_size, rc.quad)
                     : stp_scheme2(rc.net, rc.pop, dist, rc.coop_size, rc.quad);
}

std::vector<CachePolicy> resolve_policies(const RunConfig& rc, const std::vector<std::string>& flags) {
  std::vector<CachePolicy> out;
  for (const std::string& f : flags) out.push_back(parse_policy(f));
  if (out.empty()) {
    if (!rc.policy) throw ConfigError("cache.policy (or --policy) required");
    out.push_back(*rc.policy);
  }
  return out;
}

int cmd_analyze(const RunConfig& rc, const std::vector<int>& schemes,
                const std::vector<CachePolicy>& policies, const std::string& out_path) {
  std::string text = comment_block("analyze", resolved_json(rc), nullptr);
  text += "scheme,policy,coop_size,psi\n";
  for (int scheme : schemes)
    for (CachePolicy p : policies) {
      const CachingDistribution dist = dist_for(rc, p, scheme, nullptr);
      text += join_row({std::to_string(scheme), policy_name(p), std::to_string(rc.coop_size),
                        fmt9(analytic_stp(rc, dist, scheme))});
    }
  emit(text, out_path);
  return 0;
}

int cmd_baselines(const RunConfig& rc, const std::vector<int>& schemes, const std::string& out_path) {
  const std::vector<CachePolicy> base{CachePolicy::most_popular, CachePolicy::uniform,
                                      CachePolicy::iid_popular};
  return cmd_analyze(rc, schemes, base, out_path);
}

int cmd_simulate(const RunConfig& rc, const std::vector<int>& schemes, CachePolicy policy,
                 bool validate, const std::string& out_path) {
  std::string text = comment_block("simulate", resolved_json(rc), nullptr);
  text += "scheme,policy,coop_size,seed,realizations,estimate,std_error,underpopulated";
  if (validate) text += ",analytic,abs_diff,tolerance,status";
  text += "\n";
  bool all_pass = true;
  for (int scheme : schemes) {
    const CachingDistribution dist = dist_for(rc, policy, scheme, nullptr);
    const StpEstimate est =
        estimate_stp(rc.net, rc.pop, dist, rc.coop_size,
                     scheme == 1 ? Scheme::scheme1 : Scheme::scheme2, rc.sim);
    std::vector<std::string> cells{std::to_string(scheme),
                                   policy_name(policy),
                                   std::to_string(rc.coop_size),
                                   std::to_string(rc.sim.master_seed),
                                   std::to_string(rc.sim.realizations),
                                   fmt9(est.estimate),
                                   fmt9(est.std_error),
                                   std::to_string(est.underpopulated)};
    if (validate) {
      const double psi = analytic_stp(rc, dist, scheme);
      const double diff = std::abs(psi - est.estimate);
      const double tol = std::max(0.01, 3.0 * est.std_error);
      const bool pass = diff <= tol;
      all_pass = all_pass && pass;
      cells.push_back(fmt9(psi));
      cells.push_back(fmt9(diff));
      cells.push_back(fmt9(tol));
      cells.push_back(pass ? "pass" : "fail");
    }
    text += join_row(cells);
  }
  emit(text, out_path);
  return all_pass ? 0 : 1;
}

int cmd_optimize(const RunConfig& rc, int scheme, const std::string& out_path) {
  std::string text = comment_block("optimize", resolved_json(rc), nullptr);
  std::vector<double> probs;
  std::string summary;
  std::vector<std::string> head(7);
  if (scheme == 1) {
    const Scheme1Solution sol =
        optimize_scheme1(rc.net, rc.pop, rc.cache_size, rc.coop_size, Scheme1Path::automatic, rc.quad);
    if (sol.degenerate) {
      double coop1 = std::numeric_limits<double>::quiet_NaN();
      double fallback = std::numeric_limits<double>::quiet_NaN();
      try {
        coop1 = psi_s1(rc.net, rc.coop_size, 1.0, rc.quad);
        fallback = psi_m(rc.net, rc.quad);
      } catch (const std::exception&) {
      }
      std::cerr << "operating region violation: the fallback tier dominates cooperative "
                   "service for this configuration\n  psi_s1(T=1) = "
                << fmt9(coop1) << " vs psi_m = " << fmt9(fallback) << "\n";
      return 3;
    }
    probs = sol.probs;
    bool sorted = true, in_range = true;
    double sum = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
      if (i + 1 < probs.size() && probs[i] < probs[i + 1] - 1e-12) sorted = false;
      if (probs[i] != 0.0 && !(probs[i] > sol.t_th && probs[i] <= 1.0)) in_range = false;
      sum += probs[i];
    }
    summary = "# structure: sorted=" + std::string(sorted ? "yes" : "no") +
              " entries_in_range=" + (in_range ? "yes" : "no") + " sum=" + fmt9(sum) +
              " support=" + std::to_string(sol.support) + "\n";
    head = {std::to_string(scheme), path_name(sol.path), fmt9(sol.objective),
            std::to_string(sol.support), "", fmt9(sol.t_th), ""};
  } else {
    const StpTables tables = build_stp_tables(rc.net, rc.coop_size, rc.quad);
    if (tables.psi_s2[rc.coop_size] <= tables.psi_mbs) {
      std::cerr << "operating region violation: the fallback tier dominates cooperative "
                   "service for this configuration\n  psi_s2(all holders) = "
                << fmt9(tables.psi_s2[rc.coop_size]) << ", psi_s2(one holder) = "
                << fmt9(tables.psi_s2[1]) << " vs psi_m = " << fmt9(tables.psi_mbs) << "\n";
      return 3;
    }
    const Scheme2Solution sol = optimize_scheme2(rc.net, rc.pop, rc.cache_size, rc.coop_size, rc.quad);
    probs = sol.probs;
    bool sorted = true;
    double sum = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
      if (i + 1 < probs.size() && probs[i] < probs[i + 1] - 1e-12) sorted = false;
      sum += probs[i];
    }
    summary = "# structure: sorted=" + std::string(sorted ? "yes" : "no") + " sum=" + fmt9(sum) +
              " kkt_residual=" + fmt9(sol.kkt_residual) + "\n";
    head = {std::to_string(scheme), path_name(sol.path), fmt9(sol.objective), "",
            sol.nu ? fmt9(*sol.nu) : "", "", fmt9(sol.kkt_residual)};
  }
  text += summary;
  text += "scheme,solver_path,objective,support,nu,t_th,kkt_residual,file,probability\n";
  for (size_t i = 0; i < probs.size(); ++i) {
    std::vector<std::string> cells = head;
    cells.push_back(std::to_string(i + 1));
    cells.push_back(fmt9(probs[i]));
    text += join_row(cells);
  }
  emit(text, out_path);
  return 0;
}

RunConfig config_at(const SweepSpec& s, double v) {
  RunConfig rc = s.base;
  if (s.variable == "tau") {
    rc.net.target_rate = v * 1e6;
  } else if (s.variable == "K") {
    if (v > kMaxCoopSize) throw ConfigError("sweep K value exceeds the cooperation limit");
    rc.coop_size = static_cast<int>(v);
  } else if (s.variable == "M") {
    if (v > rc.pop.files()) throw ConfigError("sweep M value exceeds the number of files");
    rc.cache_size = static_cast<int>(v);
  } else {
    rc.pop_gamma = v;
    rc.pop = zipf(rc.pop_files, v);
  }
  return rc;
}

int cmd_sweep(const SweepSpec& spec, const std::string& out_dir) {
  struct Row {
    double value;
    int scheme;
    CachePolicy policy;
    int coop;
    double psi;
    std::optional<double> mc, mc_se;
    SolveInfo info;
    bool optimal;
  };
  std::vector<std::vector<Row>> results(spec.grid.size());

  // grid points run in parallel; rows are written in grid order below
  const auto eval_point = [&](size_t gi) {
    const RunConfig rc = config_at(spec, spec.grid[gi]);
    std::vector<Row> rows;
    for (int scheme : spec.schemes)
      for (CachePolicy p : spec.policies) {
        Row r{spec.grid[gi], scheme, p, rc.coop_size, 0.0, {}, {}, {}, p == CachePolicy::optimal};
        const CachingDistribution dist = dist_for(rc, p, scheme, &r.info);
        r.psi = analytic_stp(rc, dist, scheme);
        if (spec.simulate) {
          const StpEstimate est =
              estimate_stp(rc.net, rc.pop, dist, rc.coop_size,
                           scheme == 1 ? Scheme::scheme1 : Scheme::scheme2, rc.sim);
          r.mc = est.estimate;
          r.mc_se = est.std_error;
        }
        rows.push_back(std::move(r));
      }
    results[gi] = std::move(rows);
  };

  const size_t pool = spec.workers > 0
                          ? std::min<size_t>(spec.workers, spec.grid.size())
                          : spec.grid.size();
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> threads;
  for (size_t t = 0; t < pool; ++t)
    threads.emplace_back([&] {
      for (size_t gi = next.fetch_add(1); gi < spec.grid.size(); gi = next.fetch_add(1)) {
        try {
          eval_point(gi);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);

  std::string text = comment_block("sweep", resolved_json(spec.base), &spec.resolved);
  text += "variable,value,scheme,policy,coop_size,psi,mc_estimate,mc_std_error,"
          "solver_path,support,nu,kkt_residual\n";
  for (const auto& rows : results)
    for (const Row& r : rows)
      text += join_row({spec.variable, fmt9(r.value), std::to_string(r.scheme),
                        policy_name(r.policy), std::to_string(r.coop),
                        fmt9(r.psi), r.mc ? fmt9(*r.mc) : "", r.mc_se ? fmt9(*r.mc_se) : "",
                        r.optimal ? r.info.path : "",
                        r.info.support ? std::to_string(*r.info.support) : "",
                        r.info.nu ? fmt9(*r.info.nu) : "", r.info.kkt ? fmt9(*r.info.kkt) : ""});

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out =
      std::filesystem::path(out_dir) / ("sweep_" + spec.variable + ".csv");
  emit(text, out.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cache-aware small-cell cooperation: success probability closed forms, "
               "point-process simulation, and cache placement optimization"};
  app.require_subcommand(1);

  std::string config_path, out_path, scheme_arg = "both";
  std::vector<std::string> policy_flags;
  int coop_override = 0;
  unsigned long long seed_override = 0;
  bool seed_set = false;
  long realizations_override = 0;
  int workers_override = -1;
  bool validate = false;
  int opt_scheme = 0;

  CLI::App* analyze = app.add_subcommand("analyze", "closed-form STP per scheme and policy");
  analyze->add_option("config", config_path, "experiment config (JSON)")->required();
  analyze->add_option("--scheme", scheme_arg, "1, 2, or both (default both)");
  analyze->add_option("--policy", policy_flags, "mpc|uc|iidc|optimal|fixed (repeatable)");
  analyze->add_option("--coop,-K", coop_override, "cooperation size override");
  analyze->add_option("--out", out_path, "write CSV here instead of stdout");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo STP estimate");
  simulate->add_option("config", config_path, "experiment config (JSON)")->required();
  simulate->add_option("--scheme", scheme_arg, "1, 2, or both (default both)");
  simulate->add_option("--policy", policy_flags, "placement policy override");
  simulate->add_option("--coop,-K", coop_override, "cooperation size override");
  simulate->add_option("--seed", seed_override, "master seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  simulate->add_option("--realizations", realizations_override, "number of network draws");
  simulate->add_option("--workers", workers_override, "simulation worker threads (0 = auto)");
  simulate->add_flag("--validate", validate,
                     "also compute the closed form; exit 1 unless |diff| <= max(0.01, 3*stderr)");
  simulate->add_option("--out", out_path, "write CSV here instead of stdout");

  CLI::App* optimize = app.add_subcommand("optimize", "optimal caching distribution");
  optimize->add_option("config", config_path, "experiment config (JSON)")->required();
  optimize->add_option("--scheme", opt_scheme, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
  optimize->add_option("--coop,-K", coop_override, "cooperation size override");
  optimize->add_option("--out", out_path, "write CSV here instead of stdout");

  CLI::App* baselines = app.add_subcommand("baselines", "STP of the mpc/uc/iidc placements");
  baselines->add_option("config", config_path, "experiment config (JSON)")->required();
  baselines->add_option("--scheme", scheme_arg, "1, 2, or both (default both)");
  baselines->add_option("--coop,-K", coop_override, "cooperation size override");
  baselines->add_option("--out", out_path, "write CSV here instead of stdout");

  CLI::App* sweep = app.add_subcommand("sweep", "grid experiment over tau, K, M, or gamma");
  sweep->add_option("spec", config_path, "sweep spec (JSON)")->required();
  std::string sweep_out = ".";
  sweep->add_option("--out", sweep_out, "output directory (default .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(sweep)) return cmd_sweep(load_sweep_spec(config_path), sweep_out);

    RunConfig rc = load_run_config(config_path);
    if (coop_override > 0) rc.coop_size = coop_override;
    if (rc.coop_size < 1 || rc.coop_size > kMaxCoopSize)
      throw ConfigError("coop_size must be between 1 and " + std::to_string(kMaxCoopSize));
    if (seed_set) rc.sim.master_seed = seed_override;
    if (realizations_override > 0) rc.sim.realizations = realizations_override;
    if (workers_override >= 0) rc.sim.workers = workers_override;
    rc.sim.validate();

    if (app.got_subcommand(analyze))
      return cmd_analyze(rc, parse_schemes(scheme_arg), resolve_policies(rc, policy_flags), out_path);
    if (app.got_subcommand(baselines)) return cmd_baselines(rc, parse_schemes(scheme_arg), out_path);
    if (app.got_subcommand(simulate)) {
      const std::vector<CachePolicy> pols = resolve_policies(rc, policy_flags);
      if (pols.size() != 1) throw ConfigError("simulate takes exactly one policy");
      return cmd_simulate(rc, parse_schemes(scheme_arg), pols.front(), validate, out_path);
    }
    if (app.got_subcommand(optimize)) return cmd_optimize(rc, opt_scheme, out_path);
    throw ConfigError("no subcommand");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const RegionError& e) {
    std::cerr << "operating region violation: " << e.what() << "\n  psi_coop = "
              << fmt9(e.psi_coop) << " vs psi_mbs = " << fmt9(e.psi_mbs) << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
