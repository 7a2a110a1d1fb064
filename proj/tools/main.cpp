#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "avgbound/averaged_flow.hpp"
#include "avgbound/config.hpp"
#include "avgbound/direct.hpp"
#include "avgbound/estimator.hpp"
#include "avgbound/io.hpp"
#include "avgbound/rigid_body.hpp"
#include "avgbound/seminorm.hpp"
#include "avgbound/system_model.hpp"

namespace {

using namespace avgbound;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;        // self-check or bound failure
constexpr int kExitHypothesis = 2;  // fixed-point hypothesis violation
constexpr int kExitDomain = 3;      // domain violation, partial output written
constexpr int kExitConfig = 4;

constexpr double kIdentityTol = 1e-6;

struct Instance {
  rigid_body::Params params;
  SystemModel sys;
  SeminormFamily fam;
  EstimatorBundle bundle;
  AveragedFlow flow;
};

/// Throws std::invalid_argument on inadmissible parameters and ConfigError
/// on an unregistered example id.
Instance build_instance(const RunConfig& cfg, const rigid_body::Params& p) {
  if (cfg.example_id != "rigid_body")
    throw ConfigError("unknown example id '" + cfg.example_id + "' (registered: rigid_body)");
  rigid_body::validate(p);

  Instance inst;
  inst.params = p;
  inst.sys = rigid_body::build_system(p);
  if (cfg.corrupt_s) {
    auto inner = inst.sys.s;
    inst.sys.s = [inner](const Vec& I, double th) {
      Vec val = inner(I, th);
      for (double& x : val) x *= 2.0;
      return val;
    };
  }

  inst.bundle = rigid_body::build_bundle(p);
  if (cfg.family_kind == SeminormFamily::Kind::partition) {
    inst.fam = partition_family(2, cfg.blocks);
    inst.bundle = project_bundle(inst.bundle, cfg.blocks);
  } else {
    inst.fam = component_family(2);
  }

  inst.flow = cfg.flow_source == AveragedFlow::Source::closed_form
                  ? rigid_body::closed_form_flow(p)
                  : solve_averaged(inst.sys, p.horizon, cfg.n_cfg);
  if (inst.flow.truncated)
    std::cerr << "note: averaged solution leaves the domain at tau = " << inst.flow.horizon
              << "; horizon truncated\n";
  if (inst.flow.near_singular)
    std::cerr << "note: fundamental matrix close to singular along the flow\n";
  return inst;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

std::string status_string(BoundResult::Status s) {
  return s == BoundResult::Status::full_horizon ? "full_horizon" : "domain_violation";
}

std::string status_string(DirectResult::Status s) {
  return s == DirectResult::Status::completed ? "completed" : "domain_violation";
}

void write_n_outputs(const RunConfig& cfg, const EstimatorBundle& bundle, const BoundResult& res,
                     const std::string& stall) {
  const std::size_t m = res.count;

  std::vector<std::string> header{"tau"};
  for (std::size_t mu = 0; mu < m; ++mu) header.push_back("n_" + std::to_string(mu + 1));
  for (std::size_t mu = 0; mu < m; ++mu) header.push_back("m_" + std::to_string(mu + 1));
  io::CsvWriter csv(out_path(cfg, "n_result.csv"), header);
  const std::size_t rows = cfg.output_rows;
  for (std::size_t k = 0; k < rows; ++k) {
    const double tau = res.U_eff * static_cast<double>(k) / static_cast<double>(rows - 1);
    std::vector<double> cells{tau};
    const Vec n = res.n_at(tau), mm = res.m_at(tau);
    cells.insert(cells.end(), n.begin(), n.end());
    cells.insert(cells.end(), mm.begin(), mm.end());
    csv.row(cells);
  }

  json j;
  j["labels"] = res.labels;
  j["ell0"] = res.ell0;
  j["iterations"] = res.iterations;
  j["eps_A"] = res.contraction_rate;
  j["residual"] = res.fixed_point_residual;
  j["iterate_error_bound"] = res.iterate_error_bound;
  j["degenerate_zero"] = res.degenerate_zero;
  j["epsilon"] = res.eps;
  j["requested_horizon"] = res.requested_horizon;
  j["U_eff"] = res.U_eff;
  j["status"] = stall.empty() ? status_string(res.status) : "integration_stall";
  if (!res.violated_condition.empty()) j["violated_condition"] = res.violated_condition;
  if (!stall.empty()) j["stall"] = stall;
  j["T_N_seconds"] = res.wall_time_seconds;
  io::write_text(out_path(cfg, "ell0.json"), j.dump(2));

  std::vector<std::string> aheader{"tau"};
  for (std::size_t mu = 0; mu < m; ++mu) aheader.push_back("margin_" + std::to_string(mu + 1));
  io::CsvWriter audit_csv(out_path(cfg, "audit.csv"), aheader);
  if (res.mn.node_count() >= 2 && res.U_eff > 0.0) {
    const AuditReport audit = audit_integral_inequality(bundle, res.eps, res, cfg.audit_nodes);
    for (std::size_t k = 0; k < audit.taus.size(); ++k) {
      std::vector<double> cells{audit.taus[k]};
      cells.insert(cells.end(), audit.margins[k].begin(), audit.margins[k].end());
      audit_csv.row(cells);
    }
    if (!audit.pass())
      std::cerr << "warning: integral-inequality audit flagged " << audit.flagged
                << " node(s), min margin " << audit.min_margin << "\n";
  }
}

int do_n_op(const RunConfig& cfg) {
  const Instance inst = build_instance(cfg, cfg.params);
  BoundResult res;
  std::string stall;
  try {
    res = run_n_operation(inst.bundle, cfg.params.epsilon, inst.flow, cfg.n_cfg);
  } catch (const IntegrationStall& e) {
    res = e.partial;
    stall = e.what();
  }
  write_n_outputs(cfg, inst.bundle, res, stall);
  std::cout << "T_N = " << io::fmt_time(res.wall_time_seconds) << " s\n";
  if (!stall.empty()) {
    std::cerr << "integration stalled: " << stall << "; partial results to U_eff = " << res.U_eff
              << "\n";
    return kExitDomain;
  }
  if (res.status == BoundResult::Status::domain_violation) {
    std::cerr << "domain violation (" << res.violated_condition
              << "); partial results to U_eff = " << res.U_eff << "\n";
    return kExitDomain;
  }
  return kExitOk;
}

void write_l_outputs(const RunConfig& cfg, const SeminormFamily& fam, const DirectResult& res) {
  std::vector<std::string> header{"t", "tau"};
  for (std::size_t i = 0; i < res.dim; ++i) header.push_back("L_" + std::to_string(i + 1));
  header.push_back("theta_mod_2pi");
  for (std::size_t mu = 0; mu < fam.count; ++mu)
    header.push_back("norm_" + std::to_string(mu + 1));
  io::CsvWriter csv(out_path(cfg, "l_result.csv"), header);
  const std::size_t rows = cfg.output_rows;
  for (std::size_t k = 0; k < rows; ++k) {
    const double t = res.horizon_t * static_cast<double>(k) / static_cast<double>(rows - 1);
    std::vector<double> cells{t, res.epsilon * t};
    const Vec L = res.L_at(t);
    cells.insert(cells.end(), L.begin(), L.end());
    cells.push_back(res.theta_at(t));
    const Vec norms = fam.all(L);
    cells.insert(cells.end(), norms.begin(), norms.end());
    csv.row(cells);
  }
}

int do_l_op(const RunConfig& cfg) {
  const Instance inst = build_instance(cfg, cfg.params);
  const DirectResult res = run_l_operation(inst.sys, inst.flow, cfg.l_cfg);
  if (res.omega_variation_warning)
    std::cerr << "note: |omega| varies by more than 10x along the averaged solution; "
                 "the fixed step resolves the slowest period\n";
  write_l_outputs(cfg, inst.fam, res);
  std::cout << "T_L = " << io::fmt_time(res.wall_time_seconds) << " s\n";
  if (res.status == DirectResult::Status::domain_violation) {
    std::cerr << "domain violation (" << res.violated_condition << ") at t = " << res.horizon_t
              << "; partial results written\n";
    return kExitDomain;
  }
  return kExitOk;
}

int do_compare(const RunConfig& cfg) {
  const Instance inst = build_instance(cfg, cfg.params);

  BoundResult n_res;
  std::string stall;
  try {
    n_res = run_n_operation(inst.bundle, cfg.params.epsilon, inst.flow, cfg.n_cfg);
  } catch (const IntegrationStall& e) {
    n_res = e.partial;
    stall = e.what();
  }
  const DirectResult l_res = run_l_operation(inst.sys, inst.flow, cfg.l_cfg);

  const VerificationReport rep =
      verify_bounds(l_res, n_res, inst.fam, cfg.sample_count, cfg.windows);

  json j;
  j["labels"] = rep.labels;
  j["bound_holds"] = std::vector<bool>(rep.bound_holds.begin(), rep.bound_holds.end());
  j["all_hold"] = rep.all_hold();
  j["worst_ratio"] = rep.worst_ratio;
  j["window_peak_ratio"] = rep.window_peak_ratio;
  j["n_samples"] = rep.n_samples;
  j["n_windows"] = rep.n_windows;
  j["t_common"] = rep.t_common;
  j["horizon_mismatch"] = rep.horizon_mismatch;
  j["T_N_seconds"] = rep.T_N;
  j["T_L_seconds"] = rep.T_L;
  j["speedup"] = rep.speedup;
  j["timing_note"] =
      "wall-clock seconds are machine and load dependent; compare only the ratio, loosely";
  j["n_status"] = stall.empty() ? status_string(n_res.status) : "integration_stall";
  j["l_status"] = status_string(l_res.status);
  io::write_text(out_path(cfg, "report.json"), j.dump(2));

  std::vector<std::string> header{"t", "tau"};
  for (std::size_t mu = 0; mu < inst.fam.count; ++mu)
    header.push_back("Lnorm_" + std::to_string(mu + 1));
  for (std::size_t mu = 0; mu < inst.fam.count; ++mu)
    header.push_back("n_" + std::to_string(mu + 1));
  io::CsvWriter csv(out_path(cfg, "compare.csv"), header);
  for (std::size_t k = 0; k < cfg.output_rows; ++k) {
    const double t =
        rep.t_common * static_cast<double>(k) / static_cast<double>(cfg.output_rows - 1);
    std::vector<double> cells{t, cfg.params.epsilon * t};
    const Vec norms = inst.fam.all(l_res.L_at(t));
    cells.insert(cells.end(), norms.begin(), norms.end());
    const Vec n = n_res.n_at(cfg.params.epsilon * t);
    cells.insert(cells.end(), n.begin(), n.end());
    csv.row(cells);
  }

  std::cout << "T_N = " << io::fmt_time(rep.T_N) << " s\n";
  std::cout << "T_L = " << io::fmt_time(rep.T_L) << " s\n";
  std::cout << "speedup T_L/T_N = " << io::fmt_time(rep.speedup) << "\n";
  for (std::size_t mu = 0; mu < rep.labels.size(); ++mu)
    std::cout << "|L|^" << rep.labels[mu] << ": worst ratio " << rep.worst_ratio[mu] << " -> "
              << (rep.bound_holds[mu] ? "bound holds" : "BOUND VIOLATED") << "\n";

  if (!stall.empty()) {
    std::cerr << "integration stalled: " << stall << "\n";
    return kExitDomain;
  }
  if (n_res.status == BoundResult::Status::domain_violation) {
    std::cerr << "domain violation in the bound integration (" << n_res.violated_condition
              << "); compared up to t = " << rep.t_common << "\n";
    return kExitDomain;
  }
  if (l_res.status == DirectResult::Status::domain_violation) {
    std::cerr << "domain violation in the direct integration (" << l_res.violated_condition
              << "); compared up to t = " << rep.t_common << "\n";
    return kExitDomain;
  }
  return rep.all_hold() ? kExitOk : kExitFail;
}

int do_check(const RunConfig& cfg) {
  const Instance inst = build_instance(cfg, cfg.params);

  const IdentityReport ids =
      check_identities(inst.sys, cfg.check_samples, cfg.seed, cfg.fd_step);
  const FamilyCheckReport fam_rep = check_family(inst.fam, cfg.family_trials, cfg.seed + 1);
  const BundleValidityReport validity = check_bundle_validity(
      inst.sys, inst.flow, inst.bundle, inst.fam, cfg.bundle_trials, cfg.seed + 2);
  const BundleContractReport contract =
      check_bundle_contract(inst.bundle, cfg.params.horizon, cfg.bundle_trials, cfg.seed + 3);

  bool ids_pass = true;
  json jids = json::array();
  for (const IdentityResidual& e : ids.entries) {
    const bool ok = e.max_rel_residual < kIdentityTol;
    ids_pass = ids_pass && ok;
    jids.push_back({{"key", e.key},
                    {"name", e.name},
                    {"residual", e.max_rel_residual},
                    {"worst_action", e.worst_action},
                    {"worst_angle", e.worst_angle},
                    {"pass", ok}});
    if (!ok)
      std::cout << "FAIL identity " << e.key << " (" << e.name
                << "): residual = " << e.max_rel_residual << "\n";
  }
  std::cout << "identities: worst residual " << ids.worst() << " (tol " << kIdentityTol << ") "
            << (ids_pass ? "PASS" : "FAIL") << "\n";

  json jfam;
  jfam["trials"] = fam_rep.trials;
  jfam["pass"] = fam_rep.pass();
  jfam["violations"] = json::array();
  for (const FamilyCheckViolation& v : fam_rep.violations) {
    jfam["violations"].push_back(
        {{"property", v.property}, {"detail", v.detail}, {"magnitude", v.magnitude}});
    std::cout << "FAIL seminorm axiom " << v.property << ": " << v.detail << "\n";
  }
  std::cout << "seminorm family: " << fam_rep.trials << " trials, " << fam_rep.violations.size()
            << " violations " << (fam_rep.pass() ? "PASS" : "FAIL") << "\n";

  json jval;
  jval["trials"] = validity.trials;
  jval["max_slack"] = validity.max_slack;
  jval["pass"] = validity.pass();
  jval["violations"] = json::array();
  for (const BundleValidityViolation& v : validity.violations) {
    jval["violations"].push_back(
        {{"which", v.which}, {"tau", v.tau}, {"lhs", v.lhs}, {"rhs", v.rhs}});
    std::cout << "FAIL bundle majorant " << v.which << " at tau = " << v.tau << ": " << v.lhs
              << " > " << v.rhs << "\n";
  }
  std::cout << "bundle validity: " << validity.trials << " trials, max slack "
            << validity.max_slack << " " << (validity.pass() ? "PASS" : "FAIL") << "\n";

  json jcon;
  jcon["trials"] = contract.trials;
  jcon["pass"] = contract.pass();
  jcon["violations"] = contract.violations;
  for (const std::string& v : contract.violations)
    std::cout << "FAIL bundle contract: " << v << "\n";
  std::cout << "bundle contract: " << contract.trials << " trials "
            << (contract.pass() ? "PASS" : "FAIL") << "\n";

  const bool pass = ids_pass && fam_rep.pass() && validity.pass() && contract.pass();

  json j;
  j["identities"] = {{"entries", jids},
                     {"worst", ids.worst()},
                     {"tolerance", kIdentityTol},
                     {"pass", ids_pass}};
  j["family"] = jfam;
  j["bundle_validity"] = jval;
  j["bundle_contract"] = jcon;
  j["pass"] = pass;
  io::write_text(out_path(cfg, "check.json"), j.dump(2));

  std::cout << "check: " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitFail;
}

struct SweepRow {
  double epsilon = 0.0, mu = 0.0, lambda1 = 0.0, lambda2 = 0.0, U = 0.0;
  std::string status;  // ok | param_error | hypothesis_violation | domain_violation | error
  bool have_metrics = false;
  bool bound_holds = false;
  double worst_ratio = 0.0, speedup = 0.0, U_eff = 0.0;
  std::string detail;
};

void run_sweep_point(const RunConfig& cfg, SweepRow& row) {
  rigid_body::Params p = cfg.params;
  p.epsilon = row.epsilon;
  p.mu = row.mu;
  p.lambda1 = row.lambda1;
  p.lambda2 = row.lambda2;
  p.horizon = row.U;
  try {
    const Instance inst = build_instance(cfg, p);
    BoundResult n_res;
    try {
      n_res = run_n_operation(inst.bundle, p.epsilon, inst.flow, cfg.n_cfg);
    } catch (const IntegrationStall& e) {
      n_res = e.partial;
      row.status = "domain_violation";
      row.detail = e.what();
    }
    const DirectResult l_res = run_l_operation(inst.sys, inst.flow, cfg.l_cfg);
    const VerificationReport rep =
        verify_bounds(l_res, n_res, inst.fam, cfg.sample_count, cfg.windows);
    row.have_metrics = true;
    row.bound_holds = rep.all_hold();
    row.worst_ratio = 0.0;
    for (double r : rep.worst_ratio) row.worst_ratio = std::max(row.worst_ratio, r);
    row.speedup = rep.speedup;
    row.U_eff = std::min(n_res.U_eff, l_res.U_eff);
    if (row.status.empty()) {
      if (n_res.status == BoundResult::Status::domain_violation ||
          l_res.status == DirectResult::Status::domain_violation) {
        row.status = "domain_violation";
        row.detail = n_res.status == BoundResult::Status::domain_violation
                         ? n_res.violated_condition
                         : l_res.violated_condition;
      } else {
        row.status = "ok";
      }
    }
  } catch (const std::invalid_argument& e) {
    row.status = "param_error";
    row.detail = e.what();
  } catch (const HypothesisViolation& e) {
    row.status = "hypothesis_violation";
    row.detail = e.what();
  } catch (const std::exception& e) {
    row.status = "error";
    row.detail = e.what();
  }
}

int do_sweep(const RunConfig& cfg) {
  const auto axis = [](const std::optional<std::vector<double>>& o, double base) {
    return o ? *o : std::vector<double>{base};
  };

  std::vector<SweepRow> rows;
  if (cfg.has_sweep_keys) {
    const std::vector<double> eps_list = axis(cfg.sweep_epsilon, cfg.params.epsilon);
    const std::vector<double> mu_list = axis(cfg.sweep_mu, cfg.params.mu);
    const std::vector<double> l1_list = axis(cfg.sweep_lambda1, cfg.params.lambda1);
    const std::vector<double> l2_list = axis(cfg.sweep_lambda2, cfg.params.lambda2);
    const std::vector<double> U_list = axis(cfg.sweep_U, cfg.params.horizon);
    for (double eps : eps_list)
      for (double mu : mu_list)
        for (double l1 : l1_list)
          for (double l2 : l2_list)
            for (double U : U_list) {
              SweepRow row;
              row.epsilon = eps;
              row.mu = mu;
              row.lambda1 = l1;
              row.lambda2 = l2;
              row.U = U;
              rows.push_back(row);
            }
  }

  if (!rows.empty()) {
    std::size_t workers = cfg.sweep_threads
                              ? cfg.sweep_threads
                              : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    workers = std::min(workers, rows.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= rows.size()) return;
        run_sweep_point(cfg, rows[k]);
      }
    };
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (std::thread& th : pool) th.join();
    }
  }

  io::CsvWriter csv(out_path(cfg, "sweep.csv"),
                    {"epsilon", "mu", "lambda1", "lambda2", "U", "status", "bound_holds",
                     "worst_ratio", "speedup", "U_eff", "detail"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t ok = 0;
  for (const SweepRow& row : rows) {
    std::string detail = row.detail;
    for (char& c : detail)
      if (c == ',' || c == '\n') c = ';';
    csv.row(std::vector<std::string>{
        io::fmt(row.epsilon), io::fmt(row.mu), io::fmt(row.lambda1), io::fmt(row.lambda2),
        io::fmt(row.U), row.status,
        row.have_metrics ? (row.bound_holds ? "true" : "false") : "na",
        io::fmt(row.have_metrics ? row.worst_ratio : nan),
        io::fmt(row.have_metrics ? row.speedup : nan),
        io::fmt(row.have_metrics ? row.U_eff : nan), detail});
    if (row.status == "ok") ++ok;
  }
  std::cout << "sweep: " << rows.size() << " point(s), " << ok << " ok\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"A-priori error bounds for one-frequency averaging"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool out_set = false, seed_set = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)")
        ->each([&](const std::string&) { out_set = true; });
    sub->add_option("--seed", seed, "rng seed (overrides rng.seed)")
        ->each([&](const std::string&) { seed_set = true; });
  };

  CLI::App* n_op = app.add_subcommand("n-op", "fixed point + bound curves (m, n)");
  CLI::App* l_op = app.add_subcommand("l-op", "direct integration of the error L");
  CLI::App* compare = app.add_subcommand("compare", "run both and test |L|^mu <= n^mu");
  CLI::App* check = app.add_subcommand("check", "identity, seminorm and bundle self-checks");
  CLI::App* sweep = app.add_subcommand("sweep", "compare over a parameter grid");
  for (CLI::App* sub : {n_op, l_op, compare, check, sweep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (out_set) cfg.output_dir = out_dir;
    if (seed_set) cfg.seed = seed;
    std::filesystem::create_directories(cfg.output_dir);

    if (n_op->parsed()) return do_n_op(cfg);
    if (l_op->parsed()) return do_l_op(cfg);
    if (compare->parsed()) return do_compare(cfg);
    if (check->parsed()) return do_check(cfg);
    if (sweep->parsed()) return do_sweep(cfg);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const HypothesisViolation& e) {
    std::cerr << "hypothesis violation: " << e.what() << "\n";
    return kExitHypothesis;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}
