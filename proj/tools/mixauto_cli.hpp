#pragma once

// Command-line front end.  `run` is kept separate from main so the tests can
// drive every subcommand in-process.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mixauto/mixauto.hpp"

namespace mixauto::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalidInput = 1,
  kSolverFailure = 2,
  kViolation = 3,
};

struct Check {
  std::string name;
  double value;
  double tol;
  bool pass;
};

struct VerifyResult {
  std::vector<Check> checks;
  std::vector<std::string> notes;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void add(std::string name, double value, double tol) {
    checks.push_back({std::move(name), value, tol, std::isfinite(value) && value <= tol});
  }
  void flag(std::string name, bool pass) {
    checks.push_back({std::move(name), pass ? 0.0 : 1.0, 0.0, pass});
  }
};

inline constexpr double kVerifyKktTol = 1e-7;
inline constexpr double kVerifyIdentityTol = 1e-8;

/// Recomputes every certificate available for a report without trusting any
/// derived field stored in it.
inline VerifyResult verify_report(const EquilibriumReport& rep,
                                  const DemandPattern& pattern) {
  VerifyResult out;
  const MarketParams& params = rep.params;
  const FleetState& st = rep.state;
  const double eps = mass_threshold(pattern);

  out.flag("status optimal", rep.solve.status == SolveStatus::optimal);

  const QuadraticProgram qp = build_program(rep.kind, pattern, params);
  const KktResiduals kkt = kkt_residuals(qp, rep.solve);
  out.add("kkt stationarity", kkt.stationarity, kVerifyKktTol);
  out.add("kkt primal feasibility", kkt.primal_feasibility, kVerifyKktTol);
  out.add("kkt dual feasibility", kkt.dual_feasibility, kVerifyKktTol);
  out.add("kkt complementarity", kkt.complementarity, kVerifyKktTol);

  const VectorXd demand =
      effective_demand(st.p, pattern, WtpDistribution::make_uniform(params.pbar));
  out.add("effective demand", (demand - st.d).lpNorm<Eigen::Infinity>(), 1e-9);
  out.add("profit recomputation", std::abs(profit(st, params) - rep.profit),
          kVerifyIdentityTol);
  out.add("entry/exit balance",
          std::abs(st.delta.sum() - (1.0 - params.beta) * st.x.sum()),
          kVerifyIdentityTol);
  out.add("demand capacity",
          std::max(0.0, (st.d - st.x - st.z).maxCoeff()), kVerifyKktTol);

  std::optional<FleetState> original;
  try {
    original = recover_original(rep, pattern);
  } catch (const RecoveryError& e) {
    out.notes.push_back(e.what());
  }
  if (original) {
    const auto res = equilibrium_residuals(*original, pattern, params);
    out.add("driver relocation", res.max_driver_relocation(), kEquilibriumTol);
    out.add("driver flow", res.max_driver_flow(), kEquilibriumTol);
    out.add("av flow", res.max_av_flow(), kEquilibriumTol);
    out.add("av relocation", res.max_av_relocation(), kEquilibriumTol);
    out.add("recovered profit", std::abs(profit(*original, params) - rep.profit),
            kVerifyIdentityTol);
  } else {
    out.flag("original-form recovery", false);
  }

  if (rep.compensations) {
    const FleetState& base = original ? *original : st;
    const VectorXd V = driver_value(base, pattern, params, *rep.compensations);
    out.add("driver value = omega",
            (V.array() - params.omega).abs().maxCoeff(), kVerifyIdentityTol);
    const PlatformCost cost = platform_cost_identity(base, *rep.compensations, params);
    out.add("platform cost identity", std::abs(cost.driver_payout - cost.entry_cost),
            kVerifyIdentityTol);
  } else {
    out.notes.push_back("no compensations: some location serves no riders");
  }

  const bool unit_theta = (pattern.theta.array() == 1.0).all();
  if (rep.kind == ProgramKind::mixed_alternative && unit_theta &&
      params.pbar == 1.0 && rep.solve.status == SolveStatus::optimal) {
    const auto fam =
        stationarity_residuals(extract_duals(rep), rep, pattern, params);
    out.add("family entry", fam.entry.max(), kVerifyKktTol);
    out.add("family drivers", fam.drivers.max(), kVerifyKktTol);
    out.add("family avs", fam.avs.max(), kVerifyKktTol);
    out.add("family relocation", fam.relocation.max(), kVerifyKktTol);
    out.add("family price", fam.price.max(), kVerifyKktTol);
  }

  if (rep.kind == ProgramKind::mixed_alternative &&
      rep.solve.status == SolveStatus::optimal &&
      star_to_complete_parameter(pattern)) {
    const auto human = solve_program(ProgramKind::human_only, pattern, params);
    const Prop1Result p1 = prop1_check(pattern, params, rep, human);
    out.flag("cost bound k <= 1 - beta", p1.verdict == Prop1Verdict::consistent);
    out.add("dominance over human-only",
            std::max(0.0, human.profit - rep.profit), kVerifyIdentityTol);
    if (p1.strict_gap) out.flag("avs at every location", p1.all_locations_use_avs);
  }
  return out;
}

inline void print_verify(std::ostream& os, const VerifyResult& res) {
  char buf[160];
  for (const auto& c : res.checks) {
    std::snprintf(buf, sizeof buf, "%-28s %12.3e  tol %-8.1e %s\n", c.name.c_str(),
                  c.value, c.tol, c.pass ? "PASS" : "FAIL");
    os << buf;
  }
  for (const auto& n : res.notes) os << "note: " << n << '\n';
  os << "verdict: " << (res.ok() ? "ok" : "violation") << '\n';
}

inline DemandPattern load_network(const std::string& path) {
  DemandPattern pattern = io::pattern_from_json(io::read_json_file(path));
  const auto check = validate(pattern);
  if (!check.ok()) {
    std::string msg = "invalid network '" + path + "':";
    for (const auto& v : check.violations) msg += "\n  " + v.message;
    throw std::invalid_argument(msg);
  }
  return pattern;
}

/// Writes to `path`, or to `fallback` when the path is empty.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw std::invalid_argument("cannot write '" + path + "'");
  write(file);
}

inline int run(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Profit-maximizing equilibria of mixed-autonomy ride-sharing networks",
               "mixauto"};
  app.require_subcommand(1);

  // gen-network
  std::string family = "star-to-complete";
  long gen_n = 3;
  double gen_xi = 0.0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-network", "Write a demand-pattern JSON file");
  gen->add_option("--family", family, "Network family")
      ->check(CLI::IsMember({"star-to-complete"}))
      ->capture_default_str();
  gen->add_option("--n", gen_n, "Number of locations (>= 3)")->capture_default_str();
  gen->add_option("--xi", gen_xi, "Interpolation from star (0) to complete (1)")
      ->capture_default_str();
  gen->add_option("--out", gen_out, "Output JSON path (standard output if omitted)");

  // solve
  std::string network;
  double beta = 0.0;
  double omega = 1.0;
  double s = 0.0;
  double k = 0.0;
  bool human_only = false;
  std::string solve_out;
  auto* sol = app.add_subcommand("solve", "Solve one market and write its report");
  sol->add_option("--network", network, "Demand-pattern JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  sol->add_option("--beta", beta, "Per-ride driver survival probability in (0,1)")
      ->required();
  sol->add_option("--omega", omega, "Driver outside option")->capture_default_str();
  auto* opt_s = sol->add_option("--s", s, "AV cost per expected driver lifetime");
  auto* opt_k = sol->add_option("--k", k, "AV cost ratio; sets s = k * omega");
  opt_s->excludes(opt_k);
  opt_k->excludes(opt_s);
  sol->add_flag("--human-only", human_only, "Solve the system without AVs");
  sol->add_option("--out", solve_out, "Output report JSON (standard output if omitted)");

  // verify
  std::string report_path;
  std::string verify_network;
  auto* ver = app.add_subcommand("verify", "Re-check a report; exit 3 on any violation");
  ver->add_option("--report", report_path, "Report JSON written by solve")
      ->required()
      ->check(CLI::ExistingFile);
  ver->add_option("--network", verify_network, "Demand-pattern JSON used for the solve")
      ->required()
      ->check(CLI::ExistingFile);

  // sweep
  std::string sweep_network;
  double sweep_omega = 1.0;
  std::string betas_spec;
  std::string ks_spec;
  std::string sweep_out;
  auto* swp = app.add_subcommand("sweep", "Solve both systems over a (beta, k) grid");
  swp->add_option("--network", sweep_network, "Demand-pattern JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  swp->add_option("--omega", sweep_omega, "Driver outside option")->capture_default_str();
  swp->add_option("--betas", betas_spec, "beta grid as a:b:step or a single value")
      ->required();
  swp->add_option("--ks", ks_spec, "k grid as a:b:step or a single value")->required();
  swp->add_option("--out", sweep_out, "Output CSV (standard output if omitted)");

  // thresholds
  std::string thr_network;
  double thr_omega = 1.0;
  std::string thr_betas = "0.5:0.95:0.05";
  double thr_tol = kDefaultThresholdTol;
  std::string thr_out;
  auto* thr = app.add_subcommand("thresholds", "Bisect k_a and k_s for each beta");
  thr->add_option("--network", thr_network, "Star-to-complete demand-pattern JSON")
      ->required()
      ->check(CLI::ExistingFile);
  thr->add_option("--omega", thr_omega, "Driver outside option")->capture_default_str();
  thr->add_option("--betas", thr_betas, "beta grid as a:b:step or a single value")
      ->capture_default_str();
  thr->add_option("--tol", thr_tol, "Bisection width")->capture_default_str();
  thr->add_option("--out", thr_out, "Output CSV (standard output if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalidInput;
  }

  try {
    if (*gen) {
      const DemandPattern p = star_to_complete(gen_n, gen_xi);
      emit(gen_out, out, [&](std::ostream& os) { os << io::to_json(p).dump(2) << '\n'; });
      if (!gen_out.empty())
        out << "wrote " << family << " network n=" << gen_n << " xi=" << gen_xi
            << " to " << gen_out << '\n';
      return kOk;
    }

    if (*sol) {
      if (!*opt_s && !*opt_k) throw std::invalid_argument("one of --s or --k is required");
      const DemandPattern pattern = load_network(network);
      const MarketParams params =
          *opt_k ? MarketParams::from_k(beta, omega, k) : MarketParams::make(beta, omega, s);
      const ProgramKind kind =
          human_only ? ProgramKind::human_only : ProgramKind::mixed_alternative;
      const EquilibriumReport rep = solve_program(kind, pattern, params);
      const io::json j = io::to_json(rep, pattern);
      emit(solve_out, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
      if (!solve_out.empty()) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "%s  beta=%g omega=%g s=%g  profit=%.10g  total_x=%.6g "
                      "total_z=%.6g  regime=%s\n",
                      std::string(to_string(kind)).c_str(), params.beta, params.omega,
                      params.s, rep.profit, rep.total_x(), rep.total_z(),
                      j.at("regime").get<std::string>().c_str());
        out << buf;
      }
      return kOk;
    }

    if (*ver) {
      const DemandPattern pattern = load_network(verify_network);
      const EquilibriumReport rep =
          io::report_from_json(io::read_json_file(report_path), pattern);
      const VerifyResult res = verify_report(rep, pattern);
      print_verify(out, res);
      return res.ok() ? kOk : kViolation;
    }

    if (*swp) {
      const DemandPattern pattern = load_network(sweep_network);
      const auto rows =
          sweep_grid(pattern, sweep_omega, parse_range(betas_spec), parse_range(ks_spec));
      emit(sweep_out, out, [&](std::ostream& os) { write_sweep_csv(os, rows); });
      long failed = 0;
      for (const auto& r : rows) {
        if (!r.failure) continue;
        ++failed;
        err << "beta=" << r.beta << " k=" << r.k << ": " << *r.failure << '\n';
      }
      if (!sweep_out.empty())
        out << "wrote " << rows.size() << " rows to " << sweep_out << '\n';
      return failed ? kSolverFailure : kOk;
    }

    if (*thr) {
      const DemandPattern pattern = load_network(thr_network);
      const auto rows = threshold_table(pattern, thr_omega, parse_range(thr_betas), thr_tol);
      emit(thr_out, out, [&](std::ostream& os) { write_thresholds_csv(os, rows); });
      if (!thr_out.empty()) write_thresholds_csv(out, rows);
      return kOk;
    }
  } catch (const ThresholdError& e) {
    err << "error: " << e.what() << "\n  k, total_x, total_z\n";
    for (const auto& p : e.trace())
      err << "  " << p.k << ", " << p.total_x << ", " << p.total_z << '\n';
    return kViolation;
  } catch (const SolverFailure& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const RecoveryError& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const io::json::exception& e) {
    err << "error: malformed input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kInvalidInput;
}

}  // namespace mixauto::cli
