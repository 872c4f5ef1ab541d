// marginalis - parts of quantum states: marginal compatibility, uniqueness,
// purity polynomials, and the reproduction suite.
//
// Exit codes: verdict commands return 0 (feasible / unique), 1 (infeasible /
// not unique), 2 (inconclusive); file, parse and usage problems return 64.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "marginalis/io.hpp"
#include "marginalis/repro.hpp"

namespace fs = std::filesystem;
using namespace marginalis;

namespace {

constexpr int kExitUsage = 64;

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::istringstream is(text);
  std::string tok;
  while (std::getline(is, tok, ',')) dims.push_back(std::stoi(tok));
  return dims;
}

void emit_report(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    save_json(j, out_path);
  }
}

struct GlobalFlags {
  std::uint64_t seed = kDefaultSeed;
  SolverOptions opts;
  int jobs = 1;
  bool no_validate = false;
};

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return 0;
    case Verdict::Infeasible: return 1;
    case Verdict::Inconclusive: return 2;
  }
  return 2;
}

int uda_exit(UdaVerdict v) {
  switch (v) {
    case UdaVerdict::Unique: return 0;
    case UdaVerdict::NotUnique: return 1;
    case UdaVerdict::Inconclusive: return 2;
  }
  return 2;
}

// ---------------------------------------------------------------------------

int cmd_rand_state(const GlobalFlags& g, const std::string& dims_text, const std::string& out) {
  PartySignature sig(parse_dims(dims_text));
  const auto psi = haar_random_pure(sig, g.seed);
  emit_report(to_json(psi), out);
  return 0;
}

int cmd_check(const GlobalFlags& g, const std::vector<std::string>& files,
              const std::string& mode, const std::string& out) {
  std::optional<PartySignature> sig;
  std::vector<Marginal> marginals;
  for (const auto& f : files) {
    auto mf = marginal_from_json(load_json(f), !g.no_validate);
    if (!sig) sig = mf.global_sig;
    else if (*sig != mf.global_sig)
      throw Error(ErrorCode::SignatureMismatch, f + ": global_dims differ between marginal files");
    marginals.push_back(std::move(mf.marginal));
  }
  const auto pre = precheck(marginals, mode == "pure", sig);
  CompatReport rep = mode == "pure" ? check_pure(*sig, marginals, g.opts)
                                    : check_mixed(*sig, marginals, g.opts);
  json j = to_json(rep);
  j["precheck"] = to_json(pre);
  emit_report(j, out);
  return verdict_exit(rep.verdict);
}

int cmd_uda(const GlobalFlags& g, const std::string& state_file, const std::string& scenario_file,
            const std::string& style, int m, const std::string& out) {
  const auto psi = pure_state_from_json(load_json(state_file), !g.no_validate);
  MarginalScenario sc = [&] {
    if (!scenario_file.empty()) return scenario_from_json(load_json(scenario_file));
    if (style == "half-plus-one") return half_plus_one_scenario(psi.sig);
    if (style == "odd") return odd_scenario(psi.sig);
    if (style == "all-m") {
      if (m <= 0) throw Error(ErrorCode::IndexOutOfRange, "--scenario-style all-m needs --m");
      return all_subsets_scenario(psi.sig, m);
    }
    throw Error(ErrorCode::IoError, "pass --scenario FILE or --scenario-style");
  }();
  const auto rep = uda_test(psi, sc, g.opts);
  emit_report(to_json(rep), out);
  return uda_exit(rep.verdict);
}

int cmd_counts(const std::string& n_range, int d, bool as_json) {
  int n_lo = 0, n_hi = 0;
  const auto dots = n_range.find("..");
  if (dots == std::string::npos) {
    n_lo = n_hi = std::stoi(n_range);
  } else {
    n_lo = std::stoi(n_range.substr(0, dots));
    n_hi = std::stoi(n_range.substr(dots + 2));
  }
  if (n_lo < 1 || n_hi < n_lo) throw Error(ErrorCode::IndexOutOfRange, "bad --n range");
  json rows = json::array();
  std::cout << "  N  m  d          P          C        P-C\n";
  for (int n = n_lo; n <= n_hi; ++n)
    for (int m = 1; m <= n; ++m) {
      const auto pc = count_params(n, m, d);
      rows.push_back(to_json(pc));
      std::cout << std::setw(3) << n << std::setw(3) << m << std::setw(3) << d << std::setw(11)
                << pc.P << std::setw(11) << pc.C << std::setw(11) << pc.margin << "\n";
    }
  if (as_json) std::cout << rows.dump(2) << "\n";
  return 0;
}

int cmd_export_poly(const std::string& known_file, const std::vector<std::string>& unknowns,
                    const std::string& out) {
  const auto known = bloch_from_json(load_json(known_file));
  const auto sys = export_polysystem(known, unknowns);
  if (out.empty()) write_polysystem(sys, std::cout);
  else write_polysystem(sys, out);
  return 0;
}

int cmd_reproduce(const GlobalFlags& g, const std::string& case_name, bool all, bool nightly) {
  repro::RunConfig cfg;
  cfg.seed = g.seed;
  cfg.opts = g.opts;
  cfg.jobs = g.jobs;
  cfg.nightly = nightly;
  std::vector<std::string> names;
  if (all) {
    names = repro::case_names();
  } else if (!case_name.empty()) {
    names.push_back(case_name);
  } else {
    throw Error(ErrorCode::NotFound, "pass --case NAME or --all");
  }
  int failures = 0;
  for (const auto& name : names) {
    const auto res = repro::run_case(name, cfg);  // throws NotFound for bad names
    std::cout << (res.pass ? "PASS " : "FAIL ") << res.name << "\n";
    for (const auto& line : res.lines) std::cout << line << "\n";
    if (!res.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

int cmd_fixtures(const GlobalFlags& g, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto put = [&](const std::string& name, const json& j) {
    save_json(j, (fs::path(out_dir) / name).string());
  };

  const PartySignature three = PartySignature::qubits(3);
  const auto bell = DensityMatrix::from_pure(bell_state());
  put("bell_triple_ab.json", to_json(three, Marginal{{0, 1}, bell}));
  put("bell_triple_bc.json", to_json(three, Marginal{{1, 2}, bell}));
  put("bell_triple_ac.json", to_json(three, Marginal{{0, 2}, bell}));

  const auto trio = incompatible_trio();
  put("sigma_ab.json", to_json(three, Marginal{{0, 1}, trio.sigma_ab}));
  put("tau_bc.json", to_json(three, Marginal{{1, 2}, trio.tau_bc}));
  put("eta_ac.json", to_json(three, Marginal{{0, 2}, trio.eta_ac}));

  put("bell.json", to_json(bell_state()));
  put("ghz3.json", to_json(ghz_state(3)));
  put("ghz4.json", to_json(ghz_state(4)));
  put("random4_seed7.json", to_json(haar_random_pure(PartySignature::qubits(4), 7)));
  put("all1_of_2.json", to_json(all_subsets_scenario(PartySignature::qubits(2), 1)));

  put("half_plus_one_4.json", to_json(half_plus_one_scenario(PartySignature::qubits(4))));
  put("all3_of_4.json", to_json(all_subsets_scenario(PartySignature::qubits(4), 3)));

  put("bloch_zero3.json", to_json(BlochTensor(three)));
  put("bloch_ghz3.json", to_json(decompose(DensityMatrix::from_pure(ghz_state(3)))));

  // marginals of a seeded random 4-qubit state under half-plus-one
  const auto psi = haar_random_pure(PartySignature::qubits(4), g.seed);
  const auto ms = extract(psi, half_plus_one_scenario(psi.sig));
  put("random4_hp1_a.json", to_json(psi.sig, ms[0]));
  put("random4_hp1_b.json", to_json(psi.sig, ms[1]));
  std::cout << "fixtures written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parts of quantum states: marginals, compatibility, uniqueness"};
  app.require_subcommand(1);
  // global flags may appear after the subcommand name
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "master seed (or MARGINALIS_SEED)")
      ->envname("MARGINALIS_SEED");
  app.add_option("--feas-tol", g.opts.feas_tol, "feasibility residual tolerance");
  app.add_option("--infeas-tol", g.opts.infeas_tol, "infeasibility residual threshold");
  app.add_option("--uda-tol", g.opts.uda_tol, "uniqueness leakage tolerance");
  app.add_option("--max-iters", g.opts.max_iterations, "projection iteration cap");
  app.add_option("--restarts", g.opts.restarts, "pure-search restarts");
  app.add_option("--jobs", g.jobs, "parallel independent trials/restarts");
  app.add_flag("--no-validate", g.no_validate, "skip norm/trace validation when parsing");

  auto* rand_cmd = app.add_subcommand("rand-state", "write a seeded Haar-random pure state");
  std::string dims_text, out_path;
  rand_cmd->add_option("--dims", dims_text, "local dimensions, e.g. 2,2,2,2")->required();
  rand_cmd->add_option("--out", out_path, "output file (stdout if omitted)");

  auto* check_cmd = app.add_subcommand("check", "are the given marginals jointly realizable?");
  std::vector<std::string> marginal_files;
  std::string mode = "mixed";
  check_cmd->add_option("--marginals", marginal_files, "marginal JSON files")->required();
  check_cmd->add_option("--mode", mode, "mixed (default) or pure")
      ->check(CLI::IsMember({"mixed", "pure"}));
  check_cmd->add_option("--out", out_path, "report file (stdout if omitted)");

  auto* uda_cmd = app.add_subcommand("uda", "is the state the unique one with these marginals?");
  std::string state_file, scenario_file, scenario_style;
  int m_size = 0;
  uda_cmd->add_option("--state", state_file, "pure state JSON")->required();
  uda_cmd->add_option("--scenario", scenario_file, "scenario JSON");
  uda_cmd->add_option("--scenario-style", scenario_style,
                      "half-plus-one | odd | all-m (with --m)");
  uda_cmd->add_option("--m", m_size, "subset size for all-m");
  uda_cmd->add_option("--out", out_path, "report file (stdout if omitted)");

  auto* counts_cmd = app.add_subcommand("counts", "parameter/constraint counting table");
  std::string n_range = "4";
  int d_local = 2;
  bool counts_json = false;
  counts_cmd->add_option("--n", n_range, "party count or range, e.g. 4..8")->required();
  counts_cmd->add_option("--d", d_local, "local dimension");
  counts_cmd->add_flag("--json", counts_json, "also print JSON rows");

  auto* export_cmd = app.add_subcommand("export-poly", "emit the purity polynomial system");
  std::string known_file;
  std::vector<std::string> unknown_tokens;
  export_cmd->add_option("--known", known_file, "bloch tensor JSON with the fixed coefficients")
      ->required();
  export_cmd->add_option("--unknown", unknown_tokens,
                         "unknown coefficient names or groups (alpha, R, Q, ...)")
      ->required();
  export_cmd->add_option("--out", out_path, "output file (stdout if omitted)");

  auto* repro_cmd = app.add_subcommand("reproduce", "replay the concrete constructions");
  std::string case_name;
  bool run_all = false, nightly = false;
  repro_cmd->add_option("--case", case_name, "one case; see --list");
  repro_cmd->add_flag("--all", run_all, "run every case");
  repro_cmd->add_flag("--nightly", nightly, "include the six-qubit tier");
  bool list_cases = false;
  repro_cmd->add_flag("--list", list_cases, "list case names");

  auto* fixtures_cmd = app.add_subcommand("fixtures", "write the counterexample fixture files");
  std::string fixtures_dir = "fixtures";
  fixtures_cmd->add_option("--out-dir", fixtures_dir, "destination directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (rand_cmd->parsed()) return cmd_rand_state(g, dims_text, out_path);
    if (check_cmd->parsed()) return cmd_check(g, marginal_files, mode, out_path);
    if (uda_cmd->parsed())
      return cmd_uda(g, state_file, scenario_file, scenario_style, m_size, out_path);
    if (counts_cmd->parsed()) return cmd_counts(n_range, d_local, counts_json);
    if (export_cmd->parsed()) return cmd_export_poly(known_file, unknown_tokens, out_path);
    if (repro_cmd->parsed()) {
      if (list_cases) {
        for (const auto& n : repro::case_names()) std::cout << n << "\n";
        return 0;
      }
      return cmd_reproduce(g, case_name, run_all, nightly);
    }
    if (fixtures_cmd->parsed()) return cmd_fixtures(g, fixtures_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
