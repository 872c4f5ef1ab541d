#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "marginalis/polysystem.hpp"
#include "marginalis/states.hpp"
#include "marginalis/uniqueness.hpp"

// The reproduction suite: every concrete construction, counterexample and
// counting formula at desk scale, each case reporting PASS/FAIL against the
// same expectations the acceptance harness enforces.

namespace marginalis::repro {

struct CaseResult {
  std::string name;
  bool pass = true;
  std::vector<std::string> lines;

  explicit CaseResult(std::string case_name) : name(std::move(case_name)) {}

  void note(const std::string& line) { lines.push_back(line); }
  void require(bool ok, const std::string& line) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "  ok   " : "  FAIL ") + line);
  }
};

struct RunConfig {
  std::uint64_t seed = kDefaultSeed;
  SolverOptions opts;
  int jobs = 1;
  bool nightly = false;  // adds the six-qubit tier where one exists
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << std::scientific << v;
  return os.str();
}

// Runs trials [0, n) across `jobs` threads; each trial writes only its own
// slot, so the outcome is independent of scheduling.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, n);
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

// --- criterion 1: purity characterization ---------------------------------
inline CaseResult diag_counterexample(const RunConfig& cfg) {
  CaseResult res("diag-counterexample");
  double worst2 = 0.0, worst3 = 0.0;
  int count = 0;
  for (int n = 1; n <= 4; ++n) {
    PartySignature sig = PartySignature::qubits(n);
    for (int t = 0; t < 250; ++t, ++count) {
      const auto psi = haar_random_pure(sig, derive_seed(cfg.seed, 1000u * n + t));
      const auto rep = purity_check(psi.projector());
      worst2 = std::max(worst2, std::abs(rep.tr2 - 1.0));
      worst3 = std::max(worst3, std::abs(rep.tr3 - 1.0));
    }
  }
  res.require(count == 1000 && worst2 < 1e-10 && worst3 < 1e-10,
              "1000 Haar projectors, 1-4 qubits: worst |tr2-1| = " + detail::fmt(worst2) +
                  ", worst |tr3-1| = " + detail::fmt(worst3));
  Eigen::Vector4d d(0.5, 0.5, 0.5, -0.5);
  const auto rep = purity_check(Matrix(d.cast<cxd>().asDiagonal()));
  res.require(std::abs(rep.tr2 - 1.0) < 1e-12 && std::abs(rep.tr3 - 0.25) < 1e-12 && !rep.is_pure,
              "diag(1/2,1/2,1/2,-1/2): tr2 = " + std::to_string(rep.tr2) +
                  ", tr3 = " + std::to_string(rep.tr3) + ", rejected = " +
                  (rep.is_pure ? "no" : "yes"));
  return res;
}

// --- criterion 2: printed polynomial transcription -------------------------
inline CaseResult bloch_polys(const RunConfig& cfg) {
  CaseResult res("bloch-polys");
  PartySignature sig = PartySignature::qubits(3);
  double worst2 = 0.0, worst3 = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto seed = derive_seed(cfg.seed, 2000u + t);
    Matrix m = t < 100 ? random_density_matrix(sig, seed).mat
                       : random_hermitian_unit_trace(8, seed).mat;
    const auto [tr2, tr3] = purity_polys_3qubit(decompose(sig, m));
    const auto rep = purity_check(m);
    worst2 = std::max(worst2, std::abs(tr2 - rep.tr2));
    worst3 = std::max(worst3, std::abs(tr3 - rep.tr3));
  }
  res.require(worst2 < 1e-9, "100 density + 100 unit-trace Hermitian: worst tr2 gap = " +
                                 detail::fmt(worst2));
  res.require(worst3 < 1e-9, "worst tr3 gap = " + detail::fmt(worst3));
  return res;
}

// --- criterion 3: half-plus-one uniqueness at desk scale -------------------
inline CaseResult upper_bound(const RunConfig& cfg) {
  CaseResult res("upper-bound");
  const auto run_tier = [&](int n, int trials, int allowed_slack) {
    PartySignature sig = PartySignature::qubits(n);
    const auto sc = half_plus_one_scenario(sig);
    std::vector<UdaVerdict> verdicts(static_cast<std::size_t>(trials));
    std::vector<double> leakages(static_cast<std::size_t>(trials));
    std::vector<bool> full_rank(static_cast<std::size_t>(trials));
    detail::parallel_for(trials, cfg.jobs, [&](int t) {
      const auto psi = haar_random_pure(sig, derive_seed(cfg.seed, 3000u * n + t));
      const auto rep = uda_test(psi, sc, cfg.opts);
      verdicts[static_cast<std::size_t>(t)] = rep.verdict;
      leakages[static_cast<std::size_t>(t)] = rep.leakage;
      full_rank[static_cast<std::size_t>(t)] =
          env_rank_certificate(psi, cfg.seed).full_rank_all_blocks;
    });
    int unique = 0, not_unique = 0, rank_ok = 0;
    double worst_leak = 0.0;
    for (int t = 0; t < trials; ++t) {
      if (verdicts[static_cast<std::size_t>(t)] == UdaVerdict::Unique) ++unique;
      if (verdicts[static_cast<std::size_t>(t)] == UdaVerdict::NotUnique) ++not_unique;
      if (full_rank[static_cast<std::size_t>(t)]) ++rank_ok;
      worst_leak = std::max(worst_leak, leakages[static_cast<std::size_t>(t)]);
    }
    res.require(unique >= trials - allowed_slack && not_unique == 0,
                std::to_string(n) + " qubits: " + std::to_string(unique) + "/" +
                    std::to_string(trials) + " unique (worst leakage " +
                    detail::fmt(worst_leak) + "), " + std::to_string(not_unique) +
                    " not-unique");
    res.require(rank_ok == trials, std::to_string(n) + " qubits: environment certificate full rank on " +
                                       std::to_string(rank_ok) + "/" + std::to_string(trials));
  };
  run_tier(4, 50, 2);
  if (cfg.nightly) run_tier(6, 10, 1);
  else res.note("  note  six-qubit tier runs in the nightly configuration");
  return res;
}

// --- criterion 4: constructive non-uniqueness at m = N/2 -------------------
inline CaseResult lower_bound(const RunConfig& cfg) {
  CaseResult res("lower-bound");
  const auto pc = count_params(4, 2, 2);
  res.require(pc.P == 2816 && pc.C == 2656 && pc.margin == 160,
              "counting: P = " + std::to_string(pc.P) + ", C = " + std::to_string(pc.C) +
                  ", margin = " + std::to_string(pc.margin) + " (expected 2816/2656/160)");

  PartySignature sig = PartySignature::qubits(4);
  const auto sc = all_subsets_scenario(sig, 2);
  const int trials = 20;
  std::vector<int> outcome(static_cast<std::size_t>(trials), 0);  // 1 = alternative found
  std::vector<double> leakages(static_cast<std::size_t>(trials));
  detail::parallel_for(trials, cfg.jobs, [&](int t) {
    const auto psi = haar_random_pure(sig, derive_seed(cfg.seed, 4000u + t));
    try {
      const auto alt = find_alternative(psi, sc, cfg.opts);
      double worst = 0.0;
      for (const auto& m : extract(psi, sc))
        worst = std::max(worst, (partial_trace(alt, m.subset).mat - m.state.mat).norm());
      const bool ok = worst < 1e-7 &&
                      trace_distance(alt, DensityMatrix::from_pure(psi)) > 1e-2;
      outcome[static_cast<std::size_t>(t)] = ok ? 1 : 0;
    } catch (const Error&) {
      const auto rep = uda_test(psi, sc, cfg.opts);
      leakages[static_cast<std::size_t>(t)] = rep.leakage;
      outcome[static_cast<std::size_t>(t)] = 0;
    }
  });
  int found = 0;
  double worst_leak = 0.0;
  for (int t = 0; t < trials; ++t) {
    found += outcome[static_cast<std::size_t>(t)];
    worst_leak = std::max(worst_leak, leakages[static_cast<std::size_t>(t)]);
  }
  res.require(found >= 18,
              "all-2-subsets alternatives found on " + std::to_string(found) + "/20 " +
                  "(best leakage over the feasible set " + detail::fmt(worst_leak) + ")");
  if (found < 18)
    res.note(
        "  note  independent SDP audit shows the two-party marginals of a generic\n"
        "         four-qubit pure state admit no other state at all (max leakage ~1e-9),\n"
        "         so no solver can satisfy this expectation; the counting margin above\n"
        "         is only an upper-bound heuristic.  The same search succeeds where\n"
        "         alternatives genuinely exist:");
  // the machinery demonstrably finds alternatives where they exist (m = 1)
  {
    const auto sc1 = all_subsets_scenario(sig, 1);
    int found1 = 0;
    for (int t = 0; t < 5; ++t) {
      const auto psi = haar_random_pure(sig, derive_seed(cfg.seed, 4500u + t));
      try {
        const auto alt = find_alternative(psi, sc1, cfg.opts);
        double worst = 0.0;
        for (const auto& m : extract(psi, sc1))
          worst = std::max(worst, (partial_trace(alt, m.subset).mat - m.state.mat).norm());
        if (worst < 1e-7 && trace_distance(alt, DensityMatrix::from_pure(psi)) > 1e-2) ++found1;
      } catch (const Error&) {
      }
    }
    res.require(found1 == 5, "one-party scenario control: alternatives on " +
                                 std::to_string(found1) + "/5 states");
  }
  return res;
}

// --- criterion 5: GHZ exceptionality ---------------------------------------
inline CaseResult ghz_family(const RunConfig& cfg) {
  CaseResult res("ghz-family");
  const std::vector<double> thetas = {0.0, M_PI / 3.0, 1.0, M_PI};
  for (int n = 3; n <= 6; ++n) {
    const auto sc = all_subsets_scenario(PartySignature::qubits(n), n - 1);
    double worst = 0.0;
    std::vector<std::vector<Marginal>> marg;
    for (double th : thetas) marg.push_back(extract(ghz_state(n, th), sc));
    for (std::size_t a = 0; a < thetas.size(); ++a)
      for (std::size_t b = a + 1; b < thetas.size(); ++b)
        for (std::size_t k = 0; k < marg[a].size(); ++k)
          worst = std::max(worst, (marg[a][k].state.mat - marg[b][k].state.mat).norm());
    res.require(worst < 1e-12, "GHZ_" + std::to_string(n) +
                                   ": all (N-1)-party marginals theta-independent, worst gap " +
                                   detail::fmt(worst));
  }
  const auto ghz = ghz_state(4);
  const auto sc = all_subsets_scenario(ghz.sig, 3);
  const auto rep = uda_test(ghz, sc, cfg.opts);
  res.require(rep.verdict == UdaVerdict::NotUnique,
              std::string("uda(GHZ4, all-3): ") + uda_verdict_name(rep.verdict) + ", leakage " +
                  detail::fmt(rep.leakage));
  // the classical mixture alternative validates by direct extraction
  Matrix mix = Matrix::Zero(16, 16);
  mix(0, 0) = 0.5;
  mix(15, 15) = 0.5;
  double worst = 0.0;
  for (const auto& m : extract(ghz, sc))
    worst = std::max(worst, (partial_trace(DensityMatrix::trusted(ghz.sig, mix), m.subset).mat -
                             m.state.mat)
                                .norm());
  res.require(worst < 1e-12, "classical mixture matches all 3-party marginals, worst gap " +
                                 detail::fmt(worst));
  if (rep.alternative) {
    double wworst = 0.0;
    for (const auto& m : extract(ghz, sc))
      wworst = std::max(wworst, (partial_trace(*rep.alternative, m.subset).mat - m.state.mat).norm());
    res.require(wworst < 1e-6 && trace_distance(*rep.alternative, DensityMatrix::from_pure(ghz)) > 1e-2,
                "solver witness validates (marginal gap " + detail::fmt(wworst) + ")");
  }
  return res;
}

// --- criterion 6a: Bell triple ----------------------------------------------
inline CaseResult bell_triple(const RunConfig& cfg) {
  CaseResult res("bell-triple");
  const auto bell = DensityMatrix::from_pure(bell_state());
  const std::vector<Marginal> ms = {{{0, 1}, bell}, {{1, 2}, bell}, {{0, 2}, bell}};
  const auto pre = precheck(ms, false);
  res.require(pre.overlap_ok, "overlap pre-check passes (worst residual " +
                                  detail::fmt(pre.overlap_worst_residual) + ")");
  const auto rep = check_mixed(PartySignature::qubits(3), ms, cfg.opts);
  res.require(rep.verdict == Verdict::Infeasible,
              std::string("check_mixed: ") + verdict_name(rep.verdict) + " at residual " +
                  detail::fmt(rep.residual));
  if (rep.certificate_gap)
    res.require(*rep.certificate_gap > 0, "separating-functional certificate gap " +
                                              detail::fmt(*rep.certificate_gap));
  return res;
}

// --- criterion 6b: the sigma/tau/eta trio -----------------------------------
inline CaseResult sigma_tau_eta(const RunConfig& cfg) {
  CaseResult res("sigma-tau-eta");
  const auto trio = incompatible_trio();
  const std::vector<Marginal> ms = {
      {{0, 1}, trio.sigma_ab}, {{1, 2}, trio.tau_bc}, {{0, 2}, trio.eta_ac}};
  const auto pre = precheck(ms, true);
  res.require(pre.overlap_ok && pre.schmidt_ok,
              "pre-checks (1) and (2) both pass (worst overlap residual " +
                  detail::fmt(pre.overlap_worst_residual) + ")");
  PartySignature sig = PartySignature::qubits(3);
  const auto rep = check_pure(sig, ms, cfg.opts);
  res.require(rep.verdict == Verdict::Infeasible && rep.heuristic && rep.residual > 1e-2,
              std::string("check_pure: ") + verdict_name(rep.verdict) +
                  (rep.heuristic ? " (heuristic)" : "") + ", best residual " +
                  detail::fmt(rep.residual));
  const std::vector<Marginal> te = {{{1, 2}, trio.tau_bc}, {{0, 2}, trio.eta_ac}};
  const auto rep2 = check_pure(sig, te, cfg.opts);
  bool family = false;
  double fam_fid = 0.0;
  if (rep2.witness) {
    const auto sp = eigh(rep2.witness->mat);
    const Vector v = sp.eigenvectors.col(0);
    fam_fid = std::pow(std::abs(v[0]) + std::abs(v[7]), 2) / 2.0;
    family = fam_fid > 1.0 - 1e-6;
  }
  res.require(rep2.verdict == Verdict::Feasible && family,
              "tau and eta alone: feasible, witness in the (|000>+e^{i t}|111>)/sqrt(2) family "
              "(fidelity " +
                  std::to_string(fam_fid) + ")");
  return res;
}

// --- criterion 7: two-marginal pure reconstruction --------------------------
inline CaseResult diosi(const RunConfig& cfg) {
  CaseResult res("diosi");
  const std::vector<std::vector<int>> sigs = {{2, 2, 2}, {2, 3, 2}, {3, 2, 3}};
  int ok = 0, declared = 0, silent_wrong = 0;
  int total = 0;
  for (std::size_t c = 0; c < sigs.size(); ++c) {
    PartySignature sig(sigs[c]);
    const int trials = c == 2 ? 66 : 67;
    for (int t = 0; t < trials; ++t, ++total) {
      const auto psi = haar_random_pure(sig, derive_seed(cfg.seed, 7000u * (c + 1) + t));
      Marginal m_ab{{0, 1}, partial_trace(psi, {0, 1})};
      Marginal m_bc{{1, 2}, partial_trace(psi, {1, 2})};
      try {
        const auto rec = diosi_reconstruct(m_ab, m_bc);
        const double fid = std::norm((rec.amps.adjoint() * psi.amps)(0));
        if (fid > 1.0 - 1e-8) ++ok;
        else ++silent_wrong;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::DegenerateSpectrum || e.code() == ErrorCode::SpectraMismatch)
          ++declared;
        else
          ++silent_wrong;
      }
    }
  }
  res.require(total == 200 && silent_wrong == 0,
              "200 random 3-party states: " + std::to_string(ok) + " reconstructed (fidelity > 1-1e-8), " +
                  std::to_string(declared) + " declared degenerate, " +
                  std::to_string(silent_wrong) + " wrong");
  const auto ghz = ghz_state(3);
  bool degenerate = false;
  try {
    diosi_reconstruct({{0, 1}, partial_trace(ghz, {0, 1})}, {{1, 2}, partial_trace(ghz, {1, 2})});
  } catch (const Error& e) {
    degenerate = e.code() == ErrorCode::DegenerateSpectrum;
  }
  res.require(degenerate, "GHZ3 marginals raise DegenerateSpectrum");
  return res;
}

// --- criterion 8: polynomial exporter ---------------------------------------
inline CaseResult poly_export(const RunConfig&) {
  CaseResult res("poly-export");
  BlochTensor zero(PartySignature::qubits(3));
  const auto sys = export_polysystem(zero, {"Q"});
  const PolyScalar c18 = PolyScalar::rational(Rational::of(1, 8));
  const PolyScalar c364 = PolyScalar::rational(Rational::of(3, 64));
  bool shape_ok = sys.variables.size() == 27 &&
                  sys.p1.terms.at({}) == PolyScalar::rational(Rational::of(-7, 8)) &&
                  sys.p2.terms.at({}) == PolyScalar::rational(Rational::of(-63, 64));
  for (std::size_t v = 0; v < 27 && shape_ok; ++v) {
    shape_ok = sys.p1.terms.at({{static_cast<int>(v), 2}}) == c18 &&
               sys.p2.terms.at({{static_cast<int>(v), 2}}) == c364;
  }
  res.require(shape_ok,
              "all-correlations-zero system: p1 is sum Q^2 = 7, p2 is sum Q^2 = 21 "
              "(exact rationals 1/8, -7/8, 3/64, -63/64), jointly infeasible");
  std::ostringstream os;
  write_polysystem(sys, os);
  const std::string text = os.str();
  res.require(text.find("7/8") != std::string::npos && text.find("63/64") != std::string::npos,
              "emitted file carries the exact rational coefficients");
  std::istringstream is(text);
  const auto back = parse_polysystem(is);
  res.require(back == sys, "emitted file round-trips to an identical system");
  return res;
}

// --- auxiliary reproduction cases -------------------------------------------

inline CaseResult counts_table(const RunConfig&) {
  CaseResult res("counts-table");
  const auto p42 = count_params(4, 2, 2);
  const auto p43 = count_params(4, 3, 2);
  const auto p63 = count_params(6, 3, 2);
  res.require(p42.margin == 160, "margin(4,2,2) = " + std::to_string(p42.margin));
  res.require(p43.margin == 0, "margin(4,3,2) = " + std::to_string(p43.margin));
  res.require(p63.margin == 2816, "margin(6,3,2) = " + std::to_string(p63.margin));
  std::ostringstream table;
  table << "  N  m      P        C     P-C\n";
  for (int n = 2; n <= 8; n += 2)
    for (int m = 1; m <= n; ++m) {
      const auto pc = count_params(n, m, 2);
      table << std::setw(3) << n << std::setw(3) << m << std::setw(9) << pc.P << std::setw(9)
            << pc.C << std::setw(8) << pc.margin << "\n";
    }
  res.note(table.str());
  bool positive = true;
  for (int n = 2; n <= 12; n += 2)
    for (int m = 1; m <= n / 2; ++m)
      for (int d = 2; d <= 4; ++d) positive = positive && count_params(n, m, d).margin > 0;
  res.require(positive, "margin > 0 for every N <= 12 even, m <= N/2, d in 2..4");
  return res;
}

inline CaseResult env_rank(const RunConfig& cfg) {
  CaseResult res("env-rank");
  const auto generic4 = env_rank_certificate(haar_random_pure(PartySignature::qubits(4),
                                                              derive_seed(cfg.seed, 8000)));
  res.require(generic4.full_rank_all_blocks, "generic 4-qubit state: all 4 blocks full rank (3 of 3)");
  const auto zero4 = env_rank_certificate(basis_state(PartySignature::qubits(4), {0, 0, 0, 0}));
  res.require(!zero4.full_rank_all_blocks, "|0000>: rank-deficient blocks detected");
  const auto g4 = env_rank_certificate(ghz_state(4));
  res.require(!g4.full_rank_all_blocks, "GHZ4: rank-deficient blocks detected");
  const auto generic6 = env_rank_certificate(haar_random_pure(PartySignature::qubits(6),
                                                              derive_seed(cfg.seed, 8001)));
  res.require(generic6.full_rank_all_blocks && !generic6.sampled,
              "generic 6-qubit state: all 16 blocks full rank (6 of 6)");
  if (cfg.nightly) {
    const auto generic8 = env_rank_certificate(haar_random_pure(PartySignature::qubits(8),
                                                                derive_seed(cfg.seed, 8002)),
                                               cfg.seed);
    res.require(generic8.full_rank_all_blocks && generic8.sampled,
                "generic 8-qubit state: 64 sampled blocks full rank");
  }
  return res;
}

// -----------------------------------------------------------------------------

inline std::vector<std::string> case_names() {
  return {"diag-counterexample", "bloch-polys", "upper-bound", "lower-bound", "ghz-family",
          "bell-triple", "sigma-tau-eta", "diosi", "poly-export", "counts-table", "env-rank"};
}

inline CaseResult run_case(const std::string& name, const RunConfig& cfg) {
  if (name == "diag-counterexample") return diag_counterexample(cfg);
  if (name == "bloch-polys") return bloch_polys(cfg);
  if (name == "upper-bound") return upper_bound(cfg);
  if (name == "lower-bound") return lower_bound(cfg);
  if (name == "ghz-family") return ghz_family(cfg);
  if (name == "bell-triple") return bell_triple(cfg);
  if (name == "sigma-tau-eta") return sigma_tau_eta(cfg);
  if (name == "diosi") return diosi(cfg);
  if (name == "poly-export") return poly_export(cfg);
  if (name == "counts-table") return counts_table(cfg);
  if (name == "env-rank") return env_rank(cfg);
  throw Error(ErrorCode::NotFound, "unknown reproduction case '" + name + "'");
}

}  // namespace marginalis::repro
