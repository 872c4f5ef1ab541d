#pragma once

#include <Eigen/SVD>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "marginalis/compat.hpp"
#include "marginalis/marginal.hpp"

namespace marginalis {

// ---------------------------------------------------------------------------
// Parameter counting for the purification argument: with N parties of local
// dimension d and all C(N,m) subsets of size m,
//   P      = d^2N (2 C(N,m) - 1)          parameters in the purifications
//   C      = 2 d^2N (C(N,m) - 1) + C(N,m) d^2m   constraint upper bound
//   P - C  = d^2N - C(N,m) d^2m
// Exact integer arithmetic; anything that does not fit 64 bits raises
// Overflow.
// ---------------------------------------------------------------------------

struct ParamCount {
  int N = 0, m = 0, d = 0;
  std::int64_t P = 0;
  std::int64_t C = 0;
  std::int64_t margin = 0;  // P - C
};

namespace detail {

inline __int128 binom128(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

inline std::int64_t narrow_checked(__int128 v, const char* what) {
  if (v > static_cast<__int128>(std::numeric_limits<std::int64_t>::max()) ||
      v < static_cast<__int128>(std::numeric_limits<std::int64_t>::min()))
    throw Error(ErrorCode::Overflow, std::string(what) + " exceeds 64-bit range");
  return static_cast<std::int64_t>(v);
}

inline __int128 ipow128(int base, int exp, const char* what) {
  __int128 r = 1;
  const __int128 limit = static_cast<__int128>(1) << 100;
  for (int i = 0; i < exp; ++i) {
    r *= base;
    if (r > limit) throw Error(ErrorCode::Overflow, std::string(what) + " power overflow");
  }
  return r;
}

}  // namespace detail

inline ParamCount count_params(int N, int m, int d) {
  if (N < 1 || m < 1 || m > N || d < 2)
    throw Error(ErrorCode::IndexOutOfRange, "count_params requires 1 <= m <= N and d >= 2");
  const __int128 d2N = detail::ipow128(d, 2 * N, "d^2N");
  const __int128 d2m = detail::ipow128(d, 2 * m, "d^2m");
  const __int128 c = detail::binom128(N, m);
  ParamCount out;
  out.N = N;
  out.m = m;
  out.d = d;
  out.P = detail::narrow_checked(d2N * (2 * c - 1), "P");
  out.C = detail::narrow_checked(2 * d2N * (c - 1) + c * d2m, "C");
  out.margin = detail::narrow_checked(d2N - c * d2m, "P - C");
  return out;
}

// ---------------------------------------------------------------------------
// Is a pure state the unique state, pure or mixed, with its scenario
// marginals?  Exactly when max Tr(rho (1 - P)) over the feasible set is zero:
// a feasible rho with Tr(rho P) = 1 must equal P.  The solver runs projected
// supergradient ascent on that linear objective over affine-cap-PSD, each
// projection by Dykstra, multi-start.
// ---------------------------------------------------------------------------

enum class UdaVerdict { Unique, NotUnique, Inconclusive };

inline const char* uda_verdict_name(UdaVerdict v) {
  switch (v) {
    case UdaVerdict::Unique: return "unique";
    case UdaVerdict::NotUnique: return "not-unique";
    case UdaVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct UdaReport {
  UdaVerdict verdict = UdaVerdict::Inconclusive;
  double leakage = 0.0;      // best achieved Tr(rho (1-P)) over feasible iterates
  Eigen::Index kernel_dim = 0;
  std::optional<DensityMatrix> alternative;
  int iterations = 0;        // total Dykstra iterations spent
};

inline UdaReport uda_test(const PureState& psi, const MarginalScenario& scenario,
                          const SolverOptions& opts = {}) {
  if (psi.sig != scenario.sig)
    throw Error(ErrorCode::SignatureMismatch, "uda_test: state and scenario signatures differ");
  MarginalMap map(scenario);
  const auto D = psi.sig.total_dim();
  const Matrix P = psi.projector();
  const Eigen::VectorXd b = map.stack_targets(extract(psi, scenario));

  UdaReport rep;
  rep.kernel_dim = map.kernel_dim();
  if (rep.kernel_dim == 0) {
    // The affine set is the single point P; no room for any other state.
    rep.verdict = UdaVerdict::Unique;
    rep.leakage = 0.0;
    return rep;
  }

  const Matrix ascent_dir_m = Matrix::Identity(D, D) - P;
  const Eigen::VectorXd dir = hvec(ascent_dir_m);
  const Eigen::VectorXd p_h = hvec(P);
  const double inner_target = std::min(0.1 * opts.feas_tol, 0.02 * opts.uda_tol);

  double best_leak = 0.0;
  std::optional<Eigen::VectorXd> best_feasible;
  bool all_converged = true;

  const auto leak_of = [&](const Eigen::VectorXd& y) { return dir.dot(y); };

  // Start 0 projects the maximally mixed state.  Its limit is the
  // minimum-purity feasible state, so landing on the rank-one P means every
  // feasible state has unit purity and the (convex) feasible set is {P}:
  // that single probe certifies uniqueness, and it finds bulk leakage
  // otherwise.  Start 1 probes outward from P along the objective; further
  // starts are seeded random density matrices.
  bool singleton_certified = false;
  for (int s = 0; s < opts.uda_restarts; ++s) {
    if (singleton_certified && s >= 2) break;  // one confirming probe is enough
    Eigen::VectorXd x0;
    if (s == 0) {
      x0 = hvec(Matrix::Identity(D, D) / static_cast<double>(D));
    } else if (s == 1) {
      x0 = p_h + 0.3 * dir;
    } else {
      const auto rho0 = random_density_matrix(
          psi.sig, derive_seed(opts.seed, 777 + static_cast<std::uint64_t>(s)));
      x0 = hvec(rho0.mat);
    }
    DykstraState state;
    DykstraResult run = dykstra_project(map, b, x0, inner_target, opts.uda_inner_iterations,
                                        opts.stall_window, opts.stall_rel_progress, &state);
    rep.iterations += run.iterations;
    if (!run.converged) {
      all_converged = false;
      continue;  // no feasible base point to ascend from
    }
    if (leak_of(run.y) > best_leak) {
      best_leak = leak_of(run.y);
      best_feasible = run.y;
    }
    if (s == 0 && leak_of(run.y) < 0.2 * opts.uda_tol) singleton_certified = true;
    if (singleton_certified) continue;  // ascent cannot add leak on a singleton
    // diminishing supergradient steps; the projection finds whatever gain
    // the feasible set allows, so sideways steps are fine
    int stagnant = 0;
    for (int a = 0; a < opts.uda_ascent_steps; ++a) {
      const double step = 0.5 / std::sqrt(static_cast<double>(a + 1));
      state.x += step * dir;
      DykstraResult next = dykstra_project(map, b, state.x, inner_target,
                                           opts.uda_inner_iterations, opts.stall_window,
                                           opts.stall_rel_progress, &state);
      rep.iterations += next.iterations;
      if (!next.converged) {
        all_converged = false;
        break;
      }
      const double nl = leak_of(next.y);
      if (nl > best_leak + 0.01 * opts.uda_tol) {
        best_leak = nl;
        best_feasible = next.y;
        stagnant = 0;
      } else {
        if (nl > best_leak) {
          best_leak = nl;
          best_feasible = next.y;
        }
        ++stagnant;
      }
      if (best_leak > 0.999) break;  // objective is bounded by 1
      if (stagnant >= 4 && best_leak < opts.uda_tol) break;  // pinned at P
    }
    // A start that found real leakage is decisive; extra starts only help
    // the search, never the verdict.
    if (best_leak > 100 * opts.uda_tol) break;
  }

  rep.leakage = best_leak;
  if (best_leak > 10 * opts.uda_tol && best_feasible) {
    DensityMatrix alt = detail::normalize_witness(psi.sig, hunvec(*best_feasible, D));
    const double marg_res = (map.apply(hvec(alt.mat)) - b).norm();
    const double dist = trace_distance(alt, DensityMatrix::trusted(psi.sig, P));
    if (marg_res < opts.feas_tol && dist > 10 * opts.feas_tol) {
      rep.verdict = UdaVerdict::NotUnique;
      rep.alternative = std::move(alt);
      return rep;
    }
    rep.verdict = UdaVerdict::Inconclusive;
    return rep;
  }
  if (best_leak < opts.uda_tol && all_converged) {
    rep.verdict = UdaVerdict::Unique;
    return rep;
  }
  rep.verdict = UdaVerdict::Inconclusive;
  return rep;
}

// Alternative state with the same scenario marginals, when one exists.
inline DensityMatrix find_alternative(const PureState& psi, const MarginalScenario& scenario,
                                      const SolverOptions& opts = {}) {
  UdaReport rep = uda_test(psi, scenario, opts);
  if (rep.verdict != UdaVerdict::NotUnique || !rep.alternative)
    throw Error(ErrorCode::NotFound, std::string("no alternative found (verdict ") +
                                         uda_verdict_name(rep.verdict) + ")");
  return *std::move(rep.alternative);
}

// ---------------------------------------------------------------------------
// Environment-system rank certificate.  For the half-plus-one scenario the
// uniqueness argument reduces, pair by pair, to homogeneous linear systems in
// the environment vectors: d^{N/2} equations (indexed by the shared block u)
// in 2 d^{N/2-1} - d^{N/2-2} unknowns, with state amplitudes as coefficients.
// Full column rank of every block forces all environment vectors onto a
// single ray, which is the generic condition behind uniqueness.  N <= 6
// enumerates every block; N = 8 checks a seeded sample of 64.
// ---------------------------------------------------------------------------

struct EnvBlockRank {
  int pair_party = 0;  // the second party r of the pair (0, r)
  int c0 = 0, cr = 0;
  std::int64_t cv = 0;
  Eigen::Index rank = 0;
  Eigen::Index variables = 0;
  Eigen::Index equations = 0;
};

struct EnvSystemCertificate {
  std::vector<EnvBlockRank> block_ranks;
  bool full_rank_all_blocks = true;
  bool sampled = false;  // true when only a sample of blocks was checked
};

inline EnvSystemCertificate env_rank_certificate(const PureState& psi,
                                                 std::uint64_t seed = kDefaultSeed) {
  const int n = psi.sig.parties();
  if (n % 2 != 0) throw Error(ErrorCode::OddN, "certificate defined for even party count");
  if (!psi.sig.equidimensional())
    throw Error(ErrorCode::NotEquidimensional, "certificate needs equidimensional parties");
  const int d = psi.sig.dim(0);
  const int half = n / 2;

  std::int64_t d_half = 1, d_v = 1;
  for (int i = 0; i < half; ++i) d_half *= d;
  for (int i = 0; i < half - 2; ++i) d_v *= d;
  const Eigen::Index equations = static_cast<Eigen::Index>(d_half);
  const Eigen::Index variables = static_cast<Eigen::Index>((2 * d - 1) * d_v);

  const auto gstr = psi.sig.strides();
  // first-half parties besides 0 and r, in order
  const auto amp = [&](int c0, int party_r, int jr, std::int64_t v, std::int64_t u,
                       const std::vector<int>& vparties) {
    std::int64_t idx = static_cast<std::int64_t>(c0) * gstr[0] +
                       static_cast<std::int64_t>(jr) * gstr[static_cast<std::size_t>(party_r)];
    std::int64_t vv = v;
    for (int t = static_cast<int>(vparties.size()) - 1; t >= 0; --t) {
      idx += (vv % d) * gstr[static_cast<std::size_t>(vparties[static_cast<std::size_t>(t)])];
      vv /= d;
    }
    std::int64_t uu = u;
    for (int p = n - 1; p >= half; --p) {
      idx += (uu % d) * gstr[static_cast<std::size_t>(p)];
      uu /= d;
    }
    return psi.amps[idx];
  };

  EnvSystemCertificate cert;
  const bool sample = n >= 8;
  cert.sampled = sample;
  Rng rng(derive_seed(seed, 0xe27));

  std::vector<std::array<std::int64_t, 4>> blocks;  // (r, c0, cr, cv)
  if (!sample) {
    for (int r = 1; r < half; ++r)
      for (int c0 = 0; c0 < d; ++c0)
        for (int cr = 0; cr < d; ++cr)
          for (std::int64_t cv = 0; cv < d_v; ++cv)
            blocks.push_back({r, c0, cr, cv});
  } else {
    for (int k = 0; k < 64; ++k)
      blocks.push_back({1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(half - 1))),
                        static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(d))),
                        static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(d))),
                        static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(d_v)))});
  }

  for (const auto& [r64, c0_64, cr_64, cv] : blocks) {
    const int r = static_cast<int>(r64);
    const int c0 = static_cast<int>(c0_64);
    const int cr = static_cast<int>(cr_64);
    std::vector<int> vparties;
    for (int p = 1; p < half; ++p)
      if (p != r) vparties.push_back(p);

    Matrix block = Matrix::Zero(equations, variables);
    for (std::int64_t u = 0; u < d_half; ++u) {
      Eigen::Index col = 0;
      // environment vectors of the first reduced state: j_r != c_r
      for (int jr = 0; jr < d; ++jr) {
        if (jr == cr) continue;
        for (std::int64_t v = 0; v < d_v; ++v, ++col)
          block(u, col) = amp(c0, r, jr, v, u, vparties);
      }
      // environment vectors of the r-th reduced state: j_0 != c_0
      for (int j0 = 0; j0 < d; ++j0) {
        if (j0 == c0) continue;
        for (std::int64_t v = 0; v < d_v; ++v, ++col) {
          std::int64_t idx = static_cast<std::int64_t>(j0) * gstr[0] +
                             static_cast<std::int64_t>(cr) * gstr[static_cast<std::size_t>(r)];
          std::int64_t vv = v;
          for (int t = static_cast<int>(vparties.size()) - 1; t >= 0; --t) {
            idx += (vv % d) * gstr[static_cast<std::size_t>(vparties[static_cast<std::size_t>(t)])];
            vv /= d;
          }
          std::int64_t uu = u;
          for (int p = n - 1; p >= half; --p) {
            idx += (uu % d) * gstr[static_cast<std::size_t>(p)];
            uu /= d;
          }
          block(u, col) = -psi.amps[idx];
        }
      }
      // difference vectors at j_r = c_r, j_0 = c_0
      for (std::int64_t v = 0; v < d_v; ++v, ++col)
        block(u, col) = amp(c0, r, cr, v, u, vparties);
    }

    Eigen::JacobiSVD<Matrix> svd(block);
    const double cutoff = 1e-10 * svd.singularValues().maxCoeff();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > cutoff) ++rank;

    cert.block_ranks.push_back({r, c0, cr, cv, rank, variables, equations});
    if (rank < variables) cert.full_rank_all_blocks = false;
  }
  return cert;
}

// ---------------------------------------------------------------------------
// Pure-state reconstruction from two overlapping marginals rho_AB, rho_BC
// (A, B, C disjoint, B the shared parties).  Schmidt pairing: the nonzero
// spectra of rho_AB and rho_C = Tr_B rho_BC must match; relative phases come
// from the C-eigenbasis blocks of rho_BC, which for a pure state equal
//   sqrt(l_k l_l) e^{i(th_k - th_l)} Tr_A |k><l|_AB.
// Degenerate or inconsistent inputs raise; the result is verified against
// both inputs before it is returned, so a wrong answer is never silent.
// ---------------------------------------------------------------------------

inline PureState diosi_reconstruct(const Marginal& m_ab, const Marginal& m_bc,
                                   double tolerance = 1e-8) {
  const auto& sab = m_ab.subset;
  const auto& sbc = m_bc.subset;
  std::vector<int> B = detail::intersect_sorted(sab, sbc);
  if (B.empty()) throw Error(ErrorCode::SignatureMismatch, "subsets must overlap");
  std::vector<int> A, C;
  std::set_difference(sab.begin(), sab.end(), B.begin(), B.end(), std::back_inserter(A));
  std::set_difference(sbc.begin(), sbc.end(), B.begin(), B.end(), std::back_inserter(C));
  if (A.empty() || C.empty())
    throw Error(ErrorCode::SignatureMismatch, "one subset contains the other");

  // dims per party, consistency across the two marginals
  std::vector<int> all_parties;
  std::set_union(sab.begin(), sab.end(), sbc.begin(), sbc.end(), std::back_inserter(all_parties));
  std::vector<int> dim_of(static_cast<std::size_t>(all_parties.back() + 1), 0);
  const auto note_dims = [&](const Marginal& m) {
    for (std::size_t i = 0; i < m.subset.size(); ++i) {
      int& slot = dim_of[static_cast<std::size_t>(m.subset[i])];
      const int dv = m.state.sig.dim(static_cast<int>(i));
      if (slot == 0) slot = dv;
      else if (slot != dv)
        throw Error(ErrorCode::SignatureMismatch, "marginals disagree on a party dimension");
    }
  };
  note_dims(m_ab);
  note_dims(m_bc);

  // spectral data of rho_AB
  const Spectrum sp_ab = eigh(m_ab.state.mat);
  const double lmax = std::max(sp_ab.eigenvalues[0], 0.0);
  std::vector<double> lam;
  for (Eigen::Index k = 0; k < sp_ab.eigenvalues.size(); ++k) {
    const double l = sp_ab.eigenvalues[k];
    if (l > 1e-8 * std::max(1.0, lmax)) {
      lam.push_back(l);
    } else if (l > 1e-10) {
      // gray zone between "zero" and "nonzero": too close to call
      throw Error(ErrorCode::DegenerateSpectrum,
                  "eigenvalue " + std::to_string(l) + " is not separated from zero");
    }
  }
  const int rank = static_cast<int>(lam.size());
  for (int k = 0; k + 1 < rank; ++k)
    if (lam[static_cast<std::size_t>(k)] - lam[static_cast<std::size_t>(k + 1)] < tolerance)
      throw Error(ErrorCode::DegenerateSpectrum,
                  "nonzero spectrum of rho_AB has a gap below tolerance");

  // rho_C and its spectral data
  const auto pos_b_in_bc = detail::local_positions(sbc, B);
  const auto pos_c_in_bc = detail::local_positions(sbc, C);
  const DensityMatrix rho_c = partial_trace(m_bc.state, pos_c_in_bc);
  const Spectrum sp_c = eigh(rho_c.mat);
  if (sp_c.eigenvalues.size() < rank)
    throw Error(ErrorCode::SpectraMismatch, "rho_C cannot carry the spectrum of rho_AB");
  for (int k = 0; k < rank; ++k)
    if (std::abs(sp_c.eigenvalues[k] - lam[static_cast<std::size_t>(k)]) > tolerance)
      throw Error(ErrorCode::SpectraMismatch, "spectra of rho_AB and rho_C do not match");
  for (Eigen::Index k = rank; k < sp_c.eigenvalues.size(); ++k)
    if (std::abs(sp_c.eigenvalues[k]) > tolerance)
      throw Error(ErrorCode::SpectraMismatch, "rho_C has extra nonzero eigenvalues");

  // M_kl = Tr_A |k><l|_AB as operators on B, with A, B in m_ab's local order
  const auto pos_a_in_ab = detail::local_positions(sab, A);
  const auto pos_b_in_ab = detail::local_positions(sab, B);
  const PartySignature sig_ab = m_ab.state.sig;
  detail::SubsetIndexer ix_b(sig_ab, pos_b_in_ab);
  const auto db = static_cast<Eigen::Index>(ix_b.keep_offsets.size());
  const auto da = static_cast<Eigen::Index>(ix_b.trace_offsets.size());
  const auto m_block = [&](int k, int l) {
    Matrix out = Matrix::Zero(db, db);
    for (Eigen::Index i = 0; i < db; ++i)
      for (Eigen::Index j = 0; j < db; ++j) {
        cxd acc = 0;
        for (Eigen::Index e = 0; e < da; ++e)
          acc += sp_ab.eigenvectors(ix_b.keep_offsets[static_cast<std::size_t>(i)] +
                                        ix_b.trace_offsets[static_cast<std::size_t>(e)],
                                    k) *
                 std::conj(sp_ab.eigenvectors(ix_b.keep_offsets[static_cast<std::size_t>(j)] +
                                                  ix_b.trace_offsets[static_cast<std::size_t>(e)],
                                              l));
        out(i, j) = acc;
      }
    return out;
  };

  // blocks of rho_BC in the C eigenbasis: block(k,l) = (1_B x <k|_C) rho (1_B x |l>_C)
  const PartySignature sig_bc = m_bc.state.sig;
  detail::SubsetIndexer ix_c(sig_bc, pos_c_in_bc);
  const auto dc = static_cast<Eigen::Index>(ix_c.keep_offsets.size());
  const auto db2 = static_cast<Eigen::Index>(ix_c.trace_offsets.size());
  if (db2 != db) throw Error(ErrorCode::SignatureMismatch, "B dimension mismatch");
  const auto bc_block = [&](int k, int l) {
    Matrix out = Matrix::Zero(db, db);
    for (Eigen::Index i = 0; i < db; ++i)
      for (Eigen::Index j = 0; j < db; ++j) {
        cxd acc = 0;
        for (Eigen::Index ci = 0; ci < dc; ++ci)
          for (Eigen::Index cj = 0; cj < dc; ++cj)
            acc += std::conj(sp_c.eigenvectors(ci, k)) *
                   m_bc.state.mat(ix_c.trace_offsets[static_cast<std::size_t>(i)] +
                                      ix_c.keep_offsets[static_cast<std::size_t>(ci)],
                                  ix_c.trace_offsets[static_cast<std::size_t>(j)] +
                                      ix_c.keep_offsets[static_cast<std::size_t>(cj)]) *
                   sp_c.eigenvectors(cj, l);
        out(i, j) = acc;
      }
    return out;
  };

  // fix relative phases th_k (th_0 = 0), chaining through usable blocks
  std::vector<cxd> phase(static_cast<std::size_t>(rank), cxd(0.0));
  std::vector<bool> fixed(static_cast<std::size_t>(rank), false);
  phase[0] = 1.0;
  fixed[0] = true;
  bool progress = true;
  while (progress) {
    progress = false;
    for (int l = 0; l < rank; ++l) {
      if (fixed[static_cast<std::size_t>(l)]) continue;
      for (int k = 0; k < rank; ++k) {
        if (!fixed[static_cast<std::size_t>(k)]) continue;
        const Matrix mkl = m_block(k, l);
        const double mnorm = mkl.norm();
        if (mnorm < 1e-7) continue;
        const Matrix blk = bc_block(k, l);
        const double w = std::sqrt(lam[static_cast<std::size_t>(k)] * lam[static_cast<std::size_t>(l)]);
        // blk = w e^{i(th_k - th_l)} M_kl  =>  e^{-i th_l} ~ <M, blk> / (w |M|^2 e^{i th_k}^*)
        const cxd overlap = (mkl.adjoint() * blk).trace() / (w * mnorm * mnorm);
        const double mag = std::abs(overlap);
        if (mag < 0.5)  // block not proportional; validation will decide
          continue;
        const cxd u = overlap / mag;  // e^{i(th_k - th_l)}
        phase[static_cast<std::size_t>(l)] = phase[static_cast<std::size_t>(k)] / u;
        fixed[static_cast<std::size_t>(l)] = true;
        progress = true;
        break;
      }
    }
  }
  // unreachable phases cannot influence rho_BC through any block; leave at 1
  for (int l = 0; l < rank; ++l)
    if (!fixed[static_cast<std::size_t>(l)]) phase[static_cast<std::size_t>(l)] = 1.0;

  // assemble psi = sum_k sqrt(l_k) e^{i th_k} |k>_AB |k>_C on [sab..., C...]
  std::vector<int> parties_order = sab;
  for (int c : C) parties_order.push_back(c);
  std::vector<int> order_dims;
  for (int p : parties_order) order_dims.push_back(dim_of[static_cast<std::size_t>(p)]);
  PartySignature sig_order(order_dims);
  Vector amps = Vector::Zero(sig_order.total_dim());
  const auto dab = sig_ab.total_dim();
  for (int k = 0; k < rank; ++k) {
    const cxd w = std::sqrt(lam[static_cast<std::size_t>(k)]) * phase[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < dab; ++i) {
      const cxd a = sp_ab.eigenvectors(i, k);
      if (a == cxd(0.0)) continue;
      for (Eigen::Index c = 0; c < dc; ++c)
        amps[i * dc + c] += w * a * sp_c.eigenvectors(c, k);
    }
  }
  amps /= amps.norm();

  // permute [sab..., C...] into sorted global order
  std::vector<int> perm(parties_order.size());
  for (std::size_t t = 0; t < all_parties.size(); ++t) {
    const auto it = std::find(parties_order.begin(), parties_order.end(), all_parties[t]);
    perm[t] = static_cast<int>(it - parties_order.begin());
  }
  PureState psi = permute_parties(PureState::make(sig_order, std::move(amps), false), perm);

  // verification gate: both inputs must be reproduced
  const auto pos_ab = detail::local_positions(all_parties, sab);
  const auto pos_bc = detail::local_positions(all_parties, sbc);
  const double res_ab = (partial_trace(psi, pos_ab).mat - m_ab.state.mat).norm();
  const double res_bc = (partial_trace(psi, pos_bc).mat - m_bc.state.mat).norm();
  if (res_ab > tolerance || res_bc > tolerance)
    throw Error(ErrorCode::PhaseInconsistent,
                "no pure state reproduces both marginals (residuals " + std::to_string(res_ab) +
                    ", " + std::to_string(res_bc) + ")");
  return psi;
}

}  // namespace marginalis
