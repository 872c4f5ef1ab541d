#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "marginalis/tensor.hpp"

namespace marginalis {

// A collection of party subsets whose reduced states are under consideration.
// Subsets are canonicalized (sorted, globally deduplicated) on construction.
struct MarginalScenario {
  PartySignature sig;
  std::vector<std::vector<int>> subsets;

  static MarginalScenario make(PartySignature sig, std::vector<std::vector<int>> subsets) {
    std::vector<std::vector<int>> canon;
    for (auto& s : subsets) {
      std::sort(s.begin(), s.end());
      check_subset(sig, s);
      if (std::find(canon.begin(), canon.end(), s) == canon.end())
        canon.push_back(std::move(s));
    }
    if (canon.empty()) throw Error(ErrorCode::EmptySubset, "scenario has no subsets");
    return MarginalScenario{std::move(sig), std::move(canon)};
  }
};

// The N/2 subsets of size N/2+1 that generically pin down an N-party pure
// state: each combines one free party r with the fixed block of the last N/2
// parties.
inline MarginalScenario half_plus_one_scenario(const PartySignature& sig) {
  const int n = sig.parties();
  if (n % 2 != 0)
    throw Error(ErrorCode::OddN, "half-plus-one scenario needs an even party count");
  std::vector<std::vector<int>> subsets;
  for (int r = 0; r < n / 2; ++r) {
    std::vector<int> s{r};
    for (int p = n / 2; p < n; ++p) s.push_back(p);
    subsets.push_back(std::move(s));
  }
  return MarginalScenario::make(sig, std::move(subsets));
}

// Odd-N analogue: (N-1)/2 subsets of size (N+3)/2, each one free party plus
// the fixed block of the last (N+1)/2 parties.
inline MarginalScenario odd_scenario(const PartySignature& sig) {
  const int n = sig.parties();
  if (n % 2 == 0)
    throw Error(ErrorCode::EvenN, "odd scenario needs an odd party count");
  if (n < 3) throw Error(ErrorCode::IndexOutOfRange, "odd scenario needs N >= 3");
  std::vector<std::vector<int>> subsets;
  const int block_start = (n - 1) / 2;
  for (int r = 0; r < (n - 1) / 2; ++r) {
    std::vector<int> s{r};
    for (int p = block_start; p < n; ++p) s.push_back(p);
    subsets.push_back(std::move(s));
  }
  return MarginalScenario::make(sig, std::move(subsets));
}

// All C(N,m) subsets of size m, lexicographic.
inline MarginalScenario all_subsets_scenario(const PartySignature& sig, int m) {
  const int n = sig.parties();
  if (m < 1 || m > n)
    throw Error(ErrorCode::IndexOutOfRange, "subset size " + std::to_string(m) +
                                                " out of range for N=" + std::to_string(n));
  std::vector<std::vector<int>> subsets;
  std::vector<int> cur(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) cur[static_cast<std::size_t>(i)] = i;
  while (true) {
    subsets.push_back(cur);
    int i = m - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - m + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < m; ++j) cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
  return MarginalScenario::make(sig, std::move(subsets));
}

// One subset plus its reduced state.
struct Marginal {
  std::vector<int> subset;
  DensityMatrix state;
};

inline std::vector<Marginal> extract(const DensityMatrix& rho, const MarginalScenario& sc) {
  if (rho.sig != sc.sig) throw Error(ErrorCode::SignatureMismatch, "extract: signatures differ");
  std::vector<Marginal> out;
  out.reserve(sc.subsets.size());
  for (const auto& s : sc.subsets) out.push_back({s, partial_trace(rho, s)});
  return out;
}

inline std::vector<Marginal> extract(const PureState& psi, const MarginalScenario& sc) {
  if (psi.sig != sc.sig) throw Error(ErrorCode::SignatureMismatch, "extract: signatures differ");
  std::vector<Marginal> out;
  out.reserve(sc.subsets.size());
  for (const auto& s : sc.subsets) out.push_back({s, partial_trace(psi, s)});
  return out;
}

// ---------------------------------------------------------------------------
// Cheap necessary compatibility pre-checks.
//
// (1) Overlap consistency: marginals sharing parties must agree after both
//     are reduced to the shared parties.
// (2) Schmidt consistency (pure targets only): for a pure joint state the
//     reduced states on a subset and on its exact complement share their
//     nonzero spectra.  The complement state is taken directly when given,
//     or derived by further reduction of a given superset marginal.
// ---------------------------------------------------------------------------

struct PrecheckDetail {
  std::string kind;  // "overlap" or "schmidt"
  int first = 0;     // marginal indices
  int second = 0;
  double residual = 0.0;
};

struct PrecheckReport {
  bool overlap_ok = true;
  double overlap_worst_residual = 0.0;
  bool schmidt_ok = true;  // meaningful only when pure_target
  std::vector<PrecheckDetail> details;
};

namespace detail {

inline std::vector<int> intersect_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool contains_sorted(const std::vector<int>& big, const std::vector<int>& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

// Positions of `sub` inside `super` (both sorted, sub subset of super).
inline std::vector<int> local_positions(const std::vector<int>& super, const std::vector<int>& sub) {
  std::vector<int> out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < super.size() && j < sub.size(); ++i)
    if (super[i] == sub[j]) {
      out.push_back(static_cast<int>(i));
      ++j;
    }
  return out;
}

inline double spectra_residual(const DensityMatrix& a, const DensityMatrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> ea(a.mat, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> eb(b.mat, Eigen::EigenvaluesOnly);
  std::vector<double> va(ea.eigenvalues().data(), ea.eigenvalues().data() + ea.eigenvalues().size());
  std::vector<double> vb(eb.eigenvalues().data(), eb.eigenvalues().data() + eb.eigenvalues().size());
  std::sort(va.rbegin(), va.rend());
  std::sort(vb.rbegin(), vb.rend());
  // Pad the shorter spectrum with zeros and compare element-wise.
  const std::size_t n = std::max(va.size(), vb.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i < va.size() ? va[i] : 0.0;
    const double y = i < vb.size() ? vb[i] : 0.0;
    worst = std::max(worst, std::abs(x - y));
  }
  return worst;
}

}  // namespace detail

inline PrecheckReport precheck(const std::vector<Marginal>& marginals, bool pure_target,
                               std::optional<PartySignature> full_sig = std::nullopt,
                               double tolerance = 1e-8) {
  if (marginals.empty()) throw Error(ErrorCode::EmptySubset, "precheck needs at least one marginal");

  // Infer the full system when not given: union of the subsets, dims from the
  // marginal states (consistency across marginals checked as we go).
  std::vector<int> dim_of;
  if (full_sig) {
    dim_of = full_sig->dims();
  } else {
    int max_party = 0;
    for (const auto& m : marginals) max_party = std::max(max_party, m.subset.back());
    dim_of.assign(static_cast<std::size_t>(max_party + 1), 0);
    for (const auto& m : marginals)
      for (std::size_t i = 0; i < m.subset.size(); ++i) {
        const int p = m.subset[i];
        const int d = m.state.sig.dim(static_cast<int>(i));
        if (dim_of[static_cast<std::size_t>(p)] == 0) dim_of[static_cast<std::size_t>(p)] = d;
        else if (dim_of[static_cast<std::size_t>(p)] != d)
          throw Error(ErrorCode::SignatureMismatch,
                      "marginals disagree on the dimension of party " + std::to_string(p));
      }
    for (std::size_t p = 0; p < dim_of.size(); ++p)
      if (dim_of[p] == 0)
        throw Error(ErrorCode::SignatureMismatch,
                    "party " + std::to_string(p) + " not covered; pass the full signature");
  }
  for (const auto& m : marginals) {
    for (std::size_t i = 0; i < m.subset.size(); ++i) {
      const int p = m.subset[i];
      if (p < 0 || p >= static_cast<int>(dim_of.size()) ||
          dim_of[static_cast<std::size_t>(p)] != m.state.sig.dim(static_cast<int>(i)))
        throw Error(ErrorCode::SignatureMismatch, "marginal does not match the full signature");
    }
  }
  const int n_parties = static_cast<int>(dim_of.size());

  PrecheckReport rep;
  const int k = static_cast<int>(marginals.size());

  // Condition (1): pairwise overlap agreement.
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      const auto common = detail::intersect_sorted(marginals[static_cast<std::size_t>(i)].subset,
                                                   marginals[static_cast<std::size_t>(j)].subset);
      if (common.empty()) continue;
      const auto pos_i = detail::local_positions(marginals[static_cast<std::size_t>(i)].subset, common);
      const auto pos_j = detail::local_positions(marginals[static_cast<std::size_t>(j)].subset, common);
      const DensityMatrix ri = partial_trace(marginals[static_cast<std::size_t>(i)].state, pos_i);
      const DensityMatrix rj = partial_trace(marginals[static_cast<std::size_t>(j)].state, pos_j);
      const double r = (ri.mat - rj.mat).norm();
      rep.details.push_back({"overlap", i, j, r});
      rep.overlap_worst_residual = std::max(rep.overlap_worst_residual, r);
    }
  rep.overlap_ok = rep.overlap_worst_residual <= tolerance;

  // Condition (2): complement spectra, pure targets only.
  if (pure_target) {
    std::vector<int> all_parties(static_cast<std::size_t>(n_parties));
    for (int p = 0; p < n_parties; ++p) all_parties[static_cast<std::size_t>(p)] = p;
    for (int i = 0; i < k; ++i) {
      std::vector<int> comp;
      std::set_difference(all_parties.begin(), all_parties.end(),
                          marginals[static_cast<std::size_t>(i)].subset.begin(),
                          marginals[static_cast<std::size_t>(i)].subset.end(),
                          std::back_inserter(comp));
      if (comp.empty()) continue;
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        if (!detail::contains_sorted(marginals[static_cast<std::size_t>(j)].subset, comp)) continue;
        const auto pos = detail::local_positions(marginals[static_cast<std::size_t>(j)].subset, comp);
        const DensityMatrix comp_state =
            pos.size() == marginals[static_cast<std::size_t>(j)].subset.size()
                ? marginals[static_cast<std::size_t>(j)].state
                : partial_trace(marginals[static_cast<std::size_t>(j)].state, pos);
        const double r =
            detail::spectra_residual(marginals[static_cast<std::size_t>(i)].state, comp_state);
        rep.details.push_back({"schmidt", i, j, r});
        if (r > tolerance) rep.schmidt_ok = false;
        break;  // one derivation per subset suffices
      }
    }
  }
  return rep;
}

}  // namespace marginalis
