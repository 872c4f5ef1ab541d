#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

#include "marginalis/errors.hpp"
#include "marginalis/rng.hpp"
#include "marginalis/signature.hpp"

namespace marginalis {

using cxd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

namespace tol {
inline constexpr double kNorm = 1e-12;       // pure-state normalization
inline constexpr double kHermitian = 1e-10;  // max element deviation
inline constexpr double kTrace = 1e-10;
inline constexpr double kMinEig = -1e-9;
inline constexpr double kParse = 1e-8;       // I/O validation
}  // namespace tol

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const Matrix& m, double tolerance = tol::kHermitian) {
  return max_abs(m - m.adjoint()) <= tolerance;
}

// Normalized state vector over a multi-party Hilbert space.
struct PureState {
  PartySignature sig;
  Vector amps;

  static PureState make(PartySignature sig, Vector amps, bool validate = true) {
    if (amps.size() != sig.total_dim())
      throw Error(ErrorCode::SignatureMismatch,
                  "amplitude count " + std::to_string(amps.size()) +
                      " does not match dimension " + std::to_string(sig.total_dim()));
    if (validate) {
      const double n = amps.norm();
      if (std::abs(n - 1.0) > tol::kNorm)
        throw Error(ErrorCode::BadNormalization,
                    "state norm deviates from 1 by " + std::to_string(std::abs(n - 1.0)));
    }
    return PureState{std::move(sig), std::move(amps)};
  }

  Matrix projector() const { return amps * amps.adjoint(); }
};

// Hermitian matrix with no trace or positivity constraint.
struct HermitianMatrix {
  Matrix mat;

  static HermitianMatrix make(Matrix m, double tolerance = tol::kHermitian) {
    if (!is_hermitian(m, tolerance))
      throw Error(ErrorCode::NotHermitian,
                  "max |M - M^dag| element = " + std::to_string(max_abs(m - m.adjoint())));
    // Symmetrize so downstream eigensolves see an exactly Hermitian input.
    m = 0.5 * (m + m.adjoint()).eval();
    return HermitianMatrix{std::move(m)};
  }
};

struct Spectrum {
  Eigen::VectorXd eigenvalues;  // descending
  Matrix eigenvectors;          // columns, orthonormal
};

// Hermitian eigendecomposition, eigenvalues descending.  Eigenvector phases
// are canonicalized (first component above 1e-8 of each column made real
// positive) so repeated runs produce identical output.
inline Spectrum eigh(const Matrix& m, double tolerance = tol::kHermitian) {
  if (!is_hermitian(m, tolerance))
    throw Error(ErrorCode::NotHermitian,
                "max |M - M^dag| element = " + std::to_string(max_abs(m - m.adjoint())));
  const Matrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const auto& vals = es.eigenvalues();
  const auto& vecs = es.eigenvectors();
  const Eigen::Index n = vals.size();
  Spectrum out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    // Eigen sorts ascending; reverse.
    const Eigen::Index src = n - 1 - k;
    out.eigenvalues[k] = vals[src];
    Vector v = vecs.col(src);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(v[i]) > 1e-8) {
        v *= std::conj(v[i]) / std::abs(v[i]);
        break;
      }
    }
    out.eigenvectors.col(k) = v;
  }
  return out;
}

inline Spectrum eigh(const HermitianMatrix& m) { return eigh(m.mat); }

// Hermitian, unit-trace, positive semidefinite matrix over a multi-party
// Hilbert space.
struct DensityMatrix {
  PartySignature sig;
  Matrix mat;

  // Full validation: hermiticity, trace, and spectrum.  Costs an
  // eigendecomposition; internal hot paths use trusted() instead.
  static DensityMatrix make(PartySignature sig, Matrix m) {
    if (m.rows() != sig.total_dim() || m.cols() != sig.total_dim())
      throw Error(ErrorCode::SignatureMismatch, "matrix shape does not match signature");
    if (!is_hermitian(m))
      throw Error(ErrorCode::NotHermitian,
                  "max |M - M^dag| element = " + std::to_string(max_abs(m - m.adjoint())));
    m = 0.5 * (m + m.adjoint()).eval();
    const double tr = m.trace().real();
    if (std::abs(tr - 1.0) > tol::kTrace)
      throw Error(ErrorCode::BadNormalization,
                  "trace deviates from 1 by " + std::to_string(std::abs(tr - 1.0)));
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < tol::kMinEig)
      throw Error(ErrorCode::BadNormalization,
                  "matrix is not positive semidefinite (min eig " +
                      std::to_string(es.eigenvalues().minCoeff()) + ")");
    return DensityMatrix{std::move(sig), std::move(m)};
  }

  // No validation; for values produced by operations that guarantee the
  // invariants by construction.
  static DensityMatrix trusted(PartySignature sig, Matrix m) {
    return DensityMatrix{std::move(sig), std::move(m)};
  }

  static DensityMatrix from_pure(const PureState& psi) {
    return trusted(psi.sig, psi.projector());
  }

  static DensityMatrix maximally_mixed(PartySignature sig) {
    const auto d = sig.total_dim();
    Matrix m = Matrix::Identity(d, d) / static_cast<double>(d);
    return trusted(std::move(sig), std::move(m));
  }
};

// ---------------------------------------------------------------------------
// Partial trace and index plumbing
// ---------------------------------------------------------------------------

namespace detail {

// Global indices split as (subset digits, complement digits): maps from the
// subset-local linear index and the complement-local linear index to their
// contributions to the global index.
struct SubsetIndexer {
  std::vector<std::int64_t> keep_offsets;   // size: prod dims[keep]
  std::vector<std::int64_t> trace_offsets;  // size: prod dims[complement]

  SubsetIndexer(const PartySignature& sig, const std::vector<int>& keep) {
    const auto gstr = sig.strides();
    const std::vector<int> rest = complement_subset(sig, keep);
    keep_offsets = enumerate(sig, keep, gstr);
    trace_offsets = enumerate(sig, rest, gstr);
  }

  static std::vector<std::int64_t> enumerate(const PartySignature& sig,
                                             const std::vector<int>& parties,
                                             const std::vector<std::int64_t>& gstr) {
    std::int64_t count = 1;
    for (int p : parties) count *= sig.dim(p);
    std::vector<std::int64_t> out(static_cast<std::size_t>(count), 0);
    for (std::int64_t i = 0; i < count; ++i) {
      std::int64_t rem = i, off = 0;
      for (int t = static_cast<int>(parties.size()) - 1; t >= 0; --t) {
        const int p = parties[static_cast<std::size_t>(t)];
        off += (rem % sig.dim(p)) * gstr[static_cast<std::size_t>(p)];
        rem /= sig.dim(p);
      }
      out[static_cast<std::size_t>(i)] = off;
    }
    return out;
  }
};

}  // namespace detail

// Reduced state on `keep` (strictly increasing party indices).
inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& keep) {
  check_subset(rho.sig, keep);
  detail::SubsetIndexer ix(rho.sig, keep);
  const auto dk = static_cast<Eigen::Index>(ix.keep_offsets.size());
  Matrix out = Matrix::Zero(dk, dk);
  for (Eigen::Index i = 0; i < dk; ++i)
    for (Eigen::Index j = 0; j < dk; ++j) {
      cxd acc = 0;
      for (const std::int64_t e : ix.trace_offsets)
        acc += rho.mat(ix.keep_offsets[static_cast<std::size_t>(i)] + e,
                       ix.keep_offsets[static_cast<std::size_t>(j)] + e);
      out(i, j) = acc;
    }
  return DensityMatrix::trusted(rho.sig.restricted(keep), std::move(out));
}

inline DensityMatrix partial_trace(const PureState& psi, const std::vector<int>& keep) {
  check_subset(psi.sig, keep);
  detail::SubsetIndexer ix(psi.sig, keep);
  const auto dk = static_cast<Eigen::Index>(ix.keep_offsets.size());
  // Gram matrix of the slices; avoids forming the full projector.
  const auto de = static_cast<Eigen::Index>(ix.trace_offsets.size());
  Matrix slices(dk, de);
  for (Eigen::Index i = 0; i < dk; ++i)
    for (Eigen::Index e = 0; e < de; ++e)
      slices(i, e) = psi.amps[ix.keep_offsets[static_cast<std::size_t>(i)] +
                              ix.trace_offsets[static_cast<std::size_t>(e)]];
  Matrix out = slices * slices.adjoint();
  return DensityMatrix::trusted(psi.sig.restricted(keep), std::move(out));
}

// Reorders parties: new party t is old party perm[t].
inline PureState permute_parties(const PureState& psi, const std::vector<int>& perm) {
  const int n = psi.sig.parties();
  if (static_cast<int>(perm.size()) != n)
    throw Error(ErrorCode::SignatureMismatch, "permutation size mismatch");
  std::vector<int> newdims(perm.size());
  for (int t = 0; t < n; ++t) newdims[static_cast<std::size_t>(t)] = psi.sig.dim(perm[static_cast<std::size_t>(t)]);
  PartySignature nsig(newdims);
  Vector out(psi.amps.size());
  const auto ostr = psi.sig.strides();
  for (std::int64_t idx = 0; idx < nsig.total_dim(); ++idx) {
    const auto digits = nsig.digits(idx);
    std::int64_t src = 0;
    for (int t = 0; t < n; ++t)
      src += static_cast<std::int64_t>(digits[static_cast<std::size_t>(t)]) *
             ostr[static_cast<std::size_t>(perm[static_cast<std::size_t>(t)])];
    out[idx] = psi.amps[src];
  }
  return PureState{std::move(nsig), std::move(out)};
}

// Embeds an operator acting on `subset` into the full space (identity on the
// other parties).
inline Matrix embed_operator(const PartySignature& sig, const std::vector<int>& subset,
                             const Matrix& op) {
  check_subset(sig, subset);
  detail::SubsetIndexer ix(sig, subset);
  const auto dk = static_cast<Eigen::Index>(ix.keep_offsets.size());
  if (op.rows() != dk || op.cols() != dk)
    throw Error(ErrorCode::SignatureMismatch, "operator shape does not match subset");
  const auto d = sig.total_dim();
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < dk; ++i)
    for (Eigen::Index j = 0; j < dk; ++j) {
      const cxd v = op(i, j);
      if (v == cxd(0.0)) continue;
      for (const std::int64_t e : ix.trace_offsets)
        out(ix.keep_offsets[static_cast<std::size_t>(i)] + e,
            ix.keep_offsets[static_cast<std::size_t>(j)] + e) = v;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Purification, distances, random states
// ---------------------------------------------------------------------------

// Pure state on system (+ one environment party of dimension env_dim) whose
// environment trace recovers rho.  env_dim == 1 returns a state on the
// unchanged signature: a one-dimensional environment factor is trivial and
// party dimensions below 2 are not representable.
inline PureState purify(const DensityMatrix& rho, int env_dim) {
  if (env_dim < 1) throw Error(ErrorCode::EnvTooSmall, "environment dimension must be >= 1");
  const Spectrum sp = eigh(rho.mat);
  const double lmax = std::max(sp.eigenvalues[0], 0.0);
  int rank = 0;
  for (Eigen::Index k = 0; k < sp.eigenvalues.size(); ++k)
    if (sp.eigenvalues[k] > 1e-12 * std::max(1.0, lmax)) ++rank;
  if (env_dim < rank)
    throw Error(ErrorCode::EnvTooSmall, "state has rank " + std::to_string(rank) +
                                            " > environment dimension " + std::to_string(env_dim));
  const auto d = rho.sig.total_dim();
  if (env_dim == 1) {
    Vector amps = sp.eigenvectors.col(0);
    return PureState::make(rho.sig, std::move(amps), false);
  }
  std::vector<int> dims = rho.sig.dims();
  dims.push_back(env_dim);
  PartySignature nsig(dims);
  Vector amps = Vector::Zero(nsig.total_dim());
  for (int k = 0; k < rank; ++k) {
    const double w = std::sqrt(std::max(sp.eigenvalues[k], 0.0));
    for (Eigen::Index i = 0; i < d; ++i)
      amps[i * env_dim + k] = w * sp.eigenvectors(i, k);
  }
  amps /= amps.norm();
  return PureState::make(std::move(nsig), std::move(amps), false);
}

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.sig != b.sig) throw Error(ErrorCode::SignatureMismatch, "trace_distance: signatures differ");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.mat - b.mat, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double fidelity_pure(const PureState& psi, const DensityMatrix& rho) {
  if (psi.sig != rho.sig) throw Error(ErrorCode::SignatureMismatch, "fidelity_pure: signatures differ");
  return (psi.amps.adjoint() * rho.mat * psi.amps)(0).real();
}

// Haar-random pure state: i.i.d. standard complex Gaussian amplitudes, then
// normalized.  Deterministic for a fixed seed (see rng.hpp for the stream
// contract).
inline PureState haar_random_pure(const PartySignature& sig, std::uint64_t seed) {
  Rng rng(seed);
  Vector amps(sig.total_dim());
  for (Eigen::Index i = 0; i < amps.size(); ++i) {
    const double re = rng.gaussian();
    const double im = rng.gaussian();
    amps[i] = cxd(re, im);
  }
  amps /= amps.norm();
  return PureState::make(sig, std::move(amps), false);
}

// Wishart-distributed density matrix of the given rank (0 = full rank).
inline DensityMatrix random_density_matrix(const PartySignature& sig, std::uint64_t seed,
                                           int rank = 0) {
  const auto d = sig.total_dim();
  if (rank <= 0 || rank > d) rank = static_cast<int>(d);
  Rng rng(seed);
  Matrix g(d, rank);
  for (Eigen::Index i = 0; i < d; ++i)
    for (int k = 0; k < rank; ++k) {
      const double re = rng.gaussian();
      const double im = rng.gaussian();
      g(i, k) = cxd(re, im);
    }
  Matrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix::trusted(sig, std::move(m));
}

// GUE-style Hermitian matrix shifted to unit trace; generically not PSD.
inline HermitianMatrix random_hermitian_unit_trace(Eigen::Index dim, std::uint64_t seed) {
  Rng rng(seed);
  Matrix g(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double re = rng.gaussian();
      const double im = rng.gaussian();
      g(i, j) = cxd(re, im);
    }
  Matrix h = 0.5 * (g + g.adjoint()) / std::sqrt(static_cast<double>(dim));
  h += (1.0 - h.trace().real()) / static_cast<double>(dim) * Matrix::Identity(dim, dim);
  return HermitianMatrix{std::move(h)};
}

}  // namespace marginalis
