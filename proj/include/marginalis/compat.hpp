#pragma once

#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "marginalis/marginal.hpp"
#include "marginalis/rng.hpp"
#include "marginalis/tensor.hpp"

namespace marginalis {

// ---------------------------------------------------------------------------
// Real coordinates for Hermitian matrices.  The map is an isometry between
// the Frobenius inner product and the Euclidean one, so least-squares
// projections in coordinates are Frobenius projections on matrices:
//   [diag entries..., then sqrt(2) Re M_ij, sqrt(2) Im M_ij for i < j].
// ---------------------------------------------------------------------------

inline Eigen::VectorXd hvec(const Matrix& m) {
  const Eigen::Index d = m.rows();
  Eigen::VectorXd out(d * d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) out[k++] = m(i, i).real();
  const double s = std::sqrt(2.0);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      out[k++] = s * m(i, j).real();
      out[k++] = s * m(i, j).imag();
    }
  return out;
}

inline Matrix hunvec(const Eigen::VectorXd& v, Eigen::Index d) {
  Matrix m(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) m(i, i) = v[k++];
  const double s = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double re = v[k++] * s;
      const double im = v[k++] * s;
      m(i, j) = cxd(re, im);
      m(j, i) = cxd(re, -im);
    }
  return m;
}

// Frobenius projection onto the PSD cone: clip negative eigenvalues.
inline Matrix psd_project(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
  Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * w.cast<cxd>().asDiagonal() * es.eigenvectors().adjoint();
}

// ---------------------------------------------------------------------------
// The marginal map: the linear map sending (hvec of) a Hermitian D x D matrix
// to the stacked hvecs of its reduced states on the scenario's subsets, plus
// one trace row.  Its least-squares factorization is cached; that single
// object drives affine projections, rank/kernel queries and the infeasibility
// certificate.
// ---------------------------------------------------------------------------

class MarginalMap {
 public:
  // Solver dimensions are capped well below PartySignature::kMaxTotalDim:
  // the map is dense with D^2 columns and the projections factor it.
  static constexpr std::int64_t kMaxDim = 128;

  explicit MarginalMap(MarginalScenario scenario) : scenario_(std::move(scenario)) {
    const auto D = scenario_.sig.total_dim();
    if (D > kMaxDim)
      throw Error(ErrorCode::DimensionTooLarge,
                  "marginal map supports total dimension <= " + std::to_string(kMaxDim));
    const Eigen::Index cols = static_cast<Eigen::Index>(D) * static_cast<Eigen::Index>(D);
    Eigen::Index rows = 1;
    for (const auto& s : scenario_.subsets) {
      const auto ds = scenario_.sig.restricted(s).total_dim();
      row_offsets_.push_back(rows - 1);
      rows += static_cast<Eigen::Index>(ds) * static_cast<Eigen::Index>(ds);
    }
    // trace row last
    a_ = Eigen::MatrixXd::Zero(rows, cols);
    build();
    cod_.setThreshold(1e-10);
    cod_.compute(a_);
    // dense pseudoinverse: the per-iteration projection is then two matvecs,
    // an order of magnitude cheaper than applying the factorization
    pinv_ = cod_.pseudoInverse();
  }

  const MarginalScenario& scenario() const { return scenario_; }
  const Eigen::MatrixXd& matrix() const { return a_; }
  Eigen::Index rows() const { return a_.rows(); }
  Eigen::Index cols() const { return a_.cols(); }
  Eigen::Index rank() const { return cod_.rank(); }

  // Kernel dimension over traceless Hermitian matrices.  The trace row is part
  // of the map, so its kernel is automatically traceless.
  Eigen::Index kernel_dim() const { return cols() - rank(); }

  // Stacked targets for the scenario's subsets (order must match), with the
  // trailing trace row set to 1.
  Eigen::VectorXd stack_targets(const std::vector<Marginal>& marginals) const {
    if (marginals.size() != scenario_.subsets.size())
      throw Error(ErrorCode::SignatureMismatch, "marginal count does not match scenario");
    Eigen::VectorXd b(rows());
    for (std::size_t k = 0; k < marginals.size(); ++k) {
      if (marginals[k].subset != scenario_.subsets[k])
        throw Error(ErrorCode::SignatureMismatch, "marginal subsets do not match scenario order");
      const auto expect = scenario_.sig.restricted(scenario_.subsets[k]);
      if (marginals[k].state.sig != expect)
        throw Error(ErrorCode::SignatureMismatch, "marginal state does not match subset dims");
      const Eigen::VectorXd h = hvec(marginals[k].state.mat);
      b.segment(row_offsets_[k], h.size()) = h;
    }
    b[rows() - 1] = 1.0;
    return b;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return a_ * x; }

  // Projection onto the affine set {x : A x = b} (least-squares when b is not
  // in the range).
  Eigen::VectorXd affine_project(const Eigen::VectorXd& x, const Eigen::VectorXd& b) const {
    return x - pinv_ * (a_ * x - b);
  }

  // Minimum-norm least-squares solution of A^T lambda = v.
  Eigen::VectorXd lift_to_rows(const Eigen::VectorXd& v) const {
    if (!codT_) {
      codT_.emplace();
      codT_->setThreshold(1e-10);
      codT_->compute(a_.transpose());
    }
    return codT_->solve(v);
  }

 private:
  void build() {
    const PartySignature& sig = scenario_.sig;
    const auto D = sig.total_dim();
    // Column layout mirrors hvec: diagonal entries first, then (Re, Im) pairs.
    std::vector<std::vector<std::int64_t>> local_of_global;  // per subset
    std::vector<std::vector<std::int64_t>> env_of_global;
    for (const auto& s : scenario_.subsets) {
      // split each global index into (subset-local, env-local) digits
      std::vector<std::int64_t> loc(static_cast<std::size_t>(D)), env(static_cast<std::size_t>(D));
      const auto rest = complement_subset(sig, s);
      for (std::int64_t g = 0; g < D; ++g) {
        const auto digits = sig.digits(g);
        std::int64_t li = 0;
        for (int p : s) li = li * sig.dim(p) + digits[static_cast<std::size_t>(p)];
        std::int64_t ei = 0;
        for (int p : rest) ei = ei * sig.dim(p) + digits[static_cast<std::size_t>(p)];
        loc[static_cast<std::size_t>(g)] = li;
        env[static_cast<std::size_t>(g)] = ei;
      }
      local_of_global.push_back(std::move(loc));
      env_of_global.push_back(std::move(env));
    }

    const auto hvec_coord = [](std::int64_t d, std::int64_t i, std::int64_t j, bool imag) {
      // coordinate of the (i,j) off-diagonal pair (i < j) in hvec order
      const std::int64_t before = d + (d * (d - 1) / 2 - (d - i) * (d - i - 1) / 2 + (j - i - 1)) * 2;
      return before + (imag ? 1 : 0);
    };

    Eigen::Index col = 0;
    // diagonal columns: basis element E_gg
    for (std::int64_t g = 0; g < D; ++g, ++col) {
      for (std::size_t k = 0; k < scenario_.subsets.size(); ++k) {
        const std::int64_t li = local_of_global[k][static_cast<std::size_t>(g)];
        a_(row_offsets_[k] + li, col) += 1.0;  // diagonal coordinate li
      }
      a_(rows() - 1, col) = 1.0;  // trace row
    }
    // off-diagonal columns: (E_gh + E_hg)/sqrt(2) and i(E_gh - E_hg)/sqrt(2)
    for (std::int64_t g = 0; g < D; ++g)
      for (std::int64_t h = g + 1; h < D; ++h, col += 2) {
        for (std::size_t k = 0; k < scenario_.subsets.size(); ++k) {
          if (env_of_global[k][static_cast<std::size_t>(g)] !=
              env_of_global[k][static_cast<std::size_t>(h)])
            continue;  // traced out
          const auto ds = sig.restricted(scenario_.subsets[k]).total_dim();
          const std::int64_t li = local_of_global[k][static_cast<std::size_t>(g)];
          const std::int64_t lj = local_of_global[k][static_cast<std::size_t>(h)];
          // li != lj: equal env and equal local would mean g == h
          const std::int64_t lo = std::min(li, lj), hi = std::max(li, lj);
          const double sgn = li < lj ? 1.0 : -1.0;
          a_(row_offsets_[k] + hvec_coord(ds, lo, hi, false), col) += 1.0;
          a_(row_offsets_[k] + hvec_coord(ds, lo, hi, true), col + 1) += sgn;
        }
      }
  }

  MarginalScenario scenario_;
  Eigen::MatrixXd a_;
  std::vector<Eigen::Index> row_offsets_;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
  Eigen::MatrixXd pinv_;
  mutable std::optional<Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>> codT_;
};

inline MarginalMap build_marginal_map(const MarginalScenario& scenario) {
  return MarginalMap(scenario);
}

// ---------------------------------------------------------------------------
// Solver options and reports
// ---------------------------------------------------------------------------

struct SolverOptions {
  double feas_tol = 1e-7;
  double infeas_tol = 1e-3;
  int max_iterations = 20000;
  int stall_window = 500;
  double stall_rel_progress = 1e-10;
  int restarts = 16;                 // check_pure multi-start count
  int pure_iterations = 4000;        // gradient iterations per restart
  std::uint64_t seed = kDefaultSeed;
  // uda_test knobs
  double uda_tol = 1e-6;
  int uda_restarts = 2;          // P-probe and mixed-probe; more adds random starts
  int uda_ascent_steps = 12;
  int uda_inner_iterations = 40000;  // Dykstra budget per ascent projection
  int jobs = 1;  // parallel restarts/trials where supported
};

enum class Verdict { Feasible, Infeasible, Inconclusive };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return "feasible";
    case Verdict::Infeasible: return "infeasible";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct CompatReport {
  Verdict verdict = Verdict::Inconclusive;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::optional<DensityMatrix> witness;
  bool heuristic = false;                    // set on pure-search infeasibility
  std::optional<double> certificate_gap;     // validated Farkas gap, if any
};

// ---------------------------------------------------------------------------
// Dykstra's alternating projections between the PSD cone and the affine set
// of Hermitian unit-trace matrices with prescribed marginals.  The correction
// terms matter here: the intersection can be a single matrix (that is the
// uniqueness regime), where plain alternating projections crawl.
//
// After the affine half-step the iterate satisfies the linear constraints to
// working precision whenever the targets are consistent; the PSD half-step
// output y is the feasible-side iterate whose marginal residual we report.
// ---------------------------------------------------------------------------

struct DykstraResult {
  Eigen::VectorXd y;        // PSD-side iterate, hvec coordinates
  Eigen::VectorXd x;        // affine-side iterate
  double residual = 0.0;    // |A y - b| at exit
  int iterations = 0;
  bool converged = false;   // residual fell below target
  bool stalled = false;
};

struct DykstraState {
  Eigen::VectorXd x, p, q;
  bool initialized = false;
};

inline DykstraResult dykstra_project(const MarginalMap& map, const Eigen::VectorXd& b,
                                     const Eigen::VectorXd& start, double target_residual,
                                     int max_iterations, int stall_window,
                                     double stall_rel_progress,
                                     DykstraState* state = nullptr) {
  const Eigen::Index d = static_cast<Eigen::Index>(std::lround(
      std::sqrt(static_cast<double>(map.cols()))));
  Eigen::VectorXd x = state && state->initialized ? state->x : start;
  Eigen::VectorXd p = state && state->initialized ? state->p : Eigen::VectorXd::Zero(map.cols());
  Eigen::VectorXd q = state && state->initialized ? state->q : Eigen::VectorXd::Zero(map.cols());

  DykstraResult res;
  double window_best = std::numeric_limits<double>::infinity();
  double prev_window_best = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iterations; ++it) {
    Eigen::VectorXd y = hvec(psd_project(hunvec(x + p, d)));
    p = x + p - y;
    const Eigen::VectorXd z = y + q;
    x = map.affine_project(z, b);
    q = z - x;

    const double r = (map.apply(y) - b).norm();
    res.y = std::move(y);
    res.residual = r;
    if (r < target_residual) {
      res.converged = true;
      ++it;
      break;
    }
    window_best = std::min(window_best, r);
    if ((it + 1) % stall_window == 0) {
      const double progress = (prev_window_best - window_best) /
                              std::max(prev_window_best, 1e-300);
      if (std::isfinite(prev_window_best) && progress < stall_rel_progress) {
        res.stalled = true;
        ++it;
        break;
      }
      prev_window_best = window_best;
      window_best = std::numeric_limits<double>::infinity();
    }
  }
  res.iterations = it;
  res.x = x;
  if (state) {
    state->x = x;
    state->p = p;
    state->q = q;
    state->initialized = true;
  }
  return res;
}

namespace detail {

// Farkas-style certificate from the limiting gap vector v = x - y: if
// W = mat(A^T lambda) with A^T lambda ~ v is negative semidefinite and
// lambda.b > 0, then <W, rho> = lambda.b > 0 on the affine set while
// <W, rho> <= 0 on the cone, so the sets cannot meet.  The reported gap
// subtracts any positive spectral overshoot of W (Tr rho = 1 on the affine
// set makes that correction exact).
inline std::optional<double> infeasibility_certificate(const MarginalMap& map,
                                                       const Eigen::VectorXd& b,
                                                       const Eigen::VectorXd& x,
                                                       const Eigen::VectorXd& y) {
  const Eigen::VectorXd v = x - y;
  if (v.norm() < 1e-12) return std::nullopt;
  const Eigen::VectorXd lambda = map.lift_to_rows(v);
  const Eigen::VectorXd w = map.matrix().transpose() * lambda;
  // v must lie in the row space for the functional to be constant on the
  // affine set; tolerate small numerical leakage relative to |v|.
  if ((w - v).norm() > 1e-6 * v.norm()) return std::nullopt;
  const Eigen::Index d = static_cast<Eigen::Index>(std::lround(
      std::sqrt(static_cast<double>(map.cols()))));
  Eigen::SelfAdjointEigenSolver<Matrix> es(hunvec(w, d), Eigen::EigenvaluesOnly);
  const double overshoot = std::max(es.eigenvalues().maxCoeff(), 0.0);
  const double gap = lambda.dot(b) - overshoot;
  if (gap <= 1e-8) return std::nullopt;
  return gap;
}

inline DensityMatrix normalize_witness(const PartySignature& sig, const Matrix& m) {
  Matrix w = psd_project(m);
  w /= w.trace().real();
  return DensityMatrix::trusted(sig, std::move(w));
}

}  // namespace detail

// Is there any state of the full system, mixed states allowed, with the given
// marginals?  Feasible and Infeasible verdicts follow the residual thresholds
// in `opts`; Infeasible additionally requires stalled progress and is
// accompanied by a separating-functional gap whenever one validates.
inline CompatReport check_mixed(const PartySignature& sig, const std::vector<Marginal>& marginals,
                                const SolverOptions& opts = {}) {
  std::vector<std::vector<int>> subsets;
  for (const auto& m : marginals) subsets.push_back(m.subset);
  const MarginalScenario scenario = MarginalScenario::make(sig, std::move(subsets));
  if (scenario.subsets.size() != marginals.size())
    throw Error(ErrorCode::SignatureMismatch, "duplicate marginal subsets");
  MarginalMap map(scenario);
  const Eigen::VectorXd b = map.stack_targets(marginals);
  const auto D = sig.total_dim();

  const Eigen::VectorXd start = hvec(Matrix::Identity(D, D) / static_cast<double>(D));
  DykstraResult run = dykstra_project(map, b, start, opts.feas_tol, opts.max_iterations,
                                      opts.stall_window, opts.stall_rel_progress);

  CompatReport rep;
  rep.iterations = run.iterations;
  rep.residual = run.residual;
  if (run.converged || run.residual < opts.feas_tol) {
    DensityMatrix w = detail::normalize_witness(sig, hunvec(run.y, D));
    rep.residual = (map.apply(hvec(w.mat)) - b).norm();
    rep.witness = std::move(w);
    rep.verdict = rep.residual < 10 * opts.feas_tol ? Verdict::Feasible : Verdict::Inconclusive;
    return rep;
  }
  if (run.stalled && run.residual > opts.infeas_tol) {
    rep.verdict = Verdict::Infeasible;
    rep.certificate_gap = detail::infeasibility_certificate(map, b, run.x, run.y);
    return rep;
  }
  rep.verdict = Verdict::Inconclusive;
  return rep;
}

// ---------------------------------------------------------------------------
// Pure-state search: projected gradient descent on
//   f(psi) = sum_S | Tr_{S^c}(|psi><psi|) - sigma_S |_F^2
// over unit vectors, multi-start.  Feasible is certified by exhibiting a
// witness; infeasibility of a nonconvex search is only ever heuristic.
// ---------------------------------------------------------------------------

namespace detail {

struct PureObjective {
  const PartySignature& sig;
  const std::vector<Marginal>& marginals;
  std::vector<SubsetIndexer> indexers;

  explicit PureObjective(const PartySignature& s, const std::vector<Marginal>& m)
      : sig(s), marginals(m) {
    for (const auto& mg : marginals) indexers.emplace_back(sig, mg.subset);
  }

  double value(const Vector& psi) const {
    double f = 0.0;
    const PureState ps{sig, psi};
    for (const auto& mg : marginals)
      f += (partial_trace(ps, mg.subset).mat - mg.state.mat).squaredNorm();
    return f;
  }

  // gradient of f with respect to conj(psi)
  Vector gradient(const Vector& psi) const {
    Vector g = Vector::Zero(psi.size());
    const PureState ps{sig, psi};
    for (std::size_t k = 0; k < marginals.size(); ++k) {
      const Matrix r = partial_trace(ps, marginals[k].subset).mat - marginals[k].state.mat;
      // embed(r) * psi without materializing the full operator
      const auto& ix = indexers[k];
      const auto dk = static_cast<Eigen::Index>(ix.keep_offsets.size());
      for (Eigen::Index i = 0; i < dk; ++i)
        for (Eigen::Index j = 0; j < dk; ++j) {
          const cxd rij = r(i, j);
          if (rij == cxd(0.0)) continue;
          for (const std::int64_t e : ix.trace_offsets)
            g[ix.keep_offsets[static_cast<std::size_t>(i)] + e] +=
                rij * psi[ix.keep_offsets[static_cast<std::size_t>(j)] + e];
        }
    }
    return 2.0 * g;
  }
};

struct PureRun {
  double f = std::numeric_limits<double>::infinity();
  Vector psi;
  int iterations = 0;
};

inline PureRun pure_descent(const PureObjective& obj, Vector psi, int max_iterations,
                            double target) {
  PureRun out;
  double f = obj.value(psi);
  Vector g = obj.gradient(psi);
  double step = 0.5;
  int it = 0;
  for (; it < max_iterations && f > target; ++it) {
    Vector cand = psi - step * g;
    cand /= cand.norm();
    const double fc = obj.value(cand);
    if (fc < f) {
      psi = std::move(cand);
      f = fc;
      g = obj.gradient(psi);
      step *= 1.3;
    } else {
      step *= 0.5;
      if (step < 1e-18) break;
    }
  }
  out.f = f;
  out.psi = std::move(psi);
  out.iterations = it;
  return out;
}

}  // namespace detail

inline CompatReport check_pure(const PartySignature& sig, const std::vector<Marginal>& marginals,
                               const SolverOptions& opts = {}) {
  for (const auto& m : marginals) {
    check_subset(sig, m.subset);
    if (m.state.sig != sig.restricted(m.subset))
      throw Error(ErrorCode::SignatureMismatch, "marginal state does not match subset dims");
  }
  if (sig.total_dim() > MarginalMap::kMaxDim)
    throw Error(ErrorCode::DimensionTooLarge, "check_pure supports total dimension <= " +
                                                  std::to_string(MarginalMap::kMaxDim));
  detail::PureObjective obj(sig, marginals);

  // Restarts are merged by best residual with index order as the
  // deterministic tie-break, so --jobs cannot change the answer.
  detail::PureRun best;
  int total_iterations = 0;
  const double target = 0.01 * opts.feas_tol * opts.feas_tol;
  for (int r = 0; r < opts.restarts; ++r) {
    const auto psi0 = haar_random_pure(sig, derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
    detail::PureRun run = detail::pure_descent(obj, psi0.amps, opts.pure_iterations, target);
    total_iterations += run.iterations;
    if (run.f < best.f) best = std::move(run);
    if (best.f < target) break;
  }

  CompatReport rep;
  rep.iterations = total_iterations;
  rep.residual = std::sqrt(std::max(best.f, 0.0));
  if (rep.residual < opts.feas_tol) {
    rep.verdict = Verdict::Feasible;
    rep.witness = DensityMatrix::from_pure(PureState::make(sig, best.psi, false));
    return rep;
  }
  // min f across every restart stayed above the infeasibility level
  if (rep.residual > opts.infeas_tol) {
    rep.verdict = Verdict::Infeasible;
    rep.heuristic = true;  // nonconvex search; no certificate
    rep.witness = DensityMatrix::from_pure(PureState::make(sig, best.psi, false));
    return rep;
  }
  rep.verdict = Verdict::Inconclusive;
  if (best.psi.size() > 0)
    rep.witness = DensityMatrix::from_pure(PureState::make(sig, best.psi, false));
  return rep;
}

}  // namespace marginalis
