#pragma once

#include <cmath>
#include <vector>

#include "marginalis/tensor.hpp"

namespace marginalis {

// Named constructions used by tests, fixtures and the reproduction suite.
// Everything here is built programmatically; no hand-typed matrices.

inline PureState basis_state(const PartySignature& sig, const std::vector<int>& digits) {
  Vector amps = Vector::Zero(sig.total_dim());
  amps[sig.index_of(digits)] = 1.0;
  return PureState::make(sig, std::move(amps), false);
}

// (|00> + |11>)/sqrt(2) on two qudits of dimension d.
inline PureState bell_state(int d = 2) {
  PartySignature sig({d, d});
  Vector amps = Vector::Zero(sig.total_dim());
  const double w = 1.0 / std::sqrt(2.0);
  amps[sig.index_of({0, 0})] = w;
  amps[sig.index_of({1, 1})] = w;
  return PureState::make(sig, std::move(amps), false);
}

// (|0...0> + e^{i theta} |1...1>)/sqrt(2) on n qubits.
inline PureState ghz_state(int n, double theta = 0.0) {
  PartySignature sig = PartySignature::qubits(n);
  Vector amps = Vector::Zero(sig.total_dim());
  const double w = 1.0 / std::sqrt(2.0);
  amps[0] = w;
  amps[sig.total_dim() - 1] = w * cxd(std::cos(theta), std::sin(theta));
  return PureState::make(sig, std::move(amps), false);
}

namespace detail {
inline Matrix ket_bra(const PartySignature& sig, const std::vector<int>& a,
                      const std::vector<int>& b) {
  Matrix m = Matrix::Zero(sig.total_dim(), sig.total_dim());
  m(sig.index_of(a), sig.index_of(b)) = 1.0;
  return m;
}
}  // namespace detail

// The two-qubit trio with consistent one-party reductions and matching
// bipartite spectra that still admits no joint three-party state.
//
//   sigma_AB = 1/4 (|00><00| + |11><11| + |01><01| + |10><10|
//                   + |00><01| - |10><11| + |01><00| - |11><10|)
//   tau_BC = eta_AC = 1/2 (|00><00| + |11><11|)
struct IncompatibleTrio {
  DensityMatrix sigma_ab;
  DensityMatrix tau_bc;
  DensityMatrix eta_ac;
};

inline IncompatibleTrio incompatible_trio() {
  using detail::ket_bra;
  const PartySignature two = PartySignature::qubits(2);
  Matrix sigma = ket_bra(two, {0, 0}, {0, 0}) + ket_bra(two, {1, 1}, {1, 1}) +
                 ket_bra(two, {0, 1}, {0, 1}) + ket_bra(two, {1, 0}, {1, 0}) +
                 ket_bra(two, {0, 0}, {0, 1}) - ket_bra(two, {1, 0}, {1, 1}) +
                 ket_bra(two, {0, 1}, {0, 0}) - ket_bra(two, {1, 1}, {1, 0});
  sigma *= 0.25;
  Matrix tau = 0.5 * (ket_bra(two, {0, 0}, {0, 0}) + ket_bra(two, {1, 1}, {1, 1}));
  return IncompatibleTrio{DensityMatrix::make(two, std::move(sigma)),
                          DensityMatrix::make(two, tau),
                          DensityMatrix::make(two, std::move(tau))};
}

}  // namespace marginalis
