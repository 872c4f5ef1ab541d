#include <catch2/catch_amalgamated.hpp>

#include "marginalis/marginal.hpp"
#include "marginalis/states.hpp"

using namespace marginalis;

TEST_CASE("half-plus-one scenario") {
  SECTION("N=8 gives the four five-party subsets sharing the fixed block") {
    auto sc = half_plus_one_scenario(PartySignature::qubits(8));
    REQUIRE(sc.subsets.size() == 4);
    CHECK(sc.subsets[0] == std::vector<int>{0, 4, 5, 6, 7});
    CHECK(sc.subsets[1] == std::vector<int>{1, 4, 5, 6, 7});
    CHECK(sc.subsets[2] == std::vector<int>{2, 4, 5, 6, 7});
    CHECK(sc.subsets[3] == std::vector<int>{3, 4, 5, 6, 7});
  }
  SECTION("N=2 degenerates to the single full subset") {
    auto sc = half_plus_one_scenario(PartySignature::qubits(2));
    REQUIRE(sc.subsets.size() == 1);
    CHECK(sc.subsets[0] == std::vector<int>{0, 1});
  }
  SECTION("N=4") {
    auto sc = half_plus_one_scenario(PartySignature::qubits(4));
    REQUIRE(sc.subsets.size() == 2);
    CHECK(sc.subsets[0] == std::vector<int>{0, 2, 3});
    CHECK(sc.subsets[1] == std::vector<int>{1, 2, 3});
  }
  SECTION("odd N rejected") {
    CHECK_THROWS_AS(half_plus_one_scenario(PartySignature::qubits(3)), Error);
  }
  SECTION("every subset contains the fixed block") {
    for (int n : {2, 4, 6, 8}) {
      auto sc = half_plus_one_scenario(PartySignature::qubits(n));
      CHECK(static_cast<int>(sc.subsets.size()) == n / 2);
      for (const auto& s : sc.subsets) {
        CHECK(static_cast<int>(s.size()) == n / 2 + 1);
        for (int p = n / 2; p < n; ++p)
          CHECK(std::find(s.begin(), s.end(), p) != s.end());
      }
    }
  }
}

TEST_CASE("odd scenario") {
  SECTION("N=3 is the single full subset") {
    auto sc = odd_scenario(PartySignature::qubits(3));
    REQUIRE(sc.subsets.size() == 1);
    CHECK(sc.subsets[0] == std::vector<int>{0, 1, 2});
  }
  SECTION("N=5") {
    auto sc = odd_scenario(PartySignature::qubits(5));
    REQUIRE(sc.subsets.size() == 2);
    CHECK(sc.subsets[0] == std::vector<int>{0, 2, 3, 4});
    CHECK(sc.subsets[1] == std::vector<int>{1, 2, 3, 4});
    for (const auto& s : sc.subsets) CHECK(s.size() == 4);  // (N+3)/2
  }
  SECTION("even N rejected") {
    CHECK_THROWS_AS(odd_scenario(PartySignature::qubits(4)), Error);
  }
}

TEST_CASE("scenario canonicalization") {
  auto sc = MarginalScenario::make(PartySignature::qubits(3), {{2, 0}, {0, 2}, {1}});
  REQUIRE(sc.subsets.size() == 2);
  CHECK(sc.subsets[0] == std::vector<int>{0, 2});
  CHECK(sc.subsets[1] == std::vector<int>{1});
  CHECK_THROWS_AS(MarginalScenario::make(PartySignature::qubits(2), {{0, 3}}), Error);
  CHECK_THROWS_AS(MarginalScenario::make(PartySignature::qubits(2), {{}}), Error);
}

TEST_CASE("extract") {
  SECTION("|0000> half-plus-one marginals are |000><000|") {
    PartySignature sig = PartySignature::qubits(4);
    auto psi = basis_state(sig, {0, 0, 0, 0});
    auto ms = extract(psi, half_plus_one_scenario(sig));
    REQUIRE(ms.size() == 2);
    for (const auto& m : ms) {
      Matrix expect = Matrix::Zero(8, 8);
      expect(0, 0) = 1.0;
      CHECK((m.state.mat - expect).norm() < 1e-14);
    }
  }
  SECTION("Bell state single-party marginals are I/2") {
    auto bell = bell_state();
    auto ms = extract(bell, MarginalScenario::make(bell.sig, {{0}, {1}}));
    for (const auto& m : ms)
      CHECK((m.state.mat - Matrix::Identity(2, 2) * 0.5).norm() < 1e-14);
  }
  SECTION("random 4-qubit state, all 2-subsets: 6 unit-trace PSD marginals") {
    PartySignature sig = PartySignature::qubits(4);
    auto psi = haar_random_pure(sig, 3);
    auto ms = extract(psi, all_subsets_scenario(sig, 2));
    REQUIRE(ms.size() == 6);
    for (const auto& m : ms) {
      CHECK(std::abs(m.state.mat.trace().real() - 1.0) < 1e-12);
      auto sp = eigh(m.state.mat);
      CHECK(sp.eigenvalues.minCoeff() > -1e-12);
    }
  }
}

TEST_CASE("precheck overlap condition") {
  SECTION("Bell triple has consistent one-party reductions") {
    auto bell = DensityMatrix::from_pure(bell_state());
    std::vector<Marginal> ms = {{{0, 1}, bell}, {{1, 2}, bell}, {{0, 2}, bell}};
    auto rep = precheck(ms, false);
    CHECK(rep.overlap_ok);
    CHECK(rep.overlap_worst_residual < 1e-12);
  }
  SECTION("the sigma/tau/eta trio passes both conditions") {
    auto trio = incompatible_trio();
    std::vector<Marginal> ms = {
        {{0, 1}, trio.sigma_ab}, {{1, 2}, trio.tau_bc}, {{0, 2}, trio.eta_ac}};
    auto rep = precheck(ms, true);
    CHECK(rep.overlap_ok);
    CHECK(rep.schmidt_ok);
    // condition (2) rows were actually produced, not vacuously skipped
    int schmidt_rows = 0;
    for (const auto& d : rep.details)
      if (d.kind == "schmidt") ++schmidt_rows;
    CHECK(schmidt_rows == 3);
  }
  SECTION("contradictory overlap is flagged") {
    PartySignature two = PartySignature::qubits(2);
    auto m00 = DensityMatrix::from_pure(basis_state(two, {0, 0}));
    auto m11 = DensityMatrix::from_pure(basis_state(two, {1, 1}));
    std::vector<Marginal> ms = {{{0, 1}, m00}, {{1, 2}, m11}};
    auto rep = precheck(ms, false);
    CHECK_FALSE(rep.overlap_ok);
    CHECK(rep.overlap_worst_residual > 1e-8);
    CHECK(rep.overlap_worst_residual == Catch::Approx(std::sqrt(2.0)));
  }
}

TEST_CASE("true marginals always pass precheck") {
  for (int n : {3, 4, 5, 6}) {
    PartySignature sig = PartySignature::qubits(n);
    auto psi = haar_random_pure(sig, static_cast<std::uint64_t>(60 + n));
    std::vector<MarginalScenario> scenarios;
    scenarios.push_back(all_subsets_scenario(sig, 2));
    scenarios.push_back(n % 2 == 0 ? half_plus_one_scenario(sig) : odd_scenario(sig));
    for (const auto& sc : scenarios) {
      auto rep = precheck(extract(psi, sc), true, sig);
      INFO("n=" << n);
      CHECK(rep.overlap_ok);
      CHECK(rep.overlap_worst_residual < 1e-10);
      CHECK(rep.schmidt_ok);
    }
  }
}

TEST_CASE("precheck infers dimensions and rejects conflicts") {
  auto bell = DensityMatrix::from_pure(bell_state());
  auto qutrit_pair = random_density_matrix(PartySignature({3, 3}), 9);
  std::vector<Marginal> ms = {{{0, 1}, bell}, {{1, 2}, qutrit_pair}};
  CHECK_THROWS_AS(precheck(ms, false), Error);
}
