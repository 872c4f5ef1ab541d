#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "marginalis/polysystem.hpp"
#include "marginalis/states.hpp"

using namespace marginalis;

TEST_CASE("rational and scalar arithmetic") {
  auto a = Rational::of(1, 8);
  auto b = Rational::of(3, 8);
  CHECK((a + b) == Rational::of(1, 2));
  CHECK((a * b) == Rational::of(3, 64));
  CHECK((a - b) == Rational::of(-1, 4));
  CHECK(Rational::of(-2, -4) == Rational::of(1, 2));
  CHECK_THROWS_AS(Rational::of(1, 0), Error);

  CHECK(PolyScalar::from_double(0.5).exact());
  CHECK(PolyScalar::from_double(0.5).rat() == Rational::of(1, 2));
  CHECK(PolyScalar::from_double(0.0).exact());
  CHECK(PolyScalar::from_double(1.0 / 3.0).rat() == Rational::of(1, 3));
  CHECK_FALSE(PolyScalar::from_double(0.7234098213740981).exact());
  // mixed arithmetic degrades to decimal
  CHECK_FALSE((PolyScalar::integer(1) + PolyScalar::decimal(0.25)).exact());
}

TEST_CASE("coefficient names") {
  PartySignature three = PartySignature::qubits(3);
  CHECK(coeff_name(three, {1, 0, 0}) == "alpha_1");
  CHECK(coeff_name(three, {0, 2, 0}) == "beta_2");
  CHECK(coeff_name(three, {0, 0, 3}) == "gamma_3");
  CHECK(coeff_name(three, {1, 2, 0}) == "R_12");
  CHECK(coeff_name(three, {1, 0, 2}) == "S_12");
  CHECK(coeff_name(three, {0, 1, 2}) == "T_12");
  CHECK(coeff_name(three, {3, 3, 3}) == "Q_333");
  CHECK(coeff_names(three).size() == 63);
  CHECK(expand_coeff_group(three, "Q").size() == 27);
  CHECK(expand_coeff_group(three, "alpha").size() == 3);
  CHECK(expand_coeff_group(three, "R_12").size() == 1);
  CHECK_THROWS_AS(expand_coeff_group(three, "Z"), Error);

  PartySignature four = PartySignature::qubits(4);
  CHECK(coeff_name(four, {1, 0, 2, 0}) == "c_1_0_2_0");
  PartySignature qutrit({3});
  CHECK(coeff_name(qutrit, {5}) == "c_5");
}

TEST_CASE("all-correlations-zero three-qubit system is the contradictory pair") {
  BlochTensor zero(PartySignature::qubits(3));
  auto sys = export_polysystem(zero, {"Q"});
  REQUIRE(sys.variables.size() == 27);

  // p1 = (1/8) sum Q^2 - 7/8: every quadratic coefficient 1/8, constant -7/8
  const PolyScalar c18 = PolyScalar::rational(Rational::of(1, 8));
  const PolyScalar cm78 = PolyScalar::rational(Rational::of(-7, 8));
  int quads = 0;
  for (const auto& [m, c] : sys.p1.terms) {
    if (m.empty()) {
      CHECK(c == cm78);
    } else {
      REQUIRE(m.size() == 1);
      CHECK(m[0].second == 2);
      CHECK(c == c18);
      ++quads;
    }
  }
  CHECK(quads == 27);

  // p2 = (3/64) sum Q^2 - 63/64: the sphere sum Q^2 = 21
  const PolyScalar c364 = PolyScalar::rational(Rational::of(3, 64));
  const PolyScalar cm6364 = PolyScalar::rational(Rational::of(-63, 64));
  quads = 0;
  for (const auto& [m, c] : sys.p2.terms) {
    if (m.empty()) {
      CHECK(c == cm6364);
    } else {
      REQUIRE(m.size() == 1);
      REQUIRE(m[0].second == 2);
      CHECK(c == c364);
      ++quads;
    }
  }
  CHECK(quads == 27);

  // jointly infeasible: sum Q^2 would have to equal both 7 and 21.
  // cross-check numerically that real states stay far from the premise:
  // no random pure 3-qubit state has all alpha..T magnitudes below 0.1
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto b = decompose(DensityMatrix::from_pure(haar_random_pure(PartySignature::qubits(3), s)));
    double low_order = 0.0;
    for (const auto& [name, k] : coeff_names(PartySignature::qubits(3)))
      if (name[0] != 'Q') low_order = std::max(low_order, std::abs(b.get(k)));
    CHECK(low_order > 0.1);
  }
}

TEST_CASE("one-qubit sphere") {
  BlochTensor zero(PartySignature::qubits(1));
  auto sys = export_polysystem(zero, {"alpha"});
  REQUIRE(sys.variables == std::vector<std::string>{"alpha_1", "alpha_2", "alpha_3"});
  // p1: (1/2)(1 + sum a^2) - 1 -> sum a^2 = 1
  CHECK(sys.p1.terms.at({}) == PolyScalar::rational(Rational::of(-1, 2)));
  CHECK(sys.p1.terms.at({{0, 2}}) == PolyScalar::rational(Rational::of(1, 2)));
  // p2: (1/4)(1 + 3 sum a^2) - 1 -> the same unit sphere
  CHECK(sys.p2.terms.at({}) == PolyScalar::rational(Rational::of(-3, 4)));
  CHECK(sys.p2.terms.at({{0, 2}}) == PolyScalar::rational(Rational::of(3, 4)));
  // no cubic monomials survive the antisymmetric contraction
  for (const auto& [m, c] : sys.p2.terms) CHECK(monomial_degree(m) <= 2);
}

TEST_CASE("a state's own coefficients are a root of its exported system") {
  PartySignature sig = PartySignature::qubits(3);
  for (std::uint64_t s = 100; s < 103; ++s) {
    auto psi = haar_random_pure(sig, s);
    auto b = decompose(DensityMatrix::from_pure(psi));
    auto sys = export_polysystem(b, {"Q"});
    std::vector<double> q(sys.variables.size());
    for (std::size_t i = 0; i < sys.variables.size(); ++i) {
      // recover the multi-index of this Q name: Q_ijk
      const std::string& name = sys.variables[i];
      q[i] = b.get({name[2] - '0', name[3] - '0', name[4] - '0'});
    }
    CHECK(std::abs(sys.p1.evaluate(q)) < 1e-9);
    CHECK(std::abs(sys.p2.evaluate(q)) < 1e-9);
    CHECK(std::abs(sys.sextic.evaluate(q)) < 1e-9);
    // both quadratics in Q, as the substitution structure promises
    for (const auto& [m, c] : sys.p2.terms) CHECK(monomial_degree(m) <= 2);
  }
}

TEST_CASE("exported polynomials match direct purity traces when nothing is unknown") {
  PartySignature sig = PartySignature::qubits(2);
  auto rho = random_density_matrix(sig, 7);
  auto b = decompose(rho);
  std::map<std::string, PolyScalar> known;
  for (const auto& [name, k] : coeff_names(sig)) known[name] = PolyScalar::from_double(b.get(k));
  auto sys = export_polysystem(sig, known, {});
  auto rep = purity_check(rho.mat);
  CHECK(sys.p1.evaluate({}) == Catch::Approx(rep.tr2 - 1.0).margin(1e-10));
  CHECK(sys.p2.evaluate({}) == Catch::Approx(rep.tr3 - 1.0).margin(1e-10));
}

TEST_CASE("coverage and overlap validation") {
  PartySignature sig = PartySignature::qubits(1);
  std::map<std::string, PolyScalar> known;
  known["alpha_1"] = PolyScalar::integer(0);
  CHECK_THROWS_AS(export_polysystem(sig, known, {"alpha_3"}), Error);  // alpha_2 uncovered
  try {
    export_polysystem(sig, known, {"alpha_3"});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CoverageGap);
  }
  known["alpha_2"] = PolyScalar::integer(0);
  known["alpha_3"] = PolyScalar::integer(0);
  CHECK_THROWS_AS(export_polysystem(sig, known, {"alpha_3"}), Error);
  try {
    export_polysystem(sig, known, {"alpha_3"});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Overlap);
  }
  CHECK_THROWS_AS(export_polysystem(PartySignature({3}), {}, {"c_1"}), Error);
}

TEST_CASE("polynomial files round-trip exactly") {
  SECTION("exact rational system") {
    BlochTensor zero(PartySignature::qubits(3));
    auto sys = export_polysystem(zero, {"Q"});
    std::ostringstream os;
    write_polysystem(sys, os);
    const std::string text = os.str();
    // the contradictory constants appear verbatim as exact rationals
    CHECK(text.find("7/8") != std::string::npos);
    CHECK(text.find("63/64") != std::string::npos);
    CHECK(text.find("1/8*Q_111^2") != std::string::npos);
    std::istringstream is(text);
    auto back = parse_polysystem(is);
    CHECK(back == sys);
  }
  SECTION("decimal coefficients survive the 17-digit round trip") {
    PartySignature sig = PartySignature::qubits(3);
    auto b = decompose(DensityMatrix::from_pure(haar_random_pure(sig, 55)));
    auto sys = export_polysystem(b, {"Q"});
    std::ostringstream os;
    write_polysystem(sys, os);
    std::istringstream is(os.str());
    auto back = parse_polysystem(is);
    CHECK(back == sys);
  }
  SECTION("empty unknown set still writes a valid file") {
    PartySignature sig = PartySignature::qubits(1);
    std::map<std::string, PolyScalar> known;
    known["alpha_1"] = PolyScalar::integer(0);
    known["alpha_2"] = PolyScalar::integer(0);
    known["alpha_3"] = PolyScalar::integer(1);
    auto sys = export_polysystem(sig, known, {});
    std::ostringstream os;
    write_polysystem(sys, os);
    std::istringstream is(os.str());
    auto back = parse_polysystem(is);
    CHECK(back == sys);
    CHECK(back.p1.evaluate({}) == Catch::Approx(0.0).margin(1e-12));  // |0><0| is pure
  }
}

TEST_CASE("parser grammar") {
  std::map<std::string, int> ids{{"x", 0}, {"y", 1}};
  auto p = parse_polynomial("x^2 + 2*x*y - 3/4*y^2 - 1 = 0", ids);
  CHECK(p.terms.at({{0, 2}}) == PolyScalar::integer(1));
  CHECK(p.terms.at({{0, 1}, {1, 1}}) == PolyScalar::integer(2));
  CHECK(p.terms.at({{1, 2}}) == PolyScalar::rational(Rational::of(-3, 4)));
  CHECK(p.terms.at({}) == PolyScalar::integer(-1));

  auto q = parse_polynomial("-x + 0.25 = 0", ids);
  CHECK(q.terms.at({{0, 1}}) == PolyScalar::integer(-1));
  CHECK(q.terms.at({}) == PolyScalar::decimal(0.25));

  CHECK_THROWS_AS(parse_polynomial("x + z = 0", ids), Error);
  CHECK_THROWS_AS(parse_polynomial("x + 1", ids), Error);
  CHECK_THROWS_AS(parse_polynomial("x = 1", ids), Error);

  // repeated variables multiply out
  auto r = parse_polynomial("x*x*y = 0", ids);
  CHECK(r.terms.at({{0, 2}, {1, 1}}) == PolyScalar::integer(1));
}
