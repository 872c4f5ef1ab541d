#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "marginalis/bloch.hpp"

namespace marginalis {

// ---------------------------------------------------------------------------
// Exact rationals (64-bit, overflow-checked) and a scalar that stays exact as
// long as every input was rational, degrading to 17-significant-digit
// decimals otherwise.
// ---------------------------------------------------------------------------

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational of(std::int64_t n, std::int64_t d = 1) {
    if (d == 0) throw Error(ErrorCode::Overflow, "zero denominator");
    Rational r{n, d};
    r.normalize();
    return r;
  }

  void normalize() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    if (num == 0) den = 1;
  }

  static Rational checked(__int128 n, __int128 d) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    const __int128 limit = std::numeric_limits<std::int64_t>::max();
    // reduce first so bounded intermediates usually survive
    const auto abs128 = [](__int128 v) { return v < 0 ? -v : v; };
    __int128 a = abs128(n), b = d;
    while (b) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      n /= a;
      d /= a;
    }
    if (n > limit || n < -limit || d > limit)
      throw Error(ErrorCode::Overflow, "rational arithmetic exceeded 64 bits");
    return Rational{static_cast<std::int64_t>(n), static_cast<std::int64_t>(d == 0 ? 1 : d)};
  }

  Rational operator+(const Rational& o) const {
    return checked(static_cast<__int128>(num) * o.den + static_cast<__int128>(o.num) * den,
                   static_cast<__int128>(den) * o.den);
  }
  Rational operator-(const Rational& o) const {
    return checked(static_cast<__int128>(num) * o.den - static_cast<__int128>(o.num) * den,
                   static_cast<__int128>(den) * o.den);
  }
  Rational operator*(const Rational& o) const {
    return checked(static_cast<__int128>(num) * o.num, static_cast<__int128>(den) * o.den);
  }
  Rational operator-() const { return Rational{-num, den}; }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  bool is_zero() const { return num == 0; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  std::string to_string() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }
};

class PolyScalar {
 public:
  PolyScalar() : exact_(true), r_{0, 1} {}
  static PolyScalar rational(Rational r) {
    PolyScalar s;
    s.exact_ = true;
    s.r_ = r;
    return s;
  }
  static PolyScalar integer(std::int64_t n) { return rational(Rational{n, 1}); }
  static PolyScalar decimal(double d) {
    PolyScalar s;
    s.exact_ = false;
    s.d_ = d;
    return s;
  }
  // Recognizes doubles that are exactly small rationals (continued
  // fractions, denominator <= 2^20, exact reproduction required).
  static PolyScalar from_double(double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::IoError, "non-finite coefficient");
    double x = v;
    std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int it = 0; it < 40; ++it) {
      const double fl = std::floor(x);
      if (std::abs(fl) > 1e15) break;
      const auto a = static_cast<std::int64_t>(fl);
      const std::int64_t p2 = a * p1 + p0, q2 = a * q1 + q0;
      if (q2 > (1 << 20) || q2 < 0) break;
      p0 = p1;
      q0 = q1;
      p1 = p2;
      q1 = q2;
      if (q1 != 0 && static_cast<double>(p1) / static_cast<double>(q1) == v)
        return rational(Rational::of(p1, q1));
      const double frac = x - fl;
      if (frac == 0.0) break;
      x = 1.0 / frac;
    }
    return decimal(v);
  }

  bool exact() const { return exact_; }
  const Rational& rat() const { return r_; }
  double to_double() const { return exact_ ? r_.to_double() : d_; }
  bool is_zero() const { return exact_ ? r_.is_zero() : d_ == 0.0; }

  PolyScalar operator+(const PolyScalar& o) const {
    if (exact_ && o.exact_) return rational(r_ + o.r_);
    return decimal(to_double() + o.to_double());
  }
  PolyScalar operator-(const PolyScalar& o) const {
    if (exact_ && o.exact_) return rational(r_ - o.r_);
    return decimal(to_double() - o.to_double());
  }
  PolyScalar operator*(const PolyScalar& o) const {
    if (exact_ && o.exact_) return rational(r_ * o.r_);
    return decimal(to_double() * o.to_double());
  }
  PolyScalar operator-() const { return exact_ ? rational(-r_) : decimal(-d_); }
  bool operator==(const PolyScalar& o) const {
    if (exact_ != o.exact_) return false;
    return exact_ ? r_ == o.r_ : d_ == o.d_;
  }

  std::string to_string() const {
    if (exact_) return r_.to_string();
    std::ostringstream os;
    os.precision(17);
    os << d_;
    return os.str();
  }

 private:
  bool exact_;
  Rational r_{0, 1};
  double d_ = 0.0;
};

// ---------------------------------------------------------------------------
// Polynomials over named real unknowns.
// ---------------------------------------------------------------------------

// (variable id, exponent) pairs, sorted by id; ids index PolySystem::variables
// which is name-sorted, so id order is name order.
using Monomial = std::vector<std::pair<int, int>>;

inline int monomial_degree(const Monomial& m) {
  int d = 0;
  for (const auto& [v, e] : m) d += e;
  return d;
}

struct Polynomial {
  std::map<Monomial, PolyScalar> terms;

  void add(const Monomial& m, const PolyScalar& c) {
    if (c.is_zero()) return;
    auto it = terms.find(m);
    if (it == terms.end()) {
      terms.emplace(m, c);
    } else {
      it->second = it->second + c;
      if (it->second.is_zero()) terms.erase(it);
    }
  }

  Polynomial operator*(const Polynomial& o) const {
    Polynomial out;
    for (const auto& [ma, ca] : terms)
      for (const auto& [mb, cb] : o.terms) {
        Monomial m;
        std::size_t i = 0, j = 0;
        while (i < ma.size() || j < mb.size()) {
          if (j == mb.size() || (i < ma.size() && ma[i].first < mb[j].first)) m.push_back(ma[i++]);
          else if (i == ma.size() || mb[j].first < ma[i].first) m.push_back(mb[j++]);
          else {
            m.emplace_back(ma[i].first, ma[i].second + mb[j].second);
            ++i;
            ++j;
          }
        }
        out.add(m, ca * cb);
      }
    return out;
  }

  Polynomial operator+(const Polynomial& o) const {
    Polynomial out = *this;
    for (const auto& [m, c] : o.terms) out.add(m, c);
    return out;
  }

  double evaluate(const std::vector<double>& values) const {
    double acc = 0.0;
    for (const auto& [m, c] : terms) {
      double t = c.to_double();
      for (const auto& [v, e] : m)
        for (int k = 0; k < e; ++k) t *= values[static_cast<std::size_t>(v)];
      acc += t;
    }
    return acc;
  }

  bool operator==(const Polynomial& o) const { return terms == o.terms; }
};

struct PolySystem {
  PartySignature sig;
  std::vector<std::string> variables;              // name-sorted unknowns
  std::map<std::string, PolyScalar> substitutions; // fixed coefficient values
  Polynomial p1;      // Tr rho^2 - 1
  Polynomial p2;      // Tr rho^3 - 1
  Polynomial sextic;  // p1^2 + p2^2

  bool operator==(const PolySystem& o) const {
    return sig == o.sig && variables == o.variables && substitutions == o.substitutions &&
           p1 == o.p1 && p2 == o.p2 && sextic == o.sextic;
  }
};

// ---------------------------------------------------------------------------
// Coefficient names.  One- to three-qubit systems use the conventional
// letters (alpha/beta/gamma for one-party strings, R/S/T for the two-party
// pairs in party order, Q for three-party); anything else falls back to
// c_<k1>_<k2>_... with the raw string indices.
// ---------------------------------------------------------------------------

inline std::string coeff_name(const PartySignature& sig, const std::vector<int>& k) {
  const int n = sig.parties();
  const bool qubits = sig.equidimensional() && sig.dim(0) == 2;
  std::vector<int> live;
  for (int t = 0; t < n; ++t)
    if (k[static_cast<std::size_t>(t)] != 0) live.push_back(t);
  if (qubits && n <= 3 && !live.empty()) {
    static const std::array<const char*, 3> one{"alpha", "beta", "gamma"};
    std::string idx;
    for (int t : live) idx += std::to_string(k[static_cast<std::size_t>(t)]);
    if (live.size() == 1) return std::string(one[static_cast<std::size_t>(live[0])]) + "_" + idx;
    if (live.size() == 2) {
      if (n == 2) return "R_" + idx;
      if (live[0] == 0 && live[1] == 1) return "R_" + idx;
      if (live[0] == 0 && live[1] == 2) return "S_" + idx;
      return "T_" + idx;
    }
    return "Q_" + idx;
  }
  std::string name = "c";
  for (int t = 0; t < n; ++t) name += "_" + std::to_string(k[static_cast<std::size_t>(t)]);
  return name;
}

// All non-identity coefficient names, paired with their multi-indices.
inline std::vector<std::pair<std::string, std::vector<int>>> coeff_names(const PartySignature& sig) {
  std::vector<int> cdims;
  for (int d : sig.dims()) cdims.push_back(d * d);
  PartySignature cs(cdims);
  std::vector<std::pair<std::string, std::vector<int>>> out;
  for (std::int64_t i = 1; i < cs.total_dim(); ++i) {
    auto k = cs.digits(i);
    out.emplace_back(coeff_name(sig, k), std::move(k));
  }
  return out;
}

// Expands a name, or a group prefix like "Q" / "alpha" / "c", to full names.
inline std::vector<std::string> expand_coeff_group(const PartySignature& sig,
                                                   const std::string& token) {
  std::vector<std::string> out;
  for (const auto& [name, k] : coeff_names(sig)) {
    if (name == token || name.rfind(token + "_", 0) == 0) out.push_back(name);
  }
  if (out.empty())
    throw Error(ErrorCode::IndexOutOfRange, "no coefficient matches '" + token + "'");
  return out;
}

// ---------------------------------------------------------------------------
// The exporter.  Qubit signatures only: the operator-string structure
// constants are then Gaussian integers and the emitted coefficients stay
// exact.  N is capped by the 16^N structure-constant enumeration.
// ---------------------------------------------------------------------------

namespace detail {

struct TripleEntry {  // per-party nonzero Tr(s_a s_b s_c)/2 values
  int a, b, c;
  int re, im;  // value is re + i*im, a Gaussian unit
};

inline const std::vector<TripleEntry>& qubit_triples() {
  static const std::vector<TripleEntry> table = [] {
    std::vector<TripleEntry> t;
    t.push_back({0, 0, 0, 1, 0});
    for (int a = 1; a <= 3; ++a) {
      t.push_back({a, a, 0, 1, 0});
      t.push_back({a, 0, a, 1, 0});
      t.push_back({0, a, a, 1, 0});
    }
    for (int a = 1; a <= 3; ++a)
      for (int b = 1; b <= 3; ++b)
        for (int c = 1; c <= 3; ++c) {
          const int e = (a - b) * (b - c) * (c - a) / 2;
          if (e != 0) t.push_back({a, b, c, 0, e});
        }
    return t;
  }();
  return table;
}

struct GaussScalar {  // re + i*im with PolyScalar parts
  PolyScalar re, im;
};

}  // namespace detail

inline PolySystem export_polysystem(const PartySignature& sig,
                                    const std::map<std::string, PolyScalar>& known,
                                    const std::vector<std::string>& unknowns) {
  if (!sig.equidimensional() || sig.dim(0) != 2)
    throw Error(ErrorCode::WrongSignature,
                "polynomial export is defined for qubit signatures (exact coefficients)");
  const int n = sig.parties();
  if (n > 6) throw Error(ErrorCode::DimensionTooLarge, "polynomial export supports up to 6 qubits");

  const auto names = coeff_names(sig);
  std::map<std::string, std::vector<int>> index_of;
  for (const auto& [name, k] : names) index_of[name] = k;

  // coverage and overlap checks
  std::set<std::string> unknown_set(unknowns.begin(), unknowns.end());
  for (const auto& u : unknown_set) {
    if (!index_of.count(u))
      throw Error(ErrorCode::IndexOutOfRange, "unknown coefficient name '" + u + "'");
    if (known.count(u)) throw Error(ErrorCode::Overlap, "'" + u + "' is both known and unknown");
  }
  for (const auto& [name, k] : names)
    if (!unknown_set.count(name) && !known.count(name))
      throw Error(ErrorCode::CoverageGap, "coefficient '" + name + "' is neither known nor unknown");
  for (const auto& [name, v] : known)
    if (!index_of.count(name))
      throw Error(ErrorCode::IndexOutOfRange, "known coefficient name '" + name + "'");

  PolySystem sys;
  sys.sig = sig;
  sys.variables.assign(unknown_set.begin(), unknown_set.end());  // set order = sorted
  sys.substitutions = known;

  // flat indexing of all strings (identity included) over 4^n
  PartySignature cs(std::vector<int>(static_cast<std::size_t>(n), 4));
  const std::int64_t total = cs.total_dim();
  // per string: -1 known, else variable id
  std::vector<int> var_of(static_cast<std::size_t>(total), -1);
  std::vector<PolyScalar> value_of(static_cast<std::size_t>(total), PolyScalar::integer(0));
  value_of[0] = PolyScalar::integer(1);  // all-identity coefficient
  std::map<std::string, int> var_id;
  for (std::size_t i = 0; i < sys.variables.size(); ++i)
    var_id[sys.variables[i]] = static_cast<int>(i);
  for (const auto& [name, k] : names) {
    const std::int64_t flat = cs.index_of(k);
    if (unknown_set.count(name)) var_of[static_cast<std::size_t>(flat)] = var_id[name];
    else value_of[static_cast<std::size_t>(flat)] = known.at(name);
  }

  const std::int64_t D = sig.total_dim();
  const auto inv_d = PolyScalar::rational(Rational::of(1, D));
  const auto inv_d2 = PolyScalar::rational(Rational::of(1, static_cast<std::int64_t>(D) * D));

  // p1 = (1/D)(1 + sum c_k^2) - 1
  sys.p1.add({}, inv_d - PolyScalar::integer(1));
  for (std::int64_t k = 1; k < total; ++k) {
    const int v = var_of[static_cast<std::size_t>(k)];
    if (v >= 0) {
      sys.p1.add({{v, 2}}, inv_d);
    } else {
      sys.p1.add({}, inv_d * value_of[static_cast<std::size_t>(k)] * value_of[static_cast<std::size_t>(k)]);
    }
  }

  // p2 = (1/D^2) sum_{J,K,L} c_J c_K c_L tau(J,K,L) - 1, with tau the product
  // of per-party Gaussian-unit structure constants; enumerate only nonzero
  // per-party entries (16 of 64 for qubits).
  struct Accum {
    PolyScalar re = PolyScalar::integer(0);
    PolyScalar im = PolyScalar::integer(0);
  };
  std::map<Monomial, Accum> acc;
  const auto& table = detail::qubit_triples();
  const auto strides = cs.strides();

  struct Frame {
    std::int64_t J = 0, K = 0, L = 0;
    int re = 1, im = 0;
  };
  std::vector<detail::TripleEntry> chosen(static_cast<std::size_t>(n));
  const std::function<void(int, Frame)> recurse = [&](int party, Frame f) {
    if (party == n) {
      // coefficient = (re + i im); fold known values, collect unknowns
      PolyScalar factor = PolyScalar::integer(1);
      Monomial m;
      for (const std::int64_t s : {f.J, f.K, f.L}) {
        const int v = var_of[static_cast<std::size_t>(s)];
        if (v >= 0) {
          // insert into sorted monomial
          auto it = std::find_if(m.begin(), m.end(), [&](const auto& p) { return p.first >= v; });
          if (it != m.end() && it->first == v) ++it->second;
          else m.insert(it, {v, 1});
        } else {
          factor = factor * value_of[static_cast<std::size_t>(s)];
        }
      }
      if (factor.is_zero()) return;
      auto& slot = acc[m];
      if (f.im == 0) {
        slot.re = slot.re + factor * PolyScalar::integer(f.re);
      } else if (f.re == 0) {
        slot.im = slot.im + factor * PolyScalar::integer(f.im);
      }
      return;
    }
    for (const auto& e : table) {
      Frame g;
      g.J = f.J + e.a * strides[static_cast<std::size_t>(party)];
      g.K = f.K + e.b * strides[static_cast<std::size_t>(party)];
      g.L = f.L + e.c * strides[static_cast<std::size_t>(party)];
      // (re + i im) * (e.re + i e.im), all Gaussian units
      g.re = f.re * e.re - f.im * e.im;
      g.im = f.re * e.im + f.im * e.re;
      recurse(party + 1, g);
    }
  };
  recurse(0, Frame{});

  sys.p2.add({}, -PolyScalar::integer(1));
  for (auto& [m, a] : acc) {
    if (!a.im.is_zero()) {
      // imaginary parts must cancel once all three slot orderings are summed
      if (std::abs(a.im.to_double()) > 1e-9)
        throw Error(ErrorCode::NotHermitian, "imaginary residue in cubic expansion");
    }
    sys.p2.add(m, inv_d2 * a.re);
  }

  sys.sextic = sys.p1 * sys.p1 + sys.p2 * sys.p2;
  return sys;
}

// Convenience: knowns taken from a Bloch tensor (exact rationals recognized),
// unknowns given as names or group prefixes.
inline PolySystem export_polysystem(const BlochTensor& known,
                                    const std::vector<std::string>& unknown_tokens) {
  const PartySignature& sig = known.sig();
  std::set<std::string> unknown_set;
  for (const auto& t : unknown_tokens)
    for (auto& name : expand_coeff_group(sig, t)) unknown_set.insert(std::move(name));
  std::map<std::string, PolyScalar> known_map;
  for (const auto& [name, k] : coeff_names(sig)) {
    if (unknown_set.count(name)) continue;
    known_map[name] = PolyScalar::from_double(known.get(k));
  }
  return export_polysystem(sig, known_map,
                           std::vector<std::string>(unknown_set.begin(), unknown_set.end()));
}

// ---------------------------------------------------------------------------
// File format.  Header directives ride in comments; then one polynomial per
// line in canonical order (total degree descending, then variable names):
//
//   # marginalis polysystem 1
//   # dims 2,2,2
//   # unknown Q_111 Q_112 ...
//   # subst alpha_1 = 0
//   # p1
//   1/8*Q_111^2 + ... - 7/8 = 0
//   ...
//
// Grammar (EBNF):
//   poly     := [ '-' ] term { ( '+' | '-' ) term } '=' '0'
//   term     := coeff [ '*' factors ] | factors
//   factors  := var [ '^' int ] { '*' var [ '^' int ] }
//   coeff    := int [ '/' int ] | decimal
//   var      := [A-Za-z_][A-Za-z0-9_]*
// ---------------------------------------------------------------------------

namespace detail {

inline void print_poly(std::ostream& os, const Polynomial& p,
                       const std::vector<std::string>& variables) {
  // canonical order: degree descending, then lexicographic in the (name
  // sorted) variable ids
  std::vector<const std::pair<const Monomial, PolyScalar>*> terms;
  for (const auto& t : p.terms) terms.push_back(&t);
  std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) {
    const int da = monomial_degree(a->first), db = monomial_degree(b->first);
    if (da != db) return da > db;
    return a->first < b->first;
  });
  if (terms.empty()) {
    os << "0 = 0";
    return;
  }
  bool first = true;
  for (const auto* t : terms) {
    const auto& [m, c] = *t;
    std::string cs = c.to_string();
    bool negative = !cs.empty() && cs[0] == '-';
    if (negative) cs.erase(0, 1);
    if (first) {
      if (negative) os << "-";
      first = false;
    } else {
      os << (negative ? " - " : " + ");
    }
    const bool unit = cs == "1" && !m.empty();
    if (!unit) os << cs;
    bool star = !unit;
    for (const auto& [v, e] : m) {
      if (star) os << "*";
      os << variables[static_cast<std::size_t>(v)];
      if (e > 1) os << "^" << e;
      star = true;
    }
    if (m.empty() && cs.empty()) os << "0";
  }
  os << " = 0";
}

}  // namespace detail

inline void write_polysystem(const PolySystem& sys, std::ostream& os) {
  os << "# marginalis polysystem 1\n";
  os << "# dims ";
  for (int i = 0; i < sys.sig.parties(); ++i) os << (i ? "," : "") << sys.sig.dim(i);
  os << "\n";
  os << "# unknown";
  for (const auto& v : sys.variables) os << " " << v;
  os << "\n";
  for (const auto& [name, v] : sys.substitutions)
    os << "# subst " << name << " = " << v.to_string() << "\n";
  os << "# p1\n";
  detail::print_poly(os, sys.p1, sys.variables);
  os << "\n# p2\n";
  detail::print_poly(os, sys.p2, sys.variables);
  os << "\n# sextic p1^2 + p2^2\n";
  detail::print_poly(os, sys.sextic, sys.variables);
  os << "\n";
}

inline void write_polysystem(const PolySystem& sys, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  write_polysystem(sys, f);
  if (!f.good()) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

namespace detail {

struct PolyParser {
  std::string s;
  std::size_t i = 0;

  explicit PolyParser(std::string text) : s(std::move(text)) {}

  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool eof() {
    skip_ws();
    return i >= s.size();
  }
  bool peek(char c) {
    skip_ws();
    return i < s.size() && s[i] == c;
  }
  bool take(char c) {
    if (peek(c)) {
      ++i;
      return true;
    }
    return false;
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string identifier() {
    skip_ws();
    if (i >= s.size() || !ident_start(s[i]))
      throw Error(ErrorCode::IoError, "expected identifier at position " + std::to_string(i));
    std::size_t start = i;
    while (i < s.size() && ident_char(s[i])) ++i;
    return s.substr(start, i - start);
  }

  // number := int [ '/' int ] | decimal
  PolyScalar number() {
    skip_ws();
    std::size_t start = i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    bool saw_dot = false, saw_exp = false;
    while (i < s.size()) {
      const char c = s[i];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '.' && !saw_dot && !saw_exp) {
        saw_dot = true;
        ++i;
      } else if ((c == 'e' || c == 'E') && !saw_exp && i > start) {
        saw_exp = true;
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
      } else {
        break;
      }
    }
    if (i == start) throw Error(ErrorCode::IoError, "expected number at position " + std::to_string(i));
    const std::string text = s.substr(start, i - start);
    if (!saw_dot && !saw_exp) {
      const std::int64_t num = std::stoll(text);
      if (take('/')) {
        skip_ws();
        std::size_t dstart = i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i == dstart) throw Error(ErrorCode::IoError, "expected denominator");
        return PolyScalar::rational(Rational::of(num, std::stoll(s.substr(dstart, i - dstart))));
      }
      return PolyScalar::integer(num);
    }
    return PolyScalar::decimal(std::stod(text));
  }

  int integer() {
    skip_ws();
    std::size_t start = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == start) throw Error(ErrorCode::IoError, "expected integer exponent");
    return std::stoi(s.substr(start, i - start));
  }
};

}  // namespace detail

inline Polynomial parse_polynomial(const std::string& line,
                                   const std::map<std::string, int>& var_id) {
  detail::PolyParser p(line);
  Polynomial out;
  bool negative = p.take('-');
  while (true) {
    PolyScalar coeff = PolyScalar::integer(1);
    Monomial m;
    p.skip_ws();
    bool have_coeff = false;
    if (p.i < p.s.size() && (std::isdigit(static_cast<unsigned char>(p.s[p.i])) || p.s[p.i] == '.')) {
      coeff = p.number();
      have_coeff = true;
    }
    if (!have_coeff || p.take('*')) {
      // factors
      while (true) {
        const std::string name = p.identifier();
        const auto it = var_id.find(name);
        if (it == var_id.end())
          throw Error(ErrorCode::IoError, "undeclared variable '" + name + "'");
        int e = 1;
        if (p.take('^')) e = p.integer();
        auto pos = std::find_if(m.begin(), m.end(),
                                [&](const auto& f) { return f.first >= it->second; });
        if (pos != m.end() && pos->first == it->second) pos->second += e;
        else m.insert(pos, {it->second, e});
        if (!p.take('*')) break;
      }
    }
    out.add(m, negative ? -coeff : coeff);
    if (p.take('+')) {
      negative = false;
    } else if (p.take('-')) {
      negative = true;
    } else {
      break;
    }
  }
  if (!p.take('=')) throw Error(ErrorCode::IoError, "polynomial line must end in '= 0'");
  if (!(p.number() == PolyScalar::integer(0)))
    throw Error(ErrorCode::IoError, "polynomial line must end in '= 0'");
  if (!p.eof()) throw Error(ErrorCode::IoError, "trailing input after '= 0'");
  return out;
}

inline PolySystem parse_polysystem(std::istream& is) {
  PolySystem sys;
  std::vector<Polynomial> polys;
  std::map<std::string, int> var_id;
  std::vector<int> dims;
  std::string line;
  bool saw_dims = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string word;
      ls >> word;
      if (word == "dims") {
        std::string rest;
        ls >> rest;
        std::istringstream ds(rest);
        std::string tok;
        while (std::getline(ds, tok, ',')) dims.push_back(std::stoi(tok));
        saw_dims = true;
      } else if (word == "unknown") {
        std::string name;
        while (ls >> name) {
          var_id[name] = 0;
          sys.variables.push_back(name);
        }
        std::sort(sys.variables.begin(), sys.variables.end());
        for (std::size_t k = 0; k < sys.variables.size(); ++k)
          var_id[sys.variables[k]] = static_cast<int>(k);
      } else if (word == "subst") {
        std::string name, eq, value;
        ls >> name >> eq >> value;
        if (eq != "=") throw Error(ErrorCode::IoError, "malformed subst directive");
        detail::PolyParser vp(value);
        sys.substitutions[name] = vp.number();
      }
      continue;
    }
    polys.push_back(parse_polynomial(line, var_id));
  }
  if (!saw_dims) throw Error(ErrorCode::IoError, "missing dims directive");
  if (polys.size() != 3)
    throw Error(ErrorCode::IoError, "expected 3 polynomials (p1, p2, sextic), found " +
                                        std::to_string(polys.size()));
  sys.sig = PartySignature(dims);
  sys.p1 = std::move(polys[0]);
  sys.p2 = std::move(polys[1]);
  sys.sextic = std::move(polys[2]);
  return sys;
}

inline PolySystem parse_polysystem(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_polysystem(f);
}

}  // namespace marginalis
