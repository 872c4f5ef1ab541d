#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "marginalis/bloch.hpp"
#include "marginalis/compat.hpp"
#include "marginalis/marginal.hpp"
#include "marginalis/tensor.hpp"
#include "marginalis/uniqueness.hpp"

// JSON formats, all carrying "format": 1.
//
//   pure state      {"format":1, "dims":[2,2], "amps":[[re,im],...]}
//   density matrix  {"format":1, "dims":[...], "mat":[[[re,im],...],...]}   (row-major)
//   scenario        {"format":1, "dims":[...], "subsets":[[0,2,3],...]}     (0-based)
//   marginal        {"format":1, "global_dims":[...], "subset":[...], "mat":[...]}
//   bloch tensor    {"format":1, "dims":[...], "coeff":{"k1,k2,...":v,...}} (zeros omitted)
//
// Parsers reject norm/trace/positivity violations beyond 1e-8 unless
// validation is turned off; within that budget inputs are canonicalized
// (symmetrized, trace-normalized) on load.

namespace marginalis {

using json = nlohmann::json;

namespace detail {

inline void check_format(const json& j, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::IoError, std::string(what) + ": not a JSON object");
  if (j.contains("format") && j["format"] != 1)
    throw Error(ErrorCode::IoError, std::string(what) + ": unsupported format version");
}

inline PartySignature dims_from(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::IoError, std::string("missing '") + key + "'");
  try {
    return PartySignature(j[key].get<std::vector<int>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad '") + key + "': " + e.what());
  }
}

inline json complex_to_json(const cxd& z) { return json::array({z.real(), z.imag()}); }

inline cxd complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw Error(ErrorCode::IoError, "complex entries are [re, im] pairs");
  return cxd(j[0].get<double>(), j[1].get<double>());
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, Eigen::Index d) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != d)
    throw Error(ErrorCode::IoError, "matrix has wrong row count");
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
      throw Error(ErrorCode::IoError, "matrix has wrong column count");
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = complex_from(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

inline json to_json(const PureState& psi) {
  json j;
  j["format"] = 1;
  j["dims"] = psi.sig.dims();
  json amps = json::array();
  for (Eigen::Index i = 0; i < psi.amps.size(); ++i) amps.push_back(detail::complex_to_json(psi.amps[i]));
  j["amps"] = std::move(amps);
  return j;
}

inline PureState pure_state_from_json(const json& j, bool validate = true) {
  detail::check_format(j, "pure state");
  PartySignature sig = detail::dims_from(j, "dims");
  if (!j.contains("amps")) throw Error(ErrorCode::IoError, "missing 'amps'");
  const auto& a = j["amps"];
  if (static_cast<std::int64_t>(a.size()) != sig.total_dim())
    throw Error(ErrorCode::IoError, "amplitude count does not match dims");
  Vector amps(sig.total_dim());
  for (Eigen::Index i = 0; i < amps.size(); ++i)
    amps[i] = detail::complex_from(a[static_cast<std::size_t>(i)]);
  if (validate) {
    const double n = amps.norm();
    if (std::abs(n - 1.0) > tol::kParse)
      throw Error(ErrorCode::BadNormalization,
                  "state norm deviates from 1 by " + std::to_string(std::abs(n - 1.0)));
    amps /= n;
  }
  return PureState{std::move(sig), std::move(amps)};
}

inline json to_json(const DensityMatrix& rho) {
  json j;
  j["format"] = 1;
  j["dims"] = rho.sig.dims();
  j["mat"] = detail::matrix_to_json(rho.mat);
  return j;
}

inline DensityMatrix density_from_json(const json& j, bool validate = true) {
  detail::check_format(j, "density matrix");
  PartySignature sig = detail::dims_from(j, "dims");
  if (!j.contains("mat")) throw Error(ErrorCode::IoError, "missing 'mat'");
  Matrix m = detail::matrix_from_json(j["mat"], sig.total_dim());
  if (validate) {
    if (!is_hermitian(m, tol::kParse))
      throw Error(ErrorCode::NotHermitian, "matrix is not Hermitian within 1e-8");
    m = 0.5 * (m + m.adjoint()).eval();
    const double tr = m.trace().real();
    if (std::abs(tr - 1.0) > tol::kParse)
      throw Error(ErrorCode::BadNormalization,
                  "trace deviates from 1 by " + std::to_string(std::abs(tr - 1.0)));
    m /= tr;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol::kParse)
      throw Error(ErrorCode::BadNormalization,
                  "matrix has eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
  }
  return DensityMatrix::trusted(std::move(sig), std::move(m));
}

// ---------------------------------------------------------------------------
// Scenarios and marginals
// ---------------------------------------------------------------------------

inline json to_json(const MarginalScenario& sc) {
  json j;
  j["format"] = 1;
  j["dims"] = sc.sig.dims();
  j["subsets"] = sc.subsets;
  return j;
}

inline MarginalScenario scenario_from_json(const json& j) {
  detail::check_format(j, "scenario");
  PartySignature sig = detail::dims_from(j, "dims");
  if (!j.contains("subsets")) throw Error(ErrorCode::IoError, "missing 'subsets'");
  std::vector<std::vector<int>> subsets;
  try {
    subsets = j["subsets"].get<std::vector<std::vector<int>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad 'subsets': ") + e.what());
  }
  return MarginalScenario::make(std::move(sig), std::move(subsets));
}

struct MarginalFile {
  PartySignature global_sig;
  Marginal marginal;
};

inline json to_json(const PartySignature& global_sig, const Marginal& m) {
  json j;
  j["format"] = 1;
  j["global_dims"] = global_sig.dims();
  j["subset"] = m.subset;
  j["mat"] = detail::matrix_to_json(m.state.mat);
  return j;
}

inline MarginalFile marginal_from_json(const json& j, bool validate = true) {
  detail::check_format(j, "marginal");
  PartySignature global = detail::dims_from(j, "global_dims");
  if (!j.contains("subset")) throw Error(ErrorCode::IoError, "missing 'subset'");
  std::vector<int> subset;
  try {
    subset = j["subset"].get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad 'subset': ") + e.what());
  }
  check_subset(global, subset);
  PartySignature local = global.restricted(subset);
  json dj;
  dj["format"] = 1;
  dj["dims"] = local.dims();
  dj["mat"] = j.contains("mat") ? j["mat"] : json();
  DensityMatrix state = density_from_json(dj, validate);
  return MarginalFile{std::move(global), Marginal{std::move(subset), std::move(state)}};
}

// ---------------------------------------------------------------------------
// Bloch tensors
// ---------------------------------------------------------------------------

inline json to_json(const BlochTensor& b) {
  json j;
  j["format"] = 1;
  j["dims"] = b.sig().dims();
  json coeff = json::object();
  for (const auto& [k, v] : b.entries(0.0)) {
    std::string key;
    for (std::size_t t = 0; t < k.size(); ++t) key += (t ? "," : "") + std::to_string(k[t]);
    coeff[key] = v;
  }
  j["coeff"] = std::move(coeff);
  return j;
}

inline BlochTensor bloch_from_json(const json& j) {
  detail::check_format(j, "bloch tensor");
  PartySignature sig = detail::dims_from(j, "dims");
  BlochTensor b(sig);
  if (!j.contains("coeff")) throw Error(ErrorCode::IoError, "missing 'coeff'");
  for (const auto& [key, value] : j["coeff"].items()) {
    std::vector<int> k;
    std::istringstream ks(key);
    std::string tok;
    while (std::getline(ks, tok, ',')) k.push_back(std::stoi(tok));
    if (static_cast<int>(k.size()) != sig.parties())
      throw Error(ErrorCode::IoError, "coefficient key '" + key + "' has wrong length");
    for (int t = 0; t < sig.parties(); ++t)
      if (k[static_cast<std::size_t>(t)] < 0 ||
          k[static_cast<std::size_t>(t)] >= sig.dim(t) * sig.dim(t))
        throw Error(ErrorCode::IoError, "coefficient key '" + key + "' out of range");
    b.set(k, value.get<double>());
  }
  if (std::abs(b.get(std::vector<int>(static_cast<std::size_t>(sig.parties()), 0)) - 1.0) > tol::kParse)
    throw Error(ErrorCode::BadNormalization, "all-identity coefficient must be 1");
  return b;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json to_json(const CompatReport& r) {
  json j;
  j["format"] = 1;
  j["verdict"] = verdict_name(r.verdict);
  j["residual"] = r.residual;
  j["iterations"] = r.iterations;
  j["heuristic"] = r.heuristic;
  if (r.certificate_gap) j["certificate_gap"] = *r.certificate_gap;
  if (r.witness) j["witness"] = to_json(*r.witness);
  return j;
}

inline json to_json(const UdaReport& r) {
  json j;
  j["format"] = 1;
  j["verdict"] = uda_verdict_name(r.verdict);
  j["leakage"] = r.leakage;
  j["kernel_dim"] = r.kernel_dim;
  j["iterations"] = r.iterations;
  if (r.alternative) j["alternative"] = to_json(*r.alternative);
  return j;
}

inline json to_json(const PrecheckReport& r) {
  json j;
  j["format"] = 1;
  j["overlap_ok"] = r.overlap_ok;
  j["overlap_worst_residual"] = r.overlap_worst_residual;
  j["schmidt_ok"] = r.schmidt_ok;
  json details = json::array();
  for (const auto& d : r.details)
    details.push_back({{"kind", d.kind}, {"first", d.first}, {"second", d.second},
                       {"residual", d.residual}});
  j["details"] = std::move(details);
  return j;
}

inline json to_json(const ParamCount& pc) {
  json j;
  j["format"] = 1;
  j["N"] = pc.N;
  j["m"] = pc.m;
  j["d"] = pc.d;
  j["P"] = pc.P;
  j["C"] = pc.C;
  j["margin"] = pc.margin;
  return j;
}

inline json to_json(const EnvSystemCertificate& c) {
  json j;
  j["format"] = 1;
  j["full_rank_all_blocks"] = c.full_rank_all_blocks;
  j["sampled"] = c.sampled;
  json blocks = json::array();
  for (const auto& b : c.block_ranks)
    blocks.push_back({{"pair_party", b.pair_party}, {"c0", b.c0}, {"cr", b.cr}, {"cv", b.cv},
                      {"rank", b.rank}, {"variables", b.variables}, {"equations", b.equations}});
  j["blocks"] = std::move(blocks);
  return j;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  try {
    json j;
    f >> j;
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, path + ": " + e.what());
  }
}

inline void save_json(const json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
  if (!f.good()) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

}  // namespace marginalis
