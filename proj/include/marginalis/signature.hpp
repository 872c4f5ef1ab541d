#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "marginalis/errors.hpp"

namespace marginalis {

// Local dimension per party.  Index order is row-major over parties with
// party 0 slowest; every subset operation in the library permutes to this
// canonical order.
class PartySignature {
 public:
  PartySignature() = default;

  explicit PartySignature(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty())
      throw Error(ErrorCode::SignatureMismatch, "signature needs at least one party");
    std::int64_t total = 1;
    for (int d : dims_) {
      if (d < 2)
        throw Error(ErrorCode::SignatureMismatch,
                    "local dimension must be >= 2, got " + std::to_string(d));
      total *= d;
      if (total > kMaxTotalDim)
        throw Error(ErrorCode::DimensionTooLarge,
                    "total dimension exceeds " + std::to_string(kMaxTotalDim));
    }
    total_ = total;
  }

  static PartySignature qubits(int n) {
    return PartySignature(std::vector<int>(static_cast<std::size_t>(n), 2));
  }

  int parties() const { return static_cast<int>(dims_.size()); }
  int dim(int party) const { return dims_.at(static_cast<std::size_t>(party)); }
  const std::vector<int>& dims() const { return dims_; }
  std::int64_t total_dim() const { return total_; }

  bool equidimensional() const {
    return std::all_of(dims_.begin(), dims_.end(),
                       [&](int d) { return d == dims_[0]; });
  }

  // Signature restricted to a subset of parties (subset given in canonical
  // sorted order).
  PartySignature restricted(const std::vector<int>& subset) const {
    std::vector<int> d;
    d.reserve(subset.size());
    for (int p : subset) d.push_back(dim(p));
    return PartySignature(std::move(d));
  }

  // Strides of the row-major party index: global = sum_t digit_t * stride_t.
  std::vector<std::int64_t> strides() const {
    std::vector<std::int64_t> s(dims_.size());
    std::int64_t acc = 1;
    for (int t = parties() - 1; t >= 0; --t) {
      s[static_cast<std::size_t>(t)] = acc;
      acc *= dims_[static_cast<std::size_t>(t)];
    }
    return s;
  }

  std::vector<int> digits(std::int64_t index) const {
    std::vector<int> out(dims_.size());
    for (int t = parties() - 1; t >= 0; --t) {
      const int d = dims_[static_cast<std::size_t>(t)];
      out[static_cast<std::size_t>(t)] = static_cast<int>(index % d);
      index /= d;
    }
    return out;
  }

  std::int64_t index_of(const std::vector<int>& digits) const {
    std::int64_t idx = 0;
    for (int t = 0; t < parties(); ++t)
      idx = idx * dims_[static_cast<std::size_t>(t)] + digits[static_cast<std::size_t>(t)];
    return idx;
  }

  bool operator==(const PartySignature& o) const { return dims_ == o.dims_; }
  bool operator!=(const PartySignature& o) const { return !(*this == o); }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + ")";
  }

  static constexpr std::int64_t kMaxTotalDim = 1 << 16;

 private:
  std::vector<int> dims_;
  std::int64_t total_ = 0;
};

// Validates that `subset` is a nonempty strictly increasing list of party
// indices for `sig`.
inline void check_subset(const PartySignature& sig, const std::vector<int>& subset) {
  if (subset.empty()) throw Error(ErrorCode::EmptySubset, "empty party subset");
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] < 0 || subset[i] >= sig.parties())
      throw Error(ErrorCode::IndexOutOfRange,
                  "party index " + std::to_string(subset[i]) + " out of range for " +
                      sig.to_string());
    if (i > 0 && subset[i] <= subset[i - 1])
      throw Error(ErrorCode::IndexOutOfRange, "subset must be strictly increasing");
  }
}

inline std::vector<int> complement_subset(const PartySignature& sig,
                                          const std::vector<int>& subset) {
  std::vector<int> out;
  std::size_t k = 0;
  for (int p = 0; p < sig.parties(); ++p) {
    if (k < subset.size() && subset[k] == p) {
      ++k;
    } else {
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace marginalis
