#pragma once

#include <stdexcept>
#include <string>

namespace marginalis {

enum class ErrorCode {
  EmptySubset,
  IndexOutOfRange,
  NotHermitian,
  EnvTooSmall,
  SignatureMismatch,
  OddN,
  EvenN,
  NotEquidimensional,
  DimensionTooLarge,
  BadNormalization,
  WrongSignature,
  DegenerateSpectrum,
  SpectraMismatch,
  PhaseInconsistent,
  CoverageGap,
  Overlap,
  Overflow,
  NotFound,
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::EmptySubset:       return "EmptySubset";
    case ErrorCode::IndexOutOfRange:   return "IndexOutOfRange";
    case ErrorCode::NotHermitian:      return "NotHermitian";
    case ErrorCode::EnvTooSmall:       return "EnvTooSmall";
    case ErrorCode::SignatureMismatch: return "SignatureMismatch";
    case ErrorCode::OddN:              return "OddN";
    case ErrorCode::EvenN:             return "EvenN";
    case ErrorCode::NotEquidimensional:return "NotEquidimensional";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::BadNormalization:  return "BadNormalization";
    case ErrorCode::WrongSignature:    return "WrongSignature";
    case ErrorCode::DegenerateSpectrum:return "DegenerateSpectrum";
    case ErrorCode::SpectraMismatch:   return "SpectraMismatch";
    case ErrorCode::PhaseInconsistent: return "PhaseInconsistent";
    case ErrorCode::CoverageGap:       return "CoverageGap";
    case ErrorCode::Overlap:           return "Overlap";
    case ErrorCode::Overflow:          return "Overflow";
    case ErrorCode::NotFound:          return "NotFound";
    case ErrorCode::IoError:           return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace marginalis
