//
// Copyright 2026 The dpalloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#ifndef DPALLOC_ERROR_HPP_
#define DPALLOC_ERROR_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dpalloc {

enum class ErrorCode {
  // Data model / validation.
  kMissingQuery,
  kNonFiniteValue,
  kNegativeTrueCount,
  kShapeMismatch,
  kDuplicateAssignee,
  kEmptyId,
  // Mechanisms.
  kNonPositiveScale,
  kNonPositiveEpsilon,
  kOrderingViolation,
  kEmptyInput,
  kDomainError,
  // Allocators.
  kNonFiniteInput,
  kLengthMismatch,
  kZeroTotalPopulation,
  kLengthZero,
  // Metrics.
  kZeroQuota,
  // Repair.
  kSamplingExhausted,
  kNonPositiveDenominator,
  // I/O and configuration.
  kParseError,
  kSchemaMismatch,
  kIoError,
  kInvalidConfig,
};

inline constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingQuery: return "MissingQuery";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kNegativeTrueCount: return "NegativeTrueCount";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDuplicateAssignee: return "DuplicateAssignee";
    case ErrorCode::kEmptyId: return "EmptyId";
    case ErrorCode::kNonPositiveScale: return "NonPositiveScale";
    case ErrorCode::kNonPositiveEpsilon: return "NonPositiveEpsilon";
    case ErrorCode::kOrderingViolation: return "OrderingViolation";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kZeroTotalPopulation: return "ZeroTotalPopulation";
    case ErrorCode::kLengthZero: return "LengthZero";
    case ErrorCode::kZeroQuota: return "ZeroQuota";
    case ErrorCode::kSamplingExhausted: return "SamplingExhausted";
    case ErrorCode::kNonPositiveDenominator: return "NonPositiveDenominator";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

// Degenerate-configuration errors are distinguished from input errors at the
// CLI boundary (exit code 3 vs 2).
inline constexpr bool IsDegenerateConfiguration(ErrorCode code) {
  return code == ErrorCode::kNonPositiveDenominator ||
         code == ErrorCode::kZeroTotalPopulation ||
         code == ErrorCode::kSamplingExhausted;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::int64_t> line = std::nullopt)
      : std::runtime_error(Format(code, message, line)),
        code_(code),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  // 1-based line number for loader errors.
  std::optional<std::int64_t> line() const noexcept { return line_; }

 private:
  static std::string Format(ErrorCode code, const std::string& message,
                            std::optional<std::int64_t> line) {
    std::string out(ErrorCodeName(code));
    if (line) out += " (line " + std::to_string(*line) + ")";
    if (!message.empty()) out += ": " + message;
    return out;
  }

  ErrorCode code_;
  std::optional<std::int64_t> line_;
};

}  // namespace dpalloc

#endif  // DPALLOC_ERROR_HPP_
