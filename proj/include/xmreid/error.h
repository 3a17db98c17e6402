// Copyright 2026 The xmreid Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef XMREID_ERROR_H_
#define XMREID_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace xmreid {

enum class Errc {
  // linalg
  kNotSquare,
  kNotSymmetric,
  kNotPositiveDefinite,
  kNoConvergence,
  kNonFiniteValue,
  // dataio
  kIo,
  kMalformedHeader,
  kMalformedRecord,
  kDimensionMismatch,
  kCountMismatch,
  kDuplicateToken,
  kDuplicateIdentity,
  kUnknownIdentity,
  kRaggedAttributes,
  // learning modules
  kUnknownMethod,
  kInvalidConfig,
  kShapeMismatch,
  kEmptyCorpus,
  kEmptySubset,
  kTooFewSamples,
  kKOutOfRange,
  kMissingModality,
  kMissingModel,
  kTooFewIdentities,
  kMissingView,
  kDegenerateMetric,
  // eval / synth
  kEmptyGallery,
  kProbeIdentityAbsent,
  kNOutOfRange,
  kDimensionNotTwo,
  kTooLarge,
};

std::string_view errc_name(Errc code);

// Coarse class of an error, used by the command-line tool to pick an exit
// code.
enum class ErrorClass { kConfig, kIo, kData, kNumerical };

ErrorClass error_class(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kNotSquare: return "NotSquare";
    case Errc::kNotSymmetric: return "NotSymmetric";
    case Errc::kNotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::kNoConvergence: return "NoConvergence";
    case Errc::kNonFiniteValue: return "NonFiniteValue";
    case Errc::kIo: return "Io";
    case Errc::kMalformedHeader: return "MalformedHeader";
    case Errc::kMalformedRecord: return "MalformedRecord";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kCountMismatch: return "CountMismatch";
    case Errc::kDuplicateToken: return "DuplicateToken";
    case Errc::kDuplicateIdentity: return "DuplicateIdentity";
    case Errc::kUnknownIdentity: return "UnknownIdentity";
    case Errc::kRaggedAttributes: return "RaggedAttributes";
    case Errc::kUnknownMethod: return "UnknownMethod";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kEmptyCorpus: return "EmptyCorpus";
    case Errc::kEmptySubset: return "EmptySubset";
    case Errc::kTooFewSamples: return "TooFewSamples";
    case Errc::kKOutOfRange: return "KOutOfRange";
    case Errc::kMissingModality: return "MissingModality";
    case Errc::kMissingModel: return "MissingModel";
    case Errc::kTooFewIdentities: return "TooFewIdentities";
    case Errc::kMissingView: return "MissingView";
    case Errc::kDegenerateMetric: return "DegenerateMetric";
    case Errc::kEmptyGallery: return "EmptyGallery";
    case Errc::kProbeIdentityAbsent: return "ProbeIdentityAbsent";
    case Errc::kNOutOfRange: return "NOutOfRange";
    case Errc::kDimensionNotTwo: return "DimensionNotTwo";
    case Errc::kTooLarge: return "TooLarge";
  }
  return "Unknown";
}

inline ErrorClass error_class(Errc code) {
  switch (code) {
    case Errc::kIo:
      return ErrorClass::kIo;
    case Errc::kUnknownMethod:
    case Errc::kInvalidConfig:
    case Errc::kKOutOfRange:
    case Errc::kNOutOfRange:
    case Errc::kMissingModel:
      return ErrorClass::kConfig;
    case Errc::kNotSquare:
    case Errc::kNotSymmetric:
    case Errc::kNotPositiveDefinite:
    case Errc::kNoConvergence:
    case Errc::kDegenerateMetric:
      return ErrorClass::kNumerical;
    default:
      return ErrorClass::kData;
  }
}

}  // namespace xmreid

#endif  // XMREID_ERROR_H_
