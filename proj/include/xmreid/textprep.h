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

// Description preprocessing: tokenization, embedding lookup into fixed-size
// E x T tensors, and the three augmentation schemes (word dropping, ranked
// synonym replacement, Gaussian embedding noise).

#ifndef XMREID_TEXTPREP_H_
#define XMREID_TEXTPREP_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xmreid/dataio.h"
#include "xmreid/rng.h"

namespace xmreid {

using Tokens = std::vector<std::string>;

inline constexpr int kDefaultMaxTokens = 70;
inline constexpr int kMaxDroppedWords = 10;
inline constexpr double kDefaultReplaceProbability = 0.25;
inline constexpr double kDefaultEmbeddingNoise = 0.05;

// Lowercases ASCII letters and splits on every byte that is neither an
// ASCII letter/digit nor part of a multi-byte UTF-8 sequence.
Tokens tokenize(std::string_view text);

// E x T embedding matrix. Columns at index >= used are zero unless noise
// was added to them explicitly.
struct DescriptionTensor {
  Matrix values;
  Eigen::Index used = 0;

  Eigen::Index dim() const { return values.rows(); }
  Eigen::Index length() const { return values.cols(); }
};

// Column j holds the embedding of the j-th in-vocabulary token; unknown
// tokens are skipped and anything beyond max_tokens is truncated.
DescriptionTensor to_tensor(const Tokens& tokens, const EmbeddingTable& table,
                            int max_tokens = kDefaultMaxTokens);

// Removes D distinct words, D ~ U{0..10} capped at len - 1.
Tokens augment_drop(const Tokens& tokens, Rng& rng);

// Index in [0, n) with probability proportional to 1 / (index + 1).
std::size_t sample_synonym_rank(std::size_t n, Rng& rng);

Tokens augment_synonym(const Tokens& tokens, const SynonymMap& synonyms, Rng& rng,
                       double replace_probability = kDefaultReplaceProbability);

// Adds N(0, sigma^2) noise to the first `used` columns only.
DescriptionTensor augment_gaussian(const DescriptionTensor& tensor, double sigma, Rng& rng);

enum class AugmentMethod { kDrop, kSynonym, kGaussian };

AugmentMethod parse_augment_method(std::string_view name);
std::string_view augment_method_name(AugmentMethod method);

struct AugmentOptions {
  AugmentMethod method = AugmentMethod::kDrop;
  const SynonymMap* synonyms = nullptr;  // required for kSynonym
  double replace_probability = kDefaultReplaceProbability;
  double sigma = kDefaultEmbeddingNoise;
};

struct TokenizedDescription {
  std::string identity;
  int view = 1;
  Tokens tokens;
};

struct AugmentedDescription {
  std::string identity;
  int view = 1;
  Tokens tokens;
  std::size_t source = 0;   // index into the input corpus
  std::size_t variant = 0;  // 0 = original
  // Gaussian variants keep their tokens and carry the seed of the noise to
  // add after embedding; see materialize().
  std::optional<std::uint64_t> noise_seed;
  double sigma = 0.0;
};

std::vector<TokenizedDescription> tokenize_corpus(const Corpus& corpus);

// Original plus factor - 1 augmented variants per description, grouped by
// source. Variant v of source s draws from rng.fork(s).fork(v), so output is
// independent of evaluation order.
std::vector<AugmentedDescription> augment_corpus(
    const std::vector<TokenizedDescription>& corpus, const AugmentOptions& options,
    int factor, const Rng& rng);

// Embeds a (possibly augmented) description, applying its Gaussian noise.
DescriptionTensor materialize(const AugmentedDescription& item, const EmbeddingTable& table,
                              int max_tokens = kDefaultMaxTokens);

// Writes augmented token lists as a CORPUS (tokens joined by spaces).
Corpus to_corpus(const std::vector<AugmentedDescription>& items);

}  // namespace xmreid

#endif  // XMREID_TEXTPREP_H_
