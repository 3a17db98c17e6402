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

#include "xmreid/textprep.h"

#include <algorithm>

namespace xmreid {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c >= 0x80;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

DescriptionTensor to_tensor(const Tokens& tokens, const EmbeddingTable& table,
                            int max_tokens) {
  DescriptionTensor out;
  out.values = Matrix::Zero(table.dim(), max_tokens);
  for (const std::string& token : tokens) {
    if (out.used == max_tokens) break;
    const double* v = table.find(token);
    if (!v) continue;
    out.values.col(out.used++) = Eigen::Map<const Vector>(v, table.dim());
  }
  return out;
}

Tokens augment_drop(const Tokens& tokens, Rng& rng) {
  std::size_t drop = rng.uniform_int(kMaxDroppedWords + 1);
  const std::size_t cap = tokens.empty() ? 0 : tokens.size() - 1;
  drop = std::min(drop, cap);
  if (drop == 0) return tokens;
  const std::vector<std::size_t> removed = rng.sample_without_replacement(tokens.size(), drop);
  Tokens kept;
  kept.reserve(tokens.size() - drop);
  std::size_t next = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (next < removed.size() && removed[next] == i) {
      ++next;
      continue;
    }
    kept.push_back(tokens[i]);
  }
  return kept;
}

std::size_t sample_synonym_rank(std::size_t n, Rng& rng) {
  double total = 0.0;
  for (std::size_t r = 1; r <= n; ++r) total += 1.0 / static_cast<double>(r);
  double u = rng.uniform() * total;
  for (std::size_t r = 1; r <= n; ++r) {
    u -= 1.0 / static_cast<double>(r);
    if (u < 0.0) return r - 1;
  }
  return n - 1;
}

Tokens augment_synonym(const Tokens& tokens, const SynonymMap& synonyms, Rng& rng,
                       double replace_probability) {
  Tokens out = tokens;
  for (std::string& token : out) {
    const auto it = synonyms.find(token);
    if (it == synonyms.end() || it->second.empty()) continue;
    if (rng.uniform() >= replace_probability) continue;
    token = it->second[sample_synonym_rank(it->second.size(), rng)];
  }
  return out;
}

DescriptionTensor augment_gaussian(const DescriptionTensor& tensor, double sigma, Rng& rng) {
  DescriptionTensor out = tensor;
  if (sigma == 0.0) return out;
  for (Eigen::Index c = 0; c < out.used; ++c) {
    for (Eigen::Index r = 0; r < out.values.rows(); ++r) out.values(r, c) += sigma * rng.normal();
  }
  return out;
}

AugmentMethod parse_augment_method(std::string_view name) {
  if (name == "drop") return AugmentMethod::kDrop;
  if (name == "synonym") return AugmentMethod::kSynonym;
  if (name == "gaussian") return AugmentMethod::kGaussian;
  throw Error(Errc::kUnknownMethod, "augmentation '" + std::string(name) + "'");
}

std::string_view augment_method_name(AugmentMethod method) {
  switch (method) {
    case AugmentMethod::kDrop: return "drop";
    case AugmentMethod::kSynonym: return "synonym";
    case AugmentMethod::kGaussian: return "gaussian";
  }
  return "unknown";
}

std::vector<TokenizedDescription> tokenize_corpus(const Corpus& corpus) {
  std::vector<TokenizedDescription> out;
  out.reserve(corpus.size());
  for (const Description& d : corpus) out.push_back({d.identity, d.view, tokenize(d.text)});
  return out;
}

std::vector<AugmentedDescription> augment_corpus(
    const std::vector<TokenizedDescription>& corpus, const AugmentOptions& options,
    int factor, const Rng& rng) {
  if (factor < 1) throw Error(Errc::kInvalidConfig, "augmentation factor must be >= 1");
  if (options.method == AugmentMethod::kSynonym && !options.synonyms) {
    throw Error(Errc::kInvalidConfig, "synonym augmentation needs a synonym map");
  }
  std::vector<AugmentedDescription> out;
  out.reserve(corpus.size() * static_cast<std::size_t>(factor));
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const TokenizedDescription& src = corpus[s];
    out.push_back({src.identity, src.view, src.tokens, s, 0, std::nullopt, 0.0});
    const Rng source_rng = rng.fork(s);
    for (int v = 1; v < factor; ++v) {
      Rng local = source_rng.fork(static_cast<std::uint64_t>(v));
      AugmentedDescription item{src.identity, src.view, {}, s, static_cast<std::size_t>(v),
                                std::nullopt, 0.0};
      switch (options.method) {
        case AugmentMethod::kDrop:
          item.tokens = augment_drop(src.tokens, local);
          break;
        case AugmentMethod::kSynonym:
          item.tokens =
              augment_synonym(src.tokens, *options.synonyms, local, options.replace_probability);
          break;
        case AugmentMethod::kGaussian:
          item.tokens = src.tokens;
          item.noise_seed = local.next_u64();
          item.sigma = options.sigma;
          break;
      }
      out.push_back(std::move(item));
    }
  }
  return out;
}

DescriptionTensor materialize(const AugmentedDescription& item, const EmbeddingTable& table,
                              int max_tokens) {
  DescriptionTensor tensor = to_tensor(item.tokens, table, max_tokens);
  if (item.noise_seed) {
    Rng noise(*item.noise_seed);
    tensor = augment_gaussian(tensor, item.sigma, noise);
  }
  return tensor;
}

Corpus to_corpus(const std::vector<AugmentedDescription>& items) {
  Corpus corpus;
  corpus.reserve(items.size());
  for (const AugmentedDescription& item : items) {
    std::string text;
    for (std::size_t i = 0; i < item.tokens.size(); ++i) {
      if (i) text += ' ';
      text += item.tokens[i];
    }
    corpus.push_back({item.identity, item.view, std::move(text)});
  }
  return corpus;
}

}  // namespace xmreid
