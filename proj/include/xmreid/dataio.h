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

// Text file formats. All files are UTF-8 with LF line endings; fields are
// separated by a single tab, vector components by a single space, and reals
// are written with 17 significant digits so that save/load is bit-exact.
//
//   FEAT    XMREID-FEAT 1
//           <N> <D>
//           <identity>\t<view>\t<v1> ... <vD>            (N lines)
//   CORPUS  XMREID-CORPUS 1
//           <identity>\t<view>\t<raw text>
//   EMB     <V> <E>
//           <token> <v1> ... <vE>                        (V lines)
//   ATTR    XMREID-ATTR 1 <B>
//           <identity>\t<b1b2...bB>
//   SPLIT   XMREID-SPLIT 1 <num_splits>
//           <split_index>\t<identity>\t<train|test>
//   SYN     <token>\t<syn1,syn2,...>                     (rank order)

#ifndef XMREID_DATAIO_H_
#define XMREID_DATAIO_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xmreid/linalg.h"

namespace xmreid {

// Real <-> text with 17 significant digits.
std::string format_real(double value);
double parse_real(std::string_view text);

// Space-separated row of reals, e.g. a vector or a matrix row.
std::string format_row(const Eigen::Ref<const Eigen::RowVectorXd>& row);

std::vector<std::string_view> split(std::string_view text, char sep);

struct FeatureRecord {
  std::string identity;
  int view = 1;
  Vector values;
};
using FeatureSet = std::vector<FeatureRecord>;

FeatureSet read_features(std::istream& in);
void write_features(std::ostream& out, const FeatureSet& records);
FeatureSet load_features(const std::filesystem::path& path);
void save_features(const std::filesystem::path& path, const FeatureSet& records);

struct Description {
  std::string identity;
  int view = 1;
  std::string text;
};
using Corpus = std::vector<Description>;

Corpus read_corpus(std::istream& in);
void write_corpus(std::ostream& out, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

// Token -> E-dimensional vector. Insertion order is preserved for saving.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(Eigen::Index dim = 0) : dim_(dim) {}

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void add(std::string token, const Eigen::Ref<const Vector>& vector);

  // Pointer to the E contiguous components of `token`, or nullptr.
  const double* find(std::string_view token) const;
  Eigen::Map<const Vector> at(std::size_t index) const {
    return Eigen::Map<const Vector>(data_.data() + index * dim_, dim_);
  }

 private:
  Eigen::Index dim_;
  std::vector<std::string> tokens_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

EmbeddingTable read_embeddings(std::istream& in);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

using AttributeBits = std::vector<std::uint8_t>;

struct AttributeTable {
  int bits = 0;
  std::vector<std::string> identities;
  std::vector<AttributeBits> rows;

  const AttributeBits* find(std::string_view identity) const;
};

AttributeTable read_attributes(std::istream& in);
void write_attributes(std::ostream& out, const AttributeTable& table);
AttributeTable load_attributes(const std::filesystem::path& path);
void save_attributes(const std::filesystem::path& path, const AttributeTable& table);

enum class Role { kTrain, kTest };

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

struct SplitSet {
  std::vector<Split> splits;
};

SplitSet read_splits(std::istream& in);
void write_splits(std::ostream& out, const SplitSet& set);
SplitSet load_splits(const std::filesystem::path& path);
void save_splits(const std::filesystem::path& path, const SplitSet& set);

// Token -> synonyms ordered by rank (rank 1 first).
using SynonymMap = std::map<std::string, std::vector<std::string>, std::less<>>;

SynonymMap read_synonyms(std::istream& in);
SynonymMap load_synonyms(const std::filesystem::path& path);

// Cross-reference checks; throw UnknownIdentity naming the first offender.
void check_split_identities(const SplitSet& set, const std::set<std::string>& known);
void check_attribute_identities(const AttributeTable& table,
                                const std::set<std::string>& known);

std::set<std::string> identities_of(const FeatureSet& records);
std::set<std::string> identities_of(const Corpus& corpus);

}  // namespace xmreid

#endif  // XMREID_DATAIO_H_
