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

#include "xmreid/dataio.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace xmreid {
namespace {

[[noreturn]] void fail(Errc code, std::size_t line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

long parse_count(std::string_view text, Errc code, std::size_t line) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 0) {
    fail(code, line, "expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

int parse_view(std::string_view text, std::size_t line) {
  if (text == "1") return 1;
  if (text == "2") return 2;
  fail(Errc::kMalformedRecord, line, "view must be 1 or 2, got '" + std::string(text) + "'");
}

Vector parse_vector(std::string_view text, Eigen::Index dim, std::size_t line) {
  const std::vector<std::string_view> parts = split(text, ' ');
  if (static_cast<Eigen::Index>(parts.size()) != dim) {
    fail(Errc::kDimensionMismatch, line,
         "expected " + std::to_string(dim) + " values, got " + std::to_string(parts.size()));
  }
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    try {
      v(i) = parse_real(parts[i]);
    } catch (const Error& e) {
      fail(e.code(), line, e.what());
    }
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

bool read_header(std::istream& in, std::string& line) {
  return static_cast<bool>(std::getline(in, line));
}

}  // namespace

std::string format_real(double value) {
  char buf[32];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

double parse_real(std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(Errc::kMalformedRecord, "not a real number: '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) {
    throw Error(Errc::kNonFiniteValue, "value '" + std::string(text) + "' is not finite");
  }
  return value;
}

std::string format_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  std::string out;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (i) out += ' ';
    out += format_real(row(i));
  }
  return out;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

// FEAT --------------------------------------------------------------------

FeatureSet read_features(std::istream& in) {
  std::string line;
  if (!read_header(in, line) || line != "XMREID-FEAT 1") {
    fail(Errc::kMalformedHeader, 1, "expected 'XMREID-FEAT 1'");
  }
  if (!std::getline(in, line)) fail(Errc::kMalformedHeader, 2, "missing '<N> <D>' line");
  const auto dims = split(line, ' ');
  if (dims.size() != 2) fail(Errc::kMalformedHeader, 2, "expected '<N> <D>'");
  const long n = parse_count(dims[0], Errc::kMalformedHeader, 2);
  const long d = parse_count(dims[1], Errc::kMalformedHeader, 2);
  if (d < 1) fail(Errc::kMalformedHeader, 2, "dimension must be >= 1");

  FeatureSet records;
  records.reserve(n);
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (static_cast<long>(records.size()) == n) {
      fail(Errc::kCountMismatch, lineno, "more rows than the declared " + std::to_string(n));
    }
    const auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[0].empty()) {
      fail(Errc::kMalformedRecord, lineno, "expected <identity>\\t<view>\\t<values>");
    }
    FeatureRecord rec;
    rec.identity = std::string(fields[0]);
    rec.view = parse_view(fields[1], lineno);
    rec.values = parse_vector(fields[2], d, lineno);
    records.push_back(std::move(rec));
  }
  if (static_cast<long>(records.size()) != n) {
    fail(Errc::kCountMismatch, lineno,
         "declared " + std::to_string(n) + " rows, found " + std::to_string(records.size()));
  }
  return records;
}

void write_features(std::ostream& out, const FeatureSet& records) {
  const Eigen::Index d = records.empty() ? 1 : records.front().values.size();
  out << "XMREID-FEAT 1\n" << records.size() << ' ' << d << '\n';
  for (const FeatureRecord& rec : records) {
    if (rec.values.size() != d) {
      throw Error(Errc::kDimensionMismatch, "records have differing dimensions");
    }
    out << rec.identity << '\t' << rec.view << '\t' << format_row(rec.values.transpose())
        << '\n';
  }
}

FeatureSet load_features(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_features(in);
}

void save_features(const std::filesystem::path& path, const FeatureSet& records) {
  std::ofstream out = open_out(path);
  write_features(out, records);
  finish(out, path);
}

// CORPUS ------------------------------------------------------------------

Corpus read_corpus(std::istream& in) {
  std::string line;
  if (!read_header(in, line) || line != "XMREID-CORPUS 1") {
    fail(Errc::kMalformedHeader, 1, "expected 'XMREID-CORPUS 1'");
  }
  Corpus corpus;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || t1 == 0) {
      fail(Errc::kMalformedRecord, lineno, "expected <identity>\\t<view>\\t<text>");
    }
    Description d;
    d.identity = line.substr(0, t1);
    d.view = parse_view(std::string_view(line).substr(t1 + 1, t2 - t1 - 1), lineno);
    d.text = line.substr(t2 + 1);
    corpus.push_back(std::move(d));
  }
  return corpus;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  out << "XMREID-CORPUS 1\n";
  for (const Description& d : corpus) {
    out << d.identity << '\t' << d.view << '\t' << d.text << '\n';
  }
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_corpus(in);
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out = open_out(path);
  write_corpus(out, corpus);
  finish(out, path);
}

// EMB ---------------------------------------------------------------------

void EmbeddingTable::add(std::string token, const Eigen::Ref<const Vector>& vector) {
  if (vector.size() != dim_) {
    throw Error(Errc::kDimensionMismatch, "token '" + token + "' has " +
                                              std::to_string(vector.size()) + " components, table has " +
                                              std::to_string(dim_));
  }
  if (index_.count(token)) throw Error(Errc::kDuplicateToken, "token '" + token + "'");
  index_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
  data_.insert(data_.end(), vector.data(), vector.data() + vector.size());
}

const double* EmbeddingTable::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return nullptr;
  return data_.data() + it->second * dim_;
}

EmbeddingTable read_embeddings(std::istream& in) {
  std::string line;
  if (!read_header(in, line)) fail(Errc::kMalformedHeader, 1, "empty file");
  const auto dims = split(line, ' ');
  if (dims.size() != 2) fail(Errc::kMalformedHeader, 1, "expected '<V> <E>'");
  const long v = parse_count(dims[0], Errc::kMalformedHeader, 1);
  const long e = parse_count(dims[1], Errc::kMalformedHeader, 1);
  if (e < 1) fail(Errc::kMalformedHeader, 1, "dimension must be >= 1");

  EmbeddingTable table(e);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (static_cast<long>(table.size()) == v) {
      fail(Errc::kCountMismatch, lineno, "more rows than the declared " + std::to_string(v));
    }
    const std::size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0) {
      fail(Errc::kDimensionMismatch, lineno, "expected <token> followed by values");
    }
    std::string token = line.substr(0, sp);
    const Vector values = parse_vector(std::string_view(line).substr(sp + 1), e, lineno);
    try {
      table.add(std::move(token), values);
    } catch (const Error& err) {
      fail(err.code(), lineno, err.what());
    }
  }
  if (static_cast<long>(table.size()) != v) {
    fail(Errc::kCountMismatch, lineno,
         "declared " + std::to_string(v) + " tokens, found " + std::to_string(table.size()));
  }
  return table;
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.tokens()[i] << ' ' << format_row(table.at(i).transpose()) << '\n';
  }
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_embeddings(in);
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out = open_out(path);
  write_embeddings(out, table);
  finish(out, path);
}

// ATTR --------------------------------------------------------------------

const AttributeBits* AttributeTable::find(std::string_view identity) const {
  for (std::size_t i = 0; i < identities.size(); ++i) {
    if (identities[i] == identity) return &rows[i];
  }
  return nullptr;
}

AttributeTable read_attributes(std::istream& in) {
  std::string line;
  if (!read_header(in, line)) fail(Errc::kMalformedHeader, 1, "empty file");
  const auto head = split(line, ' ');
  if (head.size() != 3 || head[0] != "XMREID-ATTR" || head[1] != "1") {
    fail(Errc::kMalformedHeader, 1, "expected 'XMREID-ATTR 1 <B>'");
  }
  AttributeTable table;
  table.bits = static_cast<int>(parse_count(head[2], Errc::kMalformedHeader, 1));
  if (table.bits < 1) fail(Errc::kMalformedHeader, 1, "B must be >= 1");

  std::set<std::string, std::less<>> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split(line, '\t');
    if (fields.size() != 2 || fields[0].empty()) {
      fail(Errc::kMalformedRecord, lineno, "expected <identity>\\t<bits>");
    }
    if (static_cast<int>(fields[1].size()) != table.bits) {
      fail(Errc::kRaggedAttributes, lineno,
           "expected " + std::to_string(table.bits) + " bits, got " +
               std::to_string(fields[1].size()));
    }
    AttributeBits bits(table.bits);
    for (int b = 0; b < table.bits; ++b) {
      const char c = fields[1][b];
      if (c != '0' && c != '1') fail(Errc::kMalformedRecord, lineno, "bits must be 0 or 1");
      bits[b] = static_cast<std::uint8_t>(c - '0');
    }
    std::string id(fields[0]);
    if (!seen.insert(id).second) fail(Errc::kDuplicateIdentity, lineno, "identity '" + id + "'");
    table.identities.push_back(std::move(id));
    table.rows.push_back(std::move(bits));
  }
  return table;
}

void write_attributes(std::ostream& out, const AttributeTable& table) {
  out << "XMREID-ATTR 1 " << table.bits << '\n';
  for (std::size_t i = 0; i < table.identities.size(); ++i) {
    if (static_cast<int>(table.rows[i].size()) != table.bits) {
      throw Error(Errc::kRaggedAttributes, "identity '" + table.identities[i] + "'");
    }
    out << table.identities[i] << '\t';
    for (std::uint8_t b : table.rows[i]) out << (b ? '1' : '0');
    out << '\n';
  }
}

AttributeTable load_attributes(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_attributes(in);
}

void save_attributes(const std::filesystem::path& path, const AttributeTable& table) {
  std::ofstream out = open_out(path);
  write_attributes(out, table);
  finish(out, path);
}

// SPLIT -------------------------------------------------------------------

SplitSet read_splits(std::istream& in) {
  std::string line;
  if (!read_header(in, line)) fail(Errc::kMalformedHeader, 1, "empty file");
  const auto head = split(line, ' ');
  if (head.size() != 3 || head[0] != "XMREID-SPLIT" || head[1] != "1") {
    fail(Errc::kMalformedHeader, 1, "expected 'XMREID-SPLIT 1 <num_splits>'");
  }
  const long count = parse_count(head[2], Errc::kMalformedHeader, 1);
  if (count < 1) fail(Errc::kMalformedHeader, 1, "num_splits must be >= 1");

  SplitSet set;
  set.splits.resize(count);
  std::vector<std::set<std::string, std::less<>>> seen(count);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[1].empty()) {
      fail(Errc::kMalformedRecord, lineno, "expected <split>\\t<identity>\\t<train|test>");
    }
    const long index = parse_count(fields[0], Errc::kMalformedRecord, lineno);
    if (index >= count) {
      fail(Errc::kCountMismatch, lineno, "split index " + std::to_string(index) +
                                             " >= declared " + std::to_string(count));
    }
    std::string id(fields[1]);
    if (!seen[index].insert(id).second) {
      fail(Errc::kDuplicateIdentity, lineno,
           "identity '" + id + "' listed twice in split " + std::to_string(index));
    }
    if (fields[2] == "train") {
      set.splits[index].train.push_back(std::move(id));
    } else if (fields[2] == "test") {
      set.splits[index].test.push_back(std::move(id));
    } else {
      fail(Errc::kMalformedRecord, lineno, "role must be train or test");
    }
  }
  for (long i = 0; i < count; ++i) {
    if (seen[i].empty()) {
      fail(Errc::kCountMismatch, lineno, "split " + std::to_string(i) + " has no entries");
    }
  }
  return set;
}

void write_splits(std::ostream& out, const SplitSet& set) {
  out << "XMREID-SPLIT 1 " << set.splits.size() << '\n';
  for (std::size_t i = 0; i < set.splits.size(); ++i) {
    for (const std::string& id : set.splits[i].train) out << i << '\t' << id << "\ttrain\n";
    for (const std::string& id : set.splits[i].test) out << i << '\t' << id << "\ttest\n";
  }
}

SplitSet load_splits(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_splits(in);
}

void save_splits(const std::filesystem::path& path, const SplitSet& set) {
  std::ofstream out = open_out(path);
  write_splits(out, set);
  finish(out, path);
}

// SYN ---------------------------------------------------------------------

SynonymMap read_synonyms(std::istream& in) {
  SynonymMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = split(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      fail(Errc::kMalformedRecord, lineno, "expected <token>\\t<syn1,syn2,...>");
    }
    std::vector<std::string> ranked;
    for (std::string_view syn : split(fields[1], ',')) {
      if (syn.empty()) fail(Errc::kMalformedRecord, lineno, "empty synonym");
      for (const std::string& prev : ranked) {
        if (prev == syn) fail(Errc::kDuplicateToken, lineno, "synonym '" + prev + "' repeated");
      }
      ranked.emplace_back(syn);
    }
    if (!map.emplace(std::string(fields[0]), std::move(ranked)).second) {
      fail(Errc::kDuplicateToken, lineno, "token '" + std::string(fields[0]) + "' repeated");
    }
  }
  return map;
}

SynonymMap load_synonyms(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_synonyms(in);
}

// Cross-references ----------------------------------------------------------

void check_split_identities(const SplitSet& set, const std::set<std::string>& known) {
  for (std::size_t i = 0; i < set.splits.size(); ++i) {
    for (const auto* ids : {&set.splits[i].train, &set.splits[i].test}) {
      for (const std::string& id : *ids) {
        if (!known.count(id)) {
          throw Error(Errc::kUnknownIdentity,
                      "split " + std::to_string(i) + " references '" + id + "'");
        }
      }
    }
  }
}

void check_attribute_identities(const AttributeTable& table,
                                const std::set<std::string>& known) {
  for (const std::string& id : table.identities) {
    if (!known.count(id)) {
      throw Error(Errc::kUnknownIdentity, "attribute row references '" + id + "'");
    }
  }
}

std::set<std::string> identities_of(const FeatureSet& records) {
  std::set<std::string> ids;
  for (const FeatureRecord& r : records) ids.insert(r.identity);
  return ids;
}

std::set<std::string> identities_of(const Corpus& corpus) {
  std::set<std::string> ids;
  for (const Description& d : corpus) ids.insert(d.identity);
  return ids;
}

}  // namespace xmreid
