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

#include "xmreid/synth.h"

#include <cmath>
#include <numeric>
#include <set>

namespace xmreid {
namespace {

// Sub-streams of the master generator.
constexpr std::uint64_t kMixingStream = 0;
constexpr std::uint64_t kIdentityStream = 1;
constexpr std::uint64_t kAttributeStream = 2;
constexpr std::uint64_t kSplitStream = 3;

constexpr double kPi = 3.14159265358979323846;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = rng.normal();
  }
  return out;
}

Vector gaussian(Eigen::Index n, Rng& rng) { return gaussian(n, 1, rng).col(0); }

// Plain two-pass correlation of two equally long sequences.
double correlation(const std::vector<double>& u, const std::vector<double>& v) {
  const double n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double suv = 0.0, suu = 0.0, svv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suv += (u[i] - mu) * (v[i] - mv);
    suu += (u[i] - mu) * (u[i] - mu);
    svv += (v[i] - mv) * (v[i] - mv);
  }
  if (suu <= 0.0 || svv <= 0.0) return 0.0;
  return suv / std::sqrt(suu * svv);
}

}  // namespace

SynthConfig SynthConfig::cca_reference() {
  SynthConfig c;
  c.identities = 50;
  c.samples_per_view = 4;
  c.shared_dim = 5;
  c.dim_x = 32;
  c.dim_y = 16;
  c.sigma_x = 0.5;
  c.sigma_y = 0.5;
  return c;
}

SynthConfig SynthConfig::scenario_reference() {
  SynthConfig c;
  c.identities = 200;
  c.samples_per_view = 4;
  c.shared_dim = 5;
  c.private_dim_x = 3;
  c.private_dim_y = 3;
  c.dim_x = 32;
  c.dim_y = 16;
  c.sigma_x = 0.5;
  c.sigma_y = 1.0;
  c.view_shift = 0.4;
  c.independent_shifts = true;
  c.splits = 20;
  c.train_identities = 100;
  return c;
}

SynthConfig SynthConfig::attribute_reference() {
  SynthConfig c;
  c.identities = 100;
  c.samples_per_view = 1;
  c.shared_dim = 5;
  c.dim_x = 32;
  c.dim_y = 16;
  c.sigma_x = 0.5;
  c.sigma_y = 0.5;
  c.view_shift = 0.5;
  c.attribute_bits = 15;
  c.unique_attributes = true;
  c.splits = 10;
  c.train_identities = 50;
  return c;
}

void validate(const SynthConfig& c) {
  auto fail = [](const std::string& what) { throw Error(Errc::kInvalidConfig, what); };
  if (c.identities < 2) fail("identities must be >= 2");
  if (c.samples_per_view < 1) fail("samples_per_view must be >= 1");
  if (c.shared_dim < 1) fail("shared_dim must be >= 1");
  if (c.private_dim_x < 0 || c.private_dim_y < 0) fail("private dims must be >= 0");
  if (c.dim_x < 1 || c.dim_y < 1) fail("feature dims must be >= 1");
  if (!(c.sigma_x >= 0.0) || !(c.sigma_y >= 0.0) || !(c.view_shift >= 0.0)) {
    fail("noise and shift scales must be >= 0");
  }
  if (c.attribute_bits < 1 || c.attribute_bits > 62) fail("attribute_bits must be in [1, 62]");
  if (c.unique_attributes && c.attribute_bits < 62 &&
      (std::uint64_t{1} << c.attribute_bits) < static_cast<std::uint64_t>(c.identities)) {
    fail("too few attribute bits for unique codes");
  }
  if (c.splits < 1) fail("splits must be >= 1");
  if (c.train_identities < 1 || c.train_identities >= c.identities) {
    fail("train_identities must be in [1, identities)");
  }
}

std::string synth_identity(int index, int count) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(count - 1).size());
  std::string digits = std::to_string(index);
  return "id" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

SplitSet random_splits(const std::vector<std::string>& identities, int splits, int train,
                       const Rng& rng) {
  if (train < 1 || static_cast<std::size_t>(train) >= identities.size()) {
    throw Error(Errc::kInvalidConfig, "train count must leave at least one test identity");
  }
  SplitSet out;
  for (int s = 0; s < splits; ++s) {
    Rng local = rng.fork(static_cast<std::uint64_t>(s));
    std::vector<std::string> order = identities;
    local.shuffle(order);
    Split split;
    split.train.assign(order.begin(), order.begin() + train);
    split.test.assign(order.begin() + train, order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    out.splits.push_back(std::move(split));
  }
  return out;
}

SynthDataset gen_paired(const SynthConfig& c) {
  validate(c);
  const Rng root(c.seed);
  const int s = c.shared_dim, px = c.private_dim_x, py = c.private_dim_y;

  Rng mixing = root.fork(kMixingStream);
  const Matrix a = gaussian(c.dim_x, s + px, mixing);
  const Matrix b = gaussian(c.dim_y, s + py, mixing);

  SynthDataset out;
  std::vector<std::string> names;
  const Rng identity_root = root.fork(kIdentityStream);
  for (int i = 0; i < c.identities; ++i) {
    const std::string name = synth_identity(i, c.identities);
    names.push_back(name);
    Rng rng = identity_root.fork(static_cast<std::uint64_t>(i));
    const Vector z = gaussian(s + px + py, rng);
    for (int view = 1; view <= 2; ++view) {
      Vector zx(s + px), zy(s + py);
      if (c.independent_shifts) {
        zx << z.head(s), z.segment(s, px);
        zy << z.head(s), z.tail(py);
        zx += c.view_shift * gaussian(s + px, rng);
        zy += c.view_shift * gaussian(s + py, rng);
      } else {
        const Vector shifted = z + c.view_shift * gaussian(s + px + py, rng);
        zx << shifted.head(s), shifted.segment(s, px);
        zy << shifted.head(s), shifted.tail(py);
      }
      const Vector clean_x = a * zx;
      const Vector clean_y = b * zy;
      for (int k = 0; k < c.samples_per_view; ++k) {
        Vector x = clean_x + c.sigma_x * gaussian(c.dim_x, rng);
        Vector y = clean_y + c.sigma_y * gaussian(c.dim_y, rng);
        out.vision.push_back({name, view, std::move(x)});
        out.language.push_back({name, view, std::move(y)});
      }
    }
  }

  Rng attr = root.fork(kAttributeStream);
  out.attributes.bits = c.attribute_bits;
  std::set<std::uint64_t> used;
  for (const std::string& name : names) {
    std::uint64_t code = 0;
    do {
      code = 0;
      for (int bit = 0; bit < c.attribute_bits; ++bit) code |= (attr.next_u64() & 1) << bit;
    } while (c.unique_attributes && !used.insert(code).second);
    AttributeBits bits(c.attribute_bits);
    for (int bit = 0; bit < c.attribute_bits; ++bit) bits[bit] = (code >> bit) & 1;
    out.attributes.identities.push_back(name);
    out.attributes.rows.push_back(std::move(bits));
  }

  out.splits = random_splits(names, c.splits, c.train_identities, root.fork(kSplitStream));
  return out;
}

double oracle_cca_grid(const Matrix& x, const Matrix& y) {
  if (x.cols() != 2 || y.cols() != 2) {
    throw Error(Errc::kDimensionNotTwo, "grid oracle needs 2-D views");
  }
  if (x.rows() != y.rows()) throw Error(Errc::kShapeMismatch, "unpaired views");
  const std::size_t n = static_cast<std::size_t>(x.rows());
  constexpr int kSteps = 360;  // 0.5 degrees over a half turn
  std::vector<std::vector<double>> xs(kSteps, std::vector<double>(n));
  std::vector<std::vector<double>> ys(kSteps, std::vector<double>(n));
  for (int t = 0; t < kSteps; ++t) {
    const double angle = t * 0.5 * kPi / 180.0;
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (std::size_t i = 0; i < n; ++i) {
      xs[t][i] = ca * x(i, 0) + sa * x(i, 1);
      ys[t][i] = ca * y(i, 0) + sa * y(i, 1);
    }
  }
  double best = 0.0;
  for (int t = 0; t < kSteps; ++t) {
    for (int u = 0; u < kSteps; ++u) best = std::max(best, std::abs(correlation(xs[t], ys[u])));
  }
  return best;
}

PairCovariances oracle_pairwise_covariances(const Matrix& features, const std::vector<int>& labels,
                                            const std::vector<int>& views) {
  std::vector<Eigen::Index> first, second;
  for (std::size_t i = 0; i < views.size(); ++i) {
    (views[i] == 1 ? first : second).push_back(static_cast<Eigen::Index>(i));
  }
  if (first.size() * second.size() > 10000) {
    throw Error(Errc::kTooLarge, "more than 1e4 cross-view pairs");
  }
  if (std::set<int>(labels.begin(), labels.end()).size() < 2) {
    throw Error(Errc::kTooFewIdentities, "extra-personal pairs need two identities");
  }
  const Eigen::Index d = features.cols();
  PairCovariances out{Matrix::Zero(d, d), Matrix::Zero(d, d)};
  double intra = 0.0, extra = 0.0;
  for (Eigen::Index i : first) {
    for (Eigen::Index j : second) {
      const bool same = labels[i] == labels[j];
      Matrix& target = same ? out.intra : out.extra;
      for (Eigen::Index r = 0; r < d; ++r) {
        const double dr = features(i, r) - features(j, r);
        for (Eigen::Index c = 0; c < d; ++c) {
          target(r, c) += dr * (features(i, c) - features(j, c));
        }
      }
      (same ? intra : extra) += 1.0;
    }
  }
  if (intra > 0.0) out.intra /= intra;
  if (extra > 0.0) out.extra /= extra;
  return out;
}

Vector oracle_cmc_chance(int gallery, long probes, int trials, Rng& rng) {
  if (gallery < 1 || probes < 1 || trials < 1) {
    throw Error(Errc::kInvalidConfig, "gallery, probes and trials must be >= 1");
  }
  std::vector<double> hits(gallery, 0.0);
  std::vector<double> scores(gallery);
  for (int t = 0; t < trials; ++t) {
    for (long p = 0; p < probes; ++p) {
      for (double& s : scores) s = rng.uniform();
      int rank = 0;  // entry 0 is the true match
      for (int g = 1; g < gallery; ++g) rank += scores[g] < scores[0];
      hits[rank] += 1.0;
    }
  }
  Vector out(gallery);
  double cumulative = 0.0;
  const double total = static_cast<double>(probes) * trials;
  for (int k = 0; k < gallery; ++k) {
    cumulative += hits[k];
    out(k) = cumulative / total;
  }
  return out;
}

ToyText make_toy_text(int classes, int per_class, int embedding_dim, int max_tokens, Rng& rng) {
  if (classes < 1 || per_class < 1 || embedding_dim < 1 || max_tokens < 4) {
    throw Error(Errc::kInvalidConfig, "bad toy text shape");
  }
  constexpr int kSignatures = 3;
  constexpr int kFillers = 20;
  ToyText out{EmbeddingTable(embedding_dim), {}};
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j < kSignatures; ++j) {
      out.embeddings.add("c" + std::to_string(c) + "w" + std::to_string(j),
                         gaussian(embedding_dim, rng));
    }
  }
  for (int j = 0; j < kFillers; ++j) {
    out.embeddings.add("f" + std::to_string(j), gaussian(embedding_dim, rng));
  }
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const int length = 4 + static_cast<int>(rng.uniform_int(max_tokens - 3));
      Tokens tokens;
      for (int t = 0; t < length; ++t) {
        tokens.push_back("f" + std::to_string(rng.uniform_int(kFillers)));
      }
      for (int j = 0; j < 2; ++j) {
        tokens[rng.uniform_int(length)] =
            "c" + std::to_string(c) + "w" + std::to_string(rng.uniform_int(kSignatures));
      }
      out.samples.push_back({to_tensor(tokens, out.embeddings, max_tokens), c});
    }
  }
  return out;
}

PlantedDetector make_planted_detector(const TextCnnConfig& config, int planted, int count,
                                      Rng& rng) {
  validate(config);
  if (planted < 0 || planted >= config.channels) {
    throw Error(Errc::kInvalidConfig, "planted channel out of range");
  }
  const int e = config.embedding_dim, t = config.max_tokens, w = config.width;
  PlantedDetector out;
  out.model = init_model(config, rng);
  out.planted = planted;
  // Component 0 is reserved for the marker: fillers never touch it and the
  // planted kernel reads nothing else, at its centre tap.
  for (int k = 0; k < w; ++k) {
    for (int r = 0; r < e; ++r) out.model.kernel(planted, r, k) = 0.0;
  }
  out.model.kernel(planted, 0, w / 2) = 1.0;
  out.model.params.conv_bias(planted) = 0.0;

  const int lo = 1 + w / 2;              // earliest fully covered 1-based position
  const int hi = t - w + 1 + w / 2;      // latest
  for (int i = 0; i < count; ++i) {
    DescriptionTensor tensor;
    tensor.values = Matrix::Zero(e, t);
    tensor.used = t;
    for (int col = 0; col < t; ++col) {
      for (int r = 1; r < e; ++r) tensor.values(r, col) = rng.normal();
    }
    const long position = lo + static_cast<long>(rng.uniform_int(hi - lo + 1));
    tensor.values(0, position - 1) = 1.0;
    out.tensors.push_back(std::move(tensor));
    out.positions.push_back(position);
  }
  return out;
}

}  // namespace xmreid
