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

// Seeded synthetic paired-modality data, plus brute-force oracles that are
// deliberately written without the library's numerical code.

#ifndef XMREID_SYNTH_H_
#define XMREID_SYNTH_H_

#include <cstdint>
#include <vector>

#include "xmreid/dataio.h"
#include "xmreid/rng.h"
#include "xmreid/textcnn.h"

namespace xmreid {

// Per identity a latent z = (shared s, vision-private p_x, language-private
// p_y) ~ N(0, I). Per view a shift of scale `view_shift` is added; with
// independent_shifts the two modalities draw their own shifts, otherwise
// both see the same shifted shared part. Per sample
//
//   x = A [z_s; z_px] + sigma_x n,   y = B [z_s; z_py] + sigma_y n
//
// with fixed Gaussian mixings A (d_x x (s + p_x)) and B (d_y x (s + p_y)).
// With p_x = p_y = 0 and shared shifts this is x = A z_view + noise,
// y = B z_view + noise.
struct SynthConfig {
  int identities = 50;
  int samples_per_view = 4;
  int shared_dim = 5;
  int private_dim_x = 0;
  int private_dim_y = 0;
  int dim_x = 32;
  int dim_y = 16;
  double sigma_x = 0.5;
  double sigma_y = 0.5;
  double view_shift = 0.5;
  bool independent_shifts = false;
  int attribute_bits = 15;
  bool unique_attributes = true;
  int splits = 20;
  int train_identities = 25;
  std::uint64_t seed = 42;

  // 50 identities, d_x = 32, d_y = 16, s = 5, sigma = 0.5.
  static SynthConfig cca_reference();
  // Configuration used for the scenario-ordering run.
  static SynthConfig scenario_reference();
  // Configuration used for the attribute-flip sweep.
  static SynthConfig attribute_reference();
};

// Throws InvalidConfig.
void validate(const SynthConfig& config);

struct SynthDataset {
  FeatureSet vision;
  FeatureSet language;  // row-paired with `vision`
  AttributeTable attributes;
  SplitSet splits;
};

SynthDataset gen_paired(const SynthConfig& config);

// "id0007"-style names, zero-padded to the width of the largest index.
std::string synth_identity(int index, int count);

// Random train/test partitions of `identities`.
SplitSet random_splits(const std::vector<std::string>& identities, int splits, int train,
                       const Rng& rng);

// Max |corr(X a, Y b)| over unit directions a, b on a 0.5 degree grid.
double oracle_cca_grid(const Matrix& x, const Matrix& y);

struct PairCovariances {
  Matrix intra;
  Matrix extra;
};

// Explicit loops over every view-1 x view-2 pair; at most 1e4 pairs.
PairCovariances oracle_pairwise_covariances(const Matrix& features, const std::vector<int>& labels,
                                            const std::vector<int>& views);

// Monte Carlo CMC under i.i.d. uniform scores, gallery size g; out(K - 1)
// estimates K / g.
Vector oracle_cmc_chance(int gallery, long probes, int trials, Rng& rng);

// Toy text corpus: `classes` classes, each with its own pool of signature
// tokens mixed into filler tokens, and a random embedding table covering
// every token.
struct ToyText {
  EmbeddingTable embeddings;
  std::vector<LabeledTensor> samples;
};

ToyText make_toy_text(int classes, int per_class, int embedding_dim, int max_tokens, Rng& rng);

// A model whose channel `planted` responds only to a marker embedding. The
// returned tensors each contain the marker at positions[i] (1-based).
struct PlantedDetector {
  TextCnnModel model;
  int planted = 0;
  std::vector<DescriptionTensor> tensors;
  std::vector<long> positions;
};

PlantedDetector make_planted_detector(const TextCnnConfig& config, int planted, int count,
                                      Rng& rng);

}  // namespace xmreid

#endif  // XMREID_SYNTH_H_
