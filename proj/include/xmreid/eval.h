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

// Retrieval evaluation: score matrices, CMC curves, multi-split scenario
// runs and the attribute-flip sweep.

#ifndef XMREID_EVAL_H_
#define XMREID_EVAL_H_

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xmreid/cca.h"
#include "xmreid/dataio.h"
#include "xmreid/rng.h"
#include "xmreid/xqda.h"

namespace xmreid {

using Scorer = std::function<double(const Eigen::Ref<const Vector>& gallery,
                                    const Eigen::Ref<const Vector>& probe)>;

double euclidean_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

// Entry (p, g) = scorer(gallery row g, probe row p).
Matrix score_matrix(const Scorer& scorer, const Eigen::Ref<const Matrix>& gallery,
                    const Eigen::Ref<const Matrix>& probes);

struct CmcResult {
  Vector accuracies;       // accuracies(K - 1) for K = 1..G
  std::vector<long> ranks;  // 1-based rank of the first correct match per probe
  long probes = 0;
  long gallery_size = 0;

  double at(long k) const;  // clamps K > G to the terminal value
};

// Ascending scores, ties broken by gallery index.
CmcResult cmc(const Eigen::Ref<const Matrix>& scores, const std::vector<int>& gallery_ids,
              const std::vector<int>& probe_ids);

// Multi-shot reduction: one column per distinct gallery identity (in order
// of first appearance) holding the minimum score over its entries.
Matrix collapse_by_identity(const Eigen::Ref<const Matrix>& scores,
                            const std::vector<int>& gallery_ids, std::vector<int>* collapsed_ids);

struct SplitReport {
  std::string scenario;
  std::vector<CmcResult> splits;
  Vector mean;  // over splits, per K
  Vector std;   // sample standard deviation; 0 with one split

  double mean_at(long k) const;
  double std_at(long k) const;
};

// Aggregates per-split curves; shorter curves are padded with their terminal
// value.
SplitReport aggregate(std::string scenario, std::vector<CmcResult> splits);

// Samples with their modalities. Language records are paired with vision
// records row by row when both lists carry the same (identity, view)
// sequence; otherwise each (identity, view) must have exactly one language
// record, which is shared by all vision samples of that pair.
struct Dataset {
  FeatureSet vision;
  FeatureSet language;
  std::optional<AttributeTable> attributes;
};

enum class Metric { kXqda, kEuclidean };

struct PipelineConfig {
  Metric metric = Metric::kXqda;
  XqdaOptions xqda;
  int cca_rank = 0;  // 0: default_cca_rank
  double cca_regularizer = kDefaultCcaRegularizer;
  std::optional<CcaModel> fixed_cca;  // used instead of per-split fitting
  bool multi_shot = false;
  int attribute_flips = 0;  // N bits flipped per sample instance
  int threads = 1;
};

// Runs every split: models are fitted on train identities only; the gallery
// holds view-1 test samples (one per identity, drawn from the split's rng,
// unless multi-shot) and the probes are all view-2 test samples.
SplitReport evaluate_scenario(const Dataset& data, const SplitSet& splits, Scenario scenario,
                              const PipelineConfig& config, const Rng& rng);

// Inverts exactly n distinct, uniformly chosen positions.
AttributeBits flip_attributes(const AttributeBits& bits, int n, Rng& rng);

struct SweepPoint {
  int flips = 0;
  SplitReport report;
};

std::vector<SweepPoint> attribute_degradation_sweep(const Dataset& data, const SplitSet& splits,
                                                    const std::vector<int>& flips,
                                                    const PipelineConfig& config,
                                                    const Rng& rng);

// `K,mean,std` with one row per K.
void write_report_csv(std::ostream& out, const SplitReport& report);
// R1 / R5 / R10 in percent.
std::string format_report_table(const SplitReport& report);

}  // namespace xmreid

#endif  // XMREID_EVAL_H_
