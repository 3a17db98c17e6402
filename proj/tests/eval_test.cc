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

#include "xmreid/eval.h"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "test_util.h"
#include "xmreid/synth.h"

namespace xmreid {
namespace {

using testing::error_of;
using testing::random_matrix;

void expect_cmc_laws(const CmcResult& r) {
  for (Eigen::Index k = 1; k < r.accuracies.size(); ++k) {
    EXPECT_GE(r.accuracies(k), r.accuracies(k - 1));
  }
  EXPECT_EQ(r.accuracies(r.accuracies.size() - 1), 1.0);
}

Dataset dataset_of(const SynthDataset& s) { return {s.vision, s.language, s.attributes}; }

TEST(ScoreMatrix, Shapes) {
  Rng rng(1);
  const Matrix g = random_matrix(3, 4, rng);
  EXPECT_EQ(score_matrix(euclidean_distance, g, random_matrix(1, 4, rng)).rows(), 1);
  EXPECT_EQ(score_matrix(euclidean_distance, g, random_matrix(1, 4, rng)).cols(), 3);
  const Matrix s = score_matrix(euclidean_distance, g, g);
  EXPECT_EQ(s, s.transpose());
  EXPECT_EQ(error_of([&] { score_matrix(euclidean_distance, Matrix(0, 4), g); }),
            Errc::kEmptyGallery);
  EXPECT_EQ(error_of([&] { score_matrix(euclidean_distance, g, random_matrix(1, 3, rng)); }),
            Errc::kShapeMismatch);
}

TEST(ScoreMatrix, EuclideanHandPoints) {
  Matrix g(3, 2), p(1, 2);
  g << 0, 0, 1, 0, 3, 0;
  p << 0.9, 0;
  const Matrix s = score_matrix(euclidean_distance, g, p);
  EXPECT_NEAR(s(0, 0), 0.9, 1e-15);
  EXPECT_NEAR(s(0, 1), 0.1, 1e-15);
  EXPECT_NEAR(s(0, 2), 2.1, 1e-15);
}

TEST(Cmc, PerfectScorer) {
  Matrix s = Matrix::Ones(4, 4);
  s.diagonal().setZero();
  const CmcResult r = cmc(s, {0, 1, 2, 3}, {0, 1, 2, 3});
  EXPECT_EQ(r.at(1), 1.0);
  expect_cmc_laws(r);
}

TEST(Cmc, HandMatrix) {
  Matrix s(3, 3);
  s << 0.2, 0.1, 0.9, 0.5, 0.4, 0.3, 0.7, 0.8, 0.6;
  // Ascending: row 0 puts 0.2 second, row 1 puts 0.4 second, row 2 puts 0.6 first.
  const CmcResult r = cmc(s, {0, 1, 2}, {0, 1, 2});
  EXPECT_EQ(r.ranks, (std::vector<long>{2, 2, 1}));
  EXPECT_NEAR(r.at(1), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(r.at(2), 1.0);
  EXPECT_EQ(r.at(3), 1.0);
  // Reversed order (larger = closer) gives ranks 2, 2, 3.
  const CmcResult n = cmc(-s, {0, 1, 2}, {0, 1, 2});
  EXPECT_EQ(n.ranks, (std::vector<long>{2, 2, 3}));
  EXPECT_EQ(n.at(1), 0.0);
  EXPECT_NEAR(n.at(2), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(n.at(3), 1.0);
}

TEST(Cmc, TiesBreakByGalleryIndex) {
  const Matrix s = Matrix::Zero(2, 3);
  const CmcResult r = cmc(s, {5, 6, 7}, {7, 5});
  EXPECT_EQ(r.ranks, (std::vector<long>{3, 1}));
}

TEST(Cmc, Errors) {
  const Matrix s = Matrix::Zero(1, 2);
  EXPECT_EQ(error_of([&] { cmc(s, {0, 1}, {2}); }), Errc::kProbeIdentityAbsent);
  EXPECT_EQ(error_of([&] { cmc(s, {0}, {0}); }), Errc::kShapeMismatch);
}

TEST(Cmc, RandomScoresFollowUniformRankLaw) {
  Rng rng(2);
  const int g = 100;
  const long probes = 100000;
  Matrix s(probes, g);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform();
  std::vector<int> gallery_ids(g), probe_ids(probes);
  for (int i = 0; i < g; ++i) gallery_ids[i] = i;
  for (long p = 0; p < probes; ++p) probe_ids[p] = static_cast<int>(rng.uniform_int(g));
  const CmcResult r = cmc(s, gallery_ids, probe_ids);
  expect_cmc_laws(r);
  for (int k = 1; k <= g; ++k) EXPECT_NEAR(r.at(k), k / 100.0, 0.01) << "K=" << k;
}

TEST(Cmc, MonotoneTransformsDoNotChangeRanks) {
  Rng rng(3);
  const Matrix s = random_matrix(50, 20, rng);
  std::vector<int> g(20), p(50);
  for (int i = 0; i < 20; ++i) g[i] = i;
  for (int i = 0; i < 50; ++i) p[i] = i % 20;
  const CmcResult base = cmc(s, g, p);
  EXPECT_EQ(cmc(s.array().cube().matrix(), g, p).ranks, base.ranks);
  EXPECT_EQ(cmc(s.array().exp().matrix(), g, p).ranks, base.ranks);
}

TEST(CollapseByIdentity, MinimumPerIdentity) {
  Matrix s(1, 4);
  s << 0.5, 0.2, 0.9, 0.1;
  std::vector<int> ids;
  const Matrix c = collapse_by_identity(s, {3, 1, 3, 1}, &ids);
  EXPECT_EQ(ids, (std::vector<int>{3, 1}));
  EXPECT_EQ(c(0, 0), 0.5);
  EXPECT_EQ(c(0, 1), 0.1);
}

TEST(Aggregate, SingleSplitHasZeroStd) {
  Matrix s(2, 2);
  s << 0, 1, 0, 1;
  const SplitReport r = aggregate("VxV", {cmc(s, {0, 1}, {0, 1})});
  EXPECT_EQ(r.mean_at(1), 0.5);
  EXPECT_EQ(r.std_at(1), 0.0);
}

TEST(Aggregate, MeanWithinRangeAndSampleStd) {
  Matrix a(1, 2), b(1, 2);
  a << 0, 1;
  b << 1, 0;
  const SplitReport r = aggregate("x", {cmc(a, {0, 1}, {0}), cmc(b, {0, 1}, {0})});
  EXPECT_EQ(r.mean_at(1), 0.5);
  EXPECT_NEAR(r.std_at(1), std::sqrt(0.5), 1e-15);
  EXPECT_EQ(r.mean_at(2), 1.0);
}

TEST(Flip, Examples) {
  Rng rng(4);
  AttributeBits bits(15);
  for (int i = 0; i < 15; ++i) bits[i] = static_cast<std::uint8_t>(rng.uniform_int(2));
  EXPECT_EQ(flip_attributes(bits, 0, rng), bits);
  const AttributeBits all = flip_attributes(bits, 15, rng);
  for (int i = 0; i < 15; ++i) EXPECT_EQ(all[i], 1 - bits[i]);
  for (int t = 0; t < 200; ++t) {
    const AttributeBits two = flip_attributes(bits, 2, rng);
    int hamming = 0;
    for (int i = 0; i < 15; ++i) hamming += two[i] != bits[i];
    ASSERT_EQ(hamming, 2);
  }
  EXPECT_EQ(error_of([&] { flip_attributes(bits, 16, rng); }), Errc::kNOutOfRange);
  EXPECT_EQ(error_of([&] { flip_attributes(bits, -1, rng); }), Errc::kNOutOfRange);
}

TEST(EvaluateScenario, IdenticalViewsGivePerfectRankOne) {
  SynthConfig c = SynthConfig::cca_reference();
  c.samples_per_view = 1;
  c.splits = 3;
  SynthDataset s = gen_paired(c);
  // Copy each view-1 vector onto the matching view-2 record.
  for (std::size_t i = 0; i < s.vision.size(); ++i) {
    if (s.vision[i].view == 2) s.vision[i].values = s.vision[i - 1].values;
  }
  for (Metric metric : {Metric::kXqda, Metric::kEuclidean}) {
    PipelineConfig config;
    config.metric = metric;
    const SplitReport r = evaluate_scenario(dataset_of(s), s.splits, Scenario::kVxV, config, Rng(1));
    EXPECT_EQ(r.mean_at(1), 1.0);
  }
}

TEST(EvaluateScenario, DeterministicAndThreadIndependent) {
  SynthConfig c = SynthConfig::scenario_reference();
  c.splits = 6;
  const SynthDataset s = gen_paired(c);
  PipelineConfig config;
  const SplitReport a = evaluate_scenario(dataset_of(s), s.splits, Scenario::kVxVL, config, Rng(9));
  const SplitReport b = evaluate_scenario(dataset_of(s), s.splits, Scenario::kVxVL, config, Rng(9));
  config.threads = 4;
  const SplitReport t = evaluate_scenario(dataset_of(s), s.splits, Scenario::kVxVL, config, Rng(9));
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.mean, t.mean);
  EXPECT_EQ(a.std, t.std);
  for (const CmcResult& r : a.splits) expect_cmc_laws(r);
  std::ostringstream ca, ct;
  write_report_csv(ca, a);
  write_report_csv(ct, t);
  EXPECT_EQ(ca.str(), ct.str());
  EXPECT_EQ(ca.str().rfind("K,mean,std\n", 0), 0u);
}

// Nuisance here shares the identity subspace, so Euclidean is near-optimal;
// the learned metric should stay close. Gains on off-subspace nuisance are
// covered in xqda_test.
TEST(EvaluateScenario, XqdaTracksEuclideanOnVision) {
  SynthConfig c = SynthConfig::scenario_reference();
  c.splits = 5;
  const SynthDataset s = gen_paired(c);
  PipelineConfig config;
  const double xqda =
      evaluate_scenario(dataset_of(s), s.splits, Scenario::kVxV, config, Rng(2)).mean_at(1);
  config.metric = Metric::kEuclidean;
  const double eucl =
      evaluate_scenario(dataset_of(s), s.splits, Scenario::kVxV, config, Rng(2)).mean_at(1);
  EXPECT_GT(xqda, 0.5);
  EXPECT_GT(xqda, eucl - 0.03);
}

TEST(EvaluateScenario, MissingModalities) {
  SynthConfig c = SynthConfig::cca_reference();
  c.splits = 1;
  SynthDataset s = gen_paired(c);
  Dataset d = dataset_of(s);
  d.language.clear();
  EXPECT_EQ(error_of([&] { evaluate_scenario(d, s.splits, Scenario::kLxL, {}, Rng(1)); }),
            Errc::kMissingModality);
  d.attributes.reset();
  EXPECT_EQ(error_of([&] { evaluate_scenario(d, s.splits, Scenario::kVAxVA, {}, Rng(1)); }),
            Errc::kMissingModality);
}

TEST(EvaluateScenario, MultiShotCollapsesGallery) {
  SynthConfig c = SynthConfig::cca_reference();
  c.splits = 2;
  const SynthDataset s = gen_paired(c);
  PipelineConfig config;
  config.multi_shot = true;
  const SplitReport r = evaluate_scenario(dataset_of(s), s.splits, Scenario::kVxV, config, Rng(3));
  EXPECT_EQ(r.splits[0].gallery_size, c.identities - c.train_identities);
  expect_cmc_laws(r.splits[0]);
}

TEST(Sweep, UniqueAttributesAndDegradation) {
  const SynthDataset s = gen_paired(SynthConfig::attribute_reference());
  const auto sweep =
      attribute_degradation_sweep(dataset_of(s), s.splits, {0, 1, 2, 3}, {}, Rng(42));
  ASSERT_EQ(sweep.size(), 4u);
  EXPECT_EQ(sweep[0].report.mean_at(1), 1.0);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    EXPECT_LT(sweep[i].report.mean_at(1), sweep[i - 1].report.mean_at(1));
  }
  EXPECT_EQ(error_of([&] {
              attribute_degradation_sweep(dataset_of(s), s.splits, {16}, {}, Rng(1));
            }),
            Errc::kNOutOfRange);
}

TEST(Sweep, TwoSeedsAgreeWithinThreeStandardErrors) {
  const SynthDataset s = gen_paired(SynthConfig::attribute_reference());
  const double n = static_cast<double>(s.splits.splits.size());
  const auto a = attribute_degradation_sweep(dataset_of(s), s.splits, {1}, {}, Rng(42));
  const auto b = attribute_degradation_sweep(dataset_of(s), s.splits, {1}, {}, Rng(43));
  const double se = std::sqrt((std::pow(a[0].report.std_at(1), 2) +
                               std::pow(b[0].report.std_at(1), 2)) / n);
  EXPECT_LE(std::abs(a[0].report.mean_at(1) - b[0].report.mean_at(1)), 3.0 * se);
}

TEST(Report, TableInPercent) {
  Matrix s = Matrix::Ones(2, 2);
  s.diagonal().setZero();
  const std::string table = format_report_table(aggregate("VxV", {cmc(s, {0, 1}, {0, 1})}));
  EXPECT_NE(table.find("100.0"), std::string::npos);
  EXPECT_NE(table.find("VxV"), std::string::npos);
}

}  // namespace
}  // namespace xmreid
