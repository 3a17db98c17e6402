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

#include "xmreid/xqda.h"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <sstream>

#include "test_util.h"
#include "xmreid/eval.h"
#include "xmreid/synth.h"

namespace xmreid {
namespace {

using testing::error_of;
using testing::random_matrix;

struct Data {
  Matrix features;
  std::vector<int> labels;
  std::vector<int> views;
  LabeledSamples samples() const { return {features, labels, views}; }
};

// Identity centres plus per-sample noise; every identity gets both views.
Data random_data(int ids, int max_per_view, Eigen::Index d, double noise, Rng& rng) {
  Data out;
  std::vector<Vector> rows;
  for (int id = 0; id < ids; ++id) {
    const Vector centre = random_matrix(d, 1, rng).col(0);
    for (int view = 1; view <= 2; ++view) {
      const int count = 1 + static_cast<int>(rng.uniform_int(max_per_view));
      for (int s = 0; s < count; ++s) {
        rows.push_back(centre + noise * random_matrix(d, 1, rng).col(0));
        out.labels.push_back(id);
        out.views.push_back(view);
      }
    }
  }
  out.features.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) out.features.row(i) = rows[i].transpose();
  return out;
}

TEST(DifferenceCovariances, MatchEnumerationOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int ids = 2 + static_cast<int>(rng.uniform_int(9));
    const Data data = random_data(ids, 4, 1 + rng.uniform_int(6), 0.7, rng);
    const DifferenceCovariances c = build_difference_covariances(data.samples());
    const PairCovariances o = oracle_pairwise_covariances(data.features, data.labels, data.views);
    EXPECT_LT((c.intra - o.intra).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((c.extra - o.extra).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(DifferenceCovariances, TwoIdentitiesOneSampleEach) {
  Data data;
  data.features.resize(4, 2);
  data.features << 1, 0, 0, 1, 2, 2, 3, 1;
  data.labels = {0, 0, 1, 1};
  data.views = {1, 2, 1, 2};
  const DifferenceCovariances c = build_difference_covariances(data.samples());
  const PairCovariances o = oracle_pairwise_covariances(data.features, data.labels, data.views);
  EXPECT_LT((c.intra - o.intra).norm(), 1e-15);
  EXPECT_LT((c.extra - o.extra).norm(), 1e-15);
  EXPECT_EQ(c.intra_pairs, 2.0);
  EXPECT_EQ(c.extra_pairs, 2.0);
}

TEST(DifferenceCovariances, IdenticalSamplesVanish) {
  Data data;
  data.features = Matrix::Constant(6, 3, 0.25);
  data.labels = {0, 0, 1, 1, 2, 2};
  data.views = {1, 2, 1, 2, 1, 2};
  const DifferenceCovariances c = build_difference_covariances(data.samples());
  EXPECT_TRUE(c.intra.isZero(0.0));
  EXPECT_TRUE(c.extra.isZero(0.0));
  EXPECT_EQ(error_of([&] { fit_xqda(data.samples()); }), Errc::kDegenerateMetric);
}

TEST(DifferenceCovariances, Errors) {
  Data data;
  data.features = Matrix::Ones(3, 2);
  data.labels = {0, 0, 1};
  data.views = {1, 2, 1};
  EXPECT_EQ(error_of([&] { build_difference_covariances(data.samples()); }), Errc::kMissingView);
  data.labels = {0, 0, 0};
  data.views = {1, 2, 2};
  EXPECT_EQ(error_of([&] { build_difference_covariances(data.samples()); }),
            Errc::kTooFewIdentities);
  data.labels = {0, 1};
  EXPECT_EQ(error_of([&] { build_difference_covariances(data.samples()); }), Errc::kShapeMismatch);
}

TEST(FitXqda, SeparatedClustersMatchGeneralizedOracle) {
  Rng rng(2);
  Data data;
  data.features.resize(40, 3);
  for (int i = 0; i < 40; ++i) {
    const int id = i / 20;
    Eigen::Vector3d centre(id ? 5.0 : -5.0, 0.0, 0.0);
    data.features.row(i) = (centre + 0.3 * random_matrix(3, 1, rng).col(0)).transpose();
    data.labels.push_back(id);
    data.views.push_back(1 + i % 2);
  }
  const XqdaOptions options;
  const XqdaModel m = fit_xqda(data.samples(), options);
  ASSERT_GE(m.rank(), 1);
  EXPECT_FALSE(m.fallback);
  EXPECT_GT(m.eigenvalues(0), 1.0);

  const PairCovariances o = oracle_pairwise_covariances(data.features, data.labels, data.views);
  const double ridge = options.ridge * std::max(o.intra.trace(), o.extra.trace()) / 3.0;
  const Matrix eye = Matrix::Identity(3, 3);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> oracle(o.extra + ridge * eye,
                                                         o.intra + ridge * eye);
  const Vector expected = oracle.eigenvalues().reverse();
  EXPECT_NEAR(m.eigenvalues(0), expected(0), 1e-9 * expected(0));
  for (Eigen::Index i = 0; i < m.rank(); ++i) EXPECT_GT(m.eigenvalues(i), 1.0);
  for (Eigen::Index i = m.rank(); i < 3; ++i) EXPECT_LE(expected(i), 1.0 + 1e-9);
}

TEST(FitXqda, NoSignalFallsBackToRankOne) {
  // One view-1 sample per identity and a shared view-2 point: every
  // difference appears equally often among intra and extra pairs.
  Rng rng(3);
  Data data;
  const int ids = 6;
  data.features.resize(2 * ids, 4);
  const Vector shared = random_matrix(4, 1, rng).col(0);
  for (int id = 0; id < ids; ++id) {
    data.features.row(2 * id) = random_matrix(1, 4, rng);
    data.features.row(2 * id + 1) = shared.transpose();
    data.labels.insert(data.labels.end(), {id, id});
    data.views.insert(data.views.end(), {1, 2});
  }
  const XqdaModel m = fit_xqda(data.samples());
  EXPECT_TRUE(m.fallback);
  EXPECT_EQ(m.rank(), 1);
  EXPECT_NEAR(m.eigenvalues(0), 1.0, 1e-9);
  for (int i = 0; i < 20; ++i) {
    const Vector g = random_matrix(4, 1, rng).col(0), q = random_matrix(4, 1, rng).col(0);
    EXPECT_LT(std::abs(score(m, g, q)), 1e-6 * (g - q).squaredNorm());
  }
}

TEST(FitXqda, BeatsEuclideanOnNuisanceDimensions) {
  // Identity lives in 3 dims; 7 dims carry large view-dependent nuisance.
  Rng rng(4);
  const Eigen::Index d = 10;
  auto make = [&](int ids, Data& out) {
    std::vector<Vector> rows;
    for (int id = 0; id < ids; ++id) {
      Vector centre = Vector::Zero(d);
      centre.head(3) = random_matrix(3, 1, rng).col(0);
      for (int view = 1; view <= 2; ++view) {
        for (int s = 0; s < 2; ++s) {
          Vector x = centre;
          x.head(3) += 0.2 * random_matrix(3, 1, rng).col(0);
          x.tail(7) += 3.0 * random_matrix(7, 1, rng).col(0);
          rows.push_back(x);
          out.labels.push_back(id);
          out.views.push_back(view);
        }
      }
    }
    out.features.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) out.features.row(i) = rows[i].transpose();
  };
  Data train, test;
  make(60, train);
  make(50, test);
  const XqdaModel m = fit_xqda(train.samples());

  std::vector<Eigen::Index> g_rows, p_rows;
  std::vector<int> g_ids, p_ids;
  for (Eigen::Index i = 0; i < test.features.rows(); ++i) {
    if (test.views[i] == 1 && (g_ids.empty() || g_ids.back() != test.labels[i])) {
      g_rows.push_back(i);
      g_ids.push_back(test.labels[i]);
    } else if (test.views[i] == 2) {
      p_rows.push_back(i);
      p_ids.push_back(test.labels[i]);
    }
  }
  const Matrix gallery = test.features(g_rows, Eigen::all);
  const Matrix probes = test.features(p_rows, Eigen::all);
  const double xqda_r1 =
      cmc(score_matrix([&](const auto& g, const auto& q) { return score(m, g, q); }, gallery,
                       probes),
          g_ids, p_ids)
          .at(1);
  const double eucl_r1 = cmc(score_matrix(euclidean_distance, gallery, probes), g_ids, p_ids).at(1);
  EXPECT_GT(xqda_r1, eucl_r1 + 0.2);
}

TEST(Score, HandModel) {
  XqdaModel m;
  m.w = Matrix::Identity(2, 2);
  m.m = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  m.mean = Vector::Zero(2);
  EXPECT_EQ(score(m, Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0)), 0.0);
  EXPECT_EQ(score(m, Eigen::Vector2d(2, 0), Eigen::Vector2d(0, 0)), 4.0);
  EXPECT_EQ(score(m, Eigen::Vector2d(0, 3), Eigen::Vector2d(0, 0)), -9.0);
  EXPECT_EQ(error_of([&] { score(m, Vector::Zero(3), Vector::Zero(3)); }), Errc::kShapeMismatch);
}

TEST(Score, SymmetryZeroAndTranslation) {
  Rng rng(5);
  Data data = random_data(8, 3, 5, 0.5, rng);
  const XqdaModel m = fit_xqda(data.samples());
  EXPECT_LT((m.m - m.m.transpose()).cwiseAbs().maxCoeff(), 1e-9);

  const Vector shift = 10.0 * random_matrix(5, 1, rng).col(0);
  Data moved = data;
  moved.features.rowwise() += shift.transpose();
  const XqdaModel m2 = fit_xqda(moved.samples());
  for (int i = 0; i < 1000; ++i) {
    const Vector g = random_matrix(5, 1, rng).col(0), q = random_matrix(5, 1, rng).col(0);
    ASSERT_EQ(score(m, g, q), score(m, q, g));
    ASSERT_EQ(score(m, g, g), 0.0);
    const double s = score(m, g, q);
    ASSERT_NEAR(score(m, g + shift, q + shift), s, 1e-9 * (1.0 + std::abs(s)));
    ASSERT_NEAR(score(m2, g, q), s, 1e-9 * (1.0 + std::abs(s)));
  }
}

TEST(FitXqda, StandardizeAndRankCap) {
  Rng rng(6);
  const Data data = random_data(12, 3, 6, 0.3, rng);
  XqdaOptions options;
  options.max_rank = 2;
  options.standardize = true;
  const XqdaModel m = fit_xqda(data.samples(), options);
  EXPECT_LE(m.rank(), 2);
  EXPECT_EQ(m.dim(), 6);
  options.ridge = -1.0;
  EXPECT_EQ(error_of([&] { fit_xqda(data.samples(), options); }), Errc::kInvalidConfig);
}

TEST(ModelFile, RoundTripIsExact) {
  Rng rng(7);
  const Data data = random_data(6, 2, 4, 0.4, rng);
  const XqdaModel m = fit_xqda(data.samples());
  std::stringstream s;
  write_xqda(s, m);
  const XqdaModel back = read_xqda(s);
  EXPECT_EQ(back.w, m.w);
  EXPECT_EQ(back.m, m.m);
  EXPECT_EQ(back.mean, m.mean);
  std::istringstream bad("XMREID-XQDA 1\n4\n");
  EXPECT_EQ(error_of([&] { read_xqda(bad); }), Errc::kMalformedHeader);
}

}  // namespace
}  // namespace xmreid
