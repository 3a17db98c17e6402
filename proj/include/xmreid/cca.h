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

// Regularized canonical correlation analysis between a vision view X and a
// language view Y, and the per-scenario gallery/query feature construction
// built on it.

#ifndef XMREID_CCA_H_
#define XMREID_CCA_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "xmreid/linalg.h"

namespace xmreid {

inline constexpr double kDefaultCcaRegularizer = 1e-4;
inline constexpr int kDefaultCcaRankBudget = 128;

// (1/n) Xc^T Xc + eps * (trace / d) * I, where Xc is X with column means
// removed and trace is that of the unregularized covariance. Rows of X are
// samples.
Matrix regularized_cov(const Eigen::Ref<const Matrix>& x, double eps);

// Cross-covariance (1/n) Xc^T Yc.
Matrix cross_cov(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y);

struct CcaModel {
  Matrix wx;             // d_x x k
  Matrix wy;             // d_y x k
  Vector correlations;   // k, descending, in [0, 1]
  Vector mean_x;
  Vector mean_y;
  double regularizer = 0.0;  // not persisted

  Eigen::Index k() const { return correlations.size(); }
};

// Canonical pairs maximizing tr(Wx^T Sxy Wy) subject to Wx^T Sxx Wx =
// Wy^T Syy Wy = I. Sxx and Syy are whitened with pseudo-inverse square roots
// and the Gram matrix of the whitened cross-covariance is diagonalized.
CcaModel fit_cca(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, int k,
                 double eps = kDefaultCcaRegularizer);

int default_cca_rank(Eigen::Index dx, Eigen::Index dy);

enum class Side { kX, kY };

// W^T (feature - mean) for the chosen side.
Vector project(const CcaModel& model, Side side, const Eigen::Ref<const Vector>& feature);

enum class Scenario { kVxV, kLxL, kVxL, kVxVL, kVLxVL, kVAxVA };

Scenario parse_scenario(std::string_view name);
std::string_view scenario_name(Scenario scenario);
bool scenario_needs_cca(Scenario scenario);
bool scenario_needs_vision(Scenario scenario);
bool scenario_needs_language(Scenario scenario);

enum class FeatureRole { kGallery, kQuery };

struct Modalities {
  std::optional<Vector> vision;
  std::optional<Vector> language;
  std::optional<Vector> attributes;  // bits as 0/1
};

// Gallery or query feature for a scenario:
//   VxV    x                      LxL    y
//   VxL    Wx^T x  |  Wy^T y      VxVL   x ++ Wx^T x  |  x ++ Wy^T y
//   VLxVL  x ++ y                 VAxVA  x ++ (2b - 1)
Vector fuse(Scenario scenario, const Modalities& input, const CcaModel* model, FeatureRole role);

void write_cca(std::ostream& out, const CcaModel& model);
CcaModel read_cca(std::istream& in);
void save_cca(const std::filesystem::path& path, const CcaModel& model);
CcaModel load_cca(const std::filesystem::path& path);

}  // namespace xmreid

#endif  // XMREID_CCA_H_
