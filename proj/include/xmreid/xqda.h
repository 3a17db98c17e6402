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

// Cross-view quadratic discriminant analysis. Differences between view-1 and
// view-2 samples are modelled as two zero-mean Gaussians, intra-personal and
// extra-personal; a subspace W and kernel M are learned so that
//
//   s(g, q) = (g - q)^T W M W^T (g - q)
//
// is low for the same identity.

#ifndef XMREID_XQDA_H_
#define XMREID_XQDA_H_

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "xmreid/linalg.h"

namespace xmreid {

// Rows of `features` are samples; labels[i] is an identity index and
// views[i] is 1 or 2.
struct LabeledSamples {
  Eigen::Ref<const Matrix> features;
  const std::vector<int>& labels;
  const std::vector<int>& views;
};

struct DifferenceCovariances {
  Matrix intra;  // mean of d d^T over same-identity cross-view pairs
  Matrix extra;  // same over different-identity cross-view pairs
  double intra_pairs = 0.0;
  double extra_pairs = 0.0;
};

// Closed form over per-identity sums; no pair is enumerated.
DifferenceCovariances build_difference_covariances(const LabeledSamples& samples);

struct XqdaOptions {
  double ridge = 1e-3;  // relative: added ridge is ridge * max(tr) / d
  int max_rank = 64;
  bool standardize = false;  // z-score features on the training set first
};

struct XqdaModel {
  Matrix w;          // d x r, unit-norm columns (scaled per feature if standardized)
  Matrix m;          // r x r, symmetric
  Vector mean;       // training mean, kept for reference
  Vector eigenvalues;  // retained generalized eigenvalues
  bool fallback = false;  // no eigenvalue exceeded 1; the largest was kept

  Eigen::Index dim() const { return w.rows(); }
  Eigen::Index rank() const { return w.cols(); }
};

XqdaModel fit_xqda(const LabeledSamples& samples, const XqdaOptions& options = {});

double score(const XqdaModel& model, const Eigen::Ref<const Vector>& gallery,
             const Eigen::Ref<const Vector>& query);

void write_xqda(std::ostream& out, const XqdaModel& model);
XqdaModel read_xqda(std::istream& in);
void save_xqda(const std::filesystem::path& path, const XqdaModel& model);
XqdaModel load_xqda(const std::filesystem::path& path);

}  // namespace xmreid

#endif  // XMREID_XQDA_H_
