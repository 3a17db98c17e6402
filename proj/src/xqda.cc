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

#include <array>
#include <fstream>
#include <map>
#include <sstream>

#include "xmreid/dataio.h"

namespace xmreid {
namespace {

struct ViewSums {
  Vector sum;
  Matrix outer;  // sum of x x^T
  double count = 0.0;
};

void check_samples(const LabeledSamples& s) {
  const auto n = static_cast<std::size_t>(s.features.rows());
  if (s.labels.size() != n || s.views.size() != n) {
    throw Error(Errc::kShapeMismatch, "labels/views must have one entry per feature row");
  }
  for (int v : s.views) {
    if (v != 1 && v != 2) throw Error(Errc::kMalformedRecord, "view must be 1 or 2");
  }
  linalg::check_finite(s.features, "features");
}

std::vector<double> read_numbers(std::istream& in, std::size_t count) {
  std::vector<double> values(count);
  std::string token;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(in >> token)) throw Error(Errc::kCountMismatch, "model file ends early");
    values[i] = parse_real(token);
  }
  return values;
}

}  // namespace

DifferenceCovariances build_difference_covariances(const LabeledSamples& samples) {
  check_samples(samples);
  const Eigen::Index d = samples.features.cols();
  // Differences are translation invariant; centering only helps rounding.
  const Vector mean = samples.features.colwise().mean().transpose();

  std::map<int, std::array<ViewSums, 2>> classes;
  std::array<ViewSums, 2> total;
  for (auto& t : total) t = {Vector::Zero(d), Matrix::Zero(d, d), 0.0};
  for (Eigen::Index i = 0; i < samples.features.rows(); ++i) {
    auto [it, inserted] = classes.try_emplace(samples.labels[i]);
    if (inserted) {
      for (auto& t : it->second) t = {Vector::Zero(d), Matrix::Zero(d, d), 0.0};
    }
    const Vector x = samples.features.row(i).transpose() - mean;
    ViewSums& c = it->second[samples.views[i] - 1];
    c.sum += x;
    c.outer.selfadjointView<Eigen::Lower>().rankUpdate(x);
    c.count += 1.0;
  }
  if (classes.size() < 2) {
    throw Error(Errc::kTooFewIdentities, "need at least 2 identities, got " +
                                             std::to_string(classes.size()));
  }

  // sum_{i in A, j in B} (x_i - z_j)(x_i - z_j)^T
  //   = |B| Sxx_A + |A| Szz_B - s_A s_B^T - s_B s_A^T
  auto pair_moment = [](const ViewSums& a, const ViewSums& b) {
    Matrix out = b.count * a.outer + a.count * b.outer;
    out.noalias() -= a.sum * b.sum.transpose();
    out.noalias() -= b.sum * a.sum.transpose();
    return out;
  };

  DifferenceCovariances out;
  out.intra = Matrix::Zero(d, d);
  for (auto& [label, views] : classes) {
    for (auto& v : views) v.outer = Matrix(v.outer.selfadjointView<Eigen::Lower>());
    if (views[0].count == 0.0 || views[1].count == 0.0) {
      throw Error(Errc::kMissingView,
                  "identity " + std::to_string(label) + " lacks view " +
                      (views[0].count == 0.0 ? "1" : "2"));
    }
    out.intra += pair_moment(views[0], views[1]);
    out.intra_pairs += views[0].count * views[1].count;
    for (int v = 0; v < 2; ++v) {
      total[v].sum += views[v].sum;
      total[v].outer += views[v].outer;
      total[v].count += views[v].count;
    }
  }
  const double all_pairs = total[0].count * total[1].count;
  out.extra_pairs = all_pairs - out.intra_pairs;
  out.extra = (pair_moment(total[0], total[1]) - out.intra) / out.extra_pairs;
  out.intra /= out.intra_pairs;
  out.intra = symmetrized(out.intra);
  out.extra = symmetrized(out.extra);
  return out;
}

XqdaModel fit_xqda(const LabeledSamples& samples, const XqdaOptions& options) {
  if (options.ridge < 0.0) throw Error(Errc::kInvalidConfig, "ridge must be >= 0");
  if (options.max_rank < 1) throw Error(Errc::kInvalidConfig, "max_rank must be >= 1");
  check_samples(samples);
  const Eigen::Index d = samples.features.cols();

  XqdaModel model;
  model.mean = samples.features.colwise().mean().transpose();
  Vector scale = Vector::Ones(d);
  DifferenceCovariances cov;
  if (options.standardize) {
    const Matrix centered = samples.features.rowwise() - model.mean.transpose();
    const Vector sd =
        (centered.colwise().squaredNorm() / static_cast<double>(samples.features.rows()))
            .cwiseSqrt()
            .transpose();
    for (Eigen::Index j = 0; j < d; ++j) scale(j) = sd(j) > 0.0 ? 1.0 / sd(j) : 1.0;
    const Matrix z = centered * scale.asDiagonal();
    cov = build_difference_covariances({z, samples.labels, samples.views});
  } else {
    cov = build_difference_covariances(samples);
  }

  const double top_trace = std::max(cov.intra.trace(), cov.extra.trace());
  if (!(top_trace > 0.0)) {
    throw Error(Errc::kDegenerateMetric, "intra- and extra-personal covariances both vanish");
  }
  const double ridge = options.ridge * top_trace / static_cast<double>(d);
  const Matrix ridge_d = ridge * Matrix::Identity(d, d);

  const EigenResult<double> e = gen_eigh(cov.extra + ridge_d, cov.intra + ridge_d);
  Eigen::Index r = 0;
  while (r < e.values.size() && r < options.max_rank && e.values(r) > 1.0 + 1e-10) ++r;
  if (r == 0) {
    r = 1;
    model.fallback = true;
  }
  Matrix w = e.vectors.leftCols(r);
  w.colwise().normalize();
  model.eigenvalues = e.values.head(r);

  const Matrix ridge_r = ridge * Matrix::Identity(r, r);
  const Matrix intra_r = w.transpose() * cov.intra * w + ridge_r;
  const Matrix extra_r = w.transpose() * cov.extra * w + ridge_r;
  if (!(intra_r.norm() > 0.0) && !(extra_r.norm() > 0.0)) {
    throw Error(Errc::kDegenerateMetric, "projected covariances vanish");
  }
  model.m = symmetrized(Matrix(pseudo_inverse(intra_r) - pseudo_inverse(extra_r)));
  model.w = scale.asDiagonal() * w;
  return model;
}

double score(const XqdaModel& model, const Eigen::Ref<const Vector>& gallery,
             const Eigen::Ref<const Vector>& query) {
  if (gallery.size() != model.dim() || query.size() != model.dim()) {
    throw Error(Errc::kShapeMismatch, "XQDA model expects dimension " +
                                          std::to_string(model.dim()));
  }
  const Vector u = model.w.transpose() * (gallery - query);
  return u.dot(model.m * u);
}

void write_xqda(std::ostream& out, const XqdaModel& m) {
  out << "XMREID-XQDA 1\n" << m.dim() << ' ' << m.rank() << '\n';
  out << format_row(m.mean.transpose()) << '\n';
  for (Eigen::Index r = 0; r < m.w.rows(); ++r) out << format_row(m.w.row(r)) << '\n';
  for (Eigen::Index r = 0; r < m.m.rows(); ++r) out << format_row(m.m.row(r)) << '\n';
}

XqdaModel read_xqda(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "XMREID-XQDA 1") {
    throw Error(Errc::kMalformedHeader, "expected 'XMREID-XQDA 1'");
  }
  long d = 0, r = 0;
  if (!std::getline(in, line) || !(std::istringstream(line) >> d >> r) || d < 1 || r < 1 ||
      r > d) {
    throw Error(Errc::kMalformedHeader, "expected '<d> <r>'");
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  XqdaModel m;
  std::vector<double> v = read_numbers(in, d);
  m.mean = Eigen::Map<const Vector>(v.data(), d);
  v = read_numbers(in, d * r);
  m.w = Eigen::Map<const RowMajor>(v.data(), d, r);
  v = read_numbers(in, r * r);
  m.m = Eigen::Map<const RowMajor>(v.data(), r, r);
  std::string extra;
  if (in >> extra) throw Error(Errc::kCountMismatch, "trailing data after XQDA model");
  return m;
}

void save_xqda(const std::filesystem::path& path, const XqdaModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  write_xqda(out, model);
  if (!out.flush()) throw Error(Errc::kIo, "write failed for " + path.string());
}

XqdaModel load_xqda(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return read_xqda(in);
}

}  // namespace xmreid
