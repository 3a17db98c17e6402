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

#include "xmreid/cca.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "xmreid/dataio.h"

namespace xmreid {
namespace {

// Correlations below this are treated as zero when mapping a canonical
// direction from one side to the other.
constexpr double kDegenerateCorrelation = 1e-8;

// Fills columns [from, k) of `basis` (orthonormal columns before `from`)
// with unit vectors orthogonal to all previous ones.
void complete_orthonormal(Matrix& basis, Eigen::Index from) {
  const Eigen::Index n = basis.rows();
  Eigen::Index col = from;
  for (Eigen::Index j = 0; j < n && col < basis.cols(); ++j) {
    Vector v = Vector::Unit(n, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index c = 0; c < col; ++c) v -= basis.col(c).dot(v) * basis.col(c);
    }
    const double norm = v.norm();
    if (norm > 0.5) basis.col(col++) = v / norm;
  }
}

// Given the eigenvectors `left` of T T^T with eigenvalues rho^2, returns the
// matching right singular directions T^T u / rho.
Matrix right_directions(const Matrix& t, const Matrix& left, const Vector& rho) {
  Matrix right(t.cols(), left.cols());
  Eigen::Index good = 0;
  for (; good < left.cols() && rho(good) > kDegenerateCorrelation; ++good) {
    right.col(good) = t.transpose() * left.col(good) / rho(good);
  }
  complete_orthonormal(right, good);
  return right;
}

Matrix centered(const Eigen::Ref<const Matrix>& x) {
  return x.rowwise() - x.colwise().mean();
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

Matrix regularized_cov(const Eigen::Ref<const Matrix>& x, double eps) {
  if (x.rows() < 2) {
    throw Error(Errc::kTooFewSamples, "covariance needs at least 2 samples, got " +
                                          std::to_string(x.rows()));
  }
  if (eps < 0.0) throw Error(Errc::kInvalidConfig, "regularizer must be >= 0");
  const Matrix xc = centered(x);
  Matrix cov = xc.transpose() * xc / static_cast<double>(x.rows());
  cov = (cov + cov.transpose()) / 2.0;
  const double ridge = eps * cov.trace() / static_cast<double>(cov.rows());
  cov.diagonal().array() += ridge;
  return cov;
}

Matrix cross_cov(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) {
  return centered(x).transpose() * centered(y) / static_cast<double>(x.rows());
}

int default_cca_rank(Eigen::Index dx, Eigen::Index dy) {
  return static_cast<int>(std::min<Eigen::Index>({dx, dy, kDefaultCcaRankBudget}));
}

CcaModel fit_cca(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, int k,
                 double eps) {
  if (x.rows() != y.rows()) {
    throw Error(Errc::kShapeMismatch, "X and Y must have the same number of paired samples");
  }
  if (x.rows() < 2) throw Error(Errc::kTooFewSamples, "CCA needs at least 2 paired samples");
  const Eigen::Index dx = x.cols();
  const Eigen::Index dy = y.cols();
  if (k < 1 || k > std::min(dx, dy)) {
    throw Error(Errc::kKOutOfRange, "k = " + std::to_string(k) + " outside [1, " +
                                        std::to_string(std::min(dx, dy)) + "]");
  }
  linalg::check_finite(x, "X");
  linalg::check_finite(y, "Y");

  const Matrix wx_white = inverse_sqrt(regularized_cov(x, eps));
  const Matrix wy_white = inverse_sqrt(regularized_cov(y, eps));
  const Matrix t = wx_white * cross_cov(x, y) * wy_white;

  Matrix u, v;
  Vector rho(k);
  if (dx <= dy) {
    const EigenResult<double> e = eigh(Matrix(t * t.transpose()));
    for (int i = 0; i < k; ++i) rho(i) = std::sqrt(std::max(0.0, e.values(i)));
    u = e.vectors.leftCols(k);
    v = right_directions(t, u, rho);
  } else {
    const EigenResult<double> e = eigh(Matrix(t.transpose() * t));
    for (int i = 0; i < k; ++i) rho(i) = std::sqrt(std::max(0.0, e.values(i)));
    v = e.vectors.leftCols(k);
    u = right_directions(t.transpose(), v, rho);
  }

  CcaModel model;
  model.wx = wx_white * u;
  model.wy = wy_white * v;
  model.correlations = rho.cwiseMin(1.0).cwiseMax(0.0);
  model.mean_x = x.colwise().mean().transpose();
  model.mean_y = y.colwise().mean().transpose();
  model.regularizer = eps;
  return model;
}

Vector project(const CcaModel& model, Side side, const Eigen::Ref<const Vector>& feature) {
  const Matrix& w = side == Side::kX ? model.wx : model.wy;
  const Vector& mean = side == Side::kX ? model.mean_x : model.mean_y;
  if (feature.size() != w.rows()) {
    throw Error(Errc::kShapeMismatch, "feature has " + std::to_string(feature.size()) +
                                          " components, model side expects " +
                                          std::to_string(w.rows()));
  }
  return w.transpose() * (feature - mean);
}

Scenario parse_scenario(std::string_view name) {
  if (name == "VxV") return Scenario::kVxV;
  if (name == "LxL") return Scenario::kLxL;
  if (name == "VxL") return Scenario::kVxL;
  if (name == "VxVL") return Scenario::kVxVL;
  if (name == "VLxVL") return Scenario::kVLxVL;
  if (name == "VAxVA") return Scenario::kVAxVA;
  throw Error(Errc::kInvalidConfig, "unknown scenario '" + std::string(name) + "'");
}

std::string_view scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::kVxV: return "VxV";
    case Scenario::kLxL: return "LxL";
    case Scenario::kVxL: return "VxL";
    case Scenario::kVxVL: return "VxVL";
    case Scenario::kVLxVL: return "VLxVL";
    case Scenario::kVAxVA: return "VAxVA";
  }
  return "?";
}

bool scenario_needs_cca(Scenario s) { return s == Scenario::kVxL || s == Scenario::kVxVL; }

bool scenario_needs_vision(Scenario s) { return s != Scenario::kLxL; }

bool scenario_needs_language(Scenario s) {
  return s == Scenario::kLxL || s == Scenario::kVxL || s == Scenario::kVxVL ||
         s == Scenario::kVLxVL;
}

Vector fuse(Scenario scenario, const Modalities& input, const CcaModel* model,
            FeatureRole role) {
  const bool gallery = role == FeatureRole::kGallery;
  auto need = [&](const std::optional<Vector>& v, const char* what) -> const Vector& {
    if (!v) {
      throw Error(Errc::kMissingModality, std::string(scenario_name(scenario)) + " " +
                                              (gallery ? "gallery" : "query") + " needs " + what);
    }
    return *v;
  };
  auto need_model = [&]() -> const CcaModel& {
    if (!model) {
      throw Error(Errc::kMissingModel,
                  std::string(scenario_name(scenario)) + " needs a fitted CCA model");
    }
    return *model;
  };
  auto concat = [](const Vector& a, const Vector& b) {
    Vector out(a.size() + b.size());
    out << a, b;
    return out;
  };

  switch (scenario) {
    case Scenario::kVxV:
      return need(input.vision, "vision");
    case Scenario::kLxL:
      return need(input.language, "language");
    case Scenario::kVxL:
      if (gallery) return project(need_model(), Side::kX, need(input.vision, "vision"));
      return project(need_model(), Side::kY, need(input.language, "language"));
    case Scenario::kVxVL: {
      const Vector& x = need(input.vision, "vision");
      if (gallery) return concat(x, project(need_model(), Side::kX, x));
      return concat(x, project(need_model(), Side::kY, need(input.language, "language")));
    }
    case Scenario::kVLxVL:
      return concat(need(input.vision, "vision"), need(input.language, "language"));
    case Scenario::kVAxVA: {
      const Vector& bits = need(input.attributes, "attributes");
      return concat(need(input.vision, "vision"), (2.0 * bits.array() - 1.0).matrix());
    }
  }
  throw Error(Errc::kInvalidConfig, "unhandled scenario");
}

void write_cca(std::ostream& out, const CcaModel& m) {
  out << "XMREID-CCA 1\n" << m.wx.rows() << ' ' << m.wy.rows() << ' ' << m.k() << '\n';
  out << format_row(m.mean_x.transpose()) << '\n';
  out << format_row(m.mean_y.transpose()) << '\n';
  for (Eigen::Index r = 0; r < m.wx.rows(); ++r) out << format_row(m.wx.row(r)) << '\n';
  for (Eigen::Index r = 0; r < m.wy.rows(); ++r) out << format_row(m.wy.row(r)) << '\n';
  out << format_row(m.correlations.transpose()) << '\n';
}

CcaModel read_cca(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "XMREID-CCA 1") {
    throw Error(Errc::kMalformedHeader, "expected 'XMREID-CCA 1'");
  }
  long dx = 0, dy = 0, k = 0;
  if (!std::getline(in, line) || !(std::istringstream(line) >> dx >> dy >> k) || dx < 1 ||
      dy < 1 || k < 1 || k > std::min(dx, dy)) {
    throw Error(Errc::kMalformedHeader, "expected '<d_x> <d_y> <k>'");
  }
  CcaModel m;
  auto vec = [&](long n) {
    const std::vector<double> v = read_numbers(in, n);
    return Vector(Eigen::Map<const Vector>(v.data(), n));
  };
  auto mat = [&](long rows, long cols) {
    const std::vector<double> v = read_numbers(in, rows * cols);
    return Matrix(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                  Eigen::RowMajor>>(v.data(), rows, cols));
  };
  m.mean_x = vec(dx);
  m.mean_y = vec(dy);
  m.wx = mat(dx, k);
  m.wy = mat(dy, k);
  m.correlations = vec(k);
  std::string extra;
  if (in >> extra) throw Error(Errc::kCountMismatch, "trailing data after CCA model");
  return m;
}

void save_cca(const std::filesystem::path& path, const CcaModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  write_cca(out, model);
  if (!out.flush()) throw Error(Errc::kIo, "write failed for " + path.string());
}

CcaModel load_cca(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return read_cca(in);
}

}  // namespace xmreid
