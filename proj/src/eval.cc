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

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <ostream>
#include <thread>
#include <unordered_map>

namespace xmreid {
namespace {

// Sub-streams of a split's generator.
constexpr std::uint64_t kFlipStream = 1;
constexpr std::uint64_t kGalleryStream = 2;

struct Sample {
  int label = 0;
  int view = 1;
  const Vector* vision = nullptr;
  const Vector* language = nullptr;
  const AttributeBits* attributes = nullptr;
};

struct Prepared {
  std::map<std::string, int, std::less<>> labels;
  std::vector<Sample> samples;
  int attribute_bits = 0;
};

std::string pair_key(const std::string& identity, int view) {
  return identity + '\x1f' + std::to_string(view);
}

Prepared prepare(const Dataset& data, Scenario scenario) {
  const bool vision = scenario_needs_vision(scenario);
  const bool language = scenario_needs_language(scenario);
  const std::string name(scenario_name(scenario));
  if (vision && data.vision.empty()) {
    throw Error(Errc::kMissingModality, name + " needs vision features");
  }
  if (language && data.language.empty()) {
    throw Error(Errc::kMissingModality, name + " needs language features");
  }
  if (scenario == Scenario::kVAxVA && !data.attributes) {
    throw Error(Errc::kMissingModality, name + " needs attributes");
  }

  Prepared out;
  const FeatureSet& base = vision ? data.vision : data.language;
  for (const FeatureRecord& r : base) out.labels.try_emplace(r.identity, 0);
  int next = 0;
  for (auto& [identity, label] : out.labels) label = next++;

  out.samples.reserve(base.size());
  for (const FeatureRecord& r : base) {
    Sample s;
    s.label = out.labels.at(r.identity);
    s.view = r.view;
    if (vision) s.vision = &r.values;
    else s.language = &r.values;
    out.samples.push_back(s);
  }

  if (vision && language) {
    bool by_row = data.language.size() == data.vision.size();
    for (std::size_t i = 0; by_row && i < base.size(); ++i) {
      by_row = data.language[i].identity == base[i].identity &&
               data.language[i].view == base[i].view;
    }
    if (by_row) {
      for (std::size_t i = 0; i < base.size(); ++i) {
        out.samples[i].language = &data.language[i].values;
      }
    } else {
      std::unordered_map<std::string, const Vector*> shared;
      for (const FeatureRecord& r : data.language) {
        if (!shared.emplace(pair_key(r.identity, r.view), &r.values).second) {
          throw Error(Errc::kCountMismatch,
                      "language records are neither row-paired with vision records nor "
                      "unique per (identity, view); repeated: " + r.identity);
        }
      }
      for (std::size_t i = 0; i < base.size(); ++i) {
        const auto it = shared.find(pair_key(base[i].identity, base[i].view));
        if (it == shared.end()) {
          throw Error(Errc::kMissingModality, "no language record for identity " +
                                                  base[i].identity + " view " +
                                                  std::to_string(base[i].view));
        }
        out.samples[i].language = it->second;
      }
    }
  }

  if (scenario == Scenario::kVAxVA) {
    out.attribute_bits = data.attributes->bits;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const AttributeBits* bits = data.attributes->find(base[i].identity);
      if (!bits) {
        throw Error(Errc::kMissingModality, "no attributes for identity " + base[i].identity);
      }
      out.samples[i].attributes = bits;
    }
  }
  return out;
}

std::vector<int> labels_of(const Prepared& p, const std::vector<std::string>& identities) {
  std::vector<int> out;
  out.reserve(identities.size());
  for (const std::string& id : identities) {
    const auto it = p.labels.find(id);
    if (it == p.labels.end()) throw Error(Errc::kUnknownIdentity, "split names " + id);
    out.push_back(it->second);
  }
  return out;
}

Modalities modalities_of(const Sample& s, const std::optional<AttributeBits>& flipped) {
  Modalities m;
  if (s.vision) m.vision = *s.vision;
  if (s.language) m.language = *s.language;
  if (flipped) {
    Vector bits(static_cast<Eigen::Index>(flipped->size()));
    for (std::size_t b = 0; b < flipped->size(); ++b) bits(b) = (*flipped)[b];
    m.attributes = std::move(bits);
  }
  return m;
}

CmcResult run_split(const Prepared& p, const Split& split, Scenario scenario,
                    const PipelineConfig& config, const Rng& rng) {
  const std::vector<int> train_labels = labels_of(p, split.train);
  const std::vector<int> test_labels = labels_of(p, split.test);
  std::vector<char> is_train(p.labels.size(), 0), is_test(p.labels.size(), 0);
  for (int l : train_labels) is_train[l] = 1;
  for (int l : test_labels) is_test[l] = 1;

  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < p.samples.size(); ++i) {
    if (is_train[p.samples[i].label]) train.push_back(i);
    if (is_test[p.samples[i].label]) test.push_back(i);
  }
  if (test.empty()) throw Error(Errc::kEmptySubset, "split has no test samples");

  std::vector<std::optional<AttributeBits>> flipped(p.samples.size());
  if (scenario == Scenario::kVAxVA) {
    const Rng flips = rng.fork(kFlipStream);
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
      if (!is_train[p.samples[i].label] && !is_test[p.samples[i].label]) continue;
      Rng local = flips.fork(i);
      flipped[i] = flip_attributes(*p.samples[i].attributes, config.attribute_flips, local);
    }
  }

  std::optional<CcaModel> fitted;
  const CcaModel* cca = nullptr;
  if (scenario_needs_cca(scenario)) {
    if (config.fixed_cca) {
      cca = &*config.fixed_cca;
    } else {
      if (train.empty()) throw Error(Errc::kEmptySubset, "split has no training samples");
      const Eigen::Index dx = p.samples[train[0]].vision->size();
      const Eigen::Index dy = p.samples[train[0]].language->size();
      Matrix x(static_cast<Eigen::Index>(train.size()), dx);
      Matrix y(static_cast<Eigen::Index>(train.size()), dy);
      for (std::size_t r = 0; r < train.size(); ++r) {
        x.row(r) = p.samples[train[r]].vision->transpose();
        y.row(r) = p.samples[train[r]].language->transpose();
      }
      const int k = config.cca_rank > 0 ? config.cca_rank : default_cca_rank(dx, dy);
      fitted = fit_cca(x, y, k, config.cca_regularizer);
      cca = &*fitted;
    }
  }

  auto feature = [&](std::size_t i) {
    const Sample& s = p.samples[i];
    return fuse(scenario, modalities_of(s, flipped[i]), cca,
                s.view == 1 ? FeatureRole::kGallery : FeatureRole::kQuery);
  };
  auto stack = [&](const std::vector<std::size_t>& rows) {
    Matrix out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Vector f = feature(rows[r]);
      if (r == 0) out.resize(static_cast<Eigen::Index>(rows.size()), f.size());
      if (f.size() != out.cols()) throw Error(Errc::kShapeMismatch, "ragged fused features");
      out.row(static_cast<Eigen::Index>(r)) = f.transpose();
    }
    return out;
  };

  Scorer scorer = euclidean_distance;
  std::optional<XqdaModel> metric;
  if (config.metric == Metric::kXqda) {
    std::vector<int> labels, views;
    for (std::size_t i : train) {
      labels.push_back(p.samples[i].label);
      views.push_back(p.samples[i].view);
    }
    const Matrix features = stack(train);
    XqdaOptions options = config.xqda;
    // Attribute codes and vision features live on different scales.
    if (scenario == Scenario::kVAxVA) options.standardize = true;
    metric = fit_xqda({features, labels, views}, options);
    scorer = [&metric](const Eigen::Ref<const Vector>& g, const Eigen::Ref<const Vector>& q) {
      return score(*metric, g, q);
    };
  }

  // Gallery: view-1 samples of each test identity, in split order.
  std::map<int, std::vector<std::size_t>> view1;
  std::vector<std::size_t> probes;
  for (std::size_t i : test) {
    if (p.samples[i].view == 1) view1[p.samples[i].label].push_back(i);
    else probes.push_back(i);
  }
  Rng pick = rng.fork(kGalleryStream);
  std::vector<std::size_t> gallery;
  std::vector<int> gallery_ids;
  for (std::size_t t = 0; t < split.test.size(); ++t) {
    const auto it = view1.find(test_labels[t]);
    if (it == view1.end()) {
      throw Error(Errc::kMissingView, "test identity " + split.test[t] + " has no view-1 sample");
    }
    if (config.multi_shot) {
      for (std::size_t i : it->second) {
        gallery.push_back(i);
        gallery_ids.push_back(test_labels[t]);
      }
    } else {
      gallery.push_back(it->second[pick.uniform_int(it->second.size())]);
      gallery_ids.push_back(test_labels[t]);
    }
  }
  if (probes.empty()) throw Error(Errc::kEmptySubset, "split has no view-2 test samples");
  std::vector<int> probe_ids;
  for (std::size_t i : probes) probe_ids.push_back(p.samples[i].label);

  Matrix scores = score_matrix(scorer, stack(gallery), stack(probes));
  if (config.multi_shot) {
    std::vector<int> collapsed;
    scores = collapse_by_identity(scores, gallery_ids, &collapsed);
    gallery_ids = std::move(collapsed);
  }
  return cmc(scores, gallery_ids, probe_ids);
}

}  // namespace

double euclidean_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  return (a - b).norm();
}

Matrix score_matrix(const Scorer& scorer, const Eigen::Ref<const Matrix>& gallery,
                    const Eigen::Ref<const Matrix>& probes) {
  if (gallery.rows() == 0) throw Error(Errc::kEmptyGallery, "gallery is empty");
  if (probes.rows() > 0 && probes.cols() != gallery.cols()) {
    throw Error(Errc::kShapeMismatch, "gallery and probe dimensions differ");
  }
  Matrix out(probes.rows(), gallery.rows());
  for (Eigen::Index q = 0; q < probes.rows(); ++q) {
    const Vector probe = probes.row(q).transpose();
    for (Eigen::Index g = 0; g < gallery.rows(); ++g) {
      out(q, g) = scorer(gallery.row(g).transpose(), probe);
    }
  }
  return out;
}

double CmcResult::at(long k) const {
  if (accuracies.size() == 0 || k < 1) return 0.0;
  return accuracies(std::min<long>(k, accuracies.size()) - 1);
}

CmcResult cmc(const Eigen::Ref<const Matrix>& scores, const std::vector<int>& gallery_ids,
              const std::vector<int>& probe_ids) {
  const Eigen::Index g_count = scores.cols();
  if (g_count == 0) throw Error(Errc::kEmptyGallery, "gallery is empty");
  if (static_cast<std::size_t>(g_count) != gallery_ids.size() ||
      static_cast<std::size_t>(scores.rows()) != probe_ids.size()) {
    throw Error(Errc::kShapeMismatch, "score matrix does not match the id lists");
  }
  if (probe_ids.empty()) throw Error(Errc::kEmptySubset, "no probes");

  CmcResult out;
  out.probes = static_cast<long>(probe_ids.size());
  out.gallery_size = g_count;
  std::vector<long> hits(g_count + 1, 0);
  std::vector<Eigen::Index> order(g_count);
  for (Eigen::Index p = 0; p < scores.rows(); ++p) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return scores(p, a) < scores(p, b);
    });
    long rank = 0;
    for (Eigen::Index pos = 0; pos < g_count; ++pos) {
      if (gallery_ids[order[pos]] == probe_ids[p]) {
        rank = pos + 1;
        break;
      }
    }
    if (rank == 0) {
      throw Error(Errc::kProbeIdentityAbsent,
                  "probe identity " + std::to_string(probe_ids[p]) + " not in gallery");
    }
    out.ranks.push_back(rank);
    ++hits[rank];
  }
  out.accuracies.resize(g_count);
  long cumulative = 0;
  for (Eigen::Index k = 1; k <= g_count; ++k) {
    cumulative += hits[k];
    out.accuracies(k - 1) = static_cast<double>(cumulative) / static_cast<double>(out.probes);
  }
  return out;
}

Matrix collapse_by_identity(const Eigen::Ref<const Matrix>& scores,
                            const std::vector<int>& gallery_ids, std::vector<int>* collapsed_ids) {
  std::vector<int> ids;
  std::map<int, Eigen::Index> column;
  for (int id : gallery_ids) {
    if (column.emplace(id, static_cast<Eigen::Index>(ids.size())).second) ids.push_back(id);
  }
  Matrix out = Matrix::Constant(scores.rows(), static_cast<Eigen::Index>(ids.size()),
                                std::numeric_limits<double>::infinity());
  for (Eigen::Index g = 0; g < scores.cols(); ++g) {
    const Eigen::Index c = column.at(gallery_ids[g]);
    out.col(c) = out.col(c).cwiseMin(scores.col(g));
  }
  if (collapsed_ids) *collapsed_ids = std::move(ids);
  return out;
}

double SplitReport::mean_at(long k) const {
  if (mean.size() == 0 || k < 1) return 0.0;
  return mean(std::min<long>(k, mean.size()) - 1);
}

double SplitReport::std_at(long k) const {
  if (std.size() == 0 || k < 1) return 0.0;
  return std(std::min<long>(k, std.size()) - 1);
}

SplitReport aggregate(std::string scenario, std::vector<CmcResult> splits) {
  SplitReport out;
  out.scenario = std::move(scenario);
  out.splits = std::move(splits);
  long g = 0;
  for (const CmcResult& r : out.splits) g = std::max<long>(g, r.accuracies.size());
  out.mean = Vector::Zero(g);
  out.std = Vector::Zero(g);
  const double n = static_cast<double>(out.splits.size());
  if (out.splits.empty()) return out;
  for (long k = 1; k <= g; ++k) {
    double sum = 0.0;
    for (const CmcResult& r : out.splits) sum += r.at(k);
    const double mean = sum / n;
    double sq = 0.0;
    for (const CmcResult& r : out.splits) sq += (r.at(k) - mean) * (r.at(k) - mean);
    out.mean(k - 1) = mean;
    out.std(k - 1) = out.splits.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
  }
  return out;
}

SplitReport evaluate_scenario(const Dataset& data, const SplitSet& splits, Scenario scenario,
                              const PipelineConfig& config, const Rng& rng) {
  if (splits.splits.empty()) throw Error(Errc::kEmptySubset, "no splits given");
  if (config.threads < 1) throw Error(Errc::kInvalidConfig, "threads must be >= 1");
  const Prepared prepared = prepare(data, scenario);

  const std::size_t n = splits.splits.size();
  std::vector<CmcResult> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t s = next++; s < n; s = next++) {
      try {
        results[s] = run_split(prepared, splits.splits[s], scenario, config, rng.fork(s));
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(config.threads, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return aggregate(std::string(scenario_name(scenario)), std::move(results));
}

AttributeBits flip_attributes(const AttributeBits& bits, int n, Rng& rng) {
  if (n < 0 || static_cast<std::size_t>(n) > bits.size()) {
    throw Error(Errc::kNOutOfRange, "cannot flip " + std::to_string(n) + " of " +
                                        std::to_string(bits.size()) + " bits");
  }
  AttributeBits out = bits;
  for (std::size_t pos : rng.sample_without_replacement(bits.size(), n)) out[pos] ^= 1;
  return out;
}

std::vector<SweepPoint> attribute_degradation_sweep(const Dataset& data, const SplitSet& splits,
                                                    const std::vector<int>& flips,
                                                    const PipelineConfig& config,
                                                    const Rng& rng) {
  std::vector<SweepPoint> out;
  for (int n : flips) {
    if (data.attributes && (n < 0 || n > data.attributes->bits)) {
      throw Error(Errc::kNOutOfRange, "N = " + std::to_string(n) + " outside [0, " +
                                          std::to_string(data.attributes->bits) + "]");
    }
    PipelineConfig local = config;
    local.attribute_flips = n;
    out.push_back({n, evaluate_scenario(data, splits, Scenario::kVAxVA, local, rng)});
  }
  return out;
}

void write_report_csv(std::ostream& out, const SplitReport& report) {
  out << "K,mean,std\n";
  for (Eigen::Index k = 0; k < report.mean.size(); ++k) {
    out << k + 1 << ',' << format_real(report.mean(k)) << ',' << format_real(report.std(k))
        << '\n';
  }
}

std::string format_report_table(const SplitReport& report) {
  std::string out = "scenario      R1             R5             R10\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s  %5.1f +- %-5.1f  %5.1f +- %-5.1f  %5.1f +- %-5.1f\n",
                report.scenario.c_str(), 100.0 * report.mean_at(1), 100.0 * report.std_at(1),
                100.0 * report.mean_at(5), 100.0 * report.std_at(5), 100.0 * report.mean_at(10),
                100.0 * report.std_at(10));
  out += line;
  return out;
}

}  // namespace xmreid
