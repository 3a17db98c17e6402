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

#include "xmreid/textcnn.h"

#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace xmreid {
namespace {

constexpr std::size_t kReductionChunk = 8;

using PatchMap = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

// im2col view of the input: column t is the E x w window starting at token
// t, flattened column-major. Windows overlap in memory, so this is a strided
// read-only map rather than a copy.
PatchMap patches(const TextCnnConfig& config, const DescriptionTensor& tensor) {
  const Eigen::Index e = config.embedding_dim;
  return PatchMap(tensor.values.data(), e * config.width, config.positions(),
                  Eigen::OuterStride<>(e));
}

void check_tensor(const TextCnnConfig& config, const DescriptionTensor& tensor) {
  if (tensor.dim() != config.embedding_dim || tensor.length() != config.max_tokens) {
    throw Error(Errc::kShapeMismatch,
                "tensor is " + std::to_string(tensor.dim()) + "x" + std::to_string(tensor.length()) +
                    ", model expects " + std::to_string(config.embedding_dim) + "x" +
                    std::to_string(config.max_tokens));
  }
}

void fill_uniform(Matrix& m, double bound, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = bound * (2.0 * rng.uniform() - 1.0);
  }
}

ForwardTrace run_forward(const TextCnnModel& model, const DescriptionTensor& tensor,
                         const Vector& mask) {
  const TextCnnConfig& cfg = model.config;
  check_tensor(cfg, tensor);
  const TextCnnParams& p = model.params;
  ForwardTrace t;
  t.response = (p.conv * patches(cfg, tensor)).colwise() + p.conv_bias;
  t.response = t.response.cwiseMax(0.0);
  t.argmax.resize(cfg.channels);
  t.pooled.resize(cfg.channels);
  for (int c = 0; c < cfg.channels; ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index u = 1; u < t.response.cols(); ++u) {
      if (t.response(c, u) > t.response(c, best)) best = u;
    }
    t.argmax[c] = best;
    t.pooled(c) = t.response(c, best);
  }
  t.hidden = (p.fc1 * t.pooled + p.fc1_bias).cwiseMax(0.0);
  t.mask = mask;
  t.dropped = t.hidden.cwiseProduct(mask);
  t.logits = p.fc2 * t.dropped + p.fc2_bias;
  return t;
}

}  // namespace

void validate(const TextCnnConfig& c) {
  auto bad = [](const std::string& what) { throw Error(Errc::kInvalidConfig, what); };
  if (c.embedding_dim < 1 || c.max_tokens < 1 || c.channels < 1 || c.width < 1 ||
      c.hidden < 1 || c.num_classes < 1) {
    bad("all network dimensions must be >= 1");
  }
  if (c.width > c.max_tokens) {
    bad("kernel width " + std::to_string(c.width) + " exceeds max tokens " +
        std::to_string(c.max_tokens));
  }
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) bad("dropout rate must be in [0, 1)");
}

TextCnnParams TextCnnParams::zeros(const TextCnnConfig& c) {
  TextCnnParams p;
  p.conv = Matrix::Zero(c.channels, c.embedding_dim * c.width);
  p.conv_bias = Vector::Zero(c.channels);
  p.fc1 = Matrix::Zero(c.hidden, c.channels);
  p.fc1_bias = Vector::Zero(c.hidden);
  p.fc2 = Matrix::Zero(c.num_classes, c.hidden);
  p.fc2_bias = Vector::Zero(c.num_classes);
  return p;
}

Eigen::Index TextCnnParams::size() const {
  Eigen::Index n = 0;
  for_each([&](const auto& block) { n += block.size(); });
  return n;
}

double& TextCnnParams::flat(Eigen::Index index) {
  double* found = nullptr;
  for_each([&](auto& block) {
    if (found) return;
    if (index < block.size()) {
      found = block.data() + index;
    } else {
      index -= block.size();
    }
  });
  if (!found) throw Error(Errc::kShapeMismatch, "parameter index out of range");
  return *found;
}

double TextCnnParams::flat(Eigen::Index index) const {
  return const_cast<TextCnnParams*>(this)->flat(index);
}

TextCnnModel init_model(const TextCnnConfig& config, Rng& rng) {
  validate(config);
  TextCnnModel model{config, TextCnnParams::zeros(config)};
  const double e_w = static_cast<double>(config.embedding_dim) * config.width;
  fill_uniform(model.params.conv, std::sqrt(6.0 / (e_w + config.channels)), rng);
  fill_uniform(model.params.fc1, std::sqrt(6.0 / (config.channels + config.hidden)), rng);
  fill_uniform(model.params.fc2, std::sqrt(6.0 / (config.hidden + config.num_classes)), rng);
  return model;
}

ForwardTrace forward(const TextCnnModel& model, const DescriptionTensor& tensor, bool train,
                     Rng& rng) {
  const TextCnnConfig& cfg = model.config;
  Vector mask = Vector::Ones(cfg.hidden);
  if (train && cfg.dropout > 0.0) {
    const double keep = 1.0 / (1.0 - cfg.dropout);
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      mask(i) = rng.uniform() < cfg.dropout ? 0.0 : keep;
    }
  }
  return run_forward(model, tensor, mask);
}

ForwardTrace forward_with_mask(const TextCnnModel& model, const DescriptionTensor& tensor,
                               const Vector& mask) {
  if (mask.size() != model.config.hidden) {
    throw Error(Errc::kShapeMismatch, "dropout mask length differs from FC1 width");
  }
  return run_forward(model, tensor, mask);
}

Vector softmax(const Vector& logits) {
  const Vector shifted = logits.array() - logits.maxCoeff();
  const Vector e = shifted.array().exp();
  return e / e.sum();
}

double softmax_cross_entropy(const Vector& logits, int label) {
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  return lse - logits(label);
}

LossAndGradients backward(const TextCnnModel& model, const DescriptionTensor& tensor,
                          const ForwardTrace& t, int label) {
  const TextCnnConfig& cfg = model.config;
  const TextCnnParams& p = model.params;
  if (label < 0 || label >= cfg.num_classes) {
    throw Error(Errc::kShapeMismatch, "label " + std::to_string(label) + " outside [0, " +
                                          std::to_string(cfg.num_classes) + ")");
  }
  LossAndGradients out;
  out.loss = softmax_cross_entropy(t.logits, label);
  TextCnnParams& g = out.gradients;

  Vector d_logits = softmax(t.logits);
  d_logits(label) -= 1.0;
  g.fc2 = d_logits * t.dropped.transpose();
  g.fc2_bias = d_logits;

  const Vector d_pre1 = ((p.fc2.transpose() * d_logits).cwiseProduct(t.mask).array() *
                         (t.hidden.array() > 0.0).cast<double>())
                            .matrix();
  g.fc1 = d_pre1 * t.pooled.transpose();
  g.fc1_bias = d_pre1;

  const Vector d_pooled = p.fc1.transpose() * d_pre1;
  const PatchMap windows = patches(cfg, tensor);
  g.conv = Matrix::Zero(p.conv.rows(), p.conv.cols());
  g.conv_bias = Vector::Zero(cfg.channels);
  for (int c = 0; c < cfg.channels; ++c) {
    // Max-pool routes the gradient to the argmax; ReLU passes it only where
    // the response is positive.
    if (t.pooled(c) <= 0.0) continue;
    g.conv.row(c) = d_pooled(c) * windows.col(t.argmax[c]).transpose();
    g.conv_bias(c) = d_pooled(c);
  }
  return out;
}

LossAndGradients loss_and_gradients(const TextCnnModel& model, const DescriptionTensor& tensor,
                                    int label) {
  const ForwardTrace t = run_forward(model, tensor, Vector::Ones(model.config.hidden));
  return backward(model, tensor, t, label);
}

LossAndGradients loss_and_gradients(const TextCnnModel& model, const DescriptionTensor& tensor,
                                    int label, const Vector& dropout_mask) {
  const ForwardTrace t = forward_with_mask(model, tensor, dropout_mask);
  return backward(model, tensor, t, label);
}

TrainingSet make_training_set(const std::vector<LabeledTensor>& data) {
  TrainingSet set;
  set.size = data.size();
  set.tensor = [&data](std::size_t i) { return data[i].tensor; };
  set.label = [&data](std::size_t i) { return data[i].label; };
  return set;
}

TrainResult train(TextCnnModel model, const TrainingSet& data, const SolverConfig& solver,
                  Rng& rng) {
  validate(model.config);
  if (data.size == 0) throw Error(Errc::kEmptyCorpus, "no training descriptions");
  if (solver.batch_size < 1 || solver.iterations < 0 || solver.step_size < 1) {
    throw Error(Errc::kInvalidConfig, "batch size and step size must be >= 1");
  }
  for (std::size_t i = 0; i < data.size; ++i) {
    const int label = data.label(i);
    if (label < 0 || label >= model.config.num_classes) {
      throw Error(Errc::kInvalidConfig, "label " + std::to_string(label) +
                                            " outside the model's class range");
    }
  }

  TrainResult result;
  result.loss_history.reserve(solver.iterations);
  TextCnnParams velocity = TextCnnParams::zeros(model.config);

  std::vector<std::size_t> order(data.size);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t cursor = 0;

  const std::size_t batch = static_cast<std::size_t>(solver.batch_size);
  const std::size_t num_chunks = (batch + kReductionChunk - 1) / kReductionChunk;
  std::vector<TextCnnParams> chunk_grads(num_chunks);
  std::vector<double> chunk_loss(num_chunks);
  const int threads = std::max(1, solver.threads);

  for (int iter = 0; iter < solver.iterations; ++iter) {
    std::vector<std::size_t> members(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      members[b] = order[cursor++];
    }
    const Rng iter_rng = rng.fork(static_cast<std::uint64_t>(iter));

    auto run_chunk = [&](std::size_t chunk) {
      TextCnnParams acc = TextCnnParams::zeros(model.config);
      double loss = 0.0;
      const std::size_t end = std::min(batch, (chunk + 1) * kReductionChunk);
      for (std::size_t b = chunk * kReductionChunk; b < end; ++b) {
        Rng sample_rng = iter_rng.fork(b);
        const DescriptionTensor x = data.tensor(members[b]);
        const ForwardTrace t = forward(model, x, true, sample_rng);
        LossAndGradients lg = backward(model, x, t, data.label(members[b]));
        loss += lg.loss;
        acc.zip(lg.gradients, [](auto& a, const auto& g) { a += g; });
      }
      chunk_grads[chunk] = std::move(acc);
      chunk_loss[chunk] = loss;
    };

    if (threads == 1 || num_chunks == 1) {
      for (std::size_t c = 0; c < num_chunks; ++c) run_chunk(c);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (int w = 0; w < std::min<int>(threads, static_cast<int>(num_chunks)); ++w) {
        pool.emplace_back([&] {
          for (std::size_t c = next++; c < num_chunks; c = next++) run_chunk(c);
        });
      }
      for (std::thread& th : pool) th.join();
    }

    TextCnnParams grad = std::move(chunk_grads[0]);
    double loss = chunk_loss[0];
    for (std::size_t c = 1; c < num_chunks; ++c) {
      grad.zip(chunk_grads[c], [](auto& a, const auto& g) { a += g; });
      loss += chunk_loss[c];
    }
    const double scale = 1.0 / static_cast<double>(batch);
    result.loss_history.push_back(loss * scale);

    const double lr = solver.base_lr * std::pow(solver.gamma, iter / solver.step_size);
    velocity.zip(grad, [&](auto& v, const auto& g) { v = solver.momentum * v + lr * scale * g; });
    if (solver.weight_decay != 0.0) {
      velocity.zip(model.params,
                   [&](auto& v, const auto& w) { v += lr * solver.weight_decay * w; });
    }
    model.params.zip(velocity, [](auto& w, const auto& v) { w -= v; });
  }
  result.model = std::move(model);
  return result;
}

int predict(const TextCnnModel& model, const DescriptionTensor& tensor) {
  const ForwardTrace t = run_forward(model, tensor, Vector::Ones(model.config.hidden));
  Eigen::Index best = 0;
  t.logits.maxCoeff(&best);
  return static_cast<int>(best);
}

double accuracy(const TextCnnModel& model, const TrainingSet& data) {
  if (data.size == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size; ++i) {
    if (predict(model, data.tensor(i)) == data.label(i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size);
}

Vector extract_features(const TextCnnModel& model, const DescriptionTensor& tensor) {
  return run_forward(model, tensor, Vector::Ones(model.config.hidden)).hidden;
}

long detector_position(Eigen::Index raw_argmax, int width) {
  return static_cast<long>(raw_argmax) + 1 + width / 2;
}

DetectorResult find_detector_channel(const TextCnnModel& model,
                                     const std::vector<DescriptionTensor>& tensors,
                                     const std::vector<long>& positions) {
  if (tensors.empty()) throw Error(Errc::kEmptySubset, "no descriptions given");
  if (tensors.size() != positions.size()) {
    throw Error(Errc::kShapeMismatch, "one ground-truth position per description required");
  }
  const TextCnnConfig& cfg = model.config;
  for (long v : positions) {
    if (v < 1 || v > cfg.max_tokens) {
      throw Error(Errc::kInvalidConfig, "ground-truth position " + std::to_string(v) +
                                            " outside 1.." + std::to_string(cfg.max_tokens));
    }
  }
  const Vector ones = Vector::Ones(cfg.hidden);
  std::vector<std::vector<long>> per_channel(cfg.channels, std::vector<long>(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const ForwardTrace t = run_forward(model, tensors[i], ones);
    for (int c = 0; c < cfg.channels; ++c) {
      per_channel[c][i] = std::labs(detector_position(t.argmax[c], cfg.width) - positions[i]);
    }
  }
  DetectorResult result;
  result.channel_errors.resize(cfg.channels);
  for (int c = 0; c < cfg.channels; ++c) {
    long total = 0;
    for (long e : per_channel[c]) total += e;
    result.channel_errors[c] = total;
    if (total < result.channel_errors[result.channel]) result.channel = c;
  }
  result.errors = per_channel[result.channel];
  return result;
}

void write_model(std::ostream& out, const TextCnnModel& model) {
  const TextCnnConfig& c = model.config;
  out << "XMREID-CNN 1\n"
      << c.embedding_dim << ' ' << c.max_tokens << ' ' << c.channels << ' ' << c.width << ' '
      << c.hidden << ' ' << c.num_classes << ' ' << format_real(c.dropout) << '\n';
  // Kernels in C x E x w order.
  for (int ch = 0; ch < c.channels; ++ch) {
    std::string line;
    for (int e = 0; e < c.embedding_dim; ++e) {
      for (int k = 0; k < c.width; ++k) {
        if (!line.empty()) line += ' ';
        line += format_real(model.kernel(ch, e, k));
      }
    }
    out << line << '\n';
  }
  out << format_row(model.params.conv_bias.transpose()) << '\n';
  for (Eigen::Index r = 0; r < model.params.fc1.rows(); ++r) {
    out << format_row(model.params.fc1.row(r)) << '\n';
  }
  out << format_row(model.params.fc1_bias.transpose()) << '\n';
  for (Eigen::Index r = 0; r < model.params.fc2.rows(); ++r) {
    out << format_row(model.params.fc2.row(r)) << '\n';
  }
  out << format_row(model.params.fc2_bias.transpose()) << '\n';
}

TextCnnModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "XMREID-CNN 1") {
    throw Error(Errc::kMalformedHeader, "expected 'XMREID-CNN 1'");
  }
  if (!std::getline(in, line)) throw Error(Errc::kMalformedHeader, "missing config line");
  TextCnnConfig c;
  {
    std::istringstream cfg(line);
    std::string dropout;
    if (!(cfg >> c.embedding_dim >> c.max_tokens >> c.channels >> c.width >> c.hidden >>
          c.num_classes >> dropout)) {
      throw Error(Errc::kMalformedHeader, "config line must hold E T C w H classes dropout");
    }
    c.dropout = parse_real(dropout);
  }
  try {
    validate(c);
  } catch (const Error& e) {
    throw Error(Errc::kMalformedHeader, e.what());
  }
  TextCnnModel model{c, TextCnnParams::zeros(c)};
  std::string token;
  auto next = [&]() {
    if (!(in >> token)) throw Error(Errc::kCountMismatch, "checkpoint ends early");
    return parse_real(token);
  };
  for (int ch = 0; ch < c.channels; ++ch) {
    for (int e = 0; e < c.embedding_dim; ++e) {
      for (int k = 0; k < c.width; ++k) model.kernel(ch, e, k) = next();
    }
  }
  for (Eigen::Index i = 0; i < model.params.conv_bias.size(); ++i) model.params.conv_bias(i) = next();
  for (Eigen::Index r = 0; r < model.params.fc1.rows(); ++r) {
    for (Eigen::Index j = 0; j < model.params.fc1.cols(); ++j) model.params.fc1(r, j) = next();
  }
  for (Eigen::Index i = 0; i < model.params.fc1_bias.size(); ++i) model.params.fc1_bias(i) = next();
  for (Eigen::Index r = 0; r < model.params.fc2.rows(); ++r) {
    for (Eigen::Index j = 0; j < model.params.fc2.cols(); ++j) model.params.fc2(r, j) = next();
  }
  for (Eigen::Index i = 0; i < model.params.fc2_bias.size(); ++i) model.params.fc2_bias(i) = next();
  if (in >> token) throw Error(Errc::kCountMismatch, "trailing data after checkpoint");
  return model;
}

void save_model(const std::filesystem::path& path, const TextCnnModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  write_model(out, model);
  if (!out.flush()) throw Error(Errc::kIo, "write failed for " + path.string());
}

TextCnnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return read_model(in);
}

}  // namespace xmreid
