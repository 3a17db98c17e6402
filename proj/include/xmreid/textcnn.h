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

// Text CNN over E x T description tensors:
//
//   conv (C kernels of E x w, valid) -> ReLU -> max over time
//     -> FC1 (H) -> ReLU -> inverted dropout -> FC2 (classes) -> softmax loss
//
// with hand-written backpropagation, momentum SGD with a step schedule, FC1
// feature extraction and the detector-channel analysis.

#ifndef XMREID_TEXTCNN_H_
#define XMREID_TEXTCNN_H_

#include <functional>
#include <iosfwd>
#include <vector>

#include "xmreid/rng.h"
#include "xmreid/textprep.h"

namespace xmreid {

struct TextCnnConfig {
  int embedding_dim = 300;
  int max_tokens = kDefaultMaxTokens;
  int channels = 256;
  int width = 5;
  int hidden = 1024;
  int num_classes = 1260;
  double dropout = 0.5;

  int positions() const { return max_tokens - width + 1; }
};

// Throws InvalidConfig.
void validate(const TextCnnConfig& config);

struct TextCnnParams {
  // Row c is kernel c flattened tap-major: column k * E + e holds tap k of
  // embedding row e, which matches the memory layout of E x w input windows.
  Matrix conv;
  Vector conv_bias;
  Matrix fc1;  // H x C
  Vector fc1_bias;
  Matrix fc2;  // classes x H
  Vector fc2_bias;

  static TextCnnParams zeros(const TextCnnConfig& config);

  // Visits every parameter block in declaration order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    fn(conv); fn(conv_bias); fn(fc1); fn(fc1_bias); fn(fc2); fn(fc2_bias);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    fn(conv); fn(conv_bias); fn(fc1); fn(fc1_bias); fn(fc2); fn(fc2_bias);
  }
  template <typename Fn>
  void zip(const TextCnnParams& other, Fn&& fn) {
    fn(conv, other.conv); fn(conv_bias, other.conv_bias);
    fn(fc1, other.fc1); fn(fc1_bias, other.fc1_bias);
    fn(fc2, other.fc2); fn(fc2_bias, other.fc2_bias);
  }

  // Element access by flat index over all blocks, for finite differences.
  Eigen::Index size() const;
  double& flat(Eigen::Index index);
  double flat(Eigen::Index index) const;
};

struct TextCnnModel {
  TextCnnConfig config;
  TextCnnParams params;

  // Kernel c, tap k, embedding row e.
  double& kernel(int c, int e, int k) { return params.conv(c, k * config.embedding_dim + e); }
  double kernel(int c, int e, int k) const {
    return params.conv(c, k * config.embedding_dim + e);
  }
};

// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
TextCnnModel init_model(const TextCnnConfig& config, Rng& rng);

struct ForwardTrace {
  Matrix response;                    // C x (T - w + 1), after ReLU
  std::vector<Eigen::Index> argmax;   // per channel, ties to the lowest position
  Vector pooled;                      // C
  Vector hidden;                      // FC1 after ReLU
  Vector mask;                        // inverted-dropout multipliers (ones at inference)
  Vector dropped;                     // hidden .* mask
  Vector logits;
};

ForwardTrace forward(const TextCnnModel& model, const DescriptionTensor& tensor, bool train,
                     Rng& rng);
// Forward pass with an explicit dropout mask (entries 0 or 1 / (1 - rate)).
ForwardTrace forward_with_mask(const TextCnnModel& model, const DescriptionTensor& tensor,
                               const Vector& mask);

double softmax_cross_entropy(const Vector& logits, int label);
Vector softmax(const Vector& logits);

struct LossAndGradients {
  double loss = 0.0;
  TextCnnParams gradients;
};

LossAndGradients backward(const TextCnnModel& model, const DescriptionTensor& tensor,
                          const ForwardTrace& trace, int label);

// Inference-mode loss and gradients (dropout disabled).
LossAndGradients loss_and_gradients(const TextCnnModel& model, const DescriptionTensor& tensor,
                                    int label);
LossAndGradients loss_and_gradients(const TextCnnModel& model, const DescriptionTensor& tensor,
                                    int label, const Vector& dropout_mask);

struct SolverConfig {
  double base_lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int batch_size = 100;
  int iterations = 1000;
  int step_size = 50000;  // lr *= gamma every step_size iterations
  double gamma = 0.1;
  int threads = 1;
};

// Lazily materialized training data; tensor(i) must be deterministic.
struct TrainingSet {
  std::size_t size = 0;
  std::function<DescriptionTensor(std::size_t)> tensor;
  std::function<int(std::size_t)> label;
};

struct LabeledTensor {
  DescriptionTensor tensor;
  int label = 0;
};

TrainingSet make_training_set(const std::vector<LabeledTensor>& data);

struct TrainResult {
  TextCnnModel model;
  std::vector<double> loss_history;  // mean batch loss per iteration
};

// Momentum SGD with weight decay. Mini-batches walk a reshuffled permutation
// of the data. Per-sample gradients are reduced in fixed chunks of 8 in batch
// order, so the result does not depend on solver.threads.
TrainResult train(TextCnnModel model, const TrainingSet& data, const SolverConfig& solver,
                  Rng& rng);

int predict(const TextCnnModel& model, const DescriptionTensor& tensor);
double accuracy(const TextCnnModel& model, const TrainingSet& data);

// FC1 output after ReLU with dropout disabled.
Vector extract_features(const TextCnnModel& model, const DescriptionTensor& tensor);

struct DetectorResult {
  int channel = 0;
  std::vector<long> errors;          // |u_i - v_i| for the chosen channel
  std::vector<long> channel_errors;  // summed error per channel
};

// Detector position of channel c on a description: 1-based argmax of the
// response plus floor(w / 2).
long detector_position(Eigen::Index raw_argmax, int width);

// positions[i] is the 1-based ground-truth token index for tensors[i].
DetectorResult find_detector_channel(const TextCnnModel& model,
                                     const std::vector<DescriptionTensor>& tensors,
                                     const std::vector<long>& positions);

void write_model(std::ostream& out, const TextCnnModel& model);
TextCnnModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const TextCnnModel& model);
TextCnnModel load_model(const std::filesystem::path& path);

}  // namespace xmreid

#endif  // XMREID_TEXTCNN_H_
