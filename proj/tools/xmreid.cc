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

// xmreid command-line tool.
//
// Exit codes: 0 ok, 2 usage or configuration, 3 I/O, 4 data validation,
// 5 numerical failure.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "xmreid/cca.h"
#include "xmreid/dataio.h"
#include "xmreid/eval.h"
#include "xmreid/synth.h"
#include "xmreid/textcnn.h"
#include "xmreid/textprep.h"
#include "xmreid/xqda.h"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace xmreid;

namespace {

constexpr int kExitUsage = 2;

struct Globals {
  std::uint64_t seed = 42;
  int threads = 1;
  bool quiet = false;
};

// Usage problems detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(Errc code) {
  switch (error_class(code)) {
    case ErrorClass::kConfig: return 2;
    case ErrorClass::kIo: return 3;
    case ErrorClass::kData: return 4;
    case ErrorClass::kNumerical: return 5;
  }
  return 4;
}

std::string hex(const unsigned char* data, unsigned int size) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < size; ++i) {
    out += digits[data[i] >> 4];
    out += digits[data[i] & 15];
  }
  return out;
}

std::string sha256(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &size, EVP_sha256(), nullptr);
  return hex(digest, size);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << bytes) || !out.flush()) {
    throw Error(Errc::kIo, "cannot write " + path.string());
  }
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  write_file(path, out.str());
}

// Run manifest: resolved config, seed, input digests, outputs, duration.
class Manifest {
 public:
  Manifest(std::string subcommand, const Globals& globals)
      : start_(std::chrono::steady_clock::now()) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["seed"] = globals.seed;
    doc_["threads"] = globals.threads;
    doc_["config"] = json::object();
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }

  json& config() { return doc_["config"]; }
  json& doc() { return doc_; }

  void input(const fs::path& path) {
    doc_["inputs"].push_back({{"path", path.string()}, {"sha256", sha256(read_file(path))}});
  }
  void output(const fs::path& path) { doc_["outputs"].push_back(path.string()); }

  void save(const fs::path& path) {
    json hashed = doc_["config"];
    hashed["seed"] = doc_["seed"];
    doc_["config_hash"] = sha256(hashed.dump());
    doc_["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_file(path, doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

fs::path manifest_path_for(const fs::path& output) {
  return fs::path(output.string() + ".manifest.json");
}

void say(const Globals& g, const std::string& text) {
  if (!g.quiet) std::cout << text;
}

// Identity -> dense label, in sorted identity order.
std::map<std::string, int> label_map(const std::set<std::string>& identities) {
  std::map<std::string, int> out;
  for (const std::string& id : identities) out.emplace(id, static_cast<int>(out.size()));
  return out;
}

std::set<std::string> train_identities(const fs::path& splits_path, int split_index) {
  const SplitSet splits = load_splits(splits_path);
  if (split_index < 0 || static_cast<std::size_t>(split_index) >= splits.splits.size()) {
    throw Error(Errc::kInvalidConfig, "split index " + std::to_string(split_index) +
                                          " outside the split file");
  }
  const Split& s = splits.splits[split_index];
  return {s.train.begin(), s.train.end()};
}

FeatureSet restrict(const FeatureSet& records, const std::set<std::string>* keep) {
  if (!keep) return records;
  FeatureSet out;
  for (const FeatureRecord& r : records) {
    if (keep->count(r.identity)) out.push_back(r);
  }
  if (out.empty()) throw Error(Errc::kEmptySubset, "no records for the selected identities");
  return out;
}

// Vision and language rows paired by position when their (identity, view)
// sequences agree, otherwise through a unique language record per
// (identity, view).
std::pair<Matrix, Matrix> paired(const FeatureSet& vision, const FeatureSet& language) {
  if (vision.empty() || language.empty()) throw Error(Errc::kEmptySubset, "no paired samples");
  bool by_row = vision.size() == language.size();
  for (std::size_t i = 0; by_row && i < vision.size(); ++i) {
    by_row = vision[i].identity == language[i].identity && vision[i].view == language[i].view;
  }
  std::map<std::pair<std::string, int>, const Vector*> shared;
  if (!by_row) {
    for (const FeatureRecord& r : language) {
      if (!shared.emplace(std::make_pair(r.identity, r.view), &r.values).second) {
        throw Error(Errc::kCountMismatch, "language records cannot be paired with vision");
      }
    }
  }
  Matrix x(static_cast<Eigen::Index>(vision.size()), vision[0].values.size());
  Matrix y(static_cast<Eigen::Index>(vision.size()), language[0].values.size());
  for (std::size_t i = 0; i < vision.size(); ++i) {
    x.row(i) = vision[i].values.transpose();
    if (by_row) {
      y.row(i) = language[i].values.transpose();
    } else {
      const auto it = shared.find({vision[i].identity, vision[i].view});
      if (it == shared.end()) {
        throw Error(Errc::kMissingModality, "no language record for " + vision[i].identity);
      }
      y.row(i) = it->second->transpose();
    }
  }
  return {x, y};
}

// --- gen-synth ---------------------------------------------------------

struct GenSynthArgs {
  std::string config;
  std::string preset = "scenario";
  std::string out;
};

SynthConfig synth_config_from(const GenSynthArgs& args, const Globals& g, json* resolved) {
  SynthConfig c;
  if (args.preset == "scenario") c = SynthConfig::scenario_reference();
  else if (args.preset == "cca") c = SynthConfig::cca_reference();
  else if (args.preset == "attribute") c = SynthConfig::attribute_reference();
  else throw Error(Errc::kInvalidConfig, "unknown preset '" + args.preset + "'");
  c.seed = g.seed;

  if (!args.config.empty()) {
    json doc;
    try {
      doc = json::parse(read_file(args.config));
    } catch (const json::exception& e) {
      throw Error(Errc::kInvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(Errc::kInvalidConfig, "config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      try {
        if (key == "identities") c.identities = value.get<int>();
        else if (key == "samples_per_view") c.samples_per_view = value.get<int>();
        else if (key == "shared_dim") c.shared_dim = value.get<int>();
        else if (key == "private_dim_x") c.private_dim_x = value.get<int>();
        else if (key == "private_dim_y") c.private_dim_y = value.get<int>();
        else if (key == "dim_x") c.dim_x = value.get<int>();
        else if (key == "dim_y") c.dim_y = value.get<int>();
        else if (key == "sigma_x") c.sigma_x = value.get<double>();
        else if (key == "sigma_y") c.sigma_y = value.get<double>();
        else if (key == "view_shift") c.view_shift = value.get<double>();
        else if (key == "independent_shifts") c.independent_shifts = value.get<bool>();
        else if (key == "attribute_bits") c.attribute_bits = value.get<int>();
        else if (key == "unique_attributes") c.unique_attributes = value.get<bool>();
        else if (key == "splits") c.splits = value.get<int>();
        else if (key == "train_identities") c.train_identities = value.get<int>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else throw Error(Errc::kInvalidConfig, "unknown config key '" + key + "'");
      } catch (const json::exception&) {
        throw Error(Errc::kInvalidConfig, "config key '" + key + "' has the wrong type");
      }
    }
  }
  validate(c);
  *resolved = {{"identities", c.identities},
               {"samples_per_view", c.samples_per_view},
               {"shared_dim", c.shared_dim},
               {"private_dim_x", c.private_dim_x},
               {"private_dim_y", c.private_dim_y},
               {"dim_x", c.dim_x},
               {"dim_y", c.dim_y},
               {"sigma_x", c.sigma_x},
               {"sigma_y", c.sigma_y},
               {"view_shift", c.view_shift},
               {"independent_shifts", c.independent_shifts},
               {"attribute_bits", c.attribute_bits},
               {"unique_attributes", c.unique_attributes},
               {"splits", c.splits},
               {"train_identities", c.train_identities},
               {"seed", c.seed}};
  return c;
}

void run_gen_synth(const GenSynthArgs& args, const Globals& g) {
  Manifest manifest("gen-synth", g);
  json resolved;
  const SynthConfig config = synth_config_from(args, g, &resolved);
  const fs::path out(args.out);
  if (!fs::is_directory(out)) throw Error(Errc::kIo, "output directory " + out.string() + " does not exist");
  if (!args.config.empty()) manifest.input(args.config);
  manifest.config() = resolved;
  manifest.doc()["seed"] = config.seed;

  const SynthDataset data = gen_paired(config);
  const std::vector<std::pair<fs::path, std::function<void(std::ostream&)>>> files = {
      {out / "vision.feat", [&](std::ostream& o) { write_features(o, data.vision); }},
      {out / "language.feat", [&](std::ostream& o) { write_features(o, data.language); }},
      {out / "splits.split", [&](std::ostream& o) { write_splits(o, data.splits); }},
      {out / "attributes.attr", [&](std::ostream& o) { write_attributes(o, data.attributes); }},
      {out / "config.json", [&](std::ostream& o) { o << resolved.dump(2) << '\n'; }},
  };
  for (const auto& [path, writer] : files) {
    write_with(path, writer);
    manifest.output(path);
  }
  manifest.save(out / "manifest.json");
  say(g, "wrote " + std::to_string(data.vision.size()) + " samples of " +
             std::to_string(config.identities) + " identities to " + out.string() + "\n");
}

// --- fit-cca -----------------------------------------------------------

struct FitCcaArgs {
  std::string vision, language, splits, out;
  int split = 0;
  int k = 0;
  double eps = kDefaultCcaRegularizer;
};

void run_fit_cca(const FitCcaArgs& args, const Globals& g) {
  Manifest manifest("fit-cca", g);
  std::optional<std::set<std::string>> keep;
  if (!args.splits.empty()) {
    keep = train_identities(args.splits, args.split);
    manifest.input(args.splits);
  }
  const FeatureSet vision = restrict(load_features(args.vision), keep ? &*keep : nullptr);
  const FeatureSet language = restrict(load_features(args.language), keep ? &*keep : nullptr);
  manifest.input(args.vision);
  manifest.input(args.language);
  const auto [x, y] = paired(vision, language);
  const int k = args.k > 0 ? args.k : default_cca_rank(x.cols(), y.cols());
  manifest.config() = {{"k", k}, {"eps", args.eps}, {"split", args.split},
                       {"train_only", !args.splits.empty()}};

  const CcaModel model = fit_cca(x, y, k, args.eps);
  save_cca(args.out, model);
  manifest.output(args.out);
  manifest.save(manifest_path_for(args.out));

  std::string text = "canonical correlations (k = " + std::to_string(k) + "):\n";
  char line[64];
  for (Eigen::Index i = 0; i < model.k(); ++i) {
    std::snprintf(line, sizeof(line), "  rho_%ld = %.6f\n", static_cast<long>(i + 1),
                  model.correlations(i));
    text += line;
  }
  say(g, text);
}

// --- fit-xqda ----------------------------------------------------------

struct FitXqdaArgs {
  std::string features, splits, out;
  int split = 0;
  XqdaOptions options;
};

void run_fit_xqda(const FitXqdaArgs& args, const Globals& g) {
  Manifest manifest("fit-xqda", g);
  std::optional<std::set<std::string>> keep;
  if (!args.splits.empty()) {
    keep = train_identities(args.splits, args.split);
    manifest.input(args.splits);
  }
  const FeatureSet records = restrict(load_features(args.features), keep ? &*keep : nullptr);
  manifest.input(args.features);
  manifest.config() = {{"ridge", args.options.ridge},
                       {"max_rank", args.options.max_rank},
                       {"standardize", args.options.standardize},
                       {"split", args.split},
                       {"train_only", !args.splits.empty()}};

  const auto labels_by_id = label_map(identities_of(records));
  Matrix x(static_cast<Eigen::Index>(records.size()), records[0].values.size());
  std::vector<int> labels, views;
  for (std::size_t i = 0; i < records.size(); ++i) {
    x.row(i) = records[i].values.transpose();
    labels.push_back(labels_by_id.at(records[i].identity));
    views.push_back(records[i].view);
  }
  const XqdaModel model = fit_xqda({x, labels, views}, args.options);
  save_xqda(args.out, model);
  manifest.output(args.out);
  manifest.doc()["rank"] = model.rank();
  manifest.doc()["fallback"] = model.fallback;
  manifest.save(manifest_path_for(args.out));
  say(g, "XQDA subspace rank " + std::to_string(model.rank()) +
             (model.fallback ? " (fallback: no eigenvalue above 1)" : "") + "\n");
}

// --- train-textcnn / extract-textcnn -----------------------------------

struct TrainTextCnnArgs {
  std::string corpus, embeddings, out, loss_csv, splits, synonyms;
  int split = 0;
  TextCnnConfig net;
  SolverConfig solver;
  std::string augment = "none";
  int factor = 1;
  double sigma = kDefaultEmbeddingNoise;
};

void run_train_textcnn(TrainTextCnnArgs args, const Globals& g) {
  Manifest manifest("train-textcnn", g);
  Corpus corpus = load_corpus(args.corpus);
  manifest.input(args.corpus);
  const EmbeddingTable table = load_embeddings(args.embeddings);
  manifest.input(args.embeddings);
  if (!args.splits.empty()) {
    const std::set<std::string> keep = train_identities(args.splits, args.split);
    manifest.input(args.splits);
    Corpus kept;
    for (Description& d : corpus) {
      if (keep.count(d.identity)) kept.push_back(std::move(d));
    }
    corpus = std::move(kept);
  }
  if (corpus.empty()) throw Error(Errc::kEmptyCorpus, "no descriptions to train on");

  SynonymMap synonyms;
  AugmentOptions augment;
  augment.sigma = args.sigma;
  int factor = 1;
  if (args.augment != "none") {
    augment.method = parse_augment_method(args.augment);
    factor = args.factor;
    if (augment.method == AugmentMethod::kSynonym) {
      if (args.synonyms.empty()) {
        throw UsageError("--augment synonym needs --synonyms <path>");
      }
      synonyms = load_synonyms(args.synonyms);
      manifest.input(args.synonyms);
      augment.synonyms = &synonyms;
    }
  }

  const auto labels_by_id = label_map(identities_of(corpus));
  args.net.embedding_dim = static_cast<int>(table.dim());
  args.net.num_classes = static_cast<int>(labels_by_id.size());
  args.solver.threads = g.threads;
  validate(args.net);

  const Rng root(g.seed);
  const std::vector<TokenizedDescription> tokenized = tokenize_corpus(corpus);
  const auto items = std::make_shared<std::vector<AugmentedDescription>>(
      augment_corpus(tokenized, augment, factor, root.fork(0)));
  TrainingSet data;
  data.size = items->size();
  const int max_tokens = args.net.max_tokens;
  data.tensor = [items, &table, max_tokens](std::size_t i) {
    return materialize((*items)[i], table, max_tokens);
  };
  data.label = [items, &labels_by_id](std::size_t i) {
    return labels_by_id.at((*items)[i].identity);
  };

  manifest.config() = {{"embedding_dim", args.net.embedding_dim},
                       {"max_tokens", args.net.max_tokens},
                       {"channels", args.net.channels},
                       {"width", args.net.width},
                       {"hidden", args.net.hidden},
                       {"num_classes", args.net.num_classes},
                       {"dropout", args.net.dropout},
                       {"base_lr", args.solver.base_lr},
                       {"momentum", args.solver.momentum},
                       {"weight_decay", args.solver.weight_decay},
                       {"batch_size", args.solver.batch_size},
                       {"iterations", args.solver.iterations},
                       {"step_size", args.solver.step_size},
                       {"gamma", args.solver.gamma},
                       {"augment", args.augment},
                       {"factor", factor},
                       {"sigma", args.sigma},
                       {"training_records", data.size}};

  Rng init = root.fork(1);
  TextCnnModel model = init_model(args.net, init);
  Rng solver_rng = root.fork(2);
  const TrainResult result = train(std::move(model), data, args.solver, solver_rng);
  save_model(args.out, result.model);
  manifest.output(args.out);

  if (!args.loss_csv.empty()) {
    write_with(args.loss_csv, [&](std::ostream& o) {
      o << "iteration,loss\n";
      for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
        o << i + 1 << ',' << format_real(result.loss_history[i]) << '\n';
      }
    });
    manifest.output(args.loss_csv);
  }

  // Accuracy on the original, unaugmented descriptions.
  std::vector<LabeledTensor> originals;
  for (const TokenizedDescription& d : tokenized) {
    originals.push_back({to_tensor(d.tokens, table, max_tokens), labels_by_id.at(d.identity)});
  }
  const double acc = accuracy(result.model, make_training_set(originals));
  manifest.doc()["train_accuracy"] = acc;
  manifest.doc()["final_loss"] = result.loss_history.empty() ? 0.0 : result.loss_history.back();
  manifest.save(manifest_path_for(args.out));

  char line[160];
  std::snprintf(line, sizeof(line),
                "trained %d iterations on %zu records, final loss %.6f, train accuracy %.4f\n",
                args.solver.iterations, data.size,
                result.loss_history.empty() ? 0.0 : result.loss_history.back(), acc);
  say(g, line);
}

struct ExtractArgs {
  std::string model, corpus, embeddings, out;
};

void run_extract_textcnn(const ExtractArgs& args, const Globals& g) {
  Manifest manifest("extract-textcnn", g);
  const TextCnnModel model = load_model(args.model);
  const Corpus corpus = load_corpus(args.corpus);
  const EmbeddingTable table = load_embeddings(args.embeddings);
  for (const std::string& p : {args.model, args.corpus, args.embeddings}) manifest.input(p);
  if (table.dim() != model.config.embedding_dim) {
    throw Error(Errc::kDimensionMismatch, "embedding dimension differs from the model's");
  }
  FeatureSet out;
  for (const Description& d : corpus) {
    const DescriptionTensor t = to_tensor(tokenize(d.text), table, model.config.max_tokens);
    out.push_back({d.identity, d.view, extract_features(model, t)});
  }
  save_features(args.out, out);
  manifest.output(args.out);
  manifest.save(manifest_path_for(args.out));
  say(g, "extracted " + std::to_string(out.size()) + " language features\n");
}

// --- augment -----------------------------------------------------------

struct AugmentArgs {
  std::string corpus, method = "drop", synonyms, out;
  int factor = 2;
  double replace_probability = kDefaultReplaceProbability;
};

void run_augment(const AugmentArgs& args, const Globals& g) {
  Manifest manifest("augment", g);
  AugmentOptions options;
  options.method = parse_augment_method(args.method);
  options.replace_probability = args.replace_probability;
  if (options.method == AugmentMethod::kGaussian) {
    throw UsageError(
        "gaussian augmentation perturbs embedded tensors and has no text form; "
        "use train-textcnn --augment gaussian");
  }
  const Corpus corpus = load_corpus(args.corpus);
  manifest.input(args.corpus);
  SynonymMap synonyms;
  if (options.method == AugmentMethod::kSynonym) {
    if (args.synonyms.empty()) throw UsageError("--method synonym needs --synonyms <path>");
    synonyms = load_synonyms(args.synonyms);
    manifest.input(args.synonyms);
    options.synonyms = &synonyms;
  }
  manifest.config() = {{"method", args.method},
                       {"factor", args.factor},
                       {"replace_probability", args.replace_probability}};
  const Corpus out =
      to_corpus(augment_corpus(tokenize_corpus(corpus), options, args.factor, Rng(g.seed)));
  save_corpus(args.out, out);
  manifest.output(args.out);
  manifest.save(manifest_path_for(args.out));
  say(g, "wrote " + std::to_string(out.size()) + " descriptions\n");
}

// --- evaluate / attr-sweep ---------------------------------------------

struct EvalArgs {
  std::string scenario, splits, vision, language, attributes, cca_model;
  std::string metric = "xqda";
  std::string csv, manifest;
  bool fit_cca = false;
  bool multi_shot = false;
  int flips = 0;
  int cca_k = 0;
  double cca_eps = kDefaultCcaRegularizer;
  XqdaOptions xqda;
  std::vector<int> sweep = {0, 1, 2, 3};
};

Dataset load_dataset(const EvalArgs& args, Manifest& manifest) {
  Dataset data;
  if (!args.vision.empty()) {
    data.vision = load_features(args.vision);
    manifest.input(args.vision);
  }
  if (!args.language.empty()) {
    data.language = load_features(args.language);
    manifest.input(args.language);
  }
  if (!args.attributes.empty()) {
    data.attributes = load_attributes(args.attributes);
    manifest.input(args.attributes);
  }
  return data;
}

PipelineConfig pipeline_from(const EvalArgs& args, const Globals& g, Manifest& manifest) {
  PipelineConfig config;
  if (args.metric == "xqda") config.metric = Metric::kXqda;
  else if (args.metric == "euclidean") config.metric = Metric::kEuclidean;
  else throw Error(Errc::kUnknownMethod, "metric '" + args.metric + "'");
  config.xqda = args.xqda;
  config.cca_rank = args.cca_k;
  config.cca_regularizer = args.cca_eps;
  config.multi_shot = args.multi_shot;
  config.attribute_flips = args.flips;
  config.threads = g.threads;
  if (!args.cca_model.empty()) {
    config.fixed_cca = load_cca(args.cca_model);
    manifest.input(args.cca_model);
  }
  manifest.config() = {{"metric", args.metric},
                       {"xqda_ridge", args.xqda.ridge},
                       {"xqda_max_rank", args.xqda.max_rank},
                       {"xqda_standardize", args.xqda.standardize},
                       {"cca_k", args.cca_k},
                       {"cca_eps", args.cca_eps},
                       {"cca", args.cca_model.empty() ? (args.fit_cca ? "per-split" : "none")
                                                      : "fixed"},
                       {"multi_shot", args.multi_shot},
                       {"flips", args.flips}};
  return config;
}

json split_summary(const SplitReport& report) {
  json out = json::array();
  for (const CmcResult& r : report.splits) {
    out.push_back({{"R1", r.at(1)}, {"R5", r.at(5)}, {"R10", r.at(10)}});
  }
  return out;
}

void run_evaluate(const EvalArgs& args, const Globals& g) {
  const Scenario scenario = parse_scenario(args.scenario);
  if (scenario_needs_cca(scenario) && args.cca_model.empty() && !args.fit_cca) {
    throw UsageError("scenario " + args.scenario +
                     " needs a CCA model: pass --cca-model <path> or --fit-cca");
  }
  Manifest manifest("evaluate", g);
  const SplitSet splits = load_splits(args.splits);
  manifest.input(args.splits);
  const Dataset data = load_dataset(args, manifest);
  PipelineConfig config = pipeline_from(args, g, manifest);
  manifest.config()["scenario"] = args.scenario;
  manifest.doc()["scenario"] = args.scenario;

  const SplitReport report = evaluate_scenario(data, splits, scenario, config, Rng(g.seed));
  if (!args.csv.empty()) {
    write_with(args.csv, [&](std::ostream& o) { write_report_csv(o, report); });
    manifest.output(args.csv);
  }
  manifest.doc()["splits"] = split_summary(report);
  manifest.doc()["mean"] = {{"R1", report.mean_at(1)}, {"R5", report.mean_at(5)},
                            {"R10", report.mean_at(10)}};
  if (!args.manifest.empty()) manifest.save(args.manifest);
  else if (!args.csv.empty()) manifest.save(manifest_path_for(args.csv));
  say(g, format_report_table(report));
}

void run_attr_sweep(const EvalArgs& args, const Globals& g) {
  Manifest manifest("attr-sweep", g);
  const SplitSet splits = load_splits(args.splits);
  manifest.input(args.splits);
  const Dataset data = load_dataset(args, manifest);
  const PipelineConfig config = pipeline_from(args, g, manifest);
  manifest.config()["n"] = args.sweep;

  const std::vector<SweepPoint> points =
      attribute_degradation_sweep(data, splits, args.sweep, config, Rng(g.seed));
  if (!args.csv.empty()) {
    write_with(args.csv, [&](std::ostream& o) {
      o << "N,K,mean,std\n";
      for (const SweepPoint& p : points) {
        for (Eigen::Index k = 0; k < p.report.mean.size(); ++k) {
          o << p.flips << ',' << k + 1 << ',' << format_real(p.report.mean(k)) << ','
            << format_real(p.report.std(k)) << '\n';
        }
      }
    });
    manifest.output(args.csv);
  }
  json per_n = json::array();
  std::string table = "N   R1             R5             R10\n";
  char line[160];
  for (const SweepPoint& p : points) {
    per_n.push_back({{"N", p.flips}, {"splits", split_summary(p.report)}});
    const SplitReport& r = p.report;
    std::snprintf(line, sizeof(line), "%-2d  %5.1f +- %-5.1f  %5.1f +- %-5.1f  %5.1f +- %-5.1f\n",
                  p.flips, 100.0 * r.mean_at(1), 100.0 * r.std_at(1), 100.0 * r.mean_at(5),
                  100.0 * r.std_at(5), 100.0 * r.mean_at(10), 100.0 * r.std_at(10));
    table += line;
  }
  manifest.doc()["sweep"] = per_n;
  if (!args.manifest.empty()) manifest.save(args.manifest);
  else if (!args.csv.empty()) manifest.save(manifest_path_for(args.csv));
  say(g, table);
}

void add_eval_options(CLI::App* cmd, EvalArgs& a) {
  cmd->add_option("--splits", a.splits, "SPLIT file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--vision", a.vision, "vision FEAT file");
  cmd->add_option("--language", a.language, "language FEAT file");
  cmd->add_option("--attributes", a.attributes, "ATTR file");
  cmd->add_option("--metric", a.metric, "xqda or euclidean")->capture_default_str();
  cmd->add_option("--xqda-ridge", a.xqda.ridge, "relative XQDA ridge")->capture_default_str();
  cmd->add_option("--xqda-max-rank", a.xqda.max_rank, "XQDA subspace cap")->capture_default_str();
  cmd->add_flag("--xqda-standardize", a.xqda.standardize, "z-score features before XQDA");
  cmd->add_flag("--multi-shot", a.multi_shot, "keep every view-1 sample in the gallery");
  cmd->add_option("--csv", a.csv, "CSV report path");
  cmd->add_option("--manifest", a.manifest, "JSON manifest path (default <csv>.manifest.json)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-modal person re-identification toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "suppress the stdout summary");

  GenSynthArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "generate a synthetic paired dataset");
  gen_cmd->add_option("--config", gen.config, "JSON overrides of the preset");
  gen_cmd->add_option("--preset", gen.preset, "scenario, cca or attribute")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "existing output directory")->required();

  FitCcaArgs cca;
  auto* cca_cmd = app.add_subcommand("fit-cca", "fit CCA between vision and language features");
  cca_cmd->add_option("--vision", cca.vision)->required()->check(CLI::ExistingFile);
  cca_cmd->add_option("--language", cca.language)->required()->check(CLI::ExistingFile);
  cca_cmd->add_option("--splits", cca.splits, "fit on the train identities of a split");
  cca_cmd->add_option("--split", cca.split, "0-based split index")->capture_default_str();
  cca_cmd->add_option("--k", cca.k, "number of canonical pairs (default min(d_x, d_y, 128))");
  cca_cmd->add_option("--eps", cca.eps, "relative ridge")->capture_default_str();
  cca_cmd->add_option("--out", cca.out, "model path")->required();

  FitXqdaArgs xq;
  auto* xq_cmd = app.add_subcommand("fit-xqda", "fit an XQDA metric");
  xq_cmd->add_option("--features", xq.features)->required()->check(CLI::ExistingFile);
  xq_cmd->add_option("--splits", xq.splits, "fit on the train identities of a split");
  xq_cmd->add_option("--split", xq.split, "0-based split index")->capture_default_str();
  xq_cmd->add_option("--ridge", xq.options.ridge, "relative ridge")->capture_default_str();
  xq_cmd->add_option("--max-rank", xq.options.max_rank)->capture_default_str();
  xq_cmd->add_flag("--standardize", xq.options.standardize, "z-score features first");
  xq_cmd->add_option("--out", xq.out, "model path")->required();

  TrainTextCnnArgs tc;
  auto* tc_cmd = app.add_subcommand("train-textcnn", "train the description CNN");
  tc_cmd->add_option("--corpus", tc.corpus)->required()->check(CLI::ExistingFile);
  tc_cmd->add_option("--embeddings", tc.embeddings)->required()->check(CLI::ExistingFile);
  tc_cmd->add_option("--out", tc.out, "checkpoint path")->required();
  tc_cmd->add_option("--loss-csv", tc.loss_csv, "per-iteration loss CSV");
  tc_cmd->add_option("--splits", tc.splits, "train on the train identities of a split");
  tc_cmd->add_option("--split", tc.split)->capture_default_str();
  tc_cmd->add_option("--iters", tc.solver.iterations)->capture_default_str();
  tc_cmd->add_option("--lr", tc.solver.base_lr)->capture_default_str();
  tc_cmd->add_option("--momentum", tc.solver.momentum)->capture_default_str();
  tc_cmd->add_option("--weight-decay", tc.solver.weight_decay)->capture_default_str();
  tc_cmd->add_option("--batch", tc.solver.batch_size)->capture_default_str();
  tc_cmd->add_option("--step", tc.solver.step_size)->capture_default_str();
  tc_cmd->add_option("--gamma", tc.solver.gamma)->capture_default_str();
  tc_cmd->add_option("--max-tokens", tc.net.max_tokens)->capture_default_str();
  tc_cmd->add_option("--channels", tc.net.channels)->capture_default_str();
  tc_cmd->add_option("--width", tc.net.width)->capture_default_str();
  tc_cmd->add_option("--hidden", tc.net.hidden)->capture_default_str();
  tc_cmd->add_option("--dropout", tc.net.dropout)->capture_default_str();
  tc_cmd->add_option("--augment", tc.augment, "none, drop, synonym or gaussian")
      ->capture_default_str();
  tc_cmd->add_option("--factor", tc.factor, "augmentation factor")->capture_default_str();
  tc_cmd->add_option("--synonyms", tc.synonyms, "synonym list");
  tc_cmd->add_option("--sigma", tc.sigma, "gaussian augmentation scale")->capture_default_str();

  ExtractArgs ex;
  auto* ex_cmd = app.add_subcommand("extract-textcnn", "write FC1 features of descriptions");
  ex_cmd->add_option("--model", ex.model)->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--corpus", ex.corpus)->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--embeddings", ex.embeddings)->required()->check(CLI::ExistingFile);
  ex_cmd->add_option("--out", ex.out, "FEAT path")->required();

  AugmentArgs au;
  auto* au_cmd = app.add_subcommand("augment", "augment a description corpus");
  au_cmd->add_option("--corpus", au.corpus)->required()->check(CLI::ExistingFile);
  au_cmd->add_option("--method", au.method, "drop or synonym")->capture_default_str();
  au_cmd->add_option("--factor", au.factor)->capture_default_str();
  au_cmd->add_option("--synonyms", au.synonyms, "synonym list");
  au_cmd->add_option("--replace-probability", au.replace_probability)->capture_default_str();
  au_cmd->add_option("--out", au.out, "CORPUS path")->required();

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "evaluate a retrieval scenario over splits");
  ev_cmd->add_option("--scenario", ev.scenario, "VxV, LxL, VxL, VxVL, VLxVL or VAxVA")
      ->required();
  add_eval_options(ev_cmd, ev);
  ev_cmd->add_option("--cca-model", ev.cca_model, "fixed CCA model for VxL / VxVL");
  ev_cmd->add_flag("--fit-cca", ev.fit_cca, "fit CCA on each split's train identities");
  ev_cmd->add_option("--cca-k", ev.cca_k, "CCA rank when fitting per split");
  ev_cmd->add_option("--cca-eps", ev.cca_eps)->capture_default_str();
  ev_cmd->add_option("--flips", ev.flips, "attribute bits flipped per sample")
      ->capture_default_str();

  EvalArgs sw;
  auto* sw_cmd = app.add_subcommand("attr-sweep", "VAxVA accuracy as attribute bits are flipped");
  add_eval_options(sw_cmd, sw);
  sw_cmd->add_option("--n", sw.sweep, "flip counts")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) run_gen_synth(gen, g);
    else if (*cca_cmd) run_fit_cca(cca, g);
    else if (*xq_cmd) run_fit_xqda(xq, g);
    else if (*tc_cmd) run_train_textcnn(tc, g);
    else if (*ex_cmd) run_extract_textcnn(ex, g);
    else if (*au_cmd) run_augment(au, g);
    else if (*ev_cmd) run_evaluate(ev, g);
    else if (*sw_cmd) run_attr_sweep(sw, g);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
