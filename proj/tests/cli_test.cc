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

#include <gtest/gtest.h>

#include <json.hpp>

#include "cli_util.h"
#include "test_util.h"
#include "xmreid/synth.h"

namespace xmreid {
namespace {

namespace fs = std::filesystem;
using testing::run_cli;
using testing::scratch_dir;
using testing::slurp;

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

TEST(GenSynth, WritesFilesAndManifest) {
  const fs::path dir = scratch_dir("cli_gen");
  const auto r = run_cli("gen-synth --preset cca --out " + q(dir), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* name : {"vision.feat", "language.feat", "splits.split", "attributes.attr",
                           "config.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["subcommand"], "gen-synth");
  EXPECT_EQ(manifest["seed"], 42);
  EXPECT_TRUE(manifest.contains("config_hash"));
  EXPECT_EQ(manifest["outputs"].size(), 5u);
}

TEST(GenSynth, SameSeedSameDigests) {
  const fs::path a = scratch_dir("cli_gen_a"), b = scratch_dir("cli_gen_b");
  ASSERT_EQ(run_cli("gen-synth --preset cca --out " + q(a), a).exit_code, 0);
  ASSERT_EQ(run_cli("gen-synth --preset cca --out " + q(b), b).exit_code, 0);
  for (const char* name : {"vision.feat", "language.feat", "splits.split", "attributes.attr",
                           "config.json"}) {
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  const auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  EXPECT_EQ(ma["config_hash"], mb["config_hash"]);
}

TEST(GenSynth, MissingDirectoryIsIoError) {
  const fs::path dir = scratch_dir("cli_missing");
  EXPECT_EQ(run_cli("gen-synth --out " + q(dir / "nope"), dir).exit_code, 3);
}

TEST(GenSynth, BadConfigIsConfigError) {
  const fs::path dir = scratch_dir("cli_badcfg");
  std::ofstream(dir / "c.json") << "{\"identities\": 1}";
  EXPECT_EQ(run_cli("gen-synth --config " + q(dir / "c.json") + " --out " + q(dir), dir).exit_code,
            2);
  EXPECT_EQ(run_cli("gen-synth --bogus --out " + q(dir), dir).exit_code, 2);
}

TEST(Evaluate, DuplicatedViewsGivePerfectRankOne) {
  const fs::path dir = scratch_dir("cli_dup");
  SynthConfig c = SynthConfig::cca_reference();
  c.samples_per_view = 1;
  c.splits = 2;
  SynthDataset s = gen_paired(c);
  for (std::size_t i = 1; i < s.vision.size(); i += 2) s.vision[i].values = s.vision[i - 1].values;
  save_features(dir / "v.feat", s.vision);
  save_splits(dir / "s.split", s.splits);
  const auto r = run_cli("evaluate --scenario VxV --vision " + q(dir / "v.feat") + " --splits " +
                             q(dir / "s.split") + " --csv " + q(dir / "r.csv"),
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("100.0"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(dir / "r.csv").rfind("K,mean,std\n1,1,0\n", 0), 0u) << slurp(dir / "r.csv");
  EXPECT_TRUE(fs::exists(dir / "r.csv.manifest.json"));
}

TEST(Evaluate, CrossModalWithoutModelIsUsageError) {
  const fs::path dir = scratch_dir("cli_vxl");
  ASSERT_EQ(run_cli("gen-synth --preset cca --out " + q(dir), dir).exit_code, 0);
  const auto r = run_cli("evaluate --scenario VxL --vision " + q(dir / "vision.feat") +
                             " --language " + q(dir / "language.feat") + " --splits " +
                             q(dir / "splits.split"),
                         dir);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("--cca-model"), std::string::npos);
}

TEST(Evaluate, MissingModalityIsDataError) {
  const fs::path dir = scratch_dir("cli_missing_mod");
  ASSERT_EQ(run_cli("gen-synth --preset cca --out " + q(dir), dir).exit_code, 0);
  EXPECT_EQ(run_cli("evaluate --scenario LxL --vision " + q(dir / "vision.feat") + " --splits " +
                        q(dir / "splits.split"),
                    dir)
                .exit_code,
            4);
}

TEST(FitXqda, DegenerateDataIsNumericalError) {
  const fs::path dir = scratch_dir("cli_degenerate");
  FeatureSet f;
  for (int i = 0; i < 6; ++i) f.push_back({"p" + std::to_string(i / 2), 1 + i % 2, Vector::Ones(3)});
  save_features(dir / "f.feat", f);
  EXPECT_EQ(run_cli("fit-xqda --features " + q(dir / "f.feat") + " --out " + q(dir / "m.xqda"), dir)
                .exit_code,
            5);
}

TEST(FitCca, PrintsCorrelations) {
  const fs::path dir = scratch_dir("cli_cca");
  ASSERT_EQ(run_cli("gen-synth --preset cca --out " + q(dir), dir).exit_code, 0);
  const auto r = run_cli("fit-cca --vision " + q(dir / "vision.feat") + " --language " +
                             q(dir / "language.feat") + " --k 5 --out " + q(dir / "m.cca"),
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("rho_5"), std::string::npos);
  EXPECT_EQ(run_cli("fit-cca --vision " + q(dir / "vision.feat") + " --language " +
                        q(dir / "language.feat") + " --k 99 --out " + q(dir / "m.cca"),
                    dir)
                .exit_code,
            2);
}

TEST(Augment, DropFactorThree) {
  const fs::path dir = scratch_dir("cli_augment");
  Corpus c;
  for (int i = 0; i < 4; ++i) c.push_back({"p" + std::to_string(i), 1, "a man in a red shirt"});
  save_corpus(dir / "c.corpus", c);
  const auto r = run_cli("augment --method drop --factor 3 --corpus " + q(dir / "c.corpus") +
                             " --out " + q(dir / "o.corpus"),
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(load_corpus(dir / "o.corpus").size(), 12u);
  EXPECT_EQ(run_cli("augment --method gaussian --corpus " + q(dir / "c.corpus") + " --out " +
                        q(dir / "g.corpus"),
                    dir)
                .exit_code,
            2);
  EXPECT_EQ(run_cli("augment --method shuffle --corpus " + q(dir / "c.corpus") + " --out " +
                        q(dir / "g.corpus"),
                    dir)
                .exit_code,
            2);
}

TEST(AttrSweep, NoFlipsIsPerfect) {
  const fs::path dir = scratch_dir("cli_sweep");
  ASSERT_EQ(run_cli("gen-synth --preset attribute --out " + q(dir), dir).exit_code, 0);
  const auto r = run_cli("attr-sweep --n 0 --vision " + q(dir / "vision.feat") + " --attributes " +
                             q(dir / "attributes.attr") + " --splits " + q(dir / "splits.split"),
                         dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("0   100.0"), std::string::npos) << r.out;
}

TEST(TrainTextCnn, ToyCorpusOverfits) {
  const fs::path dir = scratch_dir("cli_textcnn");
  testing::write_toy_text(dir, 16);
  const auto r = run_cli(
      "train-textcnn --corpus " + q(dir / "toy.corpus") + " --embeddings " + q(dir / "toy.emb") +
          " --iters 500 --batch 10 --max-tokens 12 --channels 32 --width 3 --hidden 64 --out " +
          q(dir / "m.cnn") + " --loss-csv " + q(dir / "loss.csv"),
      dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("train accuracy 1.0000"), std::string::npos) << r.out;
  EXPECT_EQ(slurp(dir / "loss.csv").rfind("iteration,loss\n", 0), 0u);

  const auto e = run_cli("extract-textcnn --model " + q(dir / "m.cnn") + " --corpus " +
                             q(dir / "toy.corpus") + " --embeddings " + q(dir / "toy.emb") +
                             " --out " + q(dir / "lang.feat"),
                         dir);
  ASSERT_EQ(e.exit_code, 0) << e.err;
  const FeatureSet f = load_features(dir / "lang.feat");
  ASSERT_EQ(f.size(), 10u);
  EXPECT_EQ(f[0].values.size(), 64);
}

}  // namespace
}  // namespace xmreid
