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

// Helpers for driving the xmreid binary from tests.
#ifndef XMREID_TESTS_CLI_UTIL_H_
#define XMREID_TESTS_CLI_UTIL_H_

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "xmreid/dataio.h"
#include "xmreid/rng.h"

namespace xmreid::testing {

struct CliRun {
  int exit_code = -1;
  std::string out;  // stdout
  std::string err;  // stderr
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs `xmreid <args>` with stdout/stderr captured in `scratch`.
inline CliRun run_cli(const std::string& args, const std::filesystem::path& scratch) {
  const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string("'") + XMREID_CLI_PATH + "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// Ten identities with one description each; every class owns two signature
// words mixed into shared filler, and all words get random embeddings.
inline void write_toy_text(const std::filesystem::path& dir, int embedding_dim) {
  Rng rng(2024);
  Corpus corpus;
  EmbeddingTable table(embedding_dim);
  auto embed = [&](const std::string& token) {
    if (table.find(token)) return;
    Vector v(embedding_dim);
    for (int i = 0; i < embedding_dim; ++i) v(i) = rng.normal();
    table.add(token, v);
  };
  const char* fillers[] = {"the", "person", "wears", "a", "with", "and", "dark", "light"};
  for (const char* f : fillers) embed(f);
  for (int c = 0; c < 10; ++c) {
    const std::string a = "sig" + std::to_string(c) + "a", b = "sig" + std::to_string(c) + "b";
    embed(a);
    embed(b);
    std::string text;
    for (int t = 0; t < 8; ++t) {
      if (t == 2) text += a + ' ';
      else if (t == 5) text += b + ' ';
      else text += std::string(fillers[rng.uniform_int(8)]) + ' ';
    }
    corpus.push_back({"p" + std::to_string(c), 1, text});
  }
  save_corpus(dir / "toy.corpus", corpus);
  save_embeddings(dir / "toy.emb", table);
}

}  // namespace xmreid::testing

#endif  // XMREID_TESTS_CLI_UTIL_H_
