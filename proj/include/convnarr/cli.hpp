/*******************************************************************************
 * Copyright 2026 The convnarr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *******************************************************************************/
#ifndef CONVNARR_CLI_HPP
#define CONVNARR_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace convnarr {

struct RunConfig {
  std::string corpus;
  std::string out;
  std::string config_file;
  std::vector<std::string> configs = {"D", "DA", "DAP", "DAPC", "DAPN", "DAPNC"};
  std::vector<std::string> models = {"tree", "han"};
  std::string input_config = "DAPN";  // narrate / train / visualize
  std::string model = "han";          // train
  int k = 5;
  std::uint64_t seed = 0;
  std::string clients = "stub";  // stub | remote
  std::string lexicons;          // personality lexicon JSON for the stub
  std::string embeddings;        // word-vector text file; hashed vectors when empty
  std::size_t jobs = 1;
  std::string log_level = "warn";

  // HAN
  std::size_t embedding_dim = 300;
  std::size_t gru_units = 50;
  double learning_rate = 0.01;
  double gru_dropout = 0.0;
  double recurrent_dropout = 0.0;
  double l2 = 0.0;
  std::size_t batch_size = 8;
  int epochs = 350;
  double clip_norm = 0.0;
  bool bidirectional = false;
  int search_budget = 0;  // train: random-search trials, 0 = fixed config

  int bootstrap = 1000;

  std::string standardizer;  // narrate / visualize: fitted standardizer JSON
  std::string checkpoint;    // visualize
  std::string style;         // visualize: style JSON
  bool per_turn_words = false;

  // synth
  std::size_t sessions = 120;
  std::string preset = "strong";
};

/// Entry point of the command-line tool. Returns the process exit status:
/// 0 on success, 1 on runtime failure, 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace convnarr

#endif  // CONVNARR_CLI_HPP
