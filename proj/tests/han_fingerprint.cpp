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
// Emits or checks HAN outputs across kernel ISAs.
//   han_fingerprint emit <file>     (run with CONVNARR_SIMD=scalar)
//   han_fingerprint compare <file>  (run with the default ISA)

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "convnarr/han.hpp"
#include "convnarr/kernels.hpp"
#include "support.hpp"

using namespace convnarr;

namespace {

std::vector<double> fingerprint() {
  std::vector<double> out;
  std::vector<han::EncodedDoc> docs;
  std::vector<double> labels;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto hc = testing::random_han_case(seed, seed % 2 == 0, 8, 8);
    const auto r = han::forward(hc.model, hc.doc);
    out.push_back(r.raw);
    for (double w : r.trace.turn_weights) out.push_back(w);
    std::vector<double> grad(hc.model.params.size(), 0.0);
    out.push_back(han::loss_and_gradient(hc.model, hc.doc, hc.label, grad));
    for (std::size_t i = 0; i < grad.size(); i += 37) out.push_back(grad[i]);
    docs.push_back(hc.doc);
    labels.push_back(hc.label);
  }
  han::HanConfig cfg;
  cfg.embedding_dim = 8;
  cfg.gru_units = 8;
  cfg.epochs = 10;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.05;
  cfg.seed = 3;
  const auto trained = han::train(docs, labels, cfg);
  for (const auto& d : docs) out.push_back(han::forward(trained.model, d).raw);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: han_fingerprint emit|compare <file>\n";
    return 2;
  }
  const std::string mode = argv[1];
  const auto values = fingerprint();
  std::cout << "isa " << kernels::isa_name(kernels::active_isa()) << ", " << values.size() << " values\n";
  if (mode == "emit") {
    std::ofstream out(argv[2]);
    out.precision(17);
    for (double v : values) out << v << '\n';
    return out ? 0 : 1;
  }
  std::ifstream in(argv[2]);
  std::vector<double> ref;
  for (double v; in >> v;) ref.push_back(v);
  if (ref.size() != values.size()) {
    std::cerr << "reference has " << ref.size() << " values, expected " << values.size() << "\n";
    return 1;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    worst = std::max(worst, std::abs(ref[i] - values[i]) / (1.0 + std::abs(ref[i])));
  }
  std::printf("max relative difference %.3g\n", worst);
  return worst < 1e-9 ? 0 : 1;
}
