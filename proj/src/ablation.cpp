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
#include "convnarr/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "convnarr/parallel.hpp"
#include "convnarr/rng.hpp"

namespace convnarr {

using nlohmann::json;

std::string_view to_string(ModelKind m) { return m == ModelKind::Tree ? "tree" : "han"; }

ModelKind parse_model_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "tree") return ModelKind::Tree;
  if (lower == "han") return ModelKind::Han;
  throw std::invalid_argument("unknown model '" + std::string(name) + "' (expected tree or han)");
}

bool tree_supports(InputConfig c) { return config_is_numeric(c); }

std::string CellResult::label() const {
  return std::string(model == ModelKind::Tree ? "Tree" : "HAN") + "/" + std::string(to_string(config));
}

const CellResult* EvalReport::find(ModelKind m, InputConfig c) const {
  for (const auto& cell : cells) {
    if (cell.model == m && cell.config == c) return &cell;
  }
  return nullptr;
}

namespace {

struct FoldData {
  std::vector<std::size_t> train, test;
  std::vector<SessionFeatures> features;  // every labelled session, fold's gender model
  Standardizer standardizer;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::string with_context(const CellResult& cell, int fold, const std::exception& e) {
  return cell.label() + (fold >= 0 ? ", fold " + std::to_string(fold + 1) : std::string()) + ": " + e.what();
}

void finish_cell(CellResult& cell, const std::vector<const Session*>& sessions, const std::vector<double>& labels,
                 const std::vector<int>& folds, int k, const std::vector<double>& predictions) {
  cell.available = true;
  cell.fold_ccc.clear();
  for (int f = 0; f < k; ++f) {
    std::vector<double> t, p;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (folds[i] == f) {
        t.push_back(labels[i]);
        p.push_back(predictions[i]);
      }
    }
    cell.fold_ccc.push_back(ccc(t, p));
  }
  cell.mean_ccc = mean_of(cell.fold_ccc);
  cell.std_ccc = pop_std(cell.fold_ccc);
  cell.pooled_ccc = ccc(labels, predictions);
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (!std::isfinite(predictions[i])) throw std::runtime_error("non-finite prediction for " + sessions[i]->id);
    cell.predictions[sessions[i]->id] = {labels[i], predictions[i]};
  }
}

}  // namespace

EvalReport run_ablation(const Corpus& corpus, const AblationOptions& opt) {
  if (opt.personality == nullptr) throw std::invalid_argument("run_ablation needs a personality client");
  const bool want_han = std::find(opt.models.begin(), opt.models.end(), ModelKind::Han) != opt.models.end();
  const bool want_tree = std::find(opt.models.begin(), opt.models.end(), ModelKind::Tree) != opt.models.end();
  if (want_han) {
    if (opt.embeddings == nullptr) throw std::invalid_argument("HAN cells need an embedding table");
    if (opt.embeddings->dimension() != opt.han.embedding_dim) {
      throw std::invalid_argument("embedding dimension " + std::to_string(opt.embeddings->dimension()) +
                                  " does not match HAN embedding_dim " + std::to_string(opt.han.embedding_dim));
    }
    opt.han.check();
    for (auto c : opt.configs) {
      if (config_has_comprehension(c) && opt.comprehension == nullptr) {
        throw std::invalid_argument("configuration " + std::string(to_string(c)) + " needs a comprehension client");
      }
    }
  }
  if (want_tree && opt.tree_grid.empty()) throw std::invalid_argument("empty tree grid");

  std::vector<const Session*> sessions;
  for (const auto& s : corpus.sessions) {
    if (s.phq) {
      sessions.push_back(&s);
    } else {
      spdlog::warn("session {} has no PHQ label; left out of the ablation", s.id);
    }
  }
  const std::size_t n = sessions.size();
  if (opt.k < 2 || static_cast<std::size_t>(opt.k) > n) {
    throw std::invalid_argument("k = " + std::to_string(opt.k) + " is invalid for " + std::to_string(n) +
                                " labelled sessions");
  }
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = *sessions[i]->phq;
  const auto folds = kfold_split(n, opt.k, derive_seed(opt.seed, 0xf01d));

  EvalReport report;
  report.k = opt.k;
  report.seed = opt.seed;
  report.held_out.resize(static_cast<std::size_t>(opt.k));
  for (std::size_t i = 0; i < n; ++i) report.held_out[static_cast<std::size_t>(folds[i])].push_back(sessions[i]->id);

  // Per-fold preparation: gender model and standardizer from training sessions.
  std::vector<FoldData> fold_data(static_cast<std::size_t>(opt.k));
  parallel_for(fold_data.size(), opt.jobs, [&](std::size_t f) {
    auto& fd = fold_data[f];
    for (std::size_t i = 0; i < n; ++i) (folds[i] == static_cast<int>(f) ? fd.test : fd.train).push_back(i);
    std::set<std::string> train_ids, test_ids;
    for (auto i : fd.train) train_ids.insert(sessions[i]->id);
    for (auto i : fd.test) test_ids.insert(sessions[i]->id);
    for (const auto& id : test_ids) {
      if (train_ids.count(id) != 0) {
        throw std::logic_error("fold " + std::to_string(f + 1) + ": session " + id + " is in both train and test");
      }
    }
    std::vector<std::array<double, kEgemapsCount>> rows;
    std::vector<Gender> genders;
    for (auto i : fd.train) {
      const auto* s = sessions[i];
      if (!s->gender) continue;
      for (const auto& r : s->egemaps.rows) {
        rows.push_back(r);
        genders.push_back(*s->gender);
      }
    }
    GenderModel gm;
    try {
      gm = train_gender_model(rows, genders, opt.gender);
    } catch (const std::exception& e) {
      throw std::runtime_error("fold " + std::to_string(f + 1) + ": gender model: " + e.what());
    }
    fd.features.reserve(n);
    for (std::size_t i = 0; i < n; ++i) fd.features.push_back(assemble_features(*sessions[i], gm, *opt.personality));
    std::vector<SessionFeatures> train_features;
    for (auto i : fd.train) train_features.push_back(fd.features[i]);
    fd.standardizer = fit_standardizer(train_features);
  });

  // Cells in table order: config-major, models in the requested order.
  for (auto c : opt.configs) {
    for (auto m : opt.models) {
      CellResult cell;
      cell.model = m;
      cell.config = c;
      report.cells.push_back(std::move(cell));
    }
  }

  // One task per tree cell (grid search inside) and per (HAN cell, fold).
  struct Task {
    std::size_t cell;
    int fold;
  };
  std::vector<Task> tasks;
  for (std::size_t ci = 0; ci < report.cells.size(); ++ci) {
    const auto& cell = report.cells[ci];
    if (cell.model == ModelKind::Tree) {
      if (tree_supports(cell.config)) tasks.push_back({ci, -1});
    } else {
      for (int f = 0; f < opt.k; ++f) tasks.push_back({ci, f});
    }
  }
  std::vector<std::vector<double>> han_preds(report.cells.size());
  for (std::size_t ci = 0; ci < report.cells.size(); ++ci) {
    if (report.cells[ci].model == ModelKind::Han) han_preds[ci].assign(n, 0.0);
  }

  parallel_for(tasks.size(), opt.jobs, [&](std::size_t ti) {
    const auto task = tasks[ti];
    auto& cell = report.cells[task.cell];
    try {
      if (cell.model == ModelKind::Tree) {
        const auto families = config_families(cell.config);
        const auto names = feature_names(families);
        std::vector<tree::Matrix> x(fold_data.size());
        for (std::size_t f = 0; f < fold_data.size(); ++f) {
          for (const auto& sf : fold_data[f].features) x[f].push_back(feature_vector(sf, families));
        }
        std::vector<double> best_pred;
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& hp : opt.tree_grid) {
          std::vector<double> pred(n, 0.0);
          for (std::size_t f = 0; f < fold_data.size(); ++f) {
            const auto& fd = fold_data[f];
            tree::Matrix xt;
            std::vector<double> yt;
            for (auto i : fd.train) {
              xt.push_back(x[f][i]);
              yt.push_back(labels[i]);
            }
            const auto model = tree::fit(xt, yt, hp, names);
            for (auto i : fd.test) pred[i] = model.predict(x[f][i]);
          }
          const double score = ccc(labels, pred);
          if (score > best) {
            best = score;
            best_pred = std::move(pred);
            cell.tree_choice = hp;
          }
        }
        finish_cell(cell, sessions, labels, folds, opt.k, best_pred);
      } else {
        const auto& fd = fold_data[static_cast<std::size_t>(task.fold)];
        NarrativeContext ctx;
        ctx.standardizer = &fd.standardizer;
        ctx.comprehension = opt.comprehension;
        ctx.questions = opt.questions;
        std::vector<han::EncodedDoc> docs(n);
        for (std::size_t i = 0; i < n; ++i) {
          const auto doc = assemble_input(*sessions[i], fd.features[i], cell.config, ctx);
          docs[i] = han::encode(doc, *opt.embeddings, opt.han.max_turns, opt.han.max_words);
        }
        std::vector<han::EncodedDoc> train_docs;
        std::vector<double> train_labels;
        for (auto i : fd.train) {
          train_docs.push_back(docs[i]);
          train_labels.push_back(labels[i]);
        }
        auto cfg = opt.han;
        cfg.seed = derive_seed(opt.seed, 0x4a00 + static_cast<std::uint64_t>(task.fold));
        const auto trained = han::train(train_docs, train_labels, cfg, han::EmbeddingSpec::describe(*opt.embeddings));
        for (auto i : fd.test) han_preds[task.cell][i] = han::predict(trained.model, docs[i]);
      }
    } catch (const std::logic_error&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error(with_context(cell, task.fold, e));
    }
  });

  for (std::size_t ci = 0; ci < report.cells.size(); ++ci) {
    if (report.cells[ci].model == ModelKind::Han) {
      finish_cell(report.cells[ci], sessions, labels, folds, opt.k, han_preds[ci]);
    }
  }

  std::vector<std::size_t> available;
  for (std::size_t ci = 0; ci < report.cells.size(); ++ci) {
    if (report.cells[ci].available) available.push_back(ci);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < available.size(); ++a) {
    for (std::size_t b = a + 1; b < available.size(); ++b) pairs.emplace_back(available[a], available[b]);
  }
  report.comparisons.resize(pairs.size());
  if (opt.bootstrap_resamples > 0) {
    parallel_for(pairs.size(), opt.jobs, [&](std::size_t pi) {
      const auto& ca = report.cells[pairs[pi].first];
      const auto& cb = report.cells[pairs[pi].second];
      report.comparisons[pi] = {ca.label(), cb.label(),
                                bootstrap_ccc_diff(ca.predictions, cb.predictions, opt.bootstrap_resamples,
                                                   opt.bootstrap_levels, derive_seed(opt.seed, 0xb007 + pi))};
    });
  } else {
    report.comparisons.clear();
  }
  return report;
}

std::string EvalReport::to_json() const {
  json j;
  j["k"] = k;
  j["seed"] = seed;
  j["folds"] = held_out;
  json cj = json::array();
  for (const auto& c : cells) {
    json x = {{"model", to_string(c.model)}, {"config", to_string(c.config)}, {"available", c.available}};
    if (c.available) {
      x["fold_ccc"] = c.fold_ccc;
      x["mean_ccc"] = c.mean_ccc;
      x["std_ccc"] = c.std_ccc;
      x["pooled_ccc"] = c.pooled_ccc;
      json preds = json::object();
      for (const auto& [id, p] : c.predictions) preds[id] = {{"truth", p.truth}, {"prediction", p.predicted}};
      x["predictions"] = std::move(preds);
      if (c.tree_choice) {
        x["tree_hyperparams"] = {
            {"minsplit", c.tree_choice->minsplit}, {"maxdepth", c.tree_choice->maxdepth}, {"cp", c.tree_choice->cp}};
      }
    }
    cj.push_back(std::move(x));
  }
  j["cells"] = std::move(cj);
  json bj = json::array();
  for (const auto& p : comparisons) {
    json iv = json::array();
    for (const auto& i : p.result.intervals) {
      iv.push_back({{"level", i.level}, {"lower", i.lower}, {"upper", i.upper}, {"significant", i.significant}});
    }
    bj.push_back({{"a", p.a}, {"b", p.b}, {"observed_diff", p.result.observed_diff}, {"intervals", iv}});
  }
  j["bootstrap"] = std::move(bj);
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::vector<InputConfig> configs;
  std::vector<ModelKind> models;
  for (const auto& c : cells) {
    if (std::find(configs.begin(), configs.end(), c.config) == configs.end()) configs.push_back(c.config);
    if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
  }
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  std::ostringstream out;
  auto row = [&](const std::string& first, const std::vector<std::string>& rest) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-8s", first.c_str());
    out << buf;
    for (const auto& r : rest) {
      std::snprintf(buf, sizeof buf, "  %-16s", r.c_str());
      out << buf;
    }
    out << "\n";
  };
  out << "CCC, mean over " << k << " folds (std in brackets)\n";
  std::vector<std::string> head;
  for (auto m : models) head.push_back(m == ModelKind::Tree ? "Tree" : "HAN");
  row("Input", head);
  for (auto c : configs) {
    std::vector<std::string> r;
    for (auto m : models) {
      const auto* cell = find(m, c);
      r.push_back(cell && cell->available ? fmt(cell->mean_ccc) + " (" + fmt(cell->std_ccc) + ")" : "N/A");
    }
    row(std::string(to_string(c)), r);
  }
  out << "\nPooled out-of-fold CCC\n";
  row("Input", head);
  for (auto c : configs) {
    std::vector<std::string> r;
    for (auto m : models) {
      const auto* cell = find(m, c);
      r.push_back(cell && cell->available ? fmt(cell->pooled_ccc) : "N/A");
    }
    row(std::string(to_string(c)), r);
  }
  if (!comparisons.empty()) {
    out << "\nBootstrap CCC differences (A - B)\n";
    for (const auto& p : comparisons) {
      out << p.a << " vs " << p.b << ": " << fmt(p.result.observed_diff);
      for (const auto& i : p.result.intervals) {
        out << "  [" << fmt(i.level) << ": " << fmt(i.lower) << ", " << fmt(i.upper) << "]"
            << (i.significant ? "*" : "");
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace convnarr
