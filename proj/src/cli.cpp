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
#include "convnarr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "convnarr/ablation.hpp"
#include "convnarr/corpus.hpp"
#include "convnarr/features.hpp"
#include "convnarr/han.hpp"
#include "convnarr/kernels.hpp"
#include "convnarr/narrative.hpp"
#include "convnarr/parallel.hpp"
#include "convnarr/rng.hpp"
#include "convnarr/synth.hpp"
#include "convnarr/tree.hpp"
#include "convnarr/viz.hpp"

namespace fs = std::filesystem;

namespace convnarr {

namespace {

struct Clients {
  std::unique_ptr<PersonalityClient> personality;
  std::unique_ptr<ComprehensionClient> comprehension;
};

Clients make_clients(const RunConfig& rc) {
  Clients c;
  if (rc.clients == "remote") {
    c.personality = std::make_unique<RemotePersonalityClient>(remote_options_from_env("CONVNARR_PERSONALITY_URL"));
    c.comprehension =
        std::make_unique<RemoteComprehensionClient>(remote_options_from_env("CONVNARR_COMPREHENSION_URL"));
  } else {
    auto lx = rc.lexicons.empty() ? PersonalityLexicons::defaults() : PersonalityLexicons::load(rc.lexicons);
    c.personality = std::make_unique<StubPersonalityClient>(std::move(lx));
    c.comprehension = std::make_unique<StubComprehensionClient>();
  }
  return c;
}

EmbeddingTable make_embeddings(const RunConfig& rc) {
  const auto seed = derive_seed(rc.seed, 0xe3b);
  if (rc.embeddings.empty()) return EmbeddingTable::hashed(rc.embedding_dim, seed);
  auto t = EmbeddingTable::load(rc.embeddings, seed);
  if (t.dimension() != rc.embedding_dim) {
    throw std::runtime_error(rc.embeddings + " has " + std::to_string(t.dimension()) +
                             "-dimensional vectors but --embedding-dim is " + std::to_string(rc.embedding_dim));
  }
  return t;
}

han::HanConfig han_config(const RunConfig& rc) {
  han::HanConfig c;
  c.embedding_dim = rc.embedding_dim;
  c.gru_units = rc.gru_units;
  c.learning_rate = rc.learning_rate;
  c.gru_dropout = rc.gru_dropout;
  c.recurrent_dropout = rc.recurrent_dropout;
  c.l2 = rc.l2;
  c.batch_size = rc.batch_size;
  c.epochs = rc.epochs;
  c.clip_norm = rc.clip_norm;
  c.bidirectional = rc.bidirectional;
  c.seed = derive_seed(rc.seed, 0x4a4e);
  c.check();
  return c;
}

Corpus load_corpus(const RunConfig& rc) {
  if (rc.corpus.empty()) throw std::runtime_error("no corpus given (--corpus)");
  if (!fs::is_directory(rc.corpus)) throw std::runtime_error("corpus directory " + rc.corpus + " does not exist");
  return parse_corpus(rc.corpus);
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

fs::path out_dir(const RunConfig& rc) {
  if (rc.out.empty()) throw std::runtime_error("no output directory given (--out)");
  return rc.out;
}

struct Prepared {
  std::vector<SessionFeatures> features;
  Standardizer standardizer;
};

Prepared prepare(const Corpus& corpus, const RunConfig& rc, const Clients& clients) {
  GenderModel gm;
  try {
    gm = train_gender_model(corpus.sessions, GenderTrainOptions{.seed = derive_seed(rc.seed, 0x9e)});
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("gender model: ") + e.what());
  }
  Prepared p;
  p.features.resize(corpus.sessions.size());
  parallel_for(corpus.sessions.size(), rc.jobs, [&](std::size_t i) {
    p.features[i] = assemble_features(corpus.sessions[i], gm, *clients.personality);
  });
  if (!rc.standardizer.empty()) {
    p.standardizer = Standardizer::load(rc.standardizer);
  } else {
    p.standardizer = fit_standardizer(p.features);
  }
  return p;
}

int cmd_validate(const RunConfig& rc, std::ostream& out) {
  const auto corpus = load_corpus(rc);
  const auto violations = validate(corpus);
  for (const auto& v : violations) out << (v.session_id.empty() ? "corpus" : v.session_id) << ": " << v.message << "\n";
  std::size_t labelled = 0;
  for (const auto& s : corpus.sessions) labelled += s.phq ? 1 : 0;
  out << corpus.sessions.size() << " sessions, " << labelled << " labelled, " << violations.size()
      << " violations\n";
  return violations.empty() ? 0 : 1;
}

int cmd_features(const RunConfig& rc, std::ostream& out) {
  const auto corpus = load_corpus(rc);
  const auto clients = make_clients(rc);
  const auto prep = prepare(corpus, rc, clients);
  const auto dir = out_dir(rc);
  const auto names = feature_names(all_families());
  for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
    const auto& f = prep.features[i];
    const auto values = feature_vector(f, all_families());
    nlohmann::ordered_json j;
    j["session"] = corpus.sessions[i].id;
    j["gender"] = f.gender == Gender::Female ? "female" : "male";
    nlohmann::ordered_json fj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < names.size(); ++c) fj[names[c]] = values[c];
    j["features"] = std::move(fj);
    write_file(dir / "features" / (corpus.sessions[i].id + ".json"), j.dump(2) + "\n");
  }
  write_file(dir / "standardizer.json", prep.standardizer.to_json());
  out << "wrote features for " << corpus.sessions.size() << " sessions to " << (dir / "features").string() << "\n";
  return 0;
}

std::vector<NarrativeDocument> build_documents(const Corpus& corpus, const Prepared& prep, InputConfig config,
                                               const Clients& clients, std::size_t jobs) {
  NarrativeContext ctx;
  ctx.standardizer = &prep.standardizer;
  ctx.comprehension = clients.comprehension.get();
  std::vector<NarrativeDocument> docs(corpus.sessions.size());
  parallel_for(docs.size(), jobs, [&](std::size_t i) {
    docs[i] = assemble_input(corpus.sessions[i], prep.features[i], config, ctx);
  });
  return docs;
}

int cmd_narrate(const RunConfig& rc, std::ostream& out) {
  const auto config = parse_input_config(rc.input_config);
  const auto corpus = load_corpus(rc);
  const auto clients = make_clients(rc);
  const auto prep = prepare(corpus, rc, clients);
  const auto docs = build_documents(corpus, prep, config, clients, rc.jobs);
  const auto dir = out_dir(rc) / "narratives" / std::string(to_string(config));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    write_file(dir / (corpus.sessions[i].id + ".txt"), serialize_narrative(docs[i]));
  }
  out << "wrote " << docs.size() << " narratives to " << dir.string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
  const auto config = parse_input_config(rc.input_config);
  const auto model = parse_model_kind(rc.model);
  if (model == ModelKind::Tree && !tree_supports(config)) {
    throw std::runtime_error("the tree only takes numeric inputs (D, DA, DAP), not " + rc.input_config);
  }
  const auto corpus = load_corpus(rc);
  const auto clients = make_clients(rc);
  const auto prep = prepare(corpus, rc, clients);
  std::vector<std::size_t> labelled;
  std::vector<double> labels;
  for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
    if (corpus.sessions[i].phq) {
      labelled.push_back(i);
      labels.push_back(*corpus.sessions[i].phq);
    }
  }
  if (labelled.size() < 2) throw std::runtime_error("need at least two labelled sessions to train");
  const auto dir = out_dir(rc);
  const std::string stem = std::string(to_string(model)) + "_" + std::string(to_string(config));

  if (model == ModelKind::Tree) {
    const auto families = config_families(config);
    tree::Matrix x;
    for (auto i : labelled) x.push_back(feature_vector(prep.features[i], families));
    const auto grid = tree::default_grid();
    const int k = std::min<int>(rc.k, static_cast<int>(labelled.size()));
    const auto gr = tree::grid_search_cv(x, labels, grid, k, derive_seed(rc.seed, 0xf01d));
    const auto fitted = tree::fit(x, labels, gr.best, feature_names(families));
    write_file(dir / (stem + ".json"), fitted.to_json());
    out << "tree " << to_string(config) << ": minsplit " << gr.best.minsplit << ", maxdepth " << gr.best.maxdepth
        << ", cp " << gr.best.cp << ", cross-validated CCC " << gr.best_ccc << "\n";
    return 0;
  }

  const auto emb = make_embeddings(rc);
  const auto docs = build_documents(corpus, prep, config, clients, rc.jobs);
  auto hc = han_config(rc);
  std::vector<han::EncodedDoc> encoded;
  for (auto i : labelled) encoded.push_back(han::encode(docs[i], emb, hc.max_turns, hc.max_words));
  if (rc.search_budget > 0) {
    const int k = std::min<int>(rc.k, static_cast<int>(labelled.size()));
    const auto result = han::random_search(han::SearchSpace{}, hc, rc.search_budget, k, derive_seed(rc.seed, 0x5ea),
                                           encoded, labels);
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : result.trials) {
      trials.push_back({{"learning_rate", t.config.learning_rate},
                        {"gru_units", t.config.gru_units},
                        {"gru_dropout", t.config.gru_dropout},
                        {"recurrent_dropout", t.config.recurrent_dropout},
                        {"l2", t.config.l2},
                        {"ccc", t.score}});
    }
    write_file(dir / (stem + ".search.json"),
               nlohmann::json{{"best_index", result.best_index}, {"trials", trials}}.dump(2) + "\n");
    hc = result.best;
    out << "random search: best trial " << result.best_index + 1 << " of " << result.trials.size() << " (CCC "
        << result.trials[result.best_index].score << ")\n";
  }
  const auto trained = han::train(encoded, labels, hc, han::EmbeddingSpec::describe(emb));
  fs::create_directories(dir);
  han::save_checkpoint(trained.model, dir / (stem + ".ckpt"));
  write_file(dir / "standardizer.json", prep.standardizer.to_json());
  out << "han " << to_string(config) << ": final training loss "
      << (trained.loss_history.empty() ? 0.0 : trained.loss_history.back()) << ", checkpoint "
      << (dir / (stem + ".ckpt")).string() << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& rc, std::ostream& out) {
  AblationOptions opt;
  opt.configs.clear();
  for (const auto& c : rc.configs) opt.configs.push_back(parse_input_config(c));
  opt.models.clear();
  for (const auto& m : rc.models) opt.models.push_back(parse_model_kind(m));
  opt.k = rc.k;
  opt.seed = rc.seed;
  opt.han = han_config(rc);
  opt.jobs = rc.jobs;
  opt.bootstrap_resamples = rc.bootstrap;
  opt.gender.seed = derive_seed(rc.seed, 0x9e);
  const auto corpus = load_corpus(rc);
  const auto clients = make_clients(rc);
  std::optional<EmbeddingTable> emb;
  if (std::find(opt.models.begin(), opt.models.end(), ModelKind::Han) != opt.models.end()) {
    emb = make_embeddings(rc);
    opt.embeddings = &*emb;
  }
  opt.personality = clients.personality.get();
  opt.comprehension = clients.comprehension.get();
  const auto report = run_ablation(corpus, opt);
  const auto dir = out_dir(rc);
  write_file(dir / "report.json", report.to_json());
  write_file(dir / "report.txt", report.to_table());
  out << report.to_table();
  return 0;
}

int cmd_visualize(const RunConfig& rc, std::ostream& out) {
  const auto config = parse_input_config(rc.input_config);
  if (rc.checkpoint.empty()) throw std::runtime_error("no checkpoint given (--checkpoint)");
  const auto model = han::load_checkpoint(rc.checkpoint);
  const auto style = rc.style.empty() ? viz::Style{} : viz::Style::load(rc.style);
  const auto corpus = load_corpus(rc);
  const auto clients = make_clients(rc);
  const auto prep = prepare(corpus, rc, clients);
  const auto emb = model.embeddings.materialize();
  const auto docs = build_documents(corpus, prep, config, clients, rc.jobs);
  std::vector<std::string> pages(docs.size());
  parallel_for(docs.size(), rc.jobs, [&](std::size_t i) {
    const auto encoded = han::encode(docs[i], emb, model.config.max_turns, model.config.max_words);
    const auto fr = han::forward(model, encoded);
    auto vd = viz::standardize_attention(fr.trace, encoded, &docs[i],
                                         rc.per_turn_words ? viz::WordScope::Turn : viz::WordScope::Session);
    vd.session_id = corpus.sessions[i].id;
    vd.predicted = han::clip_prediction(fr.raw);
    if (corpus.sessions[i].phq) vd.truth = *corpus.sessions[i].phq;
    pages[i] = viz::emit_html(vd, style);
  });
  const auto dir = out_dir(rc);
  for (std::size_t i = 0; i < docs.size(); ++i) write_file(dir / (corpus.sessions[i].id + ".attn.html"), pages[i]);
  out << "wrote " << docs.size() << " pages to " << dir.string() << "\n";
  return 0;
}

int cmd_synth(const RunConfig& rc, std::ostream& out) {
  synth::SynthParams p;
  if (rc.preset == "strong") {
    p = synth::SynthParams::strong(rc.sessions, rc.seed);
  } else if (rc.preset == "null") {
    p = synth::SynthParams::null(rc.sessions, rc.seed);
  } else {
    throw std::runtime_error("unknown preset '" + rc.preset + "' (expected strong or null)");
  }
  const auto corpus = synth::generate(p, rc.jobs);
  const auto dir = out_dir(rc);
  write_corpus(corpus, dir);
  const auto d = synth::describe(corpus);
  write_file(dir / "synth_description.json", d.to_json());
  out << "wrote " << corpus.sessions.size() << " sessions to " << dir.string() << "\n" << d.to_json();
  return 0;
}

void add_common(CLI::App* sub, RunConfig& rc, bool corpus, bool clients) {
  sub->add_option("--out,-o", rc.out, "Output directory");
  sub->add_option("--seed", rc.seed, "Master seed");
  sub->add_option("--jobs,-j", rc.jobs, "Worker threads")->check(CLI::PositiveNumber);
  if (corpus) sub->add_option("--corpus,-c", rc.corpus, "Corpus directory");
  if (clients) {
    sub->add_option("--clients", rc.clients, "External services")->check(CLI::IsMember({"stub", "remote"}));
    sub->add_option("--lexicons", rc.lexicons, "Personality lexicon JSON for the stub client");
    sub->add_option("--standardizer", rc.standardizer, "Fitted standardizer JSON (default: fit on the corpus)");
  }
}

void add_han(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--embeddings", rc.embeddings, "Word-vector text file (default: hashed vectors)");
  sub->add_option("--embedding-dim", rc.embedding_dim, "Embedding dimension");
  sub->add_option("--gru-units", rc.gru_units, "GRU units");
  sub->add_option("--learning-rate", rc.learning_rate, "SGD learning rate");
  sub->add_option("--gru-dropout", rc.gru_dropout, "Dropout on GRU inputs");
  sub->add_option("--recurrent-dropout", rc.recurrent_dropout, "Dropout on the recurrent path");
  sub->add_option("--l2", rc.l2, "L2 penalty on weights");
  sub->add_option("--batch-size", rc.batch_size, "Mini-batch size");
  sub->add_option("--epochs", rc.epochs, "Training epochs");
  sub->add_option("--clip-norm", rc.clip_norm, "Gradient-norm clip, 0 disables");
  sub->add_flag("--bidirectional", rc.bidirectional, "Bidirectional GRUs");
}

int dispatch(CLI::App& app, const RunConfig& rc, std::ostream& out) {
  if (app.got_subcommand("validate")) return cmd_validate(rc, out);
  if (app.got_subcommand("features")) return cmd_features(rc, out);
  if (app.got_subcommand("narrate")) return cmd_narrate(rc, out);
  if (app.got_subcommand("train")) return cmd_train(rc, out);
  if (app.got_subcommand("ablate")) return cmd_ablate(rc, out);
  if (app.got_subcommand("visualize")) return cmd_visualize(rc, out);
  if (app.got_subcommand("synth")) return cmd_synth(rc, out);
  return 2;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Depression severity prediction from interview sessions", "convnarr"};
  app.require_subcommand(1);
  app.set_config("--config-file", "", "INI file; [subcommand] sections, flags override it");
  app.add_option("--log-level", rc.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.add_flag_callback(
      "--isa", [&out] { out << "kernels: " << kernels::isa_name(kernels::active_isa()) << "\n"; },
      "Print the selected SIMD kernel variant");

  auto* validate = app.add_subcommand("validate", "Check a corpus and list violations");
  add_common(validate, rc, true, false);

  auto* features = app.add_subcommand("features", "Write session features as JSON");
  add_common(features, rc, true, true);

  auto* narrate = app.add_subcommand("narrate", "Write the model input text of every session");
  add_common(narrate, rc, true, true);
  narrate->add_option("--config", rc.input_config, "Input configuration (D, DA, DAP, DAPC, DAPN, DAPNC)");

  auto* train = app.add_subcommand("train", "Fit a model on every labelled session");
  add_common(train, rc, true, true);
  train->add_option("--config", rc.input_config, "Input configuration");
  train->add_option("--model", rc.model, "tree or han")->check(CLI::IsMember({"tree", "han"}));
  train->add_option("--k", rc.k, "Folds for hyperparameter selection")->check(CLI::Range(2, 1000));
  train->add_option("--search", rc.search_budget, "HAN random-search trials (0: fixed config)");
  add_han(train, rc);

  auto* ablate = app.add_subcommand("ablate", "Cross-validated ablation over input configurations");
  add_common(ablate, rc, true, true);
  ablate->add_option("--configs", rc.configs, "Input configurations")->delimiter(',');
  ablate->add_option("--models", rc.models, "Models (tree, han)")->delimiter(',');
  ablate->add_option("--k", rc.k, "Folds")->check(CLI::Range(2, 1000));
  ablate->add_option("--bootstrap", rc.bootstrap, "Bootstrap resamples per comparison (0 skips)");
  add_han(ablate, rc);

  auto* visualize = app.add_subcommand("visualize", "Render attention over each session as HTML");
  add_common(visualize, rc, true, true);
  visualize->add_option("--config", rc.input_config, "Input configuration the checkpoint was trained on");
  visualize->add_option("--checkpoint", rc.checkpoint, "HAN checkpoint");
  visualize->add_option("--style", rc.style, "Style JSON");
  visualize->add_flag("--per-turn-words", rc.per_turn_words, "Standardise word weights within each turn");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  add_common(synth, rc, false, false);
  synth->add_option("--sessions,-n", rc.sessions, "Number of sessions")->check(CLI::PositiveNumber);
  synth->add_option("--preset", rc.preset, "strong or null")->check(CLI::IsMember({"strong", "null"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  spdlog::set_level(spdlog::level::from_str(rc.log_level));
  try {
    return dispatch(app, rc, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("convnarr");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace convnarr
