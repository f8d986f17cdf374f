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
#include "convnarr/han.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "convnarr/corpus.hpp"
#include "convnarr/evaluation.hpp"
#include "convnarr/kernels.hpp"
#include "convnarr/rng.hpp"

namespace convnarr::han {

namespace k = convnarr::kernels;

void HanConfig::check() const {
  if (embedding_dim == 0 || gru_units == 0) throw std::invalid_argument("HAN dimensions must be positive");
  if (!(gru_dropout >= 0.0 && gru_dropout < 1.0)) throw std::invalid_argument("gru_dropout must be in [0, 1)");
  if (!(recurrent_dropout >= 0.0 && recurrent_dropout < 1.0)) {
    throw std::invalid_argument("recurrent_dropout must be in [0, 1)");
  }
  if (!(l2 >= 0.0)) throw std::invalid_argument("l2 must be >= 0");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (max_turns == 0 || max_words == 0) throw std::invalid_argument("document caps must be positive");
}

EncodedDoc encode(const NarrativeDocument& doc, const EmbeddingTable& embeddings, std::size_t max_turns,
                  std::size_t max_words) {
  EncodedDoc out;
  out.dim = embeddings.dimension();
  for (std::size_t i = 0; i < doc.turns.size() && out.vectors.size() < max_turns; ++i) {
    auto tokens = tokenize(doc.turns[i].text);
    if (tokens.empty()) continue;
    if (tokens.size() > max_words) tokens.resize(max_words);
    std::vector<double> vec(tokens.size() * out.dim);
    for (std::size_t w = 0; w < tokens.size(); ++w) {
      embeddings.lookup(tokens[w], std::span<double>(vec).subspan(w * out.dim, out.dim));
    }
    out.tokens.push_back(std::move(tokens));
    out.vectors.push_back(std::move(vec));
    out.source_turn.push_back(i);
  }
  if (out.vectors.empty()) throw std::invalid_argument("cannot encode a document without words");
  return out;
}

Layout Layout::make(std::size_t e, std::size_t h, bool bidirectional) {
  Layout l;
  l.bidirectional = bidirectional;
  std::size_t off = 0;
  auto gru = [&](std::size_t input) {
    Gru g;
    g.input = input;
    g.hidden = h;
    g.w = off;
    off += 3 * h * input;
    g.u = off;
    off += 3 * h * h;
    g.b = off;
    off += 3 * h;
    return g;
  };
  auto att = [&](std::size_t input) {
    Attention a;
    a.input = input;
    a.dim = input;
    a.a = off;
    off += input * input;
    a.bias = off;
    off += input;
    a.context = off;
    off += input;
    return a;
  };
  const std::size_t o = bidirectional ? 2 * h : h;
  l.word_fwd = gru(e);
  if (bidirectional) l.word_bwd = gru(e);
  l.word_att = att(o);
  l.turn_fwd = gru(o);
  if (bidirectional) l.turn_bwd = gru(o);
  l.turn_att = att(o);
  l.out_w = off;
  off += o;
  l.out_b = off;
  off += 1;
  l.total = off;
  return l;
}

std::vector<bool> Layout::weight_mask() const {
  std::vector<bool> m(total, false);
  auto mark = [&](std::size_t from, std::size_t n) { std::fill_n(m.begin() + static_cast<std::ptrdiff_t>(from), n, true); };
  auto gru = [&](const Gru& g) {
    if (g.hidden == 0) return;
    mark(g.w, 3 * g.hidden * g.input);
    mark(g.u, 3 * g.hidden * g.hidden);
  };
  auto att = [&](const Attention& a) {
    mark(a.a, a.dim * a.input);
    mark(a.context, a.dim);
  };
  gru(word_fwd);
  gru(word_bwd);
  gru(turn_fwd);
  gru(turn_bwd);
  att(word_att);
  att(turn_att);
  mark(out_w, out_b - out_w);
  return m;
}

HanModel HanModel::init(const HanConfig& config, double output_bias) {
  config.check();
  HanModel m;
  m.config = config;
  m.layout = Layout::make(config.embedding_dim, config.gru_units, config.bidirectional);
  m.embeddings.dim = config.embedding_dim;
  m.params.assign(m.layout.total, 0.0);
  Rng rng(derive_seed(config.seed, 0x1417));
  auto fill = [&](std::size_t from, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < n; ++i) m.params[from + i] = rng.uniform(-bound, bound);
  };
  auto gru = [&](const Layout::Gru& g) {
    if (g.hidden == 0) return;
    fill(g.w, 3 * g.hidden * g.input, g.input);
    fill(g.u, 3 * g.hidden * g.hidden, g.hidden);
  };
  auto att = [&](const Layout::Attention& a) {
    fill(a.a, a.dim * a.input, a.input);
    fill(a.context, a.dim, a.dim);
  };
  const auto& l = m.layout;
  gru(l.word_fwd);
  gru(l.word_bwd);
  att(l.word_att);
  gru(l.turn_fwd);
  gru(l.turn_bwd);
  att(l.turn_att);
  fill(l.out_w, l.out_b - l.out_w, l.out_b - l.out_w);
  m.params[l.out_b] = output_bias;
  return m;
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> dropout_mask(std::size_t n, double rate, Rng* rng) {
  std::vector<double> m(n, 1.0);
  if (rng == nullptr || rate <= 0.0) return m;
  const double keep = 1.0 / (1.0 - rate);
  for (auto& x : m) x = rng->uniform() < rate ? 0.0 : keep;
  return m;
}

struct GruTape {
  std::size_t steps = 0, in = 0, hid = 0;
  bool reverse = false;
  std::vector<double> x, hprev, hd, z, r, n, q, h;
  std::vector<double> mx, mr;
};

// Runs one GRU over `input` (steps x in). Outputs are stored at the position
// of the input they consumed, so a reversed run lines up with the forward one.
void gru_forward(std::span<const double> p, const Layout::Gru& g, std::span<const double> input,
                 std::size_t steps, bool reverse, const HanConfig& cfg, Rng* mask_rng, GruTape& t) {
  const std::size_t in = g.input, hid = g.hidden;
  t.steps = steps;
  t.in = in;
  t.hid = hid;
  t.reverse = reverse;
  t.mx = dropout_mask(in, cfg.gru_dropout, mask_rng);
  t.mr = dropout_mask(hid, cfg.recurrent_dropout, mask_rng);
  for (auto* v : {&t.hprev, &t.hd, &t.z, &t.r, &t.n, &t.q, &t.h}) v->assign(steps * hid, 0.0);
  t.x.assign(steps * in, 0.0);

  const auto w = p.subspan(g.w, 3 * hid * in);
  const auto u_zr = p.subspan(g.u, 2 * hid * hid);
  const auto u_n = p.subspan(g.u + 2 * hid * hid, hid * hid);
  const auto b = p.subspan(g.b, 3 * hid);

  std::vector<double> h(hid, 0.0), pre(3 * hid);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t pos = reverse ? steps - 1 - s : s;
    auto x = std::span<double>(t.x).subspan(pos * in, in);
    for (std::size_t i = 0; i < in; ++i) x[i] = input[pos * in + i] * t.mx[i];
    auto hprev = std::span<double>(t.hprev).subspan(pos * hid, hid);
    auto hd = std::span<double>(t.hd).subspan(pos * hid, hid);
    auto z = std::span<double>(t.z).subspan(pos * hid, hid);
    auto r = std::span<double>(t.r).subspan(pos * hid, hid);
    auto n = std::span<double>(t.n).subspan(pos * hid, hid);
    auto q = std::span<double>(t.q).subspan(pos * hid, hid);
    auto hout = std::span<double>(t.h).subspan(pos * hid, hid);

    std::copy(h.begin(), h.end(), hprev.begin());
    for (std::size_t i = 0; i < hid; ++i) hd[i] = h[i] * t.mr[i];
    std::copy(b.begin(), b.end(), pre.begin());
    k::gemv(w, x, pre);
    k::gemv(u_zr, hd, std::span<double>(pre).first(2 * hid));
    for (std::size_t i = 0; i < hid; ++i) {
      z[i] = sigmoid(pre[i]);
      r[i] = sigmoid(pre[hid + i]);
      q[i] = r[i] * hd[i];
    }
    k::gemv(u_n, q, std::span<double>(pre).subspan(2 * hid, hid));
    for (std::size_t i = 0; i < hid; ++i) {
      n[i] = std::tanh(pre[2 * hid + i]);
      h[i] = (1.0 - z[i]) * hprev[i] + z[i] * n[i];
      hout[i] = h[i];
    }
  }
}

// d_out: gradient w.r.t. outputs (steps x hid). Accumulates parameter
// gradients into `grad` and, when given, input gradients into `d_in`.
void gru_backward(std::span<const double> p, const Layout::Gru& g, const GruTape& t,
                  std::span<const double> d_out, std::span<double> grad, std::span<double> d_in) {
  const std::size_t in = t.in, hid = t.hid;
  const auto w = p.subspan(g.w, 3 * hid * in);
  const auto u_zr = p.subspan(g.u, 2 * hid * hid);
  const auto u_n = p.subspan(g.u + 2 * hid * hid, hid * hid);
  auto gw = grad.subspan(g.w, 3 * hid * in);
  auto gu_zr = grad.subspan(g.u, 2 * hid * hid);
  auto gu_n = grad.subspan(g.u + 2 * hid * hid, hid * hid);
  auto gb = grad.subspan(g.b, 3 * hid);

  std::vector<double> dh(hid, 0.0), da(3 * hid), dq(hid), dhd(hid), dx(in);
  for (std::size_t s = t.steps; s-- > 0;) {
    const std::size_t pos = t.reverse ? t.steps - 1 - s : s;
    const auto x = std::span<const double>(t.x).subspan(pos * in, in);
    const auto hprev = std::span<const double>(t.hprev).subspan(pos * hid, hid);
    const auto hd = std::span<const double>(t.hd).subspan(pos * hid, hid);
    const auto z = std::span<const double>(t.z).subspan(pos * hid, hid);
    const auto r = std::span<const double>(t.r).subspan(pos * hid, hid);
    const auto n = std::span<const double>(t.n).subspan(pos * hid, hid);
    const auto q = std::span<const double>(t.q).subspan(pos * hid, hid);

    for (std::size_t i = 0; i < hid; ++i) dh[i] += d_out[pos * hid + i];
    std::vector<double> dhprev(hid);
    for (std::size_t i = 0; i < hid; ++i) {
      const double dz = dh[i] * (n[i] - hprev[i]);
      const double dn = dh[i] * z[i];
      dhprev[i] = dh[i] * (1.0 - z[i]);
      da[i] = dz * z[i] * (1.0 - z[i]);
      da[2 * hid + i] = dn * (1.0 - n[i] * n[i]);
    }
    std::fill(dq.begin(), dq.end(), 0.0);
    k::gemv_t(u_n, std::span<const double>(da).subspan(2 * hid, hid), dq);
    for (std::size_t i = 0; i < hid; ++i) {
      const double dr = dq[i] * hd[i];
      dhd[i] = dq[i] * r[i];
      da[hid + i] = dr * r[i] * (1.0 - r[i]);
    }
    for (std::size_t i = 0; i < 3 * hid; ++i) gb[i] += da[i];
    k::ger(da, x, gw);
    k::ger(std::span<const double>(da).first(2 * hid), hd, gu_zr);
    k::ger(std::span<const double>(da).subspan(2 * hid, hid), q, gu_n);
    k::gemv_t(u_zr, std::span<const double>(da).first(2 * hid), dhd);
    for (std::size_t i = 0; i < hid; ++i) dhprev[i] += dhd[i] * t.mr[i];
    if (!d_in.empty()) {
      std::fill(dx.begin(), dx.end(), 0.0);
      k::gemv_t(w, da, dx);
      for (std::size_t i = 0; i < in; ++i) d_in[pos * in + i] += dx[i] * t.mx[i];
    }
    dh = std::move(dhprev);
  }
}

struct AttTape {
  std::size_t steps = 0, in = 0, dim = 0;
  std::vector<double> u, alpha;
};

std::vector<double> att_forward(std::span<const double> p, const Layout::Attention& a,
                                std::span<const double> hs, std::size_t steps, AttTape& t) {
  t.steps = steps;
  t.in = a.input;
  t.dim = a.dim;
  t.u.assign(steps * a.dim, 0.0);
  t.alpha.assign(steps, 0.0);
  const auto A = p.subspan(a.a, a.dim * a.input);
  const auto bias = p.subspan(a.bias, a.dim);
  const auto ctx = p.subspan(a.context, a.dim);
  std::vector<double> scores(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    auto u = std::span<double>(t.u).subspan(s * a.dim, a.dim);
    std::copy(bias.begin(), bias.end(), u.begin());
    k::gemv(A, hs.subspan(s * a.input, a.input), u);
    for (auto& v : u) v = std::tanh(v);
    scores[s] = k::dot(ctx, u);
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    t.alpha[s] = std::exp(scores[s] - mx);
    sum += t.alpha[s];
  }
  for (auto& v : t.alpha) v /= sum;
  std::vector<double> pooled(a.input, 0.0);
  for (std::size_t s = 0; s < steps; ++s) k::axpy(t.alpha[s], hs.subspan(s * a.input, a.input), pooled);
  return pooled;
}

void att_backward(std::span<const double> p, const Layout::Attention& a, const AttTape& t,
                  std::span<const double> hs, std::span<const double> d_pooled, std::span<double> grad,
                  std::span<double> d_hs, bool flip_context) {
  const auto A = p.subspan(a.a, a.dim * a.input);
  const auto ctx = p.subspan(a.context, a.dim);
  auto gA = grad.subspan(a.a, a.dim * a.input);
  auto gbias = grad.subspan(a.bias, a.dim);
  auto gctx = grad.subspan(a.context, a.dim);
  std::vector<double> dalpha(t.steps);
  double weighted = 0.0;
  for (std::size_t s = 0; s < t.steps; ++s) {
    dalpha[s] = k::dot(d_pooled, hs.subspan(s * a.input, a.input));
    weighted += t.alpha[s] * dalpha[s];
  }
  std::vector<double> du(a.dim);
  for (std::size_t s = 0; s < t.steps; ++s) {
    auto dh = d_hs.subspan(s * a.input, a.input);
    k::axpy(t.alpha[s], d_pooled, dh);
    const double ds = t.alpha[s] * (dalpha[s] - weighted);
    const auto u = std::span<const double>(t.u).subspan(s * a.dim, a.dim);
    k::axpy(ds, u, gctx);
    const double sign = flip_context ? -1.0 : 1.0;
    for (std::size_t i = 0; i < a.dim; ++i) du[i] = sign * ds * ctx[i] * (1.0 - u[i] * u[i]);
    for (std::size_t i = 0; i < a.dim; ++i) gbias[i] += du[i];
    k::ger(du, hs.subspan(s * a.input, a.input), gA);
    k::gemv_t(A, du, dh);
  }
}

struct SeqEncoder {
  GruTape fwd, bwd;
  std::vector<double> out;  // steps x (H or 2H)
};

void encode_sequence(std::span<const double> p, const Layout::Gru& gf, const Layout::Gru& gb, bool bidi,
                     std::span<const double> input, std::size_t steps, const HanConfig& cfg, Rng* rng,
                     SeqEncoder& enc) {
  gru_forward(p, gf, input, steps, false, cfg, rng, enc.fwd);
  const std::size_t hid = gf.hidden;
  if (!bidi) {
    enc.out = enc.fwd.h;
    return;
  }
  gru_forward(p, gb, input, steps, true, cfg, rng, enc.bwd);
  enc.out.assign(steps * 2 * hid, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    std::copy_n(enc.fwd.h.begin() + static_cast<std::ptrdiff_t>(s * hid), hid,
                enc.out.begin() + static_cast<std::ptrdiff_t>(s * 2 * hid));
    std::copy_n(enc.bwd.h.begin() + static_cast<std::ptrdiff_t>(s * hid), hid,
                enc.out.begin() + static_cast<std::ptrdiff_t>(s * 2 * hid + hid));
  }
}

void backprop_sequence(std::span<const double> p, const Layout::Gru& gf, const Layout::Gru& gb, bool bidi,
                       const SeqEncoder& enc, std::span<const double> d_out, std::span<double> grad,
                       std::span<double> d_in) {
  const std::size_t hid = gf.hidden;
  const std::size_t steps = enc.fwd.steps;
  if (!bidi) {
    gru_backward(p, gf, enc.fwd, d_out, grad, d_in);
    return;
  }
  std::vector<double> df(steps * hid), db(steps * hid);
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < hid; ++i) {
      df[s * hid + i] = d_out[s * 2 * hid + i];
      db[s * hid + i] = d_out[s * 2 * hid + hid + i];
    }
  }
  gru_backward(p, gf, enc.fwd, df, grad, d_in);
  gru_backward(p, gb, enc.bwd, db, grad, d_in);
}

struct DocTape {
  std::vector<SeqEncoder> words;
  std::vector<AttTape> word_att;
  std::vector<double> turn_vectors;  // turns x O
  SeqEncoder turns;
  AttTape turn_att;
  std::vector<double> doc_vector;
  double raw = 0.0;
};

void run_forward(const HanModel& m, const EncodedDoc& doc, bool training, std::uint64_t mask_seed, DocTape& t) {
  const auto& l = m.layout;
  const auto p = std::span<const double>(m.params);
  const bool bidi = l.bidirectional;
  const std::size_t o = l.word_att.input;
  if (doc.dim != m.config.embedding_dim) {
    throw std::invalid_argument("document embedding dimension " + std::to_string(doc.dim) +
                                " does not match the model's " + std::to_string(m.config.embedding_dim));
  }
  if (doc.vectors.empty()) throw std::invalid_argument("forward on an empty document");
  Rng rng(mask_seed);
  Rng* mask_rng = training ? &rng : nullptr;

  const std::size_t turns = doc.turn_count();
  t.words.resize(turns);
  t.word_att.resize(turns);
  t.turn_vectors.assign(turns * o, 0.0);
  for (std::size_t j = 0; j < turns; ++j) {
    const std::size_t steps = doc.tokens[j].size();
    encode_sequence(p, l.word_fwd, l.word_bwd, bidi, doc.vectors[j], steps, m.config, mask_rng, t.words[j]);
    const auto v = att_forward(p, l.word_att, t.words[j].out, steps, t.word_att[j]);
    std::copy(v.begin(), v.end(), t.turn_vectors.begin() + static_cast<std::ptrdiff_t>(j * o));
  }
  encode_sequence(p, l.turn_fwd, l.turn_bwd, bidi, t.turn_vectors, turns, m.config, mask_rng, t.turns);
  t.doc_vector = att_forward(p, l.turn_att, t.turns.out, turns, t.turn_att);
  t.raw = k::dot(p.subspan(l.out_w, o), t.doc_vector) + p[l.out_b];
}

double penalty(const HanModel& m) {
  if (m.config.l2 == 0.0) return 0.0;
  const auto mask = m.layout.weight_mask();
  double s = 0.0;
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (mask[i]) s += m.params[i] * m.params[i];
  }
  return m.config.l2 * s;
}

}  // namespace

ForwardResult forward(const HanModel& model, const EncodedDoc& doc, bool training, std::uint64_t mask_seed) {
  DocTape t;
  run_forward(model, doc, training, mask_seed, t);
  ForwardResult r;
  r.raw = t.raw;
  r.trace.turn_weights = t.turn_att.alpha;
  for (const auto& a : t.word_att) r.trace.word_weights.push_back(a.alpha);
  return r;
}

double clip_prediction(double raw) {
  return std::min(static_cast<double>(kPhqMax), std::max(static_cast<double>(kPhqMin), raw));
}

double predict(const HanModel& model, const EncodedDoc& doc) { return clip_prediction(forward(model, doc).raw); }

double loss_and_gradient(const HanModel& m, const EncodedDoc& doc, double label, std::span<double> grad,
                         double scale, bool training, std::uint64_t mask_seed, detail::Fault fault) {
  if (grad.size() != m.params.size()) throw std::invalid_argument("gradient buffer has the wrong size");
  DocTape t;
  run_forward(m, doc, training, mask_seed, t);
  const auto& l = m.layout;
  const auto p = std::span<const double>(m.params);
  const bool bidi = l.bidirectional;
  const std::size_t o = l.word_att.input;
  const bool flip = fault == detail::Fault::FlipAttentionContextSign;

  const double err = t.raw - label;
  const double dy = scale * 2.0 * err;
  k::axpy(dy, t.doc_vector, grad.subspan(l.out_w, o));
  grad[l.out_b] += dy;
  std::vector<double> d_doc(o, 0.0);
  k::axpy(dy, p.subspan(l.out_w, o), d_doc);

  const std::size_t turns = doc.turn_count();
  std::vector<double> d_turn_out(turns * o, 0.0);
  att_backward(p, l.turn_att, t.turn_att, t.turns.out, d_doc, grad, d_turn_out, flip);
  std::vector<double> d_turn_vectors(turns * o, 0.0);
  backprop_sequence(p, l.turn_fwd, l.turn_bwd, bidi, t.turns, d_turn_out, grad, d_turn_vectors);

  for (std::size_t j = 0; j < turns; ++j) {
    const std::size_t steps = doc.tokens[j].size();
    std::vector<double> d_word_out(steps * o, 0.0);
    att_backward(p, l.word_att, t.word_att[j], t.words[j].out,
                 std::span<const double>(d_turn_vectors).subspan(j * o, o), grad, d_word_out, flip);
    backprop_sequence(p, l.word_fwd, l.word_bwd, bidi, t.words[j], d_word_out, grad, {});
  }

  double loss = err * err;
  if (m.config.l2 > 0.0) {
    const auto mask = l.weight_mask();
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      if (mask[i]) grad[i] += scale * 2.0 * m.config.l2 * m.params[i];
    }
    loss += penalty(m);
  }
  return loss;
}

TrainResult train(std::span<const EncodedDoc> docs, std::span<const double> labels, const HanConfig& config,
                  const EmbeddingSpec& embeddings) {
  config.check();
  if (docs.empty()) throw std::invalid_argument("train: no documents");
  if (docs.size() != labels.size()) throw std::invalid_argument("train: documents/labels size mismatch");
  const double mean_label = std::accumulate(labels.begin(), labels.end(), 0.0) / static_cast<double>(labels.size());
  TrainResult result{HanModel::init(config, mean_label), {}};
  auto& model = result.model;
  model.embeddings = embeddings;
  model.embeddings.dim = config.embedding_dim;

  const std::size_t n = docs.size();
  const bool dropout = config.gru_dropout > 0.0 || config.recurrent_dropout > 0.0;
  std::vector<double> grad(model.params.size());
  std::vector<std::size_t> order(n);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(config.seed, 0x5u + 2ULL * static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    const std::uint64_t epoch_seed = derive_seed(config.seed, 0x6u + 2ULL * static_cast<std::uint64_t>(epoch));
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        batch_loss += scale * loss_and_gradient(model, docs[i], labels[i], grad, scale, dropout,
                                                derive_seed(epoch_seed, i));
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "HAN training diverged: non-finite loss at epoch " << epoch + 1 << ", batch "
            << start / config.batch_size + 1 << " (learning_rate " << config.learning_rate << ")";
        throw std::runtime_error(msg.str());
      }
      if (config.clip_norm > 0.0) {
        const double norm = std::sqrt(k::dot(grad, grad));
        if (norm > config.clip_norm) {
          for (auto& g : grad) g *= config.clip_norm / norm;
        }
      }
      k::axpy(-config.learning_rate, grad, model.params);
      epoch_loss += batch_loss;
      ++batches;
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(batches));
  }
  return result;
}

double gradient_check(const HanModel& model, const EncodedDoc& doc, double label, const GradientCheckOptions& opt) {
  std::vector<double> grad(model.params.size(), 0.0);
  loss_and_gradient(model, doc, label, grad, 1.0, false, 0, opt.fault);

  std::vector<std::size_t> idx(model.params.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (idx.size() > opt.max_params) {
    Rng rng(opt.seed);
    rng.shuffle(idx);
    idx.resize(opt.max_params);
    std::sort(idx.begin(), idx.end());
  }
  auto loss_at = [&](const HanModel& m) {
    const double err = forward(m, doc).raw - label;
    return err * err + penalty(m);
  };
  HanModel probe = model;
  double worst = 0.0;
  for (auto i : idx) {
    const double orig = probe.params[i];
    auto at = [&](double offset) {
      probe.params[i] = orig + offset;
      return loss_at(probe);
    };
    const double h = opt.epsilon;
    const double numeric = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
    probe.params[i] = orig;
    const double rel = std::abs(grad[i] - numeric) / std::max(std::abs(grad[i]) + std::abs(numeric), 1e-6);
    worst = std::max(worst, rel);
  }
  return worst;
}

std::vector<HanConfig> sample_configs(const SearchSpace& space, const HanConfig& base, int budget,
                                      std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("random search budget must be >= 1");
  if (space.gru_units.empty()) throw std::invalid_argument("search space has no GRU sizes");
  Rng rng(seed);
  auto log_uniform = [&](double lo, double hi) {
    if (lo <= 0.0 || hi <= 0.0) return lo;
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
  };
  std::vector<HanConfig> out;
  for (int i = 0; i < budget; ++i) {
    HanConfig c = base;
    c.learning_rate = log_uniform(space.lr_min, space.lr_max);
    c.gru_units = space.gru_units[rng.below(space.gru_units.size())];
    c.gru_dropout = rng.uniform(0.0, space.gru_dropout_max);
    c.recurrent_dropout = rng.uniform(0.0, space.recurrent_dropout_max);
    c.l2 = log_uniform(space.l2_min, space.l2_max);
    c.seed = derive_seed(seed, static_cast<std::uint64_t>(i) + 1);
    out.push_back(c);
  }
  return out;
}

SearchResult random_search(const SearchSpace& space, const HanConfig& base, int budget, std::uint64_t seed,
                           const std::function<double(const HanConfig&)>& evaluate) {
  SearchResult result;
  for (const auto& c : sample_configs(space, base, budget, seed)) {
    const double score = evaluate(c);
    result.trials.push_back({c, score});
    if (result.trials.size() == 1 || score > result.trials[result.best_index].score) {
      result.best_index = result.trials.size() - 1;
    }
  }
  result.best = result.trials[result.best_index].config;
  return result;
}

std::vector<double> cross_validate(std::span<const EncodedDoc> docs, std::span<const double> labels,
                                   std::span<const int> folds, const HanConfig& config) {
  if (docs.size() != labels.size() || docs.size() != folds.size()) {
    throw std::invalid_argument("cross_validate: inconsistent sizes");
  }
  const int k = *std::max_element(folds.begin(), folds.end()) + 1;
  std::vector<double> oof(docs.size(), 0.0);
  for (int f = 0; f < k; ++f) {
    std::vector<EncodedDoc> td;
    std::vector<double> tl;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (folds[i] != f) {
        td.push_back(docs[i]);
        tl.push_back(labels[i]);
      }
    }
    if (td.empty()) continue;
    HanConfig c = config;
    c.seed = derive_seed(config.seed, static_cast<std::uint64_t>(f) + 101);
    const auto trained = train(td, tl, c);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      if (folds[i] == f) oof[i] = predict(trained.model, docs[i]);
    }
  }
  return oof;
}

SearchResult random_search(const SearchSpace& space, const HanConfig& base, int budget, int k,
                           std::uint64_t seed, std::span<const EncodedDoc> docs, std::span<const double> labels) {
  const auto folds = kfold_split(docs.size(), k, derive_seed(seed, 0xf01d));
  return random_search(space, base, budget, seed, [&](const HanConfig& c) {
    return ccc(labels, cross_validate(docs, labels, folds, c));
  });
}

}  // namespace convnarr::han
