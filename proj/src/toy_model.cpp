#include "xferbench/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xferbench/error.hpp"
#include "xferbench/rng.hpp"

namespace xferbench {

namespace {

// y += W x, W is [rows, cols] row-major.
void gemv(const double* w, const double* x, int rows, int cols, double* y) {
  for (int r = 0; r < rows; ++r) {
    const double* row = w + static_cast<std::size_t>(r) * cols;
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// y += W^T x
void gemv_t(const double* w, const double* x, int rows, int cols, double* y) {
  for (int r = 0; r < rows; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* row = w + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) y[c] += row[c] * xr;
  }
}

// G += a b^T
void outer_add(double* g, const double* a, const double* b, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    double* row = g + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) row[c] += ar * b[c];
  }
}

void fill_uniform(std::span<double> t, Rng& rng, double scale) {
  for (double& x : t) x = rng.uniform(-scale, scale);
}

double log_softmax_at(const std::vector<double>& logits, int index, std::vector<double>* probs) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  const double log_z = mx + std::log(sum);
  if (probs) {
    probs->resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) (*probs)[i] = std::exp(logits[i] - log_z);
  }
  return logits[static_cast<std::size_t>(index)] - log_z;
}

}  // namespace

void ToyModelConfig::validate() const {
  if (embed_dim < 1 || encoder_dim < 1 || decoder_dim < 1 || max_positions < 1) {
    throw Error(ErrorCode::InvalidConfig, "toy model dimensions must be positive");
  }
}

void to_json(nlohmann::json& j, const ToyModelConfig& cfg) {
  j = nlohmann::json{{"embed_dim", cfg.embed_dim},
                     {"encoder_dim", cfg.encoder_dim},
                     {"decoder_dim", cfg.decoder_dim},
                     {"max_positions", cfg.max_positions},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, ToyModelConfig& cfg) {
  cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
  cfg.encoder_dim = j.value("encoder_dim", cfg.encoder_dim);
  cfg.decoder_dim = j.value("decoder_dim", cfg.decoder_dim);
  cfg.max_positions = j.value("max_positions", cfg.max_positions);
  cfg.seed = j.value("seed", cfg.seed);
}

struct ToyModel::Encoded {
  std::vector<int> ids;
  std::vector<double> h;    // [n, encoder_dim]
  std::vector<double> m;    // pooled
  std::vector<double> c;    // context
  std::vector<double> ctx;  // Wc c + b, shared by every decoder step
};

ToyModel::ToyModel(Vocabulary vocab, ToyModelConfig cfg) : vocab_(std::move(vocab)), cfg_(cfg) {
  cfg_.validate();
  const auto v = static_cast<std::size_t>(vocab_.size());
  const auto e = static_cast<std::size_t>(cfg_.embed_dim);
  const auto he = static_cast<std::size_t>(cfg_.encoder_dim);
  const auto hd = static_cast<std::size_t>(cfg_.decoder_dim);
  const auto np = static_cast<std::size_t>(cfg_.max_positions);

  params_.add("encoder.embed", {v, e});
  params_.add("encoder.position", {np, e});
  params_.add("encoder.layer1.weight", {he, e});
  params_.add("encoder.layer1.bias", {he});
  params_.add("encoder.layer2.weight", {he, he});
  params_.add("encoder.layer2.bias", {he});
  params_.add("decoder.embed", {v, e});
  params_.add("decoder.context.weight", {hd, he});
  params_.add("decoder.input.weight", {hd, e});
  params_.add("decoder.position", {np, hd});
  params_.add("decoder.bias", {hd});
  params_.add("decoder.output.weight", {v, hd});
  params_.add("decoder.output.bias", {v});

  auto off = [&](const char* name) { return params_.info(name).offset; };
  off_ = {off("encoder.embed"),          off("encoder.position"), off("encoder.layer1.weight"),
          off("encoder.layer1.bias"),    off("encoder.layer2.weight"),
          off("encoder.layer2.bias"),    off("decoder.embed"),
          off("decoder.context.weight"), off("decoder.input.weight"),
          off("decoder.position"),       off("decoder.bias"),
          off("decoder.output.weight"),  off("decoder.output.bias")};

  Rng rng(cfg_.seed);
  fill_uniform(params_.get("encoder.embed"), rng, 0.5);
  fill_uniform(params_.get("encoder.position"), rng, 0.5);
  fill_uniform(params_.get("encoder.layer1.weight"), rng, 1.0 / std::sqrt(double(e)));
  fill_uniform(params_.get("encoder.layer2.weight"), rng, 1.0 / std::sqrt(double(he)));
  fill_uniform(params_.get("decoder.embed"), rng, 0.5);
  fill_uniform(params_.get("decoder.context.weight"), rng, 1.0 / std::sqrt(double(he)));
  fill_uniform(params_.get("decoder.input.weight"), rng, 1.0 / std::sqrt(double(e)));
  fill_uniform(params_.get("decoder.position"), rng, 0.5);
  fill_uniform(params_.get("decoder.output.weight"), rng, 1.0 / std::sqrt(double(hd)));
}

nlohmann::json ToyModel::config() const { return nlohmann::json(cfg_); }

ToyModel::Encoded ToyModel::encode_source(std::string_view source) const {
  const int e = cfg_.embed_dim;
  const int he = cfg_.encoder_dim;
  const int hd = cfg_.decoder_dim;
  Encoded enc;
  enc.ids = vocab_.encode(source);
  const std::size_t n = enc.ids.size();
  enc.h.assign(n * static_cast<std::size_t>(he), 0.0);
  enc.m.assign(static_cast<std::size_t>(he), 0.0);
  std::vector<double> x(static_cast<std::size_t>(e));
  for (std::size_t i = 0; i < n; ++i) {
    double* hi = enc.h.data() + i * static_cast<std::size_t>(he);
    const double* emb = at(off_.enc_embed) + static_cast<std::size_t>(enc.ids[i]) * e;
    const double* pe = at(off_.enc_pos) + source_position(i) * e;
    for (int k = 0; k < e; ++k) x[static_cast<std::size_t>(k)] = emb[k] + pe[k];
    std::copy(at(off_.enc_b1), at(off_.enc_b1) + he, hi);
    gemv(at(off_.enc_w1), x.data(), he, e, hi);
    for (int k = 0; k < he; ++k) {
      hi[k] = std::tanh(hi[k]);
      enc.m[static_cast<std::size_t>(k)] += hi[k];
    }
  }
  if (n > 0) {
    for (double& x : enc.m) x /= static_cast<double>(n);
  }
  enc.c.assign(at(off_.enc_b2), at(off_.enc_b2) + he);
  gemv(at(off_.enc_w2), enc.m.data(), he, he, enc.c.data());
  for (double& x : enc.c) x = std::tanh(x);
  enc.ctx.assign(at(off_.dec_b), at(off_.dec_b) + hd);
  gemv(at(off_.dec_wc), enc.c.data(), hd, he, enc.ctx.data());
  return enc;
}

void ToyModel::decoder_step(const Encoded& enc, int prev_token, int position,
                            std::vector<double>& z, std::vector<double>& logits) const {
  const int e = cfg_.embed_dim;
  const int hd = cfg_.decoder_dim;
  const int v = vocab_.size();
  const int pos = std::min(position, cfg_.max_positions - 1);
  z = enc.ctx;
  gemv(at(off_.dec_wy), at(off_.dec_embed) + static_cast<std::size_t>(prev_token) * e, hd, e,
       z.data());
  const double* p = at(off_.dec_pos) + static_cast<std::size_t>(pos) * hd;
  for (int k = 0; k < hd; ++k) z[static_cast<std::size_t>(k)] = std::tanh(z[static_cast<std::size_t>(k)] + p[k]);
  logits.assign(at(off_.out_b), at(off_.out_b) + v);
  gemv(at(off_.out_w), z.data(), v, hd, logits.data());
}

double ToyModel::forward_backward(std::string_view source, std::string_view target,
                                  std::vector<double>* grad) const {
  std::vector<int> tgt = vocab_.encode(target);
  if (tgt.empty()) throw Error(ErrorCode::EmptyTarget, "target has no tokens");
  tgt.push_back(Vocabulary::kEos);

  const int e = cfg_.embed_dim;
  const int he = cfg_.encoder_dim;
  const int hd = cfg_.decoder_dim;
  const int v = vocab_.size();
  const double inv_t = 1.0 / static_cast<double>(tgt.size());

  const Encoded enc = encode_source(source);
  std::vector<double> z, logits, probs, du(static_cast<std::size_t>(hd));
  std::vector<double> dc(static_cast<std::size_t>(he), 0.0);
  double* g = grad ? grad->data() : nullptr;

  double loss = 0.0;
  int prev = Vocabulary::kBos;
  for (std::size_t t = 0; t < tgt.size(); ++t) {
    decoder_step(enc, prev, static_cast<int>(t), z, logits);
    loss -= log_softmax_at(logits, tgt[t], g ? &probs : nullptr);
    if (g) {
      // d loss / d logits = (softmax - onehot) / T
      for (double& p : probs) p *= inv_t;
      probs[static_cast<std::size_t>(tgt[t])] -= inv_t;
      outer_add(g + off_.out_w, probs.data(), z.data(), v, hd);
      for (int i = 0; i < v; ++i) g[off_.out_b + static_cast<std::size_t>(i)] += probs[static_cast<std::size_t>(i)];
      std::fill(du.begin(), du.end(), 0.0);
      gemv_t(at(off_.out_w), probs.data(), v, hd, du.data());
      for (int k = 0; k < hd; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        du[kk] *= 1.0 - z[kk] * z[kk];
      }
      const int pos = std::min(static_cast<int>(t), cfg_.max_positions - 1);
      double* gpos = g + off_.dec_pos + static_cast<std::size_t>(pos) * hd;
      for (int k = 0; k < hd; ++k) {
        gpos[k] += du[static_cast<std::size_t>(k)];
        g[off_.dec_b + static_cast<std::size_t>(k)] += du[static_cast<std::size_t>(k)];
      }
      const double* emb = at(off_.dec_embed) + static_cast<std::size_t>(prev) * e;
      outer_add(g + off_.dec_wy, du.data(), emb, hd, e);
      gemv_t(at(off_.dec_wy), du.data(), hd, e, g + off_.dec_embed + static_cast<std::size_t>(prev) * e);
      outer_add(g + off_.dec_wc, du.data(), enc.c.data(), hd, he);
      gemv_t(at(off_.dec_wc), du.data(), hd, he, dc.data());
    }
    prev = tgt[t];
  }
  loss *= inv_t;
  if (!g) return loss;

  // Encoder.
  std::vector<double> dv(static_cast<std::size_t>(he));
  for (int k = 0; k < he; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    dv[kk] = dc[kk] * (1.0 - enc.c[kk] * enc.c[kk]);
    g[off_.enc_b2 + kk] += dv[kk];
  }
  outer_add(g + off_.enc_w2, dv.data(), enc.m.data(), he, he);
  const std::size_t n = enc.ids.size();
  if (n == 0) return loss;
  std::vector<double> dm(static_cast<std::size_t>(he), 0.0);
  gemv_t(at(off_.enc_w2), dv.data(), he, he, dm.data());
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> da(static_cast<std::size_t>(he));
  std::vector<double> x(static_cast<std::size_t>(e)), dx(static_cast<std::size_t>(e));
  for (std::size_t i = 0; i < n; ++i) {
    const double* hi = enc.h.data() + i * static_cast<std::size_t>(he);
    for (int k = 0; k < he; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      da[kk] = dm[kk] * inv_n * (1.0 - hi[k] * hi[k]);
      g[off_.enc_b1 + kk] += da[kk];
    }
    const std::size_t row = static_cast<std::size_t>(enc.ids[i]) * e;
    const std::size_t prow = source_position(i) * e;
    for (int k = 0; k < e; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      x[kk] = at(off_.enc_embed)[row + kk] + at(off_.enc_pos)[prow + kk];
    }
    outer_add(g + off_.enc_w1, da.data(), x.data(), he, e);
    std::fill(dx.begin(), dx.end(), 0.0);
    gemv_t(at(off_.enc_w1), da.data(), he, e, dx.data());
    for (int k = 0; k < e; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      g[off_.enc_embed + row + kk] += dx[kk];
      g[off_.enc_pos + prow + kk] += dx[kk];
    }
  }
  return loss;
}

Loss ToyModel::compute_loss(std::string_view source, std::string_view target) const {
  std::vector<double> grad(params_.size(), 0.0);
  const double value = forward_backward(source, target, &grad);
  return Loss(value, std::move(grad));
}

double ToyModel::loss_value(std::string_view source, std::string_view target) const {
  return forward_backward(source, target, nullptr);
}

std::string ToyModel::generate(std::string_view source, const GenerationConfig& cfg) const {
  cfg.validate();
  struct Hyp {
    std::vector<int> tokens;
    double score = 0.0;
    bool done = false;
  };
  auto better = [](const Hyp& a, const Hyp& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tokens != b.tokens) return a.tokens < b.tokens;
    return a.done && !b.done;
  };

  const Encoded enc = encode_source(source);
  const auto beam = static_cast<std::size_t>(cfg.num_beams);
  const int v = vocab_.size();
  std::vector<Hyp> beams{Hyp{}};
  std::vector<double> z, logits, logp(static_cast<std::size_t>(v));

  for (int step = 0; step <= cfg.max_output_tokens; ++step) {
    std::vector<Hyp> cand;
    for (const Hyp& h : beams) {
      if (h.done) {
        cand.push_back(h);
        continue;
      }
      const int prev = h.tokens.empty() ? Vocabulary::kBos : h.tokens.back();
      decoder_step(enc, prev, step, z, logits);
      const double mx = *std::max_element(logits.begin(), logits.end());
      double sum = 0.0;
      for (double l : logits) sum += std::exp(l - mx);
      const double log_z = mx + std::log(sum);
      std::vector<int> order;
      for (int i = 0; i < v; ++i) {
        if (i == Vocabulary::kPad || i == Vocabulary::kBos || i == Vocabulary::kUnk) continue;
        // The length bound forces EOS once max_output_tokens have been emitted.
        if (step == cfg.max_output_tokens && i != Vocabulary::kEos) continue;
        logp[static_cast<std::size_t>(i)] = logits[static_cast<std::size_t>(i)] - log_z;
        order.push_back(i);
      }
      const std::size_t k = std::min(beam, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](int a, int b) {
                          const double la = logp[static_cast<std::size_t>(a)];
                          const double lb = logp[static_cast<std::size_t>(b)];
                          return la != lb ? la > lb : a < b;
                        });
      for (std::size_t j = 0; j < k; ++j) {
        const int tok = order[j];
        Hyp next{h.tokens, h.score + logp[static_cast<std::size_t>(tok)], tok == Vocabulary::kEos};
        if (!next.done) next.tokens.push_back(tok);
        cand.push_back(std::move(next));
      }
    }
    const std::size_t keep = std::min(beam, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                      better);
    cand.resize(keep);
    beams = std::move(cand);
    if (std::all_of(beams.begin(), beams.end(), [](const Hyp& h) { return h.done; })) break;
  }
  return vocab_.decode(beams.front().tokens);
}

}  // namespace xferbench
