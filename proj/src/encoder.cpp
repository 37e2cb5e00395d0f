#include "sclood/encoder.hpp"

#include <cmath>
#include <string>

#include "sclood/errors.hpp"

namespace sclood {

EncoderShape EncoderParams::shape() const {
  return {embeddings.rows, embeddings.cols, mlp_w1.cols, mlp_w2.cols, head_w.cols};
}

void EncoderParams::validate() const {
  const auto s = shape();
  const bool ok = mlp_w1.rows == s.embed_dim && mlp_b1.size() == s.hidden_dim && mlp_w2.rows == s.hidden_dim &&
                  mlp_b2.size() == s.rep_dim && head_w.rows == s.rep_dim && s.rep_dim >= 2 &&
                  s.vocab_size >= 1 && s.num_classes >= 1;
  if (!ok) throw NumericError("EncoderParams: inconsistent tensor shapes");
}

EncoderParams EncoderParams::zeros_like() const {
  EncoderParams z;
  z.embeddings = Matrix(embeddings.rows, embeddings.cols);
  z.mlp_w1 = Matrix(mlp_w1.rows, mlp_w1.cols);
  z.mlp_b1.assign(mlp_b1.size(), 0.0);
  z.mlp_w2 = Matrix(mlp_w2.rows, mlp_w2.cols);
  z.mlp_b2.assign(mlp_b2.size(), 0.0);
  z.head_w = Matrix(head_w.rows, head_w.cols);
  return z;
}

void EncoderParams::for_each_tensor(const std::function<void(std::span<double>)>& fn) {
  fn(embeddings.data);
  fn(mlp_w1.data);
  fn(mlp_b1);
  fn(mlp_w2.data);
  fn(mlp_b2);
  fn(head_w.data);
}

void EncoderParams::for_each_tensor(const std::function<void(std::span<const double>)>& fn) const {
  fn(embeddings.data);
  fn(mlp_w1.data);
  fn(mlp_b1);
  fn(mlp_w2.data);
  fn(mlp_b2);
  fn(head_w.data);
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](std::span<const double> t) { n += t.size(); });
  return n;
}

namespace {

void glorot(Matrix& m, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
  for (double& x : m.data) x = rng.uniform(-bound, bound);
}

}  // namespace

EncoderParams init_encoder(const EmbeddingTable& embeddings, std::size_t hidden_dim, std::size_t rep_dim,
                           std::size_t num_classes, std::uint64_t seed) {
  if (rep_dim < 2) throw ConfigError("rep_dim must be >= 2");
  if (hidden_dim < 1 || num_classes < 1) throw ConfigError("hidden_dim and num_classes must be positive");
  Rng rng(seed);
  EncoderParams p;
  p.embeddings = embeddings.vectors;
  p.mlp_w1 = Matrix(embeddings.dim(), hidden_dim);
  p.mlp_b1.assign(hidden_dim, 0.0);
  p.mlp_w2 = Matrix(hidden_dim, rep_dim);
  p.mlp_b2.assign(rep_dim, 0.0);
  p.head_w = Matrix(rep_dim, num_classes);
  Rng w1 = rng.derive(1), w2 = rng.derive(2), head = rng.derive(3);
  glorot(p.mlp_w1, w1);
  glorot(p.mlp_w2, w2);
  glorot(p.head_w, head);
  p.validate();
  return p;
}

ForwardTrace encode_from_pooled(const EncoderParams& params, std::span<const std::size_t> token_ids, Vec pooled,
                                bool normalize) {
  const std::size_t hidden = params.mlp_w1.cols;
  ForwardTrace t;
  t.token_ids.assign(token_ids.begin(), token_ids.end());
  t.pooled = std::move(pooled);
  t.hidden_pre = params.mlp_b1;
  for (std::size_t i = 0; i < t.pooled.size(); ++i) axpy(t.pooled[i], params.mlp_w1.row(i), t.hidden_pre);
  t.hidden.resize(hidden);
  for (std::size_t h = 0; h < hidden; ++h) t.hidden[h] = std::tanh(t.hidden_pre[h]);
  t.raw_rep = params.mlp_b2;
  for (std::size_t h = 0; h < hidden; ++h) axpy(t.hidden[h], params.mlp_w2.row(h), t.raw_rep);
  t.rep.normalized = normalize;
  t.rep.vector = normalize ? l2_normalize(t.raw_rep) : t.raw_rep;
  return t;
}

ForwardTrace encode(const EncoderParams& params, std::span<const std::size_t> token_ids, bool normalize) {
  if (token_ids.empty()) throw DataError("encode: empty token list");
  const std::size_t dim = params.embeddings.cols;
  Vec pooled(dim, 0.0);
  for (std::size_t id : token_ids) {
    if (id >= params.embeddings.rows)
      throw DataError("encode: token id " + std::to_string(id) + " outside vocabulary of size " +
                      std::to_string(params.embeddings.rows));
    axpy(1.0, params.embeddings.row(id), pooled);
  }
  const double inv = 1.0 / static_cast<double>(token_ids.size());
  for (double& x : pooled) x *= inv;
  return encode_from_pooled(params, token_ids, std::move(pooled), normalize);
}

Vec class_logits(const Matrix& head, std::span<const double> rep, double tau, bool normalize_head) {
  if (!(tau > 0.0)) throw NumericError("class_logits: tau must be positive");
  if (rep.size() != head.rows) throw NumericError("class_logits: representation width does not match head");
  Vec logits(head.cols, 0.0);
  for (std::size_t r = 0; r < head.rows; ++r) axpy(rep[r], head.row(r), logits);
  if (normalize_head) {
    Vec col_norm(head.cols, 0.0);
    for (std::size_t r = 0; r < head.rows; ++r)
      for (std::size_t c = 0; c < head.cols; ++c) col_norm[c] += head(r, c) * head(r, c);
    for (std::size_t c = 0; c < head.cols; ++c) {
      if (!(col_norm[c] > 0.0)) throw NumericError("class_logits: zero head column " + std::to_string(c));
      logits[c] /= std::sqrt(col_norm[c]);
    }
  }
  for (double& l : logits) l /= tau;
  return logits;
}

Vec class_logits(const EncoderParams& params, const Representation& rep, double tau, bool normalize_head) {
  return class_logits(params.head_w, rep.vector, tau, normalize_head);
}

Vec encoder_backward(const ForwardTrace& trace, std::span<const double> grad_rep, const EncoderParams& params,
                     EncoderParams* grads) {
  const std::size_t hidden = params.mlp_w1.cols;
  const std::size_t rep_dim = params.mlp_w2.cols;
  const std::size_t dim = params.mlp_w1.rows;
  if (grad_rep.size() != rep_dim || trace.raw_rep.size() != rep_dim || trace.hidden.size() != hidden ||
      trace.pooled.size() != dim)
    throw NumericError("encoder_backward: gradient or trace shape does not match parameters");

  // Through optional normalization: d raw = (g - r (r.g)) / ||raw||.
  Vec g_raw(grad_rep.begin(), grad_rep.end());
  if (trace.rep.normalized) {
    const double n = norm(trace.raw_rep);
    const double proj = dot(trace.rep.vector, grad_rep);
    for (std::size_t i = 0; i < rep_dim; ++i) g_raw[i] = (grad_rep[i] - trace.rep.vector[i] * proj) / n;
  }

  Vec g_pre(hidden);
  for (std::size_t h = 0; h < hidden; ++h) {
    const double gh = dot(params.mlp_w2.row(h), g_raw);
    g_pre[h] = gh * (1.0 - trace.hidden[h] * trace.hidden[h]);
  }
  Vec g_pooled(dim);
  for (std::size_t i = 0; i < dim; ++i) g_pooled[i] = dot(params.mlp_w1.row(i), g_pre);

  if (grads != nullptr) {
    axpy(1.0, g_raw, grads->mlp_b2);
    for (std::size_t h = 0; h < hidden; ++h) axpy(trace.hidden[h], g_raw, grads->mlp_w2.row(h));
    axpy(1.0, g_pre, grads->mlp_b1);
    for (std::size_t i = 0; i < dim; ++i) axpy(trace.pooled[i], g_pre, grads->mlp_w1.row(i));
    const double inv = 1.0 / static_cast<double>(trace.token_ids.size());
    for (std::size_t id : trace.token_ids) axpy(inv, g_pooled, grads->embeddings.row(id));
  }
  return g_pooled;
}

Matrix normalize_columns(const Matrix& head) {
  Matrix out = head;
  for (std::size_t c = 0; c < head.cols; ++c) {
    double n2 = 0.0;
    for (std::size_t r = 0; r < head.rows; ++r) n2 += head(r, c) * head(r, c);
    if (!(n2 > 0.0)) throw NumericError("normalize_columns: zero column " + std::to_string(c));
    const double n = std::sqrt(n2);
    for (std::size_t r = 0; r < head.rows; ++r) out(r, c) /= n;
  }
  return out;
}

void normalize_columns_backward(const Matrix& raw_head, const Matrix& grad_normalized, Matrix& grad_raw) {
  for (std::size_t c = 0; c < raw_head.cols; ++c) {
    double n2 = 0.0, proj = 0.0;
    for (std::size_t r = 0; r < raw_head.rows; ++r) n2 += raw_head(r, c) * raw_head(r, c);
    const double n = std::sqrt(n2);
    for (std::size_t r = 0; r < raw_head.rows; ++r) proj += (raw_head(r, c) / n) * grad_normalized(r, c);
    for (std::size_t r = 0; r < raw_head.rows; ++r)
      grad_raw(r, c) += (grad_normalized(r, c) - (raw_head(r, c) / n) * proj) / n;
  }
}

}  // namespace sclood
