#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sclood/corpus.hpp"
#include "sclood/numerics.hpp"

namespace sclood {

struct EncoderShape {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 0;
  std::size_t hidden_dim = 128;
  std::size_t rep_dim = 128;
  std::size_t num_classes = 0;
};

/// Trainable state: embeddings, a one-hidden-layer tanh MLP and the class
/// head. head column j is the weight vector of class j.
struct EncoderParams {
  Matrix embeddings;  // vocab x embed
  Matrix mlp_w1;      // embed x hidden
  Vec mlp_b1;         // hidden
  Matrix mlp_w2;      // hidden x rep
  Vec mlp_b2;         // rep
  Matrix head_w;      // rep x classes

  EncoderShape shape() const;
  void validate() const;

  /// Same shapes, all zeros. Used as the gradient accumulator.
  EncoderParams zeros_like() const;

  /// Visits every tensor in a fixed order: embeddings, w1, b1, w2, b2, head.
  void for_each_tensor(const std::function<void(std::span<double>)>& fn);
  void for_each_tensor(const std::function<void(std::span<const double>)>& fn) const;
  std::size_t parameter_count() const;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

/// Glorot-uniform MLP and head weights, zero biases; embeddings are taken
/// as given.
EncoderParams init_encoder(const EmbeddingTable& embeddings, std::size_t hidden_dim, std::size_t rep_dim,
                           std::size_t num_classes, std::uint64_t seed);

struct Representation {
  Vec vector;
  bool normalized = false;
};

struct ForwardTrace {
  std::vector<std::size_t> token_ids;
  Vec pooled;
  Vec hidden_pre;
  Vec hidden;
  Vec raw_rep;  // MLP output before optional normalization
  Representation rep;
};

/// Mean-pools the embedding rows of `token_ids` and runs the MLP.
ForwardTrace encode(const EncoderParams& params, std::span<const std::size_t> token_ids, bool normalize);

/// Runs only the MLP part on a given pooled vector; token_ids are recorded
/// so the backward pass still reaches the embedding rows.
ForwardTrace encode_from_pooled(const EncoderParams& params, std::span<const std::size_t> token_ids, Vec pooled,
                                bool normalize);

/// logit_j = head_j . rep / tau; with normalize_head the columns are
/// L2-normalized first.
Vec class_logits(const EncoderParams& params, const Representation& rep, double tau, bool normalize_head = false);
Vec class_logits(const Matrix& head, std::span<const double> rep, double tau, bool normalize_head = false);

/// Backpropagates dL/d(rep) through normalization, the MLP and mean pooling.
/// Parameter gradients are accumulated into `grads` when non-null (head_w is
/// not touched). Returns dL/d(pooled).
Vec encoder_backward(const ForwardTrace& trace, std::span<const double> grad_rep, const EncoderParams& params,
                     EncoderParams* grads);

/// Column-normalized copy of a head matrix.
Matrix normalize_columns(const Matrix& head);

/// Chain rule through column normalization: given dL/d(normalized head),
/// accumulates dL/d(raw head) into `grad_raw`.
void normalize_columns_backward(const Matrix& raw_head, const Matrix& grad_normalized, Matrix& grad_raw);

}  // namespace sclood
