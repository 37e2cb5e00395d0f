#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sclood/numerics.hpp"

namespace sclood {

inline constexpr std::string_view kOodLabel = "oos";

struct LabeledUtterance {
  std::string text;
  std::string label;

  bool is_ood() const { return label == kOodLabel; }
};

struct DatasetBundle {
  std::vector<LabeledUtterance> train_ind;
  std::vector<LabeledUtterance> dev;
  std::vector<LabeledUtterance> test;
  std::vector<std::string> label_set;  // IND intents, sorted
  // OOD rows present in the training file but dropped from train_ind.
  std::size_t discarded_ood_train = 0;

  /// Class index of `label`, or -1 for the OOD marker. Throws DataError for
  /// an unknown IND label.
  int label_index(std::string_view label) const;
};

/// Split sizes in the usual CLINC reporting convention, where the training
/// figure includes the discarded OOD training rows.
struct SplitSizes {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
  std::size_t num_intents = 0;
};
SplitSizes split_sizes(const DatasetBundle& bundle);

/// CLINC oos-eval JSON: keys train/val/test/oos_train/oos_val/oos_test, each
/// a list of [text, label] pairs.
DatasetBundle load_clinc(const std::filesystem::path& path);

/// Directory holding train.jsonl, dev.jsonl and test.jsonl, one
/// {"text": ..., "label": ...} object per line.
DatasetBundle load_jsonl_dir(const std::filesystem::path& dir);
std::vector<LabeledUtterance> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<LabeledUtterance>& rows);

/// Validates split invariants and fills label_set from train_ind.
void finalize_bundle(DatasetBundle& bundle);

std::vector<std::string> tokenize(std::string_view text);

class Vocab {
 public:
  static constexpr std::size_t kOov = 0;
  static constexpr std::string_view kOovToken = "<oov>";

  Vocab();
  explicit Vocab(std::vector<std::string> tokens_after_oov);

  std::size_t size() const { return tokens_.size(); }
  std::size_t index_of(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Token ids for an utterance; an empty utterance maps to a single OOV id.
  std::vector<std::size_t> encode(std::string_view text) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Tokens with frequency >= min_freq, ordered by (frequency desc, token asc).
Vocab build_vocab(const std::vector<LabeledUtterance>& utterances, std::size_t min_freq = 1);

struct EmbeddingTable {
  Matrix vectors;  // vocab_size x dim
  std::size_t dim() const { return vectors.cols; }
};

/// Rows for words found in the GloVe-style file are copied; all other rows
/// (including OOV) are uniform in [-0.5/dim, 0.5/dim] from `seed`.
struct WordVector {
  std::string word;
  Vec vector;
};

/// Writes GloVe-style text: `word f1 ... fD` per line.
void write_word_vectors(const std::filesystem::path& path, const std::vector<WordVector>& vectors);

EmbeddingTable load_embeddings(const std::optional<std::filesystem::path>& path, const Vocab& vocab,
                               std::size_t dim, std::uint64_t seed);

/// Seeded shuffle of 0..n-1 cut into contiguous chunks; the final short
/// chunk is kept.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed);

/// Tokenized split: token ids plus class index (-1 = OOD).
struct EncodedSplit {
  std::vector<std::vector<std::size_t>> tokens;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  EncodedSplit subset(const std::vector<std::size_t>& indices) const;
  EncodedSplit ind_only() const;
};

EncodedSplit encode_split(const std::vector<LabeledUtterance>& rows, const Vocab& vocab,
                          const DatasetBundle& bundle);

}  // namespace sclood
